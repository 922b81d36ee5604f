#ifndef COALEX_MODEL_IO_HPP
#define COALEX_MODEL_IO_HPP

#include "coalex/core.hpp"
#include "coalex/datasets.hpp"
#include "coalex/distribution.hpp"
#include "coalex/error.hpp"
#include "coalex/explain.hpp"
#include "coalex/rca.hpp"
#include "coalex/score.hpp"
#include "coalex/search.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <variant>
#include <sstream>
#include <string>
#include <vector>

namespace coalex {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Model JSON: names and labels are the external identity, ids are internal.
// ---------------------------------------------------------------------------

inline std::string var_kind_name(VarKind k) {
    switch (k) {
    case VarKind::observed: return "observed";
    case VarKind::noise: return "noise";
    case VarKind::target: return "target";
    }
    fail(Errc::InvalidArgument, "unknown variable kind");
}

inline VarKind var_kind_from_name(const std::string& s) {
    if (s == "observed") return VarKind::observed;
    if (s == "noise") return VarKind::noise;
    if (s == "target") return VarKind::target;
    fail(Errc::SchemaMismatch, "unknown variable kind '" + s + "'");
}

inline json scm_to_json(const Scm& scm) {
    json j;
    j["variables"] = json::array();
    for (const auto& v : scm.variables)
        j["variables"].push_back(
            {{"name", v.name}, {"kind", var_kind_name(v.kind)}, {"domain", v.domain.labels}});
    j["edges"] = json::array();
    for (const auto& v : scm.variables)
        for (VariableId p : scm.parents[v.id])
            j["edges"].push_back(json::array({scm.var(p).name, v.name}));
    j["mechanisms"] = json::object();
    for (const auto& v : scm.variables) {
        if (!scm.mechanisms[v.id].has_value()) continue;
        json m;
        if (const auto* tt = std::get_if<TruthTable>(&*scm.mechanisms[v.id])) {
            m["type"] = "truth_table";
            json outputs = json::array();
            for (int code : tt->outputs) outputs.push_back(v.domain.labels[code]);
            m["outputs"] = std::move(outputs);
        } else if (const auto* g = std::get_if<ThresholdGate>(&*scm.mechanisms[v.id])) {
            m["type"] = "threshold_gate";
            m["threshold"] = g->threshold;
        } else if (const auto* c = std::get_if<ConstantValue>(&*scm.mechanisms[v.id])) {
            m["type"] = "constant";
            m["value"] = v.domain.labels[c->value];
        }
        j["mechanisms"][v.name] = std::move(m);
    }
    j["noise_priors"] = json::object();
    for (const auto& v : scm.variables)
        if (scm.priors[v.id].has_value())
            j["noise_priors"][v.name] = scm.priors[v.id]->probabilities;
    return j;
}

inline Scm scm_from_json(const json& j) {
    try {
        ScmBuilder b;
        std::vector<std::string> names;
        for (const auto& v : j.at("variables")) {
            Domain d{v.at("domain").get<std::vector<std::string>>()};
            b.add_variable(v.at("name").get<std::string>(),
                           var_kind_from_name(v.at("kind").get<std::string>()), d);
            names.push_back(v.at("name").get<std::string>());
        }
        for (const auto& e : j.at("edges"))
            b.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>());
        auto domain_of = [&](const std::string& name) {
            return j.at("variables")
                .at(std::find(names.begin(), names.end(), name) - names.begin())
                .at("domain")
                .get<std::vector<std::string>>();
        };
        for (const auto& [name, m] : j.at("mechanisms").items()) {
            Domain d{domain_of(name)};
            const std::string type = m.at("type").get<std::string>();
            if (type == "truth_table") {
                std::vector<int> outputs;
                for (const auto& label : m.at("outputs"))
                    outputs.push_back(d.index_of(label.get<std::string>()));
                b.set_truth_table(b.id_of(name), std::move(outputs));
            } else if (type == "threshold_gate") {
                b.set_threshold_gate(b.id_of(name), m.at("threshold").get<int>());
            } else if (type == "constant") {
                b.set_constant(b.id_of(name), d.index_of(m.at("value").get<std::string>()));
            } else {
                fail(Errc::SchemaMismatch, "unknown mechanism type '" + type + "'");
            }
        }
        for (const auto& [name, probs] : j.at("noise_priors").items())
            b.set_noise_prior(b.id_of(name), probs.get<std::vector<double>>());
        return b.build();
    } catch (const json::exception& e) {
        fail(Errc::SchemaMismatch, std::string("model JSON malformed: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Observations: flat {variable name: domain label} objects. Unlisted
// variables stay unset.
// ---------------------------------------------------------------------------

inline json observation_to_json(const Scm& scm, const Observation& obs) {
    json j = json::object();
    for (const auto& v : scm.variables)
        if (obs.has(v.id)) j[v.name] = v.domain.labels[obs[v.id]];
    return j;
}

inline Observation observation_from_json(const Scm& scm, const json& j) {
    try {
        Observation obs(static_cast<std::size_t>(scm.size()));
        for (const auto& [name, label] : j.items()) {
            VariableId v = scm.id_of(name);
            obs.set(v, scm.var(v).domain.index_of(label.get<std::string>()));
        }
        return obs;
    } catch (const json::exception& e) {
        fail(Errc::SchemaMismatch, std::string("observation JSON malformed: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Distributions, scores, search results, proposals.
// ---------------------------------------------------------------------------

inline json distribution_to_json(const CategoricalDistribution& d) {
    return {{"domain", d.domain.labels}, {"probs", d.probabilities}};
}

inline json score_value_to_json(double value) {
    if (value == kNegInf) return json("-inf");
    return json(value);
}

inline double score_value_from_json(const json& j) {
    if (j.is_string()) {
        require(j.get<std::string>() == "-inf", Errc::SchemaMismatch,
                "score must be a number or \"-inf\"");
        return kNegInf;
    }
    return j.get<double>();
}

inline json score_meta_to_json(const ScoreMeta& meta) {
    return {{"mode", meta.mode == EstimatorMode::exact ? "exact" : "mc"},
            {"seed", meta.seed},
            {"sample_count", meta.sample_count},
            {"posterior_samples", meta.posterior_samples},
            {"rejected_samples", meta.rejected_samples},
            {"high_rejection_warning", meta.high_rejection_warning}};
}

inline json explanation_score_to_json(const Scm& scm, const ExplanationScore& s) {
    json coalition = json::array();
    json values = json::array();
    for (std::size_t i = 0; i < s.coalition.members.size(); ++i) {
        const auto& v = scm.var(s.coalition.members[i]);
        coalition.push_back(v.name);
        values.push_back(v.domain.labels[s.coalition.values[i]]);
    }
    return {{"coalition", coalition},
            {"values", values},
            {"score", score_value_to_json(s.value)},
            {"meta", score_meta_to_json(s.meta)}};
}

inline json search_result_to_json(const Scm& scm, const SearchResult& r) {
    json coalitions = json::array();
    for (const auto& sc : r.coalitions) {
        json members = json::array();
        json values = json::array();
        for (std::size_t i = 0; i < sc.coalition.members.size(); ++i) {
            const auto& v = scm.var(sc.coalition.members[i]);
            members.push_back(v.name);
            values.push_back(v.domain.labels[sc.coalition.values[i]]);
        }
        coalitions.push_back({{"members", members},
                              {"values", values},
                              {"score", score_value_to_json(sc.score)}});
    }
    json j = {{"exhausted", r.exhausted},
              {"evaluations", r.evaluations},
              {"coalitions", coalitions}};
    if (r.minimal_size)
        j["minimal_size"] = *r.minimal_size;
    else
        j["minimal_size"] = nullptr;
    return j;
}

inline json proposal_to_json(const Scm& scm, const InterventionProposal& p) {
    json members = json::array();
    json values = json::array();
    for (std::size_t i = 0; i < p.coalition.members.size(); ++i) {
        const auto& v = scm.var(p.coalition.members[i]);
        members.push_back(v.name);
        values.push_back(v.domain.labels[p.coalition.values[i]]);
    }
    return {{"coalition", {{"members", members}, {"values", values}}},
            {"desired_target", scm.var(scm.target).domain.labels[p.desired_target]},
            {"score_for_desired", score_value_to_json(p.score_for_desired)}};
}

// ---------------------------------------------------------------------------
// RCA reports.
// ---------------------------------------------------------------------------

inline json group_stats_to_json(const GroupStats& g) {
    return {{"n", g.n},
            {"accuracy", g.accuracy()},
            {"correct", g.correct},
            {"tp", g.true_positives},
            {"fp", g.false_positives},
            {"fn", g.false_negatives}};
}

inline json rca_report_to_json(const RcaReport& r) {
    json methods = json::object();
    for (const auto& m : r.methods) {
        json groups = json::object();
        for (const auto& [group, stats] : m.by_error_count)
            groups[group] = group_stats_to_json(stats);
        methods[rca_method_name(m.method)] = {{"by_error_count", groups},
                                              {"overall", group_stats_to_json(m.overall)},
                                              {"failures", m.failures}};
    }
    return {{"total_samples", r.total_samples},
            {"incident_samples", r.incident_samples},
            {"seed", r.seed},
            {"methods", methods}};
}

inline std::string rca_report_to_csv(const RcaReport& r) {
    std::ostringstream out;
    out << "method,group,n,accuracy,correct,tp,fp,fn\n";
    auto emit = [&](RcaMethod method, const std::string& group, const GroupStats& g) {
        out << rca_method_name(method) << ',' << group << ',' << g.n << ','
            << json(g.accuracy()).dump() << ',' << g.correct << ',' << g.true_positives
            << ',' << g.false_positives << ',' << g.false_negatives << '\n';
    };
    for (const auto& m : r.methods) {
        for (const auto& [group, g] : m.by_error_count) emit(m.method, group, g);
        emit(m.method, "overall", m.overall);
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Cloud configs.
// ---------------------------------------------------------------------------

inline json cloud_config_to_json(const CloudNetworkConfig& cfg) {
    json nodes = json::array();
    for (const auto& n : cfg.nodes)
        nodes.push_back(
            {{"name", n.name}, {"error_rate", n.error_rate}, {"threshold", n.threshold}});
    json edges = json::array();
    for (const auto& [p, c] : cfg.edges) edges.push_back(json::array({p, c}));
    return {{"nodes", nodes}, {"edges", edges}, {"target", cfg.target}};
}

inline CloudNetworkConfig cloud_config_from_json(const json& j) {
    try {
        CloudNetworkConfig cfg;
        for (const auto& n : j.at("nodes"))
            cfg.nodes.push_back({n.at("name").get<std::string>(),
                                 n.at("error_rate").get<double>(),
                                 n.at("threshold").get<int>()});
        for (const auto& e : j.at("edges"))
            cfg.edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
        cfg.target = j.at("target").get<std::string>();
        return cfg;
    } catch (const json::exception& e) {
        fail(Errc::SchemaMismatch, std::string("cloud config JSON malformed: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// CSV plumbing.
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline std::string column_role_name(ColumnRole r) {
    switch (r) {
    case ColumnRole::feature: return "feature";
    case ColumnRole::target: return "target";
    case ColumnRole::noise: return "noise";
    }
    fail(Errc::InvalidArgument, "unknown column role");
}

inline ColumnRole column_role_from_name(const std::string& s) {
    if (s == "feature") return ColumnRole::feature;
    if (s == "target") return ColumnRole::target;
    if (s == "noise") return ColumnRole::noise;
    fail(Errc::SchemaMismatch, "unknown column role '" + s + "'");
}

/// CSV body of a sample table: header row of names, cells as domain labels.
inline std::string sample_table_to_csv(const SampleTable& t) {
    std::ostringstream out;
    for (std::size_t c = 0; c < t.columns.size(); ++c)
        out << (c ? "," : "") << t.columns[c].name;
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            out << (c ? "," : "") << t.columns[c].domain.labels[row[c]];
        out << '\n';
    }
    return out.str();
}

/// Sidecar carrying everything the CSV cannot: seed, model hash, column
/// roles and domains, and the per-error-count tally.
inline json sample_sidecar_to_json(const SampleTable& t, std::uint64_t model_hash) {
    json columns = json::array();
    for (const auto& c : t.columns)
        columns.push_back({{"name", c.name},
                           {"role", column_role_name(c.role)},
                           {"domain", c.domain.labels}});
    json tally = json::object();
    for (const auto& [errors, counts] : t.error_tally)
        tally[std::to_string(errors)] = {{"target_0", counts[0]}, {"target_1", counts[1]}};
    return {{"seed", t.seed},
            {"model_hash", model_hash},
            {"columns", columns},
            {"error_tally", tally}};
}

inline SampleTable sample_table_from_csv(const std::string& csv, const json& sidecar) {
    try {
        SampleTable t;
        t.seed = sidecar.at("seed").get<std::uint64_t>();
        for (const auto& c : sidecar.at("columns"))
            t.columns.push_back({c.at("name").get<std::string>(),
                                 Domain{c.at("domain").get<std::vector<std::string>>()},
                                 column_role_from_name(c.at("role").get<std::string>())});
        std::istringstream in(csv);
        std::string line;
        require(static_cast<bool>(std::getline(in, line)), Errc::SchemaMismatch,
                "sample CSV is empty");
        auto header = split_csv_line(line);
        require(header.size() == t.columns.size(), Errc::SchemaMismatch,
                "sample CSV header does not match the sidecar columns");
        for (std::size_t c = 0; c < header.size(); ++c)
            require(header[c] == t.columns[c].name, Errc::SchemaMismatch,
                    "sample CSV header does not match the sidecar columns");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto cells = split_csv_line(line);
            require(cells.size() == t.columns.size(), Errc::SchemaMismatch,
                    "sample CSV row width does not match the header");
            std::vector<int> row(cells.size());
            for (std::size_t c = 0; c < cells.size(); ++c)
                row[c] = t.columns[c].domain.index_of(cells[c]);
            t.rows.push_back(std::move(row));
        }
        return t;
    } catch (const json::exception& e) {
        fail(Errc::SchemaMismatch, std::string("sample sidecar malformed: ") + e.what());
    }
}

/// External importance scores as {feature, score} CSV with a header row.
inline std::vector<std::pair<std::string, double>> feature_scores_from_csv(
    const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), Errc::SchemaMismatch,
            "score CSV is empty");
    require(split_csv_line(line) == std::vector<std::string>{"feature", "score"},
            Errc::SchemaMismatch, "score CSV must start with a feature,score header");
    std::vector<std::pair<std::string, double>> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        require(cells.size() == 2, Errc::SchemaMismatch,
                "score CSV rows must be feature,score");
        try {
            out.emplace_back(cells[0], std::stod(cells[1]));
        } catch (const std::exception&) {
            fail(Errc::SchemaMismatch, "score CSV has a non-numeric score for '" + cells[0] + "'");
        }
    }
    return out;
}

inline std::string stability_curve_to_csv(const StabilityCurve& curve) {
    std::ostringstream out;
    out << "k,stability\n";
    for (std::size_t k = 0; k < curve.stability.size(); ++k)
        out << k << ',' << json(curve.stability[k]).dump() << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Hashing and files.
// ---------------------------------------------------------------------------

/// FNV-1a over the canonical JSON dump; stable across runs and platforms.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t model_hash(const Scm& scm) { return fnv1a(scm_to_json(scm).dump()); }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Errc::InvalidArgument, "cannot open '" + path + "'");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), Errc::InvalidArgument, "cannot write '" + path + "'");
    out << contents;
    require(out.good(), Errc::InvalidArgument, "short write to '" + path + "'");
}

inline json load_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        fail(Errc::SchemaMismatch, "'" + path + "' is not valid JSON: " + e.what());
    }
}

} // namespace coalex

#endif
