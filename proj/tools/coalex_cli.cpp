// Command-line front-end: reproducible scoring, search, simulation, root
// cause evaluation, stability curves, and intervention optimization over
// discrete causal models. JSON results go to standard output (or --out),
// logs and structured errors to standard error.

#include "coalex/coalex.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

namespace {

using coalex::json;

constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Output plumbing: primary artifacts must be byte-identical across runs with
// the same flags and seeds, so the manifest (which carries wall-clock
// duration) is always a separate file.
// ---------------------------------------------------------------------------

struct RunContext {
    std::string command;
    json config = json::object();
    json seeds = json::object();
    std::uint64_t model_hash = 0;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    json manifest() const {
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
        return {{"command", command},    {"config", config},
                {"seeds", seeds},        {"model_hash", model_hash},
                {"version", kVersion},   {"duration_ms", ms}};
    }
};

void emit(const RunContext& ctx, const std::string& out_path, const std::string& payload) {
    if (out_path.empty()) {
        std::cout << payload;
        if (!payload.empty() && payload.back() != '\n') std::cout << '\n';
    } else {
        coalex::write_file(out_path, payload);
        coalex::write_file(out_path + ".manifest.json", ctx.manifest().dump(2) + "\n");
    }
}

void warn(const std::string& message) { std::cerr << "warning: " << message << "\n"; }

int exit_code_for(coalex::Errc code) {
    switch (code) {
    // "The method says no" on well-formed input; distinct from bad input.
    case coalex::Errc::UndefinedScore:
    case coalex::Errc::PreconditionNotFullExplanation:
    case coalex::Errc::NoImprovingAssignment: return 2;
    default: return 1;
    }
}

// ---------------------------------------------------------------------------
// Shared flag groups.
// ---------------------------------------------------------------------------

struct EstimatorFlags {
    std::string mode = "exact";
    std::uint64_t samples = 100000;
    std::int64_t seed = -1; // -1 = not provided; seeds must be explicit

    void attach(CLI::App* cmd) {
        cmd->add_option("--mode", mode, "Estimator mode: exact or mc")
            ->check(CLI::IsMember({"exact", "mc"}))
            ->capture_default_str();
        cmd->add_option("--samples", samples, "Monte Carlo sample count")
            ->capture_default_str();
        cmd->add_option("--seed", seed, "Random seed (required for any sampling)");
    }

    coalex::EstimatorConfig resolve(const coalex::Scm& scm) const {
        coalex::EstimatorConfig cfg;
        bool want_mc = mode == "mc";
        if (!want_mc) {
            // Auto-fallback: exact enumeration refuses oversized state spaces.
            double states = 1.0;
            for (coalex::VariableId v : scm.noise_ids())
                states *= scm.var(v).domain.size();
            if (states > static_cast<double>(cfg.exact_state_limit)) {
                warn("state space too large for exact mode; falling back to mc");
                want_mc = true;
            }
        }
        if (want_mc) {
            coalex::require(seed >= 0, coalex::Errc::InvalidArgument,
                            "--seed is required in mc mode (seeds must be explicit)");
            cfg = coalex::EstimatorConfig::mc(samples, static_cast<std::uint64_t>(seed));
        }
        return cfg;
    }

    json echo() const {
        return {{"mode", mode}, {"samples", samples}, {"seed", seed}};
    }
};

coalex::Scm load_model(const std::string& path) {
    json j = coalex::load_json(path);
    if (j.contains("nodes")) // cloud network config, not a serialized model
        return coalex::cloud_model(coalex::cloud_config_from_json(j));
    return coalex::scm_from_json(j);
}

/// Parses "X1=1,X2=0" (domain labels on the right) against the model.
coalex::Coalition parse_coalition(const coalex::Scm& scm, const std::string& spec) {
    coalex::Coalition c;
    if (spec.empty()) return c;
    std::vector<std::pair<coalex::VariableId, int>> pins;
    std::istringstream in(spec);
    std::string item;
    while (std::getline(in, item, ',')) {
        auto eq = item.find('=');
        coalex::require(eq != std::string::npos, coalex::Errc::InvalidArgument,
                        "coalition entries must look like NAME=LABEL, got '" + item + "'");
        coalex::VariableId v = scm.id_of(item.substr(0, eq));
        pins.emplace_back(v, scm.var(v).domain.index_of(item.substr(eq + 1)));
    }
    std::sort(pins.begin(), pins.end());
    for (auto [v, val] : pins) {
        c.members.push_back(v);
        c.values.push_back(val);
    }
    return c;
}

coalex::SampleTable load_samples(const std::string& csv_path, std::string sidecar_path) {
    if (sidecar_path.empty()) sidecar_path = csv_path + ".meta.json";
    return coalex::sample_table_from_csv(coalex::read_file(csv_path),
                                         coalex::load_json(sidecar_path));
}

// ---------------------------------------------------------------------------
// Predictors for the empirical-model commands.
// ---------------------------------------------------------------------------

/// Truth-table predictor file: {"outputs": [labels...]} row-major over the
/// feature columns in table order, last feature fastest.
coalex::Predictor table_predictor(const coalex::EmpiricalModel& model,
                                  const std::string& path) {
    json j = coalex::load_json(path);
    coalex::require(j.contains("outputs") && j["outputs"].is_array(),
                    coalex::Errc::SchemaMismatch,
                    "truth-table predictor file needs an \"outputs\" array");
    std::size_t rows = 1;
    std::vector<int> sizes;
    for (int f = 0; f < model.feature_count(); ++f) {
        int s = model.table.columns[model.feature_columns[f]].domain.size();
        sizes.push_back(s);
        rows *= static_cast<std::size_t>(s);
    }
    coalex::require(j["outputs"].size() == rows, coalex::Errc::SchemaMismatch,
                    "truth-table predictor must cover every feature combination");
    std::vector<int> outputs;
    for (const auto& label : j["outputs"])
        outputs.push_back(model.target_domain.index_of(label.get<std::string>()));
    return [outputs, sizes](const std::vector<int>& row) {
        std::size_t idx = 0;
        for (std::size_t f = 0; f < sizes.size(); ++f)
            idx = idx * static_cast<std::size_t>(sizes[f]) +
                  static_cast<std::size_t>(row[f]);
        return outputs[idx];
    };
}

/// External-command predictor: one CSV line of feature labels in, one target
/// label out, flushed per line. The child stays alive across calls.
class CommandPredictor {
public:
    CommandPredictor(const coalex::EmpiricalModel& model, const std::string& command)
        : domains_(), target_(model.target_domain) {
        for (int f = 0; f < model.feature_count(); ++f)
            domains_.push_back(model.table.columns[model.feature_columns[f]].domain);
        int to_child[2], from_child[2];
        coalex::require(pipe(to_child) == 0 && pipe(from_child) == 0,
                        coalex::Errc::InvalidArgument, "cannot create predictor pipes");
        pid_ = fork();
        coalex::require(pid_ >= 0, coalex::Errc::InvalidArgument,
                        "cannot fork predictor command");
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]); close(to_child[1]);
            close(from_child[0]); close(from_child[1]);
            execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        in_ = fdopen(from_child[0], "r");
        out_ = fdopen(to_child[1], "w");
        coalex::require(in_ && out_, coalex::Errc::InvalidArgument,
                        "cannot open predictor pipes");
    }

    ~CommandPredictor() {
        if (out_) fclose(out_);
        if (in_) fclose(in_);
        if (pid_ > 0) waitpid(pid_, nullptr, 0);
    }

    int operator()(const std::vector<int>& row) {
        std::string line;
        for (std::size_t f = 0; f < domains_.size(); ++f) {
            if (f) line += ',';
            line += domains_[f].labels[row[f]];
        }
        line += '\n';
        fputs(line.c_str(), out_);
        fflush(out_);
        char buf[256];
        coalex::require(fgets(buf, sizeof buf, in_) != nullptr,
                        coalex::Errc::MethodFailure, "predictor command closed its output");
        std::string label(buf);
        while (!label.empty() && (label.back() == '\n' || label.back() == '\r'))
            label.pop_back();
        return target_.index_of(label);
    }

private:
    std::vector<coalex::Domain> domains_;
    coalex::Domain target_;
    pid_t pid_ = -1;
    FILE* in_ = nullptr;
    FILE* out_ = nullptr;
};

/// --predictor {corral | table:FILE | cmd:COMMAND}
coalex::EmpiricalModel build_empirical_model(coalex::SampleTable table,
                                             const std::string& predictor_spec) {
    if (predictor_spec == "corral") return coalex::corral_model(std::move(table));
    if (predictor_spec.rfind("table:", 0) == 0) {
        auto model = coalex::make_empirical_model(std::move(table),
                                                  coalex::Domain{{"0", "1"}}, nullptr,
                                                  predictor_spec);
        // Target domain comes from the table's target column when present.
        for (const auto& c : model.table.columns)
            if (c.role == coalex::ColumnRole::target) model.target_domain = c.domain;
        model.predictor = table_predictor(model, predictor_spec.substr(6));
        return model;
    }
    if (predictor_spec.rfind("cmd:", 0) == 0) {
        auto model = coalex::make_empirical_model(std::move(table),
                                                  coalex::Domain{{"0", "1"}}, nullptr,
                                                  predictor_spec);
        for (const auto& c : model.table.columns)
            if (c.role == coalex::ColumnRole::target) model.target_domain = c.domain;
        auto shared = std::make_shared<CommandPredictor>(model, predictor_spec.substr(4));
        model.predictor = [shared](const std::vector<int>& row) { return (*shared)(row); };
        return model;
    }
    coalex::fail(coalex::Errc::InvalidArgument,
                 "--predictor must be corral, table:FILE, or cmd:COMMAND");
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
    CLI::App app{"Interventional explanation scores, minimal-coalition search, "
                 "and root cause analysis for discrete causal models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // --- score ---
    auto* score = app.add_subcommand("score", "Explanation score of one coalition");
    std::string sc_model, sc_obs, sc_coalition, sc_out;
    EstimatorFlags sc_est;
    score->add_option("--model", sc_model, "Model JSON file")->required();
    score->add_option("--observation", sc_obs, "Observation JSON file")->required();
    score->add_option("--coalition", sc_coalition, "NAME=LABEL pins, comma-separated");
    score->add_option("--out", sc_out, "Write JSON here instead of standard output");
    sc_est.attach(score);
    score->callback([&] {
        coalex::Scm scm = load_model(sc_model);
        coalex::Observation obs =
            coalex::observation_from_json(scm, coalex::load_json(sc_obs));
        coalex::Coalition c = parse_coalition(scm, sc_coalition);
        coalex::EstimatorConfig cfg = sc_est.resolve(scm);
        coalex::ExplanationScore s = coalex::explanation_score_kl(scm, obs, c, cfg);
        RunContext ctx{"score",
                       {{"model", sc_model}, {"observation", sc_obs},
                        {"coalition", sc_coalition}, {"estimator", sc_est.echo()}},
                       {{"estimator", cfg.seed}},
                       coalex::model_hash(scm)};
        emit(ctx, sc_out, coalex::explanation_score_to_json(scm, s).dump(2) + "\n");
    });

    // --- search ---
    auto* search = app.add_subcommand("search", "Size-ordered minimal coalition search");
    std::string se_model, se_obs, se_candidates, se_out;
    double se_alpha = 1.0;
    std::size_t se_kmax = 0;
    bool se_expected = false;
    std::uint64_t se_posterior = 200;
    EstimatorFlags se_est;
    search->add_option("--model", se_model, "Model JSON file")->required();
    search->add_option("--observation", se_obs, "Observation JSON file")->required();
    search->add_option("--alpha", se_alpha, "Score threshold in (0, 1]")
        ->capture_default_str();
    search->add_option("--k-max", se_kmax, "Largest coalition size (0 = unbounded)");
    search->add_option("--candidates", se_candidates,
                       "Comma-separated candidate names (default: observed variables)");
    search->add_flag("--expected", se_expected,
                     "Score expected over the noise posterior (noise candidates)");
    search->add_option("--posterior-samples", se_posterior, "Posterior draws")
        ->capture_default_str();
    search->add_option("--out", se_out, "Write JSON here instead of standard output");
    se_est.attach(search);
    search->callback([&] {
        coalex::Scm scm = load_model(se_model);
        coalex::Observation obs =
            coalex::observation_from_json(scm, coalex::load_json(se_obs));
        coalex::SearchConfig cfg;
        cfg.alpha = se_alpha;
        cfg.k_max = se_kmax;
        cfg.estimator = se_est.resolve(scm);
        if (!se_candidates.empty()) {
            std::istringstream in(se_candidates);
            std::string name;
            while (std::getline(in, name, ','))
                cfg.candidate_set.push_back(scm.id_of(name));
        } else if (se_expected) {
            cfg.candidate_set = scm.noise_ids();
        } else {
            for (const auto& v : scm.variables)
                if (v.kind == coalex::VarKind::observed)
                    cfg.candidate_set.push_back(v.id);
        }
        coalex::SearchResult r;
        if (se_expected) {
            coalex::require(se_est.seed >= 0, coalex::Errc::InvalidArgument,
                            "--seed is required with --expected (seeds must be explicit)");
            r = coalex::expected_minimal_coalitions(
                scm, obs, cfg, se_posterior, nullptr,
                static_cast<std::uint64_t>(se_est.seed));
        } else {
            r = coalex::minimal_coalitions(scm, obs, cfg);
        }
        RunContext ctx{"search",
                       {{"model", se_model}, {"observation", se_obs},
                        {"alpha", se_alpha}, {"k_max", se_kmax},
                        {"candidates", se_candidates}, {"expected", se_expected},
                        {"posterior_samples", se_posterior},
                        {"estimator", se_est.echo()}},
                       {{"estimator", se_est.seed}},
                       coalex::model_hash(scm)};
        emit(ctx, se_out, coalex::search_result_to_json(scm, r).dump(2) + "\n");
    });

    // --- simulate ---
    auto* simulate = app.add_subcommand("simulate", "Forward-sample a model to CSV");
    std::string si_config, si_out, si_emit_model;
    std::uint64_t si_count = 0;
    std::int64_t si_seed = -1;
    int si_filter = -1;
    simulate->add_option("--config", si_config,
                         "Cloud network config JSON (or a model JSON file); "
                         "omit for the built-in 10-node default; 'corral' emits "
                         "the built-in 160-row feature table");
    simulate->add_option("--count", si_count, "Number of rows to draw")->required();
    simulate->add_option("--seed", si_seed, "Random seed")->required();
    simulate->add_option("--filter-target", si_filter,
                         "Keep only rows whose target equals this value code");
    simulate->add_option("--out", si_out, "Output CSV path")->required();
    simulate->add_option("--emit-model", si_emit_model,
                         "Also write the expanded model JSON here");
    simulate->callback([&] {
        coalex::require(si_count > 0, coalex::Errc::InvalidArgument,
                        "--count must be positive");
        coalex::require(si_seed >= 0, coalex::Errc::InvalidArgument,
                        "--seed must be non-negative");
        if (si_config == "corral") {
            coalex::SampleTable table =
                coalex::corral_table(static_cast<std::uint64_t>(si_seed));
            RunContext ctx{"simulate", {{"config", si_config}, {"count", si_count}},
                           {{"simulation", si_seed}}, 0};
            coalex::write_file(si_out, coalex::sample_table_to_csv(table));
            coalex::write_file(si_out + ".meta.json",
                               coalex::sample_sidecar_to_json(table, 0).dump(2) + "\n");
            coalex::write_file(si_out + ".manifest.json", ctx.manifest().dump(2) + "\n");
            std::cerr << "wrote " << table.rows.size() << " rows to " << si_out << "\n";
            return;
        }
        std::vector<std::string> warnings;
        coalex::Scm scm;
        if (si_config.empty()) {
            scm = coalex::cloud_model(coalex::default_cloud_config(), &warnings);
        } else {
            json j = coalex::load_json(si_config);
            scm = j.contains("nodes")
                      ? coalex::cloud_model(coalex::cloud_config_from_json(j), &warnings)
                      : coalex::scm_from_json(j);
        }
        for (const auto& w : warnings) warn(w);
        std::optional<int> filter;
        if (si_filter >= 0) filter = si_filter;
        coalex::SampleTable table = coalex::generate_samples(
            scm, si_count, static_cast<std::uint64_t>(si_seed), filter);
        std::uint64_t hash = coalex::model_hash(scm);
        RunContext ctx{"simulate",
                       {{"config", si_config}, {"count", si_count},
                        {"filter_target", si_filter}},
                       {{"simulation", si_seed}},
                       hash};
        coalex::write_file(si_out, coalex::sample_table_to_csv(table));
        coalex::write_file(si_out + ".meta.json",
                           coalex::sample_sidecar_to_json(table, hash).dump(2) + "\n");
        coalex::write_file(si_out + ".manifest.json", ctx.manifest().dump(2) + "\n");
        if (!si_emit_model.empty())
            coalex::write_file(si_emit_model, coalex::scm_to_json(scm).dump(2) + "\n");
        std::uint64_t kept = table.rows.size();
        std::cerr << "wrote " << kept << " rows to " << si_out << "\n";
    });

    // --- rca ---
    auto* rca = app.add_subcommand("rca", "Root-cause accuracy comparison on a batch");
    std::string rc_model, rc_samples, rc_sidecar, rc_methods = "coca", rc_out, rc_csv;
    double rc_alpha = 0.95, rc_theta_c = 0.95, rc_theta_i = 0.15;
    std::uint64_t rc_posterior = 200;
    std::size_t rc_kmax = 0;
    std::int64_t rc_seed = -1;
    rca->add_option("--model", rc_model, "Model JSON (or cloud config) file")->required();
    rca->add_option("--samples", rc_samples, "Samples CSV (with .meta.json sidecar)")
        ->required();
    rca->add_option("--sidecar", rc_sidecar, "Sidecar path (default: CSV + .meta.json)");
    rca->add_option("--methods", rc_methods, "Comma-separated method names")
        ->capture_default_str();
    rca->add_option("--alpha", rc_alpha, "Coalition-search threshold")
        ->capture_default_str();
    rca->add_option("--theta-c", rc_theta_c, "Cumulative attribution share threshold")
        ->capture_default_str();
    rca->add_option("--theta-i", rc_theta_i, "Individual attribution share threshold")
        ->capture_default_str();
    rca->add_option("--posterior-samples", rc_posterior, "Posterior draws per sample")
        ->capture_default_str();
    rca->add_option("--k-max", rc_kmax, "Largest coalition size (0 = unbounded)");
    rca->add_option("--seed", rc_seed, "Random seed")->required();
    rca->add_option("--out", rc_out, "Write report JSON here instead of standard output");
    rca->add_option("--csv", rc_csv, "Also write the flattened report CSV here");
    rca->callback([&] {
        coalex::Scm scm = load_model(rc_model);
        coalex::SampleTable table = load_samples(rc_samples, rc_sidecar);
        coalex::RcaConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(rc_seed);
        cfg.alpha = rc_alpha;
        cfg.posterior_samples = rc_posterior;
        cfg.k_max = rc_kmax;
        cfg.mapping.theta_c = rc_theta_c;
        cfg.mapping.theta_i = rc_theta_i;
        std::istringstream in(rc_methods);
        std::string name;
        while (std::getline(in, name, ','))
            cfg.methods.push_back(coalex::rca_method_from_name(name));
        coalex::RcaReport report = coalex::evaluate_rca(scm, table, cfg);
        if (report.incident_samples == 0)
            warn("no rows with an anomalous target; the report is empty");
        RunContext ctx{"rca",
                       {{"model", rc_model}, {"samples", rc_samples},
                        {"methods", rc_methods}, {"alpha", rc_alpha},
                        {"theta_c", rc_theta_c}, {"theta_i", rc_theta_i},
                        {"posterior_samples", rc_posterior}, {"k_max", rc_kmax}},
                       {{"rca", rc_seed}},
                       coalex::model_hash(scm)};
        emit(ctx, rc_out, coalex::rca_report_to_json(report).dump(2) + "\n");
        if (!rc_csv.empty()) {
            coalex::write_file(rc_csv, coalex::rca_report_to_csv(report));
            coalex::write_file(rc_csv + ".manifest.json", ctx.manifest().dump(2) + "\n");
        }
    });

    // --- stability ---
    auto* stability =
        app.add_subcommand("stability", "Prediction stability under feature randomization");
    std::string st_table, st_sidecar, st_predictor = "corral", st_ordering, st_scores,
                st_out;
    std::size_t st_row = 0;
    std::uint64_t st_draws = 1000;
    std::int64_t st_seed = -1;
    bool st_exact = false;
    stability->add_option("--table", st_table, "Feature table CSV")->required();
    stability->add_option("--sidecar", st_sidecar, "Sidecar path (default: CSV + .meta.json)");
    stability->add_option("--predictor", st_predictor,
                          "corral | table:FILE | cmd:COMMAND")
        ->capture_default_str();
    stability->add_option("--row", st_row, "Row index to explain")->capture_default_str();
    stability
        ->add_option("--ordering", st_ordering,
                     "scores:FILE | coalition-last:FILE | random")
        ->required();
    stability->add_option("--scores", st_scores,
                          "Score CSV for the coalition-last remainder order");
    stability->add_option("--draws", st_draws, "Randomization draws per k")
        ->capture_default_str();
    stability->add_flag("--exact", st_exact, "Average over all table rows (no draws)");
    stability->add_option("--seed", st_seed, "Random seed");
    stability->add_option("--out", st_out, "Write CSV here instead of standard output");
    stability->callback([&] {
        coalex::EmpiricalModel model =
            build_empirical_model(load_samples(st_table, st_sidecar), st_predictor);
        coalex::require(st_row < model.table.rows.size(), coalex::Errc::InvalidArgument,
                        "--row is out of range");
        std::vector<int> row = model.feature_row(st_row);

        auto load_scores = [&](const std::string& path) {
            auto pairs = coalex::feature_scores_from_csv(coalex::read_file(path));
            return coalex::normalize_feature_scores(model, pairs);
        };
        coalex::FeatureOrdering ordering;
        if (st_ordering.rfind("scores:", 0) == 0) {
            ordering = coalex::ordering_from_scores(model, load_scores(st_ordering.substr(7)));
        } else if (st_ordering.rfind("coalition-last:", 0) == 0) {
            json cj = coalex::load_json(st_ordering.substr(15));
            const json& names = cj.is_array() ? cj : cj.at("members");
            std::vector<int> coalition;
            for (const auto& n : names)
                coalition.push_back(model.feature_index(n.get<std::string>()));
            std::optional<std::vector<double>> scores;
            if (!st_scores.empty()) scores = load_scores(st_scores);
            ordering = coalex::ordering_coalition_last(model, coalition, scores);
        } else if (st_ordering == "random") {
            coalex::require(st_seed >= 0, coalex::Errc::InvalidArgument,
                            "--seed is required for the random ordering");
            ordering =
                coalex::ordering_random(model, static_cast<std::uint64_t>(st_seed));
        } else {
            coalex::fail(coalex::Errc::InvalidArgument,
                         "--ordering must be scores:FILE, coalition-last:FILE, or random");
        }

        std::uint64_t draws = st_exact ? 0 : st_draws;
        if (!st_exact)
            coalex::require(st_seed >= 0, coalex::Errc::InvalidArgument,
                            "--seed is required for sampled draws (use --exact otherwise)");
        coalex::StabilityCurve curve = coalex::stability_curve(
            model, row, ordering, draws,
            st_seed >= 0 ? static_cast<std::uint64_t>(st_seed) : 0);
        RunContext ctx{"stability",
                       {{"table", st_table}, {"predictor", st_predictor},
                        {"row", st_row}, {"ordering", st_ordering},
                        {"scores", st_scores}, {"draws", draws}},
                       {{"stability", st_seed}},
                       0};
        emit(ctx, st_out, coalex::stability_curve_to_csv(curve));
    });

    // --- optimize ---
    auto* optimize =
        app.add_subcommand("optimize", "Best intervention on a fully-explaining coalition");
    std::string op_model, op_obs, op_coalition, op_desired, op_out;
    EstimatorFlags op_est;
    optimize->add_option("--model", op_model, "Model JSON file")->required();
    optimize->add_option("--observation", op_obs, "Observation JSON file")->required();
    optimize->add_option("--coalition", op_coalition, "NAME=LABEL pins, comma-separated")
        ->required();
    optimize->add_option("--desired", op_desired, "Desired target label")->required();
    optimize->add_option("--out", op_out, "Write JSON here instead of standard output");
    op_est.attach(optimize);
    optimize->callback([&] {
        coalex::Scm scm = load_model(op_model);
        coalex::Observation obs =
            coalex::observation_from_json(scm, coalex::load_json(op_obs));
        coalex::Coalition c = parse_coalition(scm, op_coalition);
        int desired = scm.var(scm.target).domain.index_of(op_desired);
        coalex::require(desired != obs[scm.target], coalex::Errc::InvalidArgument,
                        "--desired equals the observed target value");
        coalex::EstimatorConfig cfg = op_est.resolve(scm);
        coalex::InterventionProposal p =
            coalex::optimal_intervention(scm, obs, c, desired, cfg);
        RunContext ctx{"optimize",
                       {{"model", op_model}, {"observation", op_obs},
                        {"coalition", op_coalition}, {"desired", op_desired},
                        {"estimator", op_est.echo()}},
                       {{"estimator", op_est.seed}},
                       coalex::model_hash(scm)};
        emit(ctx, op_out, coalex::proposal_to_json(scm, p).dump(2) + "\n");
    });

    // --- selftest ---
    auto* selftest = app.add_subcommand("selftest", "Run the generative property suite");
    std::uint64_t pt_cases = 200, pt_mc_cases = 0;
    std::int64_t pt_seed = 42;
    std::string pt_out;
    selftest->add_option("--cases", pt_cases, "Generated models")->capture_default_str();
    selftest->add_option("--mc-cases", pt_mc_cases, "Monte Carlo agreement models")
        ->capture_default_str();
    selftest->add_option("--seed", pt_seed, "Generator seed")->capture_default_str();
    selftest->add_option("--out", pt_out, "Write JSON here instead of standard output");
    selftest->callback([&] {
        coalex::PropertyReport r =
            coalex::run_property_suite(static_cast<std::uint64_t>(pt_seed), pt_cases);
        json out = coalex::property_report_to_json(r);
        bool ok = r.all_passed();
        if (pt_mc_cases > 0) {
            coalex::PropertyReport mc =
                coalex::run_mc_agreement(static_cast<std::uint64_t>(pt_seed), pt_mc_cases);
            out["mc"] = coalex::property_report_to_json(mc);
            ok = ok && mc.all_passed();
        }
        RunContext ctx{"selftest",
                       {{"cases", pt_cases}, {"mc_cases", pt_mc_cases}},
                       {{"generator", pt_seed}},
                       0};
        emit(ctx, pt_out, out.dump(2) + "\n");
        coalex::require(ok, coalex::Errc::MethodFailure, "property suite found failures");
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const coalex::Error& e) {
        json err = {{"error",
                     {{"code", coalex::errc_name(e.code())}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        json err = {{"error", {{"code", "InvalidArgument"}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
