#ifndef COALEX_DATASETS_HPP
#define COALEX_DATASETS_HPP

#include "coalex/core.hpp"
#include "coalex/error.hpp"
#include "coalex/inference.hpp"
#include "coalex/rng.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace coalex {

enum class ColumnRole { feature, target, noise };

struct ColumnInfo {
    std::string name;
    Domain domain;
    ColumnRole role = ColumnRole::feature;
};

/// In-memory sample set: named columns over finite domains plus the seed the
/// rows were generated from. Hidden noise columns, when present, are the
/// ground truth of each row.
struct SampleTable {
    std::vector<ColumnInfo> columns;
    std::vector<std::vector<int>> rows;
    std::uint64_t seed = 0;
    // rows grouped by injected-error count; [0] counts target==0, [1] target==1
    std::map<int, std::array<std::uint64_t, 2>> error_tally;

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i].name == name) return static_cast<int>(i);
        fail(Errc::UnknownFeature, "no column named '" + name + "'");
    }
};

/// The two-input AND model: two Bernoulli noises, two pass-through observed
/// variables, target = X1 AND X2.
inline Scm and_gate_model(double p1, double p2) {
    require(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0, Errc::DegenerateParameter,
            "noise parameters must lie strictly inside (0, 1)");
    ScmBuilder b;
    b.add_variable("L1", VarKind::noise, Domain::binary());
    b.add_variable("L2", VarKind::noise, Domain::binary());
    b.add_variable("X1", VarKind::observed, Domain::binary());
    b.add_variable("X2", VarKind::observed, Domain::binary());
    b.add_variable("Y", VarKind::target, Domain::binary());
    b.set_noise_prior(b.id_of("L1"), {1.0 - p1, p1});
    b.set_noise_prior(b.id_of("L2"), {1.0 - p2, p2});
    b.add_edge("L1", "X1");
    b.add_edge("L2", "X2");
    b.set_truth_table(b.id_of("X1"), {0, 1}); // pass-through
    b.set_truth_table(b.id_of("X2"), {0, 1});
    b.add_edge("X1", "Y");
    b.add_edge("X2", "Y");
    b.set_truth_table(b.id_of("Y"), {0, 0, 0, 1}); // AND
    return b.build();
}

struct CloudNode {
    std::string name;
    double error_rate = 0.0; // p_i
    int threshold = 1;       // t_i
};

struct CloudNetworkConfig {
    std::vector<CloudNode> nodes; // topological order, target last
    std::vector<std::pair<std::string, std::string>> edges;
    std::string target;
};

/// Error-propagation network: every node i is a binary threshold gate
/// X_i = Lambda_i OR (count of erring parents >= t_i), Lambda_i ~ Bern(p_i).
inline Scm cloud_model(const CloudNetworkConfig& cfg,
                       std::vector<std::string>* warnings = nullptr) {
    ScmBuilder b;
    for (const auto& node : cfg.nodes) {
        require(node.error_rate >= 0.0 && node.error_rate <= 1.0, Errc::InvalidArgument,
                "error rate of '" + node.name + "' outside [0, 1]");
        b.add_variable("L_" + node.name, VarKind::noise, Domain::binary());
    }
    for (const auto& node : cfg.nodes) {
        b.add_variable(node.name,
                       node.name == cfg.target ? VarKind::target : VarKind::observed,
                       Domain::binary());
    }
    for (const auto& node : cfg.nodes) {
        b.add_edge("L_" + node.name, node.name);
        b.set_noise_prior(b.id_of("L_" + node.name),
                          {1.0 - node.error_rate, node.error_rate});
    }
    for (const auto& [parent, child] : cfg.edges) b.add_edge(parent, child);
    for (const auto& node : cfg.nodes) {
        int observed_parents = 0;
        for (const auto& [parent, child] : cfg.edges)
            if (child == node.name) ++observed_parents;
        // Roots may use t=1 so their gate never fires (the empty sum stays 0).
        int max_t = observed_parents == 0 ? 1 : observed_parents;
        require(node.threshold >= 0 && node.threshold <= max_t, Errc::InvalidThreshold,
                "threshold of '" + node.name + "' outside 0..max(1, #parents)");
        if (node.threshold == 0 && warnings)
            warnings->push_back("node '" + node.name + "' has threshold 0 and is constantly erring");
        b.set_threshold_gate(b.id_of(node.name), node.threshold);
    }
    return b.build();
}

/// Shipped 10-node fixture: three propagation channels that must all err
/// before the target fails, so a target error needs at least three
/// simultaneous noise errors. svc-legacy is a flaky high-error-rate service;
/// svc-cache's gate also listens to svc-legacy, which masks cache errors from
/// parent-based anomaly reasoning whenever svc-legacy is down. Parameters are
/// artifact-chosen, not taken from any production system.
inline CloudNetworkConfig default_cloud_config() {
    CloudNetworkConfig cfg;
    cfg.nodes = {
        {"svc-legacy", 0.60, 1},  // channel A root
        {"svc-config", 0.002, 1}, // second input of svc-cache's gate
        {"svc-db", 0.03, 1},      // channel C root
        {"svc-auth", 0.001, 1},   // channel A relay
        {"svc-cache", 0.03, 2},   // channel B source; gate = legacy AND config
        {"svc-index", 0.001, 1},  // channel C relay
        {"svc-api", 0.001, 1},    // channel A tail
        {"svc-search", 0.001, 1}, // channel B tail
        {"svc-render", 0.001, 1}, // channel C tail
        {"www", 0.0, 3},          // target: fails when all three channels err
    };
    cfg.edges = {
        {"svc-legacy", "svc-auth"},   {"svc-auth", "svc-api"},
        {"svc-legacy", "svc-cache"},  {"svc-config", "svc-cache"},
        {"svc-cache", "svc-search"},  {"svc-db", "svc-index"},
        {"svc-index", "svc-render"},  {"svc-api", "www"},
        {"svc-search", "www"},        {"svc-render", "www"},
    };
    cfg.target = "www";
    return cfg;
}

/// The CorrAL construction: 160 rows over six Boolean features; the class is
/// (A0 and A1) or (B0 and B1), Irrelevant is uniform noise, and Correlated
/// agrees with the class in 75% of rows on average.
inline SampleTable corral_table(std::uint64_t seed) {
    SampleTable t;
    t.seed = seed;
    const Domain boolean = Domain::boolean();
    t.columns = {
        {"A0", boolean, ColumnRole::feature},         {"A1", boolean, ColumnRole::feature},
        {"B0", boolean, ColumnRole::feature},         {"B1", boolean, ColumnRole::feature},
        {"Irrelevant", boolean, ColumnRole::feature}, {"Correlated", boolean, ColumnRole::feature},
        {"class", boolean, ColumnRole::target},
    };
    Stream master(seed, 0x636f7272ULL);
    for (int row = 0; row < 160; ++row) {
        Stream s = master.substream(static_cast<std::uint64_t>(row));
        int a0 = s.bernoulli(0.5), a1 = s.bernoulli(0.5);
        int b0 = s.bernoulli(0.5), b1 = s.bernoulli(0.5);
        int irrelevant = s.bernoulli(0.5);
        int cls = ((a0 && a1) || (b0 && b1)) ? 1 : 0;
        int correlated = s.bernoulli(0.75) ? cls : 1 - cls;
        t.rows.push_back({a0, a1, b0, b1, irrelevant, correlated, cls});
    }
    return t;
}

inline int corral_predict(int a0, int a1, int b0, int b1) {
    return ((a0 && a1) || (b0 && b1)) ? 1 : 0;
}

/// Forward-samples `count` rows from the noise priors; observed and target
/// columns first, hidden noise columns after them. Rows are seed-partitioned,
/// so parallel generation would reproduce sequential output bit for bit.
inline SampleTable generate_samples(const Scm& scm, std::uint64_t count, std::uint64_t seed,
                                    std::optional<int> filter_target = std::nullopt) {
    require(count >= 1, Errc::InvalidArgument, "sample count must be positive");
    SampleTable t;
    t.seed = seed;
    const auto observed = scm.observed_ids();
    const auto noise = scm.noise_ids();
    for (VariableId v : observed)
        t.columns.push_back({scm.var(v).name, scm.var(v).domain,
                             v == scm.target ? ColumnRole::target : ColumnRole::feature});
    for (VariableId v : noise)
        t.columns.push_back({scm.var(v).name, scm.var(v).domain, ColumnRole::noise});

    Stream master(seed, 0x73696dULL);
    std::vector<int> state(static_cast<std::size_t>(scm.size()), -1);
    for (std::uint64_t i = 0; i < count; ++i) {
        detail::sample_state(scm, master.substream(i), state);
        int errors = 0;
        for (VariableId v : noise) errors += state[v] != 0 ? 1 : 0;
        int y = state[scm.target];
        t.error_tally[errors][y == 0 ? 0 : 1] += 1;
        if (filter_target && y != *filter_target) continue;
        std::vector<int> row;
        row.reserve(observed.size() + noise.size());
        for (VariableId v : observed) row.push_back(state[v]);
        for (VariableId v : noise) row.push_back(state[v]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Reconstructs one table row as a model observation (observed + target +
/// noise columns when present).
inline Observation observation_from_row(const Scm& scm, const SampleTable& table,
                                        std::size_t row_index) {
    Observation obs(static_cast<std::size_t>(scm.size()));
    const auto& row = table.rows[row_index];
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        obs.set(scm.id_of(table.columns[c].name), row[c]);
    return obs;
}

} // namespace coalex

#endif
