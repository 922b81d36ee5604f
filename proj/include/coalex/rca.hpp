#ifndef COALEX_RCA_HPP
#define COALEX_RCA_HPP

#include "coalex/core.hpp"
#include "coalex/datasets.hpp"
#include "coalex/error.hpp"
#include "coalex/inference.hpp"
#include "coalex/score.hpp"
#include "coalex/search.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace coalex {

/// A node is anomalous when its observed value differs from the nominal
/// (index 0) value of its domain.
inline bool is_anomalous(const Scm& scm, const Observation& obs, VariableId v) {
    require(obs.has(v), Errc::InvalidArgument,
            "observation does not cover '" + scm.var(v).name + "'");
    return obs[v] != 0;
}

/// Anomalous nodes none of whose observed parents are anomalous, reported as
/// the noise parents of those nodes.
inline std::vector<VariableId> traversal_rca(const Scm& scm, const Observation& obs) {
    std::vector<VariableId> result;
    for (VariableId v : scm.observed_ids()) {
        if (!is_anomalous(scm, obs, v)) continue;
        bool parent_anomalous = false;
        for (VariableId p : scm.observed_parents(v))
            if (is_anomalous(scm, obs, p)) parent_anomalous = true;
        if (!parent_anomalous) result.push_back(scm.noise_parent(v));
    }
    std::sort(result.begin(), result.end());
    return result;
}

/// Walks upward from the target through anomalous nodes only and reports the
/// leaves of that walk (again as noise parents). Anomalous nodes that are not
/// connected to the target through an anomalous path are ignored.
inline std::vector<VariableId> backtracking_traversal_rca(const Scm& scm,
                                                          const Observation& obs) {
    std::vector<VariableId> result;
    if (!is_anomalous(scm, obs, scm.target)) return result;
    std::vector<char> visited(static_cast<std::size_t>(scm.size()), 0);
    std::vector<VariableId> frontier{scm.target};
    visited[scm.target] = 1;
    while (!frontier.empty()) {
        VariableId v = frontier.back();
        frontier.pop_back();
        bool parent_anomalous = false;
        for (VariableId p : scm.observed_parents(v)) {
            if (!is_anomalous(scm, obs, p)) continue;
            parent_anomalous = true;
            if (!visited[p]) {
                visited[p] = 1;
                frontier.push_back(p);
            }
        }
        if (!parent_anomalous) result.push_back(scm.noise_parent(v));
    }
    std::sort(result.begin(), result.end());
    return result;
}

struct AttributionResult {
    std::vector<VariableId> players;
    std::vector<double> values; // one Shapley value per player, same order
};

/// Exact Shapley values of a transferable-utility game given by `value_fn`
/// over bitmask subsets of `player_count` players (player i = bit i).
template <typename ValueFn>
std::vector<double> shapley_values(int player_count, ValueFn&& value_fn) {
    require(player_count >= 1 && player_count <= 20, Errc::TooManyPlayers,
            "exact Shapley attribution supports 1..20 players");
    const int n = player_count;
    const std::uint32_t full = (1u << n) - 1u;
    std::vector<double> v(full + 1u);
    for (std::uint32_t mask = 0; mask <= full; ++mask) v[mask] = value_fn(mask);
    // weight(s) = s! (n-1-s)! / n! = 1 / (n * C(n-1, s))
    std::vector<double> weight(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        double binom = 1.0;
        for (int j = 1; j <= s; ++j) binom *= static_cast<double>(n - j) / j;
        weight[s] = 1.0 / (n * binom);
    }
    std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
        int size = std::popcount(mask);
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) continue;
            phi[i] += weight[size] * (v[mask | (1u << i)] - v[mask]);
        }
    }
    return phi;
}

enum class MappingMode { cumulative, individual };

struct MappingConfig {
    MappingMode mode = MappingMode::cumulative;
    double theta_c = 0.95; // cumulative share threshold
    double theta_i = 0.15; // individual share threshold
};

/// Turns per-player attribution scores into a predicted root-cause set.
/// Negative scores are clamped to zero before normalization; cumulative mode
/// takes the descending-share prefix until theta_c is covered, individual
/// mode takes every player at or above theta_i.
inline std::vector<VariableId> map_scores_to_coalition(const AttributionResult& attribution,
                                                       const MappingConfig& cfg) {
    require(attribution.players.size() == attribution.values.size(), Errc::InvalidArgument,
            "attribution players and values differ in length");
    std::vector<double> clamped(attribution.values.size());
    double total = 0.0;
    for (std::size_t i = 0; i < attribution.values.size(); ++i) {
        clamped[i] = std::max(attribution.values[i], 0.0);
        total += clamped[i];
    }
    require(total > 0.0, Errc::AllScoresZero,
            "no player has a positive attribution score");
    std::vector<VariableId> picked;
    if (cfg.mode == MappingMode::individual) {
        for (std::size_t i = 0; i < clamped.size(); ++i)
            if (clamped[i] / total >= cfg.theta_i) picked.push_back(attribution.players[i]);
    } else {
        std::vector<std::size_t> order(clamped.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return clamped[a] > clamped[b]; });
        double cumulative = 0.0;
        for (std::size_t i : order) {
            picked.push_back(attribution.players[i]);
            cumulative += clamped[i] / total;
            if (cumulative >= cfg.theta_c) break;
        }
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

/// Most probable noise completion of an observation (posterior mode).
inline std::vector<int> posterior_mode(const Scm& scm, const NoisePosterior& posterior) {
    std::vector<int> mode(static_cast<std::size_t>(scm.size()), 0);
    for (const auto& [v, factor] : posterior.factors)
        mode[v] = factor.kind == NoiseFactor::fixed ? factor.value : (factor.p > 0.5 ? 1 : 0);
    return mode;
}

enum class ValueGame {
    outlier_reduction, // log P[Y=y | do] - log P[Y=y]
    mean_deviation,    // |E[Y | do] - E[Y]|
};

/// Bitmask game over noise players: members are pinned to the posterior-mode
/// completion, non-members stay at their priors.
class NoiseOutlierGame {
public:
    NoiseOutlierGame(std::vector<VariableId> players, std::vector<int> mode, int target_value,
                     ValueGame game, InferenceCache& cache)
        : players_(std::move(players)), mode_(std::move(mode)), target_value_(target_value),
          game_(game), cache_(&cache) {}

    double operator()(std::uint32_t mask) const {
        Coalition coalition;
        for (std::size_t i = 0; i < players_.size(); ++i)
            if (mask & (1u << i)) {
                coalition.members.push_back(players_[i]);
                coalition.values.push_back(mode_[players_[i]]);
            }
        const CategoricalDistribution& dist = cache_->interventional(coalition);
        const CategoricalDistribution& base = cache_->observational();
        if (game_ == ValueGame::outlier_reduction) {
            double p = std::max(dist.p(target_value_), 1e-300);
            double p0 = std::max(base.p(target_value_), 1e-300);
            return std::log(p) - std::log(p0);
        }
        // binary targets: expectation of the erring indicator
        return std::abs(dist.p(1) - base.p(1));
    }

private:
    std::vector<VariableId> players_;
    std::vector<int> mode_;
    int target_value_;
    ValueGame game_;
    InferenceCache* cache_;
};

/// One Shapley-attribution pass for an observed incident.
inline AttributionResult shapley_attribution(const Scm& scm, const Observation& obs,
                                             ValueGame game, InferenceCache& cache) {
    AttributionResult result;
    result.players = scm.noise_ids();
    NoisePosterior posterior = noise_posterior(scm, obs);
    std::vector<int> mode = posterior_mode(scm, posterior);
    NoiseOutlierGame value_fn(result.players, mode, obs[scm.target], game, cache);
    result.values = shapley_values(static_cast<int>(result.players.size()), value_fn);
    return result;
}

enum class RcaMethod {
    coca,                   // expected-score minimal-coalition search
    traversal,              // anomalous nodes without anomalous parents
    backtracking,           // traversal restricted to anomalous paths from the target
    shapley_it_cumulative,  // outlier-reduction game, cumulative mapping
    shapley_it_individual,  // outlier-reduction game, individual mapping
    shapley_mean_cumulative,
    shapley_mean_individual,
};

inline std::string rca_method_name(RcaMethod m) {
    switch (m) {
    case RcaMethod::coca: return "coca";
    case RcaMethod::traversal: return "traversal";
    case RcaMethod::backtracking: return "backtracking";
    case RcaMethod::shapley_it_cumulative: return "shapley-it-c";
    case RcaMethod::shapley_it_individual: return "shapley-it-i";
    case RcaMethod::shapley_mean_cumulative: return "shapley-mean-c";
    case RcaMethod::shapley_mean_individual: return "shapley-mean-i";
    }
    fail(Errc::InvalidArgument, "unknown method");
}

inline RcaMethod rca_method_from_name(const std::string& name) {
    for (RcaMethod m :
         {RcaMethod::coca, RcaMethod::traversal, RcaMethod::backtracking,
          RcaMethod::shapley_it_cumulative, RcaMethod::shapley_it_individual,
          RcaMethod::shapley_mean_cumulative, RcaMethod::shapley_mean_individual})
        if (rca_method_name(m) == name) return m;
    fail(Errc::InvalidArgument,
         "unknown root-cause method '" + name +
             "'; valid methods: coca, traversal, backtracking, shapley-it-c, "
             "shapley-it-i, shapley-mean-c, shapley-mean-i");
}

struct GroupStats {
    std::uint64_t n = 0;
    std::uint64_t correct = 0;
    std::uint64_t true_positives = 0;
    std::uint64_t false_positives = 0;
    std::uint64_t false_negatives = 0;
    double accuracy() const { return n == 0 ? 0.0 : static_cast<double>(correct) / n; }
};

struct MethodReport {
    RcaMethod method = RcaMethod::coca;
    std::map<std::string, GroupStats> by_error_count; // keys "2", "3", "4", "5+"
    GroupStats overall;
    std::uint64_t failures = 0; // samples where the method raised an error
};

struct RcaReport {
    std::uint64_t total_samples = 0;
    std::uint64_t incident_samples = 0; // target erring
    std::uint64_t seed = 0;
    std::vector<MethodReport> methods;
};

struct RcaConfig {
    std::vector<RcaMethod> methods{RcaMethod::coca, RcaMethod::traversal,
                                   RcaMethod::backtracking};
    std::uint64_t seed = 1;       // posterior-draw substreams, one per row
    double alpha = 0.95;          // coalition-search success threshold
    int posterior_samples = 200;  // draws behind each expected score
    int k_max = 0;                // 0 = search all sizes
    MappingConfig mapping;        // thresholds for the Shapley methods
    EstimatorConfig estimator = EstimatorConfig::exact_default();
};

inline std::string error_count_group(int errors) {
    return errors >= 5 ? std::string("5+") : std::to_string(errors);
}

namespace detail {

inline void tally_prediction(GroupStats& g, const std::vector<VariableId>& predicted,
                             const std::vector<VariableId>& truth, bool correct) {
    g.n += 1;
    g.correct += correct ? 1 : 0;
    std::size_t tp = 0;
    for (VariableId v : predicted)
        if (std::binary_search(truth.begin(), truth.end(), v)) ++tp;
    g.true_positives += tp;
    g.false_positives += predicted.size() - tp;
    g.false_negatives += truth.size() - tp;
}

} // namespace detail

/// Scores every requested root-cause method on a batch of rows whose hidden
/// noise columns are the ground truth. A row counts correct for the coalition
/// search iff all minimal coalitions it returns equal the true error set; for
/// set-valued methods iff the returned set equals it. Per-row method errors
/// count as failures, not as crashes.
inline RcaReport evaluate_rca(const Scm& scm, const SampleTable& samples,
                              const RcaConfig& cfg) {
    require(!cfg.methods.empty(), Errc::InvalidArgument, "no methods requested");
    for (VariableId v : scm.noise_ids())
        samples.column_index(scm.var(v).name); // ground truth must be present
    RcaReport report;
    report.seed = cfg.seed;
    report.methods.resize(cfg.methods.size());
    for (std::size_t m = 0; m < cfg.methods.size(); ++m)
        report.methods[m].method = cfg.methods[m];

    InferenceCache cache(scm, cfg.estimator); // queries recur across samples
    const auto noise = scm.noise_ids();
    Stream master(cfg.seed, 0x726361ULL);

    SearchConfig search_cfg;
    search_cfg.alpha = cfg.alpha;
    search_cfg.k_max = static_cast<std::size_t>(cfg.k_max);
    search_cfg.candidate_set = noise;
    search_cfg.estimator = cfg.estimator;

    for (std::size_t i = 0; i < samples.rows.size(); ++i) {
        Observation full = observation_from_row(scm, samples, i);
        report.total_samples += 1;
        if (full[scm.target] == 0) continue;
        report.incident_samples += 1;

        std::vector<VariableId> truth;
        int errors = 0;
        for (VariableId v : noise)
            if (full[v] != 0) {
                truth.push_back(v);
                ++errors;
            }
        const std::string group = error_count_group(errors);

        Observation obs(static_cast<std::size_t>(scm.size()));
        for (VariableId v : scm.observed_ids()) obs.set(v, full[v]);

        for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
            MethodReport& mr = report.methods[m];
            std::vector<VariableId> predicted;
            bool correct = false;
            try {
                switch (cfg.methods[m]) {
                case RcaMethod::coca: {
                    SearchResult sr = expected_minimal_coalitions(
                        scm, obs, search_cfg, static_cast<std::uint64_t>(cfg.posterior_samples),
                        &cache, master.substream(i).substream(0x657370ULL).next_u64());
                    correct = sr.minimal_size.has_value() && !sr.coalitions.empty();
                    for (const auto& sc : sr.coalitions)
                        correct = correct && sc.coalition.members == truth;
                    // flatten for tp/fp bookkeeping: union of returned members
                    std::set<VariableId> members;
                    for (const auto& sc : sr.coalitions)
                        members.insert(sc.coalition.members.begin(),
                                       sc.coalition.members.end());
                    predicted.assign(members.begin(), members.end());
                    break;
                }
                case RcaMethod::traversal:
                    predicted = traversal_rca(scm, obs);
                    correct = predicted == truth;
                    break;
                case RcaMethod::backtracking:
                    predicted = backtracking_traversal_rca(scm, obs);
                    correct = predicted == truth;
                    break;
                default: {
                    const bool mean =
                        cfg.methods[m] == RcaMethod::shapley_mean_cumulative ||
                        cfg.methods[m] == RcaMethod::shapley_mean_individual;
                    const bool individual =
                        cfg.methods[m] == RcaMethod::shapley_it_individual ||
                        cfg.methods[m] == RcaMethod::shapley_mean_individual;
                    AttributionResult attribution = shapley_attribution(
                        scm, obs,
                        mean ? ValueGame::mean_deviation : ValueGame::outlier_reduction,
                        cache);
                    MappingConfig mapping = cfg.mapping;
                    mapping.mode =
                        individual ? MappingMode::individual : MappingMode::cumulative;
                    predicted = map_scores_to_coalition(attribution, mapping);
                    correct = predicted == truth;
                    break;
                }
                }
            } catch (const Error&) {
                mr.failures += 1;
                correct = false;
                predicted.clear();
            }
            detail::tally_prediction(mr.by_error_count[group], predicted, truth, correct);
            detail::tally_prediction(mr.overall, predicted, truth, correct);
        }
    }
    return report;
}

} // namespace coalex

#endif
