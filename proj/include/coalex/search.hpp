#ifndef COALEX_SEARCH_HPP
#define COALEX_SEARCH_HPP

#include "coalex/core.hpp"
#include "coalex/error.hpp"
#include "coalex/inference.hpp"
#include "coalex/score.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace coalex {

struct SearchConfig {
    double alpha = 1.0;
    std::size_t k_max = 0; // 0 = unbounded (up to the candidate count)
    std::vector<VariableId> candidate_set;
    EstimatorConfig estimator;
    // Skip supersets of already-found full explanations when alpha = 1.
    // Output-equivalent to the plain search (the size loop stops at the first
    // successful size); kept behind a flag.
    bool skip_full_supersets = false;
};

struct ScoredCoalition {
    Coalition coalition;
    double score = 0.0;
};

struct SearchResult {
    std::optional<std::size_t> minimal_size;
    std::vector<ScoredCoalition> coalitions; // all at minimal_size, score >= alpha
    bool exhausted = false;                  // k_max hit without success
    std::uint64_t evaluations = 0;           // scored coalitions
};

namespace detail {

inline void validate_search_config(const Scm& scm, const SearchConfig& cfg) {
    require(cfg.alpha > 0.0 && cfg.alpha <= 1.0, Errc::InvalidArgument,
            "alpha must lie in (0, 1]");
    require(!cfg.candidate_set.empty(), Errc::EmptyCandidateSet,
            "candidate set is empty");
    for (VariableId v : cfg.candidate_set)
        require(v != scm.target, Errc::TargetInCoalition,
                "candidate set must exclude the target");
}

inline bool contains_all(const std::vector<VariableId>& sorted_set,
                         const std::vector<VariableId>& sorted_subset) {
    std::size_t i = 0;
    for (VariableId v : sorted_set) {
        if (i == sorted_subset.size()) break;
        if (v == sorted_subset[i]) ++i;
    }
    return i == sorted_subset.size();
}

/// Size-ordered subset search shared by all scoring backends. Enumerates
/// index combinations lexicographically so outputs are reproducible.
inline SearchResult search_minimal(std::vector<VariableId> candidates, std::size_t k_max,
                                   double alpha, bool skip_full_supersets,
                                   const std::function<double(const std::vector<VariableId>&)>& score_fn) {
    std::sort(candidates.begin(), candidates.end());
    const std::size_t n = candidates.size();
    const std::size_t limit = (k_max == 0 || k_max > n) ? n : k_max;

    SearchResult result;
    std::vector<std::vector<VariableId>> found_full;
    for (std::size_t k = 1; k <= limit; ++k) {
        std::vector<std::size_t> idx(k);
        for (std::size_t i = 0; i < k; ++i) idx[i] = i;
        std::vector<ScoredCoalition> hits;
        for (;;) {
            std::vector<VariableId> members(k);
            for (std::size_t i = 0; i < k; ++i) members[i] = candidates[idx[i]];

            bool skip = false;
            if (skip_full_supersets && alpha >= 1.0)
                for (const auto& full : found_full)
                    if (contains_all(members, full)) {
                        skip = true;
                        break;
                    }
            if (!skip) {
                double score = score_fn(members);
                ++result.evaluations;
                if (score >= alpha) {
                    hits.push_back({Coalition{members, {}}, score});
                    if (alpha >= 1.0) found_full.push_back(members);
                }
            }

            // next lexicographic combination
            std::size_t i = k;
            while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
            if (i == 0) break;
            ++idx[i - 1];
            for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
        }
        if (!hits.empty()) {
            result.minimal_size = k;
            result.coalitions = std::move(hits);
            return result;
        }
    }
    result.exhausted = true;
    return result;
}

} // namespace detail

/// All minimum-size coalitions whose explanation score clears alpha, with
/// coalition values taken from the observation. Scores every size-k subset of
/// the candidate set for k = 1, 2, ... and stops at the first size with hits.
inline SearchResult minimal_coalitions(const Scm& scm, const Observation& observation,
                                       const SearchConfig& cfg,
                                       InferenceCache* shared_cache = nullptr) {
    detail::validate_search_config(scm, cfg);
    InferenceCache local(scm, cfg.estimator);
    InferenceCache& cache = shared_cache ? *shared_cache : local;
    // Propagate UndefinedScore up front: a degenerate target distribution
    // invalidates every score of this observation.
    require(observation.has(scm.target), Errc::InvalidArgument,
            "observation must include the target value");
    const int y = observation[scm.target];
    double py = cache.observational().p(y);
    require(py > 0.0 && py < 1.0, Errc::UndefinedScore,
            "score undefined: P[Y=y] must lie in (0, 1)");

    auto score_fn = [&](const std::vector<VariableId>& members) {
        Coalition c = coalition_from_observation(scm, members, observation);
        return explanation_score_kl(scm, observation, c, cfg.estimator, &cache).value;
    };
    SearchResult result = detail::search_minimal(cfg.candidate_set, cfg.k_max, cfg.alpha,
                                                 cfg.skip_full_supersets, score_fn);
    for (auto& sc : result.coalitions)
        sc.coalition = coalition_from_observation(scm, sc.coalition.members, observation);
    return result;
}

/// Same size-ordered search over noise variables, but each candidate index
/// set is scored by the expected explanation score over one shared posterior
/// sample list (shared for determinism and fair size-k comparisons).
inline SearchResult expected_minimal_coalitions(const Scm& scm, const Observation& observation,
                                                const SearchConfig& cfg,
                                                std::uint64_t posterior_sample_count,
                                                InferenceCache* shared_cache = nullptr,
                                                std::optional<std::uint64_t> posterior_seed = std::nullopt) {
    detail::validate_search_config(scm, cfg);
    for (VariableId v : cfg.candidate_set)
        require(scm.is_noise(v), Errc::InvalidArgument,
                "expected-score candidates must be noise variables");

    NoisePosterior posterior = noise_posterior(scm, observation);
    std::vector<Observation> samples = sample_noise_posterior(
        posterior, posterior_sample_count,
        posterior_seed ? *posterior_seed : cfg.estimator.seed);
    InferenceCache local(scm, cfg.estimator);
    InferenceCache& cache = shared_cache ? *shared_cache : local;

    auto score_fn = [&](const std::vector<VariableId>& members) {
        return expected_explanation_score(scm, members, samples, cfg.estimator, &cache).value;
    };
    SearchResult result = detail::search_minimal(cfg.candidate_set, cfg.k_max, cfg.alpha,
                                                 cfg.skip_full_supersets, score_fn);

    // Report pinned values as the posterior mode per member.
    for (auto& sc : result.coalitions) {
        std::vector<std::pair<VariableId, int>> pins;
        for (VariableId m : sc.coalition.members) {
            int mode = 0;
            for (const auto& [v, factor] : posterior.factors)
                if (v == m)
                    mode = factor.kind == NoiseFactor::fixed ? factor.value
                                                             : (factor.p > 0.5 ? 1 : 0);
            pins.emplace_back(m, mode);
        }
        sc.coalition = make_coalition(scm, pins);
    }
    return result;
}

struct InterventionProposal {
    Coalition coalition; // proposed counterfactual values
    int desired_target = -1;
    double score_for_desired = 0.0;
};

/// Searches over all value assignments of a fully-explaining coalition for
/// the one that maximizes the explanation score of a desired target value.
/// Ties break lexicographically on ordinal value codes.
inline InterventionProposal optimal_intervention(const Scm& scm, const Observation& observation,
                                                 const Coalition& coalition, int desired,
                                                 const EstimatorConfig& cfg) {
    require(observation.has(scm.target), Errc::InvalidArgument,
            "observation must include the target value");
    const int y = observation[scm.target];
    require(desired != y, Errc::InvalidArgument,
            "desired target value equals the observed one");
    require(scm.var(scm.target).domain.contains(desired), Errc::ValueOutOfDomain,
            "desired value outside the target domain");
    require(!coalition.empty(), Errc::InvalidArgument, "coalition is empty");

    InferenceCache cache(scm, cfg);
    ExplanationScore observed_score =
        explanation_score_kl(scm, observation, coalition, cfg, &cache);
    require(observed_score.is_full(), Errc::PreconditionNotFullExplanation,
            "coalition does not fully explain the observed target value");

    double p_desired = cache.observational().p(desired);
    require(p_desired > 0.0 && p_desired < 1.0, Errc::UndefinedScore,
            "score undefined: P[Y=desired] must lie in (0, 1)");

    std::optional<InterventionProposal> best;
    std::vector<int> assignment(coalition.members.size(), 0);
    for (;;) {
        Coalition candidate{coalition.members, assignment};
        bool positivity_ok = true;
        double p = 0.0;
        try {
            p = cache.interventional(candidate).p(desired);
        } catch (const Error& e) {
            if (e.code() != Errc::PositivityViolated) throw;
            positivity_ok = false;
        }
        if (positivity_ok) {
            double score = p <= 0.0 ? kNegInf : 1.0 - std::log(p) / std::log(p_desired);
            if (!best || score > best->score_for_desired)
                best = InterventionProposal{candidate, desired, score};
        }
        // next assignment, last member fastest: lexicographic order overall
        std::size_t i = assignment.size();
        while (i > 0) {
            VariableId m = coalition.members[i - 1];
            if (++assignment[i - 1] < scm.var(m).domain.size()) break;
            assignment[i - 1] = 0;
            --i;
        }
        if (i == 0) break;
    }
    require(best.has_value() && best->score_for_desired > 0.0, Errc::NoImprovingAssignment,
            "no assignment improves the desired target value");
    return *best;
}

} // namespace coalex

#endif
