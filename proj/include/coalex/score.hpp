#ifndef COALEX_SCORE_HPP
#define COALEX_SCORE_HPP

#include "coalex/core.hpp"
#include "coalex/distribution.hpp"
#include "coalex/error.hpp"
#include "coalex/inference.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace coalex {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Statistical distance D(P, Q) between target distributions. The score only
/// ever measures distances to a point mass Q = delta_y, which lets the KL
/// variant reduce to -log P(y) without 0*log(0) conventions.
enum class DistanceMeasure { kl_to_point_mass, total_variation };

inline double distance(DistanceMeasure d, const CategoricalDistribution& p,
                       const CategoricalDistribution& q_point_mass) {
    switch (d) {
        case DistanceMeasure::kl_to_point_mass: {
            int y = q_point_mass.point_mass_value();
            require(y >= 0, Errc::InvalidArgument,
                    "kl_to_point_mass needs a point-mass reference");
            double py = p.p(y);
            if (py <= 0.0) return std::numeric_limits<double>::infinity();
            return -std::log(py);
        }
        case DistanceMeasure::total_variation:
            return total_variation_distance(p, q_point_mass);
    }
    fail(Errc::InvalidArgument, "unknown distance measure");
}

struct ScoreMeta {
    EstimatorMode mode = EstimatorMode::exact;
    std::uint64_t seed = 0;
    std::uint64_t sample_count = 0;     // Monte Carlo estimator samples
    std::uint64_t posterior_samples = 0; // expected-score runs only
    std::uint64_t rejected_samples = 0;  // expected-score runs only
    bool high_rejection_warning = false;
};

/// Extended-real explanation score of a coalition for one target value.
/// -infinity is a first-class value; finite scores never exceed 1.
struct ExplanationScore {
    double value = 0.0;
    Coalition coalition;
    int target_value = -1;
    ScoreMeta meta;

    bool is_full() const { return value >= 1.0 - 1e-12; }
};

/// Generic distance-ratio form of the score:
///   1 - D(P[Y|do(V_C)], P[Y|do(V)]) / D(P[Y], P[Y|do(V)]).
/// `p_full` must be a point mass, and the score is undefined when the base
/// distribution already equals it.
inline double explanation_score_generic(const CategoricalDistribution& p_coalition,
                                        const CategoricalDistribution& p_base,
                                        const CategoricalDistribution& p_full,
                                        DistanceMeasure d) {
    require(p_full.is_point_mass(), Errc::InvalidArgument,
            "the all-fixed reference distribution must be a point mass");
    double denom = distance(d, p_base, p_full);
    require(denom >= 0.0, Errc::InvalidDistance, "distance hook returned a negative value");
    require(denom > 0.0 && std::isfinite(denom), Errc::UndefinedScore,
            "score undefined: P[Y] already equals the point mass reference");
    double numer = distance(d, p_coalition, p_full);
    require(numer >= 0.0, Errc::InvalidDistance, "distance hook returned a negative value");
    if (std::isinf(numer)) return kNegInf;
    return 1.0 - numer / denom;
}

namespace detail {

inline double floored(double p, const EstimatorConfig& cfg) {
    return (cfg.min_prob_floor > 0.0 && p < cfg.min_prob_floor) ? cfg.min_prob_floor : p;
}

/// Log-probability specialization: 1 - log P[Y=y|do(V_C)] / log P[Y=y].
inline double score_kl_from_probs(double p_coalition_y, double p_base_y,
                                  const EstimatorConfig& cfg) {
    p_coalition_y = floored(p_coalition_y, cfg);
    p_base_y = floored(p_base_y, cfg);
    require(p_base_y > 0.0 && p_base_y < 1.0, Errc::UndefinedScore,
            "score undefined: P[Y=y] must lie in (0, 1)");
    if (p_coalition_y <= 0.0) return kNegInf;
    return 1.0 - std::log(p_coalition_y) / std::log(p_base_y);
}

} // namespace detail

/// Explanation score of a coalition with respect to an observation, via the
/// KL specialization. Coalition values must equal the observation's values at
/// the coalition members (scores are "with respect to the observation").
inline ExplanationScore explanation_score_kl(const Scm& scm, const Observation& observation,
                                             const Coalition& coalition,
                                             const EstimatorConfig& cfg,
                                             InferenceCache* cache = nullptr) {
    require(observation.has(scm.target), Errc::InvalidArgument,
            "observation must include the target value");
    for (std::size_t i = 0; i < coalition.members.size(); ++i) {
        require(observation.has(coalition.members[i]) &&
                    observation[coalition.members[i]] == coalition.values[i],
                Errc::CoalitionValueMismatch,
                "coalition value differs from the observation at '" +
                    scm.var(coalition.members[i]).name + "'");
    }
    const int y = observation[scm.target];
    const CategoricalDistribution& base =
        cache ? cache->observational() : observational_distribution(scm, cfg);
    const CategoricalDistribution& intervened =
        cache ? cache->interventional(coalition)
              : interventional_distribution(scm, coalition, cfg);

    ExplanationScore out;
    out.value = detail::score_kl_from_probs(intervened.p(y), base.p(y), cfg);
    out.coalition = coalition;
    out.target_value = y;
    out.meta.mode = cfg.mode;
    out.meta.seed = cfg.seed;
    out.meta.sample_count = cfg.mode == EstimatorMode::monte_carlo ? cfg.sample_count : 0;
    return out;
}

struct ExpectedScore {
    double value = 0.0;
    ScoreMeta meta;
};

/// Expected explanation score of a noise coalition over posterior samples:
/// the mean over draws lambda of ES_lambda(Lambda_C), where the coalition is
/// pinned to lambda's values and the reference point mass sits at the target
/// value y(lambda) of the draw. Draws whose per-sample score is undefined are
/// rejected and reported; more than 1% rejections sets a warning flag.
inline ExpectedScore expected_explanation_score(const Scm& scm,
                                                const std::vector<VariableId>& members,
                                                const std::vector<Observation>& posterior_samples,
                                                const EstimatorConfig& cfg,
                                                InferenceCache* cache = nullptr) {
    require(!posterior_samples.empty(), Errc::EmptySampleList,
            "expected score needs at least one posterior sample");
    for (VariableId v : members)
        require(scm.is_noise(v), Errc::InvalidArgument,
                "expected score members must be noise variables");

    InferenceCache local(scm, cfg);
    InferenceCache& memo = cache ? *cache : local;

    double sum = 0.0;
    std::uint64_t used = 0;
    std::uint64_t rejected = 0;
    for (const Observation& lambda : posterior_samples) {
        Observation full = evaluate(scm, lambda);
        const int y = full[scm.target];
        Coalition coalition = coalition_from_observation(scm, members, lambda);
        const CategoricalDistribution& base = memo.observational();
        if (base.p(y) <= 0.0 || base.p(y) >= 1.0) {
            ++rejected;
            continue;
        }
        const CategoricalDistribution& intervened = memo.interventional(coalition);
        sum += detail::score_kl_from_probs(intervened.p(y), base.p(y), cfg);
        ++used;
    }
    require(used > 0, Errc::AllSamplesUndefined,
            "every posterior sample yielded an undefined score");

    ExpectedScore out;
    out.value = sum / static_cast<double>(used);
    out.meta.mode = cfg.mode;
    out.meta.seed = cfg.seed;
    out.meta.posterior_samples = posterior_samples.size();
    out.meta.rejected_samples = rejected;
    out.meta.high_rejection_warning =
        rejected * 100 > posterior_samples.size(); // > 1% rejected
    return out;
}

} // namespace coalex

#endif
