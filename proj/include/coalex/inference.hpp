#ifndef COALEX_INFERENCE_HPP
#define COALEX_INFERENCE_HPP

#include "coalex/core.hpp"
#include "coalex/distribution.hpp"
#include "coalex/error.hpp"
#include "coalex/rng.hpp"

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace coalex {

namespace detail {

struct NoiseSupport {
    VariableId id;
    std::vector<int> values;   // domain codes with positive prior mass
    std::vector<double> probs; // aligned with values
};

inline std::vector<NoiseSupport> noise_supports(const Scm& scm) {
    std::vector<NoiseSupport> out;
    for (VariableId v : scm.noise_ids()) {
        NoiseSupport s;
        s.id = v;
        const auto& probs = scm.priors[v]->probabilities;
        for (std::size_t i = 0; i < probs.size(); ++i)
            if (probs[i] > 0.0) {
                s.values.push_back(static_cast<int>(i));
                s.probs.push_back(probs[i]);
            }
        out.push_back(std::move(s));
    }
    return out;
}

inline std::uint64_t noise_state_count(const std::vector<NoiseSupport>& supports) {
    std::uint64_t n = 1;
    for (const auto& s : supports) {
        n *= s.values.size();
        if (n > (std::uint64_t{1} << 62)) return n; // saturate, caller caps anyway
    }
    return n;
}

/// Enumerates the support of the joint noise distribution. `f(state, weight)`
/// is called once per joint state; `state` has every variable filled by a
/// forward pass.
template <class F>
void for_each_noise_state(const Scm& scm, std::uint64_t state_limit, F&& f) {
    auto supports = noise_supports(scm);
    require(noise_state_count(supports) <= state_limit, Errc::StateSpaceTooLarge,
            "noise product space exceeds the exact-state limit");
    std::vector<int> state(static_cast<std::size_t>(scm.size()), -1);
    std::vector<std::size_t> odo(supports.size(), 0);
    for (;;) {
        double weight = 1.0;
        for (std::size_t i = 0; i < supports.size(); ++i) {
            state[supports[i].id] = supports[i].values[odo[i]];
            weight *= supports[i].probs[odo[i]];
        }
        scm.forward_fill(state);
        f(const_cast<const std::vector<int>&>(state), weight);
        std::size_t i = 0;
        while (i < supports.size() && ++odo[i] == supports[i].values.size()) {
            odo[i] = 0;
            ++i;
        }
        if (i == supports.size()) break;
    }
}

/// One forward sample from the noise priors; fills all variables.
inline void sample_state(const Scm& scm, Stream stream, std::vector<int>& state) {
    for (VariableId v : scm.noise_ids()) {
        const auto& probs = scm.priors[v]->probabilities;
        double u = stream.next_double();
        double acc = 0.0;
        int value = static_cast<int>(probs.size()) - 1;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) {
                value = static_cast<int>(i);
                break;
            }
        }
        state[v] = value;
    }
    scm.forward_fill(state);
}

inline bool matches_coalition(const std::vector<int>& state, const Coalition& c) {
    for (std::size_t i = 0; i < c.members.size(); ++i)
        if (state[c.members[i]] != c.values[i]) return false;
    return true;
}

} // namespace detail

/// Exact joint observational probability of the coalition assignment.
inline double observational_probability(const Scm& scm, const Coalition& coalition,
                                        std::uint64_t state_limit) {
    if (coalition.empty()) return 1.0;
    // Noise-only coalitions factorize over the priors.
    bool all_noise = true;
    for (VariableId v : coalition.members)
        if (!scm.is_noise(v)) {
            all_noise = false;
            break;
        }
    if (all_noise) {
        double p = 1.0;
        for (std::size_t i = 0; i < coalition.members.size(); ++i)
            p *= scm.priors[coalition.members[i]]
                     ->probabilities[static_cast<std::size_t>(coalition.values[i])];
        return p;
    }
    double p = 0.0;
    detail::for_each_noise_state(scm, state_limit, [&](const std::vector<int>& state, double w) {
        if (detail::matches_coalition(state, coalition)) p += w;
    });
    return p;
}

/// The distribution P[Y | do(coalition)]. Exact mode sums noise-prior mass
/// over the full noise product space of the mutilated model; Monte Carlo mode
/// returns the empirical distribution over `sample_count` forward passes,
/// deterministic given the seed. Both modes check the positivity assumption.
inline CategoricalDistribution interventional_distribution(const Scm& scm,
                                                           const Coalition& coalition,
                                                           const EstimatorConfig& cfg) {
    const Domain& target_domain = scm.var(scm.target).domain;
    std::vector<double> probs(static_cast<std::size_t>(target_domain.size()), 0.0);

    if (cfg.mode == EstimatorMode::exact) {
        if (!coalition.empty())
            require(observational_probability(scm, coalition, cfg.exact_state_limit) > 0.0,
                    Errc::PositivityViolated,
                    "coalition assignment has zero observational probability");
        Scm cut = apply_intervention(scm, coalition);
        detail::for_each_noise_state(cut, cfg.exact_state_limit,
                                     [&](const std::vector<int>& state, double w) {
                                         probs[static_cast<std::size_t>(state[cut.target])] += w;
                                     });
    } else {
        std::vector<int> state(static_cast<std::size_t>(scm.size()), -1);
        if (!coalition.empty()) {
            Stream pos(cfg.seed, 0x706f73ULL); // positivity support test
            bool seen = false;
            for (std::uint64_t i = 0; i < cfg.sample_count && !seen; ++i) {
                detail::sample_state(scm, pos.substream(i), state);
                seen = detail::matches_coalition(state, coalition);
            }
            require(seen, Errc::PositivityViolated,
                    "coalition assignment not observed in any observational sample");
        }
        Scm cut = apply_intervention(scm, coalition);
        Stream stream(cfg.seed, 0x696e74ULL);
        for (std::uint64_t i = 0; i < cfg.sample_count; ++i) {
            detail::sample_state(cut, stream.substream(i), state);
            probs[static_cast<std::size_t>(state[cut.target])] += 1.0;
        }
        for (double& p : probs) p /= static_cast<double>(cfg.sample_count);
    }
    CategoricalDistribution dist{target_domain, std::move(probs)};
    dist.validate();
    return dist;
}

/// P[Y] with nothing fixed; equal to the interventional distribution of the
/// empty coalition.
inline CategoricalDistribution observational_distribution(const Scm& scm,
                                                          const EstimatorConfig& cfg) {
    return interventional_distribution(scm, Coalition{}, cfg);
}

/// One conditional factor of P[Lambda_i | X = x].
struct NoiseFactor {
    enum Kind { fixed, bernoulli } kind = fixed;
    int value = 0;   // fixed only
    double p = 0.0;  // bernoulli only: probability of value 1
};

/// Product-form conditional noise distribution for threshold-gate networks.
/// Given x the noise variables are conditionally independent under this
/// mechanism class, so per-variable factors are exact.
struct NoisePosterior {
    int model_size = 0;
    std::vector<std::pair<VariableId, NoiseFactor>> factors;
};

/// Closed-form P[Lambda | X = x] for a network whose every non-noise
/// mechanism is a threshold gate. For node i: if x_i = 0 the noise must be 0;
/// if x_i = 1 and the gate already fires, the posterior equals the prior;
/// if x_i = 1 and the gate is off, only the noise explains the error.
inline NoisePosterior noise_posterior(const Scm& scm, const Observation& observation) {
    NoisePosterior post;
    post.model_size = scm.size();
    for (VariableId v : scm.observed_ids()) {
        require(std::holds_alternative<ThresholdGate>(*scm.mechanisms[v]),
                Errc::UnsupportedMechanism,
                "noise posterior requires threshold-gate mechanisms only");
        require(observation.has(v), Errc::InvalidArgument,
                "observation misses observed variable '" + scm.var(v).name + "'");
        VariableId noise = scm.noise_parent(v);
        require(noise >= 0, Errc::UnsupportedMechanism,
                "threshold-gate node '" + scm.var(v).name + "' lacks a unique noise parent");

        const auto& gate = std::get<ThresholdGate>(*scm.mechanisms[v]);
        int count = 0;
        for (VariableId p : scm.observed_parents(v)) count += observation[p];
        const bool gate_on = count >= gate.threshold;
        const double prior_p1 = scm.priors[noise]->probabilities[1];

        NoiseFactor factor;
        if (observation[v] == 0) {
            require(!gate_on, Errc::InconsistentObservation,
                    "'" + scm.var(v).name + "' is 0 although its gate fires");
            require(prior_p1 < 1.0, Errc::InconsistentObservation,
                    "'" + scm.var(v).name + "' is 0 although its noise is always 1");
            factor.kind = NoiseFactor::fixed;
            factor.value = 0;
        } else if (gate_on) {
            factor.kind = NoiseFactor::bernoulli;
            factor.p = prior_p1;
        } else {
            require(prior_p1 > 0.0, Errc::InconsistentObservation,
                    "'" + scm.var(v).name + "' is 1 although neither gate nor noise can fire");
            factor.kind = NoiseFactor::fixed;
            factor.value = 1;
        }
        post.factors.emplace_back(noise, factor);
    }
    return post;
}

/// `count` independent posterior draws as total noise assignments,
/// deterministic given the seed.
inline std::vector<Observation> sample_noise_posterior(const NoisePosterior& posterior,
                                                       std::uint64_t count,
                                                       std::uint64_t seed) {
    std::vector<Observation> out;
    out.reserve(count);
    Stream master(seed, 0x6c616d62ULL);
    for (std::uint64_t i = 0; i < count; ++i) {
        Stream draw = master.substream(i);
        Observation noise(static_cast<std::size_t>(posterior.model_size));
        for (const auto& [v, factor] : posterior.factors) {
            if (factor.kind == NoiseFactor::fixed)
                noise.set(v, factor.value);
            else
                noise.set(v, draw.substream(static_cast<std::uint64_t>(v)).bernoulli(factor.p) ? 1 : 0);
        }
        out.push_back(std::move(noise));
    }
    return out;
}

/// Memo for exact interventional distributions of one immutable model.
/// Distributions depend only on the coalition, so results are shared across
/// observations, searches, and samples.
class InferenceCache {
public:
    InferenceCache(const Scm& scm, EstimatorConfig cfg) : scm_(scm), cfg_(cfg) {}

    const CategoricalDistribution& interventional(const Coalition& coalition) {
        std::vector<int> key;
        key.reserve(coalition.members.size() * 2);
        for (std::size_t i = 0; i < coalition.members.size(); ++i) {
            key.push_back(coalition.members[i]);
            key.push_back(coalition.values[i]);
        }
        auto it = cache_.find(key);
        if (it == cache_.end())
            it = cache_.emplace(std::move(key),
                                interventional_distribution(scm_, coalition, cfg_)).first;
        return it->second;
    }

    const CategoricalDistribution& observational() { return interventional(Coalition{}); }

    const Scm& scm() const { return scm_; }
    const EstimatorConfig& config() const { return cfg_; }

private:
    const Scm& scm_;
    EstimatorConfig cfg_;
    std::map<std::vector<int>, CategoricalDistribution> cache_;
};

} // namespace coalex

#endif
