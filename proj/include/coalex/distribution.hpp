#ifndef COALEX_DISTRIBUTION_HPP
#define COALEX_DISTRIBUTION_HPP

#include "coalex/core.hpp"
#include "coalex/error.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace coalex {

/// Probability vector over a finite target domain.
struct CategoricalDistribution {
    Domain domain;
    std::vector<double> probabilities;

    void validate() const {
        require(static_cast<int>(probabilities.size()) == domain.size(),
                Errc::InvalidArgument, "probability vector does not match domain");
        double sum = 0.0;
        for (double p : probabilities) {
            require(p >= -1e-15 && p <= 1.0 + 1e-9, Errc::InvalidArgument,
                    "probability outside [0, 1]");
            sum += p;
        }
        require(std::abs(sum - 1.0) <= 1e-9, Errc::InvalidArgument,
                "probabilities do not sum to 1");
    }

    double p(int value) const { return probabilities[static_cast<std::size_t>(value)]; }

    bool is_point_mass() const {
        for (double q : probabilities)
            if (q >= 1.0 - 1e-12) return true;
        return false;
    }

    /// Index of the value carrying (almost) all mass; -1 if not a point mass.
    int point_mass_value() const {
        for (std::size_t i = 0; i < probabilities.size(); ++i)
            if (probabilities[i] >= 1.0 - 1e-12) return static_cast<int>(i);
        return -1;
    }

    static CategoricalDistribution point_mass(Domain domain, int value) {
        std::vector<double> probs(static_cast<std::size_t>(domain.size()), 0.0);
        probs[static_cast<std::size_t>(value)] = 1.0;
        return {std::move(domain), std::move(probs)};
    }
};

inline double total_variation_distance(const CategoricalDistribution& a,
                                       const CategoricalDistribution& b) {
    require(a.probabilities.size() == b.probabilities.size(), Errc::InvalidArgument,
            "distributions over different domains");
    double tv = 0.0;
    for (std::size_t i = 0; i < a.probabilities.size(); ++i)
        tv += std::abs(a.probabilities[i] - b.probabilities[i]);
    return 0.5 * tv;
}

enum class EstimatorMode { exact, monte_carlo };

struct EstimatorConfig {
    EstimatorMode mode = EstimatorMode::exact;
    std::uint64_t sample_count = 100000; // Monte Carlo only
    std::uint64_t seed = 0;
    std::uint64_t exact_state_limit = std::uint64_t{1} << 20;
    double min_prob_floor = 0.0; // off by default; exploratory use only

    static EstimatorConfig exact_default() { return {}; }

    static EstimatorConfig mc(std::uint64_t samples, std::uint64_t seed) {
        EstimatorConfig cfg;
        cfg.mode = EstimatorMode::monte_carlo;
        cfg.sample_count = samples;
        cfg.seed = seed;
        return cfg;
    }
};

} // namespace coalex

#endif
