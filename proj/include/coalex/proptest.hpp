#ifndef COALEX_PROPTEST_HPP
#define COALEX_PROPTEST_HPP

#include "coalex/core.hpp"
#include "coalex/distribution.hpp"
#include "coalex/inference.hpp"
#include "coalex/model_io.hpp"
#include "coalex/rng.hpp"
#include "coalex/score.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace coalex {

// ---------------------------------------------------------------------------
// Random small-model generator used by the property suite. Every model has
// 2-5 connected observed variables (the last one the target), one extra
// observed variable with no edges to the rest (the "bystander", used by the
// irrelevance and anti-causal checks), one noise parent per observed
// variable, and non-degenerate priors.
// ---------------------------------------------------------------------------

struct GeneratedCase {
    Scm scm;
    Observation observation; // full joint sample, target included
    VariableId bystander = -1;
    VariableId bystander_noise = -1;
};

class ModelGenerator {
public:
    explicit ModelGenerator(std::uint64_t seed) : seed_(seed) {}

    GeneratedCase generate(std::uint64_t case_index) const {
        Stream rng = Stream(seed_, 0x70726f70).substream(case_index);
        for (int attempt = 0; attempt < 64; ++attempt) {
            GeneratedCase out = build_candidate(rng);
            CategoricalDistribution target =
                observational_distribution(out.scm, EstimatorConfig{});
            // The explanation score is undefined on point-mass targets;
            // regenerate instead of producing a useless case.
            bool degenerate = false;
            for (double p : target.probabilities)
                if (p > 1.0 - 1e-9) degenerate = true;
            if (degenerate) continue;
            out.observation = sample_joint(out.scm, rng);
            return out;
        }
        fail(Errc::InvalidArgument, "could not generate a non-degenerate model");
    }

private:
    static Domain random_domain(Stream& rng) {
        if (rng.bernoulli(0.5)) return Domain{{"0", "1"}};
        return Domain{{"0", "1", "2"}};
    }

    static std::vector<double> random_prior(Stream& rng, int size) {
        // Raw weights in [0.2, 1.2] keep every normalized entry inside
        // [0.05, 0.95] for domains of size 2 or 3.
        std::vector<double> probs(static_cast<std::size_t>(size));
        double sum = 0.0;
        for (double& p : probs) {
            p = 0.2 + rng.next_double();
            sum += p;
        }
        for (double& p : probs) p /= sum;
        return probs;
    }

    static GeneratedCase build_candidate(Stream& rng) {
        const int n_connected = 2 + static_cast<int>(rng.next_below(4));
        const int n_observed = n_connected + 1; // plus the bystander

        ScmBuilder b;
        std::vector<VariableId> noise(n_observed);
        std::vector<Domain> domains(n_observed);
        std::vector<Domain> noise_domains(n_observed);
        for (int i = 0; i < n_observed; ++i) {
            domains[i] = random_domain(rng);
            noise_domains[i] = random_domain(rng);
            noise[i] = b.add_variable("L" + std::to_string(i), VarKind::noise,
                                      noise_domains[i]);
        }
        // Layout: connected non-target block, then the bystander, then the
        // target last (the builder requires the target to close the list).
        const int by = n_observed - 2;
        const int tgt = n_observed - 1;
        std::vector<VariableId> obs(n_observed);
        for (int i = 0; i < n_observed; ++i) {
            VarKind kind = i == tgt ? VarKind::target : VarKind::observed;
            obs[i] = b.add_variable("X" + std::to_string(i), kind, domains[i]);
        }

        // Noise edges first so the truth-table parent order starts with noise.
        for (int i = 0; i < n_observed; ++i) b.add_edge(noise[i], obs[i]);
        // Random forward DAG over the connected block {0..by-1, tgt}; the
        // target is biased toward having parents; the bystander has none.
        std::vector<std::vector<int>> parents(static_cast<std::size_t>(n_observed));
        for (int j = 1; j < n_observed; ++j) {
            if (j == by) continue;
            double p = j == tgt ? 0.7 : 0.4;
            for (int i = 0; i < std::min(j, by); ++i)
                if (rng.bernoulli(p)) {
                    b.add_edge(obs[i], obs[j]);
                    parents[j].push_back(i);
                }
        }

        // Truth tables cover (noise parent, observed parents...) row-major.
        for (int i = 0; i < n_observed; ++i) {
            std::size_t rows = static_cast<std::size_t>(noise_domains[i].size());
            for (int p : parents[i]) rows *= static_cast<std::size_t>(domains[p].size());
            std::vector<int> outputs(rows);
            for (int& o : outputs)
                o = static_cast<int>(
                    rng.next_below(static_cast<std::uint64_t>(domains[i].size())));
            b.set_truth_table(obs[i], std::move(outputs));
        }
        for (int i = 0; i < n_observed; ++i)
            b.set_noise_prior(noise[i], random_prior(rng, noise_domains[i].size()));

        return GeneratedCase{b.build(), Observation{}, obs[by], noise[by]};
    }

    static Observation sample_joint(const Scm& scm, Stream& rng) {
        Observation noise(static_cast<std::size_t>(scm.size()));
        for (VariableId v : scm.noise_ids()) {
            const auto& probs = scm.priors[v]->probabilities;
            double u = rng.next_double();
            int code = 0;
            double acc = 0.0;
            for (std::size_t k = 0; k < probs.size(); ++k) {
                acc += probs[k];
                if (u < acc) {
                    code = static_cast<int>(k);
                    break;
                }
                code = static_cast<int>(k);
            }
            noise.set(v, code);
        }
        return evaluate(scm, noise);
    }

    std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Property suite.
// ---------------------------------------------------------------------------

struct PropertyCheck {
    std::string property;
    std::uint64_t checks = 0;
    std::uint64_t failures = 0;
};

struct PropertyReport {
    std::uint64_t cases = 0;
    std::vector<PropertyCheck> properties;
    std::vector<json> counterexamples;

    bool all_passed() const {
        for (const auto& p : properties)
            if (p.failures > 0) return false;
        return true;
    }
};

/// Sign semantics of the score: positive iff the pinned coalition moved
/// the target distribution strictly closer to the point mass at y, one iff
/// it reached it, negative iff strictly farther, zero iff equidistant.
inline bool sign_semantics_ok(double score, double d_coalition, double d_base,
                              bool point_mass) {
    if (point_mass) return score >= 1.0 - 1e-9;
    if (score >= 1.0 - 1e-9) return point_mass;
    if (d_coalition == kNegInf || d_base == kNegInf) return true; // undefined distances
    const double eps = 1e-12;
    if (score > eps) return d_coalition < d_base - eps;
    if (score < -eps) return d_coalition > d_base + eps;
    return std::abs(d_coalition - d_base) <= 1e-9 * std::max(1.0, std::abs(d_base));
}

namespace detail {

inline PropertyCheck& slot(PropertyReport& report, const std::string& name) {
    for (auto& p : report.properties)
        if (p.property == name) return p;
    report.properties.push_back({name, 0, 0});
    return report.properties.back();
}

inline void record(PropertyReport& report, const std::string& name, bool ok,
                   const GeneratedCase& c, const std::string& details) {
    PropertyCheck& p = slot(report, name);
    ++p.checks;
    if (ok) return;
    ++p.failures;
    if (report.counterexamples.size() < 32)
        report.counterexamples.push_back({{"property", name},
                                          {"details", details},
                                          {"model", scm_to_json(c.scm)},
                                          {"observation",
                                           observation_to_json(c.scm, c.observation)}});
}

} // namespace detail

/// Runs every property over `cases` generated models in exact mode. The
/// suite is deterministic per seed; each counterexample carries the full
/// model and observation needed to replay it.
inline PropertyReport run_property_suite(std::uint64_t seed, std::uint64_t cases) {
    PropertyReport report;
    report.cases = cases;
    ModelGenerator gen(seed);
    EstimatorConfig exact; // exact mode throughout

    for (std::uint64_t ci = 0; ci < cases; ++ci) {
        GeneratedCase c = gen.generate(ci);
        const Scm& scm = c.scm;
        const int y = c.observation[scm.target];
        InferenceCache cache(scm, exact);
        const CategoricalDistribution& base = cache.observational();
        const double d_base = -std::log(base.probabilities[static_cast<std::size_t>(y)]);

        // Candidate players: the noise variables, pinned at their sampled
        // values. Small enough that every subset is enumerable.
        std::vector<VariableId> players = scm.noise_ids();
        const std::size_t n = players.size();
        auto coalition_of = [&](std::uint32_t mask) {
            Coalition co;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i)) {
                    co.members.push_back(players[i]);
                    co.values.push_back(c.observation[players[i]]);
                }
            return co;
        };

        const std::uint32_t full = (1u << n) - 1u;
        std::vector<double> score_of(static_cast<std::size_t>(full) + 1);
        std::vector<bool> is_point(static_cast<std::size_t>(full) + 1);
        for (std::uint32_t mask = 0; mask <= full; ++mask) {
            Coalition co = coalition_of(mask);
            ExplanationScore s = explanation_score_kl(scm, c.observation, co, exact, &cache);
            score_of[mask] = s.value;
            const CategoricalDistribution& dist = cache.interventional(co);
            double py = dist.probabilities[static_cast<std::size_t>(y)];
            is_point[mask] = py > 1.0 - 1e-12;
            double d_c = py <= 0.0 ? std::numeric_limits<double>::infinity() : -std::log(py);

            detail::record(report, "score_at_most_one", s.value <= 1.0 + 1e-12, c,
                           "score " + std::to_string(s.value) + " exceeds 1");
            detail::record(report, "sign_semantics",
                           sign_semantics_ok(s.value, d_c, d_base, is_point[mask]), c,
                           "score sign disagrees with distance comparison at mask " +
                               std::to_string(mask));
        }

        detail::record(report, "empty_coalition_zero", score_of[0] == 0.0, c,
                       "empty coalition scored " + std::to_string(score_of[0]));
        detail::record(report, "full_coalition_one",
                       std::abs(score_of[full] - 1.0) <= 1e-9, c,
                       "full noise coalition scored " + std::to_string(score_of[full]));

        // Supersets of a fully-explaining coalition also fully explain, and
        // once a coalition fully explains, forcing any non-member to any of
        // its positive-probability values leaves the target pinned at y.
        for (std::uint32_t mask = 0; mask <= full; ++mask) {
            if (score_of[mask] < 1.0 - 1e-9) continue;
            for (std::uint32_t sup = mask;; sup = (sup + 1) | mask) {
                if (sup != mask)
                    detail::record(report, "superset_closure",
                                   score_of[sup] >= 1.0 - 1e-9, c,
                                   "superset of a full coalition scored " +
                                       std::to_string(score_of[sup]));
                if (sup == full) break;
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (mask & (1u << i)) continue;
                const auto& probs = scm.priors[players[i]]->probabilities;
                for (std::size_t v = 0; v < probs.size(); ++v) {
                    if (probs[v] <= 0.0) continue;
                    Coalition co = coalition_of(mask);
                    auto pos = std::lower_bound(co.members.begin(), co.members.end(),
                                                players[i]);
                    co.values.insert(co.values.begin() + (pos - co.members.begin()),
                                     static_cast<int>(v));
                    co.members.insert(pos, players[i]);
                    const auto& dist = cache.interventional(co);
                    bool pinned =
                        dist.probabilities[static_cast<std::size_t>(y)] > 1.0 - 1e-12;
                    detail::record(report, "nonmember_impotence", pinned, c,
                                   "forcing a non-member changed the target");
                }
            }
        }

        // Disconnected bystander: pinning it (or its noise) moves nothing,
        // alone or inside a coalition.
        for (VariableId d : {c.bystander, c.bystander_noise}) {
            Coalition solo{{d}, {c.observation[d]}};
            ExplanationScore s =
                explanation_score_kl(scm, c.observation, solo, exact, &cache);
            detail::record(report, "disconnected_zero",
                           std::abs(s.value) <= 1e-12, c,
                           "disconnected variable scored " + std::to_string(s.value));
        }
        {
            std::uint32_t mask = static_cast<std::uint32_t>(ci % (full + 1));
            Coalition with = coalition_of(mask);
            VariableId d = c.bystander;
            auto pos = std::lower_bound(with.members.begin(), with.members.end(), d);
            with.values.insert(with.values.begin() + (pos - with.members.begin()),
                               c.observation[d]);
            with.members.insert(pos, d);
            ExplanationScore s =
                explanation_score_kl(scm, c.observation, with, exact, &cache);
            bool same = (s.value == kNegInf && score_of[mask] == kNegInf) ||
                        std::abs(s.value - score_of[mask]) <= 1e-9;
            detail::record(report, "disconnected_irrelevance", same, c,
                           "adding an irrelevant variable changed the score");
        }
    }
    return report;
}

/// Monte Carlo agreement: on `cases` models, the sampled interventional
/// distribution of a random coalition stays within `tolerance` total
/// variation of the exact one.
inline PropertyReport run_mc_agreement(std::uint64_t seed, std::uint64_t cases,
                                       std::uint64_t sample_count = 100000,
                                       double tolerance = 0.01) {
    PropertyReport report;
    report.cases = cases;
    ModelGenerator gen(seed);
    Stream rng(seed, 0x6d636167);
    for (std::uint64_t ci = 0; ci < cases; ++ci) {
        GeneratedCase c = gen.generate(ci);
        std::vector<VariableId> players = c.scm.noise_ids();
        Coalition co;
        for (VariableId v : players)
            if (rng.bernoulli(0.5)) {
                co.members.push_back(v);
                co.values.push_back(c.observation[v]);
            }
        auto p_exact = interventional_distribution(c.scm, co, EstimatorConfig{});
        auto p_mc = interventional_distribution(
            c.scm, co, EstimatorConfig::mc(sample_count, rng.next_u64()));
        double tv = total_variation_distance(p_exact, p_mc);
        detail::record(report, "mc_matches_exact", tv <= tolerance, c,
                       "total variation " + std::to_string(tv));
    }
    return report;
}

inline json property_report_to_json(const PropertyReport& r) {
    json props = json::array();
    for (const auto& p : r.properties)
        props.push_back(
            {{"property", p.property}, {"checks", p.checks}, {"failures", p.failures}});
    return {{"cases", r.cases},
            {"all_passed", r.all_passed()},
            {"properties", props},
            {"counterexamples", r.counterexamples}};
}

} // namespace coalex

#endif
