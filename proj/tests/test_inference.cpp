#include "coalex/datasets.hpp"
#include "coalex/inference.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace coalex;
using Catch::Matchers::WithinAbs;

TEST_CASE("exact observational distribution of the AND gate") {
    Scm scm = and_gate_model(0.1, 0.8);
    CategoricalDistribution d = observational_distribution(scm, EstimatorConfig{});
    REQUIRE_THAT(d.p(1), WithinAbs(0.08, 1e-12)); // 0.1 * 0.8
    REQUIRE_THAT(d.p(0), WithinAbs(0.92, 1e-12));
}

TEST_CASE("exact interventional distributions") {
    Scm scm = and_gate_model(0.1, 0.8);
    SECTION("do(X1=1) leaves only the X2 factor") {
        Coalition c{{scm.id_of("X1")}, {1}};
        CategoricalDistribution d = interventional_distribution(scm, c, EstimatorConfig{});
        REQUIRE_THAT(d.p(1), WithinAbs(0.8, 1e-12));
    }
    SECTION("do(X1=0) forces the output") {
        Coalition c{{scm.id_of("X1")}, {0}};
        CategoricalDistribution d = interventional_distribution(scm, c, EstimatorConfig{});
        REQUIRE_THAT(d.p(0), WithinAbs(1.0, 1e-12));
    }
    SECTION("pinning a noise variable works like pinning its child here") {
        Coalition c{{scm.id_of("L1")}, {1}};
        CategoricalDistribution d = interventional_distribution(scm, c, EstimatorConfig{});
        REQUIRE_THAT(d.p(1), WithinAbs(0.8, 1e-12));
    }
    SECTION("empty coalition equals the observational distribution") {
        CategoricalDistribution d =
            interventional_distribution(scm, Coalition{}, EstimatorConfig{});
        REQUIRE_THAT(d.p(1), WithinAbs(0.08, 1e-12));
    }
}

TEST_CASE("Monte Carlo estimates converge to exact") {
    Scm scm = and_gate_model(0.1, 0.8);
    CategoricalDistribution mc =
        observational_distribution(scm, EstimatorConfig::mc(100000, 17));
    REQUIRE_THAT(mc.p(1), WithinAbs(0.08, 0.005));

    SECTION("same seed, same estimate") {
        CategoricalDistribution again =
            observational_distribution(scm, EstimatorConfig::mc(100000, 17));
        REQUIRE(again.probabilities == mc.probabilities);
    }
}

TEST_CASE("closed-form noise posterior on threshold-gate networks") {
    // L -> A -> B, gates with threshold 1; A errs via L_A, B via L_B or A.
    ScmBuilder b;
    b.add_variable("LA", VarKind::noise, Domain{{"0", "1"}});
    b.add_variable("LB", VarKind::noise, Domain{{"0", "1"}});
    b.add_variable("A", VarKind::observed, Domain{{"0", "1"}});
    b.add_variable("B", VarKind::target, Domain{{"0", "1"}});
    b.add_edge("LA", "A");
    b.add_edge("LB", "B");
    b.add_edge("A", "B");
    b.set_threshold_gate(b.id_of("A"), 1); // root gate: noise only
    b.set_threshold_gate(b.id_of("B"), 1);
    b.set_noise_prior(b.id_of("LA"), {0.9, 0.1});
    b.set_noise_prior(b.id_of("LB"), {0.7, 0.3});
    Scm scm = b.build();

    auto factor_of = [](const NoisePosterior& post, VariableId v) {
        for (const auto& [id, f] : post.factors)
            if (id == v) return f;
        FAIL("missing factor");
        return NoiseFactor{};
    };

    Observation obs(static_cast<std::size_t>(scm.size()));
    SECTION("healthy node pins its noise to 0") {
        obs.set(scm.id_of("A"), 0);
        obs.set(scm.id_of("B"), 0);
        NoisePosterior post = noise_posterior(scm, obs);
        REQUIRE(factor_of(post, scm.id_of("LA")).kind == NoiseFactor::fixed);
        REQUIRE(factor_of(post, scm.id_of("LA")).value == 0);
        REQUIRE(factor_of(post, scm.id_of("LB")).value == 0);
    }
    SECTION("erring node whose gate is off pins its noise to 1") {
        obs.set(scm.id_of("A"), 0);
        obs.set(scm.id_of("B"), 1); // gate off (A = 0): only LB explains it
        NoisePosterior post = noise_posterior(scm, obs);
        NoiseFactor f = factor_of(post, scm.id_of("LB"));
        REQUIRE(f.kind == NoiseFactor::fixed);
        REQUIRE(f.value == 1);
    }
    SECTION("erring node whose gate fires keeps its prior") {
        obs.set(scm.id_of("A"), 1);
        obs.set(scm.id_of("B"), 1); // gate on: LB stays Bernoulli(0.3)
        NoisePosterior post = noise_posterior(scm, obs);
        NoiseFactor fb = factor_of(post, scm.id_of("LB"));
        REQUIRE(fb.kind == NoiseFactor::bernoulli);
        REQUIRE_THAT(fb.p, WithinAbs(0.3, 1e-12));
        // A is a root with x=1: only LA explains it.
        NoiseFactor fa = factor_of(post, scm.id_of("LA"));
        REQUIRE(fa.kind == NoiseFactor::fixed);
        REQUIRE(fa.value == 1);
    }
    SECTION("a healthy node below a firing gate is contradictory") {
        obs.set(scm.id_of("A"), 1);
        obs.set(scm.id_of("B"), 0); // gate fires, yet B shows no error
        REQUIRE_THROWS_MATCHES(noise_posterior(scm, obs), Error,
            Catch::Matchers::Predicate<Error>([](const Error& e) {
                return e.code() == Errc::InconsistentObservation;
            }));
    }
    SECTION("posterior sampling is deterministic per seed") {
        obs.set(scm.id_of("A"), 1);
        obs.set(scm.id_of("B"), 1);
        NoisePosterior post = noise_posterior(scm, obs);
        auto s1 = sample_noise_posterior(post, 50, 123);
        auto s2 = sample_noise_posterior(post, 50, 123);
        REQUIRE(s1.size() == 50);
        for (std::size_t i = 0; i < s1.size(); ++i)
            REQUIRE(s1[i].values == s2[i].values);
    }
}

TEST_CASE("inference cache returns identical distributions") {
    Scm scm = and_gate_model(0.1, 0.8);
    InferenceCache cache(scm, EstimatorConfig{});
    Coalition c{{scm.id_of("X1")}, {1}};
    const auto& first = cache.interventional(c);
    const auto& again = cache.interventional(c);
    REQUIRE(&first == &again); // cached object, not a recomputation
    REQUIRE_THAT(cache.observational().p(1), WithinAbs(0.08, 1e-12));
}
