#include "coalex/datasets.hpp"
#include "coalex/rca.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

using namespace coalex;
using Catch::Matchers::WithinAbs;

namespace {

/// Brute-force Shapley oracle: average marginal contribution over all n!
/// player orderings. Independent of the subset-weighted implementation.
template <typename ValueFn>
std::vector<double> permutation_shapley(int n, ValueFn&& v) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
    std::uint64_t count = 0;
    do {
        std::uint32_t mask = 0;
        for (int p : perm) {
            double before = v(mask);
            mask |= 1u << p;
            phi[static_cast<std::size_t>(p)] += v(mask) - before;
        }
        ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (double& x : phi) x /= static_cast<double>(count);
    return phi;
}

} // namespace

TEST_CASE("Shapley values on closed-form games") {
    SECTION("additive game: everyone gets one") {
        auto phi = shapley_values(4, [](std::uint32_t m) {
            return static_cast<double>(std::popcount(m));
        });
        for (double x : phi) REQUIRE_THAT(x, WithinAbs(1.0, 1e-12));
    }
    SECTION("two-player AND game splits evenly") {
        auto phi = shapley_values(2, [](std::uint32_t m) { return m == 3u ? 1.0 : 0.0; });
        REQUIRE_THAT(phi[0], WithinAbs(0.5, 1e-12));
        REQUIRE_THAT(phi[1], WithinAbs(0.5, 1e-12));
    }
    SECTION("monotone three-player game matches the permutation oracle") {
        auto v = [](std::uint32_t m) {
            return (m & 1u) ? 1.0 : (m == 6u || m == 7u ? 0.5 : 0.0);
        };
        auto phi = shapley_values(3, v);
        auto oracle = permutation_shapley(3, v);
        for (int i = 0; i < 3; ++i) REQUIRE_THAT(phi[i], WithinAbs(oracle[i], 1e-12));
    }
    SECTION("player cap") {
        REQUIRE_THROWS_MATCHES(
            shapley_values(21, [](std::uint32_t) { return 0.0; }), Error,
            Catch::Matchers::Predicate<Error>(
                [](const Error& e) { return e.code() == Errc::TooManyPlayers; }));
    }
}

TEST_CASE("Shapley axioms on random games") {
    Stream rng(2024, 0x67616d65);
    for (int n = 2; n <= 6; ++n) {
        for (int g = 0; g < 20; ++g) {
            std::vector<double> table(std::size_t{1} << n);
            for (double& x : table) x = rng.next_double();
            table[0] = 0.0;
            auto v = [&](std::uint32_t m) { return table[m]; };
            auto phi = shapley_values(n, v);
            auto oracle = permutation_shapley(n, v);
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
                REQUIRE_THAT(phi[i], WithinAbs(oracle[i], 1e-9));
                sum += phi[i];
            }
            // Efficiency: contributions sum to v(full) - v(empty).
            REQUIRE_THAT(sum, WithinAbs(table.back(), 1e-9));
        }
    }
    SECTION("null player gets zero, symmetric players match") {
        // v ignores player 2 and treats players 0 and 1 interchangeably.
        auto v = [](std::uint32_t m) {
            int k = std::popcount(m & 3u);
            return k == 2 ? 1.0 : (k == 1 ? 0.25 : 0.0);
        };
        auto phi = shapley_values(3, v);
        REQUIRE_THAT(phi[0], WithinAbs(phi[1], 1e-12));
        REQUIRE_THAT(phi[2], WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("score-to-coalition mapping") {
    SECTION("cumulative keeps pulling until the threshold is reached") {
        // 0.6 + 0.3 = 0.9 < 0.95, so all three are taken.
        auto picked = map_scores_to_coalition({{0, 1, 2}, {0.6, 0.3, 0.1}},
                                              MappingConfig{MappingMode::cumulative});
        REQUIRE(picked == std::vector<VariableId>{0, 1, 2});
    }
    SECTION("individual keeps everything at or above theta_i") {
        auto picked = map_scores_to_coalition({{0, 1, 2}, {0.6, 0.3, 0.1}},
                                              MappingConfig{MappingMode::individual});
        REQUIRE(picked == std::vector<VariableId>{0, 1});
    }
    SECTION("a single player is chosen under both modes") {
        REQUIRE(map_scores_to_coalition({{7}, {0.4}},
                                        MappingConfig{MappingMode::cumulative}) ==
                std::vector<VariableId>{7});
        REQUIRE(map_scores_to_coalition({{7}, {0.4}},
                                        MappingConfig{MappingMode::individual}) ==
                std::vector<VariableId>{7});
    }
    SECTION("negative scores are clamped before normalization") {
        auto picked = map_scores_to_coalition({{0, 1}, {-5.0, 0.2}},
                                              MappingConfig{MappingMode::individual});
        REQUIRE(picked == std::vector<VariableId>{1});
    }
    SECTION("all-zero scores are an error") {
        REQUIRE_THROWS_MATCHES(
            map_scores_to_coalition({{0, 1}, {0.0, -1.0}},
                                    MappingConfig{MappingMode::cumulative}),
            Error, Catch::Matchers::Predicate<Error>(
                       [](const Error& e) { return e.code() == Errc::AllScoresZero; }));
    }
}

namespace {

/// Chain A -> B -> Y plus a side node S feeding Y; all threshold gates.
Scm chain_model() {
    ScmBuilder b;
    for (const char* n : {"LA", "LB", "LS", "LY"})
        b.add_variable(n, VarKind::noise, Domain{{"0", "1"}});
    b.add_variable("A", VarKind::observed, Domain{{"0", "1"}});
    b.add_variable("B", VarKind::observed, Domain{{"0", "1"}});
    b.add_variable("S", VarKind::observed, Domain{{"0", "1"}});
    b.add_variable("Y", VarKind::target, Domain{{"0", "1"}});
    b.add_edge("LA", "A");
    b.add_edge("LB", "B");
    b.add_edge("LS", "S");
    b.add_edge("LY", "Y");
    b.add_edge("A", "B");
    b.add_edge("B", "Y");
    b.add_edge("S", "Y");
    b.set_threshold_gate(b.id_of("A"), 1);
    b.set_threshold_gate(b.id_of("B"), 1);
    b.set_threshold_gate(b.id_of("S"), 1);
    b.set_threshold_gate(b.id_of("Y"), 1);
    for (const char* n : {"LA", "LB", "LS", "LY"})
        b.set_noise_prior(b.id_of(n), {0.95, 0.05});
    return b.build();
}

Observation chain_obs(const Scm& scm, int a, int bx, int s, int y) {
    Observation o(static_cast<std::size_t>(scm.size()));
    o.set(scm.id_of("A"), a);
    o.set(scm.id_of("B"), bx);
    o.set(scm.id_of("S"), s);
    o.set(scm.id_of("Y"), y);
    return o;
}

} // namespace

TEST_CASE("traversal blames anomalous nodes with healthy parents") {
    Scm scm = chain_model();
    SECTION("fully anomalous chain points at the source's noise") {
        auto picked = traversal_rca(scm, chain_obs(scm, 1, 1, 0, 1));
        REQUIRE(picked == std::vector<VariableId>{scm.id_of("LA")});
    }
    SECTION("no anomalies, no blame") {
        REQUIRE(traversal_rca(scm, chain_obs(scm, 0, 0, 0, 0)).empty());
    }
    SECTION("two independent anomalous sources are both blamed") {
        auto picked = traversal_rca(scm, chain_obs(scm, 1, 1, 1, 1));
        REQUIRE(picked == std::vector<VariableId>{scm.id_of("LA"), scm.id_of("LS")});
    }
}

TEST_CASE("backtracking traversal drops sources cut off by healthy nodes") {
    Scm scm = chain_model();
    // A anomalous but B healthy: A cannot have caused Y through B.
    Observation obs = chain_obs(scm, 1, 0, 1, 1);
    auto simple = traversal_rca(scm, obs);
    auto back = backtracking_traversal_rca(scm, obs);
    REQUIRE(simple == std::vector<VariableId>{scm.id_of("LA"), scm.id_of("LS")});
    REQUIRE(back == std::vector<VariableId>{scm.id_of("LS")});

    SECTION("prediction is a subset of simple traversal's") {
        for (int a : {0, 1})
            for (int bx : {0, 1})
                for (int s : {0, 1}) {
                    Observation o = chain_obs(scm, a, bx, s, 1);
                    auto t = traversal_rca(scm, o);
                    for (VariableId v : backtracking_traversal_rca(scm, o))
                        REQUIRE(std::find(t.begin(), t.end(), v) != t.end());
                }
    }
}

TEST_CASE("end-to-end evaluation on an enumerable network") {
    Scm scm = cloud_model(default_cloud_config());
    SampleTable table = generate_samples(scm, 50000, 4242, 1);
    REQUIRE(!table.rows.empty());

    RcaConfig cfg;
    cfg.seed = 11;
    cfg.methods = {RcaMethod::coca, RcaMethod::traversal, RcaMethod::backtracking};
    RcaReport report = evaluate_rca(scm, table, cfg);
    REQUIRE(report.methods.size() == 3);
    REQUIRE(report.incident_samples == table.rows.size());

    auto overall = [&](RcaMethod m) {
        for (const auto& mr : report.methods)
            if (mr.method == m) return mr.overall;
        FAIL("method missing");
        return GroupStats{};
    };
    // Qualitative ordering: coalition search beats traversal on this batch.
    REQUIRE(overall(RcaMethod::coca).accuracy() >=
            overall(RcaMethod::traversal).accuracy());
    // Backtracking never adds false positives over simple traversal.
    REQUIRE(overall(RcaMethod::backtracking).false_positives <=
            overall(RcaMethod::traversal).false_positives);

    SECTION("empty batch produces an empty report") {
        SampleTable empty = table;
        empty.rows.clear();
        RcaReport r = evaluate_rca(scm, empty, cfg);
        REQUIRE(r.incident_samples == 0);
        for (const auto& m : r.methods) REQUIRE(m.overall.n == 0);
    }
    SECTION("unknown method names are rejected with the valid list") {
        try {
            rca_method_from_name("nonsense");
            FAIL("expected an error");
        } catch (const Error& e) {
            REQUIRE(std::string(e.what()).find("coca") != std::string::npos);
            REQUIRE(std::string(e.what()).find("shapley-mean-i") != std::string::npos);
        }
    }
}
