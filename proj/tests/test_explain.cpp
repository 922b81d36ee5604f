#include "coalex/explain.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <set>

using namespace coalex;
using Catch::Matchers::WithinAbs;

namespace {

EmpiricalModel fixture_model() { return corral_model(corral_table(11)); }

std::set<std::vector<VariableId>> member_sets(const SearchResult& r) {
    std::set<std::vector<VariableId>> out;
    for (const auto& sc : r.coalitions) out.insert(sc.coalition.members);
    return out;
}

} // namespace

TEST_CASE("pinning a full AND-clause makes the prediction certain") {
    EmpiricalModel m = fixture_model();
    const int a0 = m.feature_index("A0"), a1 = m.feature_index("A1");

    FeatureCoalition pin_a{{a0, a1}, {1, 1}};
    CategoricalDistribution d = empirical_interventional_distribution(m, pin_a, 0, 0);
    REQUIRE(d.p(1) == 1.0);

    // Any row the clause fires on is fully explained by that clause alone.
    std::vector<int> row{1, 1, 0, 0, 0, 0};
    ExplanationScore s = model_explanation_score(m, row, pin_a);
    REQUIRE_THAT(s.value, WithinAbs(1.0, 1e-12));
    REQUIRE(s.target_value == 1);

    // The empty coalition explains nothing.
    ExplanationScore zero = model_explanation_score(m, row, FeatureCoalition{});
    REQUIRE(zero.value == 0.0);
}

TEST_CASE("all-false row is minimally explained by the four cross pairs") {
    EmpiricalModel m = fixture_model();
    std::vector<int> row{0, 0, 0, 0, 0, 0};
    SearchResult r = model_minimal_coalitions(m, row, 0.998);

    REQUIRE(r.minimal_size.has_value());
    REQUIRE(*r.minimal_size == 2);
    const int a0 = m.feature_index("A0"), a1 = m.feature_index("A1");
    const int b0 = m.feature_index("B0"), b1 = m.feature_index("B1");
    std::set<std::vector<VariableId>> expected{
        {static_cast<VariableId>(a0), static_cast<VariableId>(b0)},
        {static_cast<VariableId>(a0), static_cast<VariableId>(b1)},
        {static_cast<VariableId>(a1), static_cast<VariableId>(b0)},
        {static_cast<VariableId>(a1), static_cast<VariableId>(b1)},
    };
    REQUIRE(member_sets(r) == expected);
    for (const auto& sc : r.coalitions) {
        REQUIRE(sc.coalition.values == std::vector<int>{0, 0});
        REQUIRE_THAT(sc.score, WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("no minimal coalition ever contains a spurious feature") {
    EmpiricalModel m = fixture_model();
    const int irrelevant = m.feature_index("Irrelevant");
    const int correlated = m.feature_index("Correlated");
    for (const auto& table_row : m.table.rows) {
        std::vector<int> row(table_row.begin(), table_row.begin() + 6);
        SearchResult r = model_minimal_coalitions(m, row, 0.998);
        REQUIRE(r.minimal_size.has_value());
        for (const auto& sc : r.coalitions)
            for (VariableId f : sc.coalition.members) {
                REQUIRE(f != static_cast<VariableId>(irrelevant));
                REQUIRE(f != static_cast<VariableId>(correlated));
            }
    }
}

TEST_CASE("stability stays perfect while a true explanation is held fixed") {
    EmpiricalModel m = fixture_model();
    std::vector<int> row{0, 0, 0, 0, 0, 0};
    const int a0 = m.feature_index("A0"), b0 = m.feature_index("B0");

    FeatureOrdering ordering = ordering_coalition_last(m, {a0, b0});
    StabilityCurve curve = stability_curve(m, row, ordering, 0, 0);
    REQUIRE(curve.stability.size() == 7);
    for (int k = 0; k <= 4; ++k) REQUIRE(curve.stability[k] == 1.0);
    REQUIRE(curve.stability[5] < 1.0);
    REQUIRE(curve.stability[6] <= curve.stability[5] + 1e-12);

    SECTION("sampled mode approximates exact mode and is seed-deterministic") {
        StabilityCurve mc1 = stability_curve(m, row, ordering, 4000, 99);
        StabilityCurve mc2 = stability_curve(m, row, ordering, 4000, 99);
        REQUIRE(mc1.stability == mc2.stability);
        for (std::size_t k = 0; k < curve.stability.size(); ++k)
            REQUIRE_THAT(mc1.stability[k], WithinAbs(curve.stability[k], 0.03));
    }
}

TEST_CASE("orderings") {
    EmpiricalModel m = fixture_model();
    SECTION("score ordering randomizes the least important feature first") {
        std::vector<double> scores{0.30, 0.25, 0.20, 0.15, 0.02, 0.08};
        FeatureOrdering o = ordering_from_scores(m, scores);
        REQUIRE(o.randomize_order == std::vector<int>{4, 5, 3, 2, 1, 0});
    }
    SECTION("coalition-last keeps the coalition at the tail") {
        FeatureOrdering o = ordering_coalition_last(m, {5, 1});
        REQUIRE(o.randomize_order == std::vector<int>{0, 2, 3, 4, 1, 5});
    }
    SECTION("random ordering is a seed-stable permutation") {
        FeatureOrdering a = ordering_random(m, 3);
        REQUIRE(a.randomize_order == ordering_random(m, 3).randomize_order);
        std::set<int> seen(a.randomize_order.begin(), a.randomize_order.end());
        REQUIRE(seen.size() == 6);
    }
    SECTION("incomplete orderings are rejected") {
        std::vector<int> row{0, 0, 0, 0, 0, 0};
        FeatureOrdering bad;
        bad.randomize_order = {0, 1, 2};
        REQUIRE_THROWS_MATCHES(
            stability_curve(m, row, bad, 0, 0), Error,
            Catch::Matchers::Predicate<Error>(
                [](const Error& e) { return e.code() == Errc::OrderingIncomplete; }));
        bad.randomize_order = {0, 1, 2, 3, 4, 4};
        REQUIRE_THROWS_AS(stability_curve(m, row, bad, 0, 0), Error);
    }
}

TEST_CASE("external feature scores are validated and normalized") {
    EmpiricalModel m = fixture_model();
    SECTION("normalizes to a unit sum over the model's feature order") {
        auto scores = normalize_feature_scores(m, {{"Correlated", 0.1},
                                                   {"A0", 0.4},
                                                   {"A1", 0.4},
                                                   {"B0", -0.6},
                                                   {"B1", 0.4},
                                                   {"Irrelevant", 0.1}});
        double sum = 0.0;
        for (double s : scores) sum += s;
        REQUIRE_THAT(sum, WithinAbs(1.0, 1e-12));
        REQUIRE_THAT(scores[m.feature_index("B0")], WithinAbs(0.3, 1e-12));
    }
    SECTION("missing, duplicate, or unknown features are rejected") {
        REQUIRE_THROWS_MATCHES(
            normalize_feature_scores(m, {{"A0", 1.0}}), Error,
            Catch::Matchers::Predicate<Error>(
                [](const Error& e) { return e.code() == Errc::ScoreFileMismatch; }));
        REQUIRE_THROWS_AS(normalize_feature_scores(m, {{"A0", 1.0},
                                                       {"A0", 1.0},
                                                       {"B0", 1.0},
                                                       {"B1", 1.0},
                                                       {"Irrelevant", 1.0},
                                                       {"Correlated", 1.0}}),
                          Error);
        REQUIRE_THROWS_AS(normalize_feature_scores(m, {{"A0", 1.0},
                                                       {"A1", 1.0},
                                                       {"B0", 1.0},
                                                       {"B1", 1.0},
                                                       {"Irrelevant", 1.0},
                                                       {"Nope", 1.0}}),
                          Error);
    }
}
