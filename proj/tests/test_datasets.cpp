#include "coalex/datasets.hpp"
#include "coalex/inference.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <set>

using namespace coalex;

TEST_CASE("AND-gate fixture rejects degenerate noise rates") {
    for (double bad : {0.0, 1.0, -0.1, 1.5}) {
        REQUIRE_THROWS_MATCHES(
            and_gate_model(bad, 0.5), Error,
            Catch::Matchers::Predicate<Error>(
                [](const Error& e) { return e.code() == Errc::DegenerateParameter; }));
        REQUIRE_THROWS_MATCHES(
            and_gate_model(0.5, bad), Error,
            Catch::Matchers::Predicate<Error>(
                [](const Error& e) { return e.code() == Errc::DegenerateParameter; }));
    }
    REQUIRE_NOTHROW(and_gate_model(0.1, 0.8));
}

TEST_CASE("CorrAL table invariants") {
    SampleTable t = corral_table(11);
    REQUIRE(t.rows.size() == 160);
    REQUIRE(t.columns.size() == 7);
    REQUIRE(t.columns[6].name == "class");
    REQUIRE(t.columns[6].role == ColumnRole::target);

    SECTION("class column equals the predictor on every row") {
        for (const auto& row : t.rows)
            REQUIRE(row[6] == corral_predict(row[0], row[1], row[2], row[3]));
    }
    SECTION("same seed reproduces the table, another seed does not") {
        REQUIRE(corral_table(11).rows == t.rows);
        REQUIRE(corral_table(12).rows != t.rows);
    }
    SECTION("Correlated tracks the class about 75% of the time") {
        int agree = 0;
        for (const auto& row : t.rows) agree += row[5] == row[6] ? 1 : 0;
        double rate = agree / 160.0;
        REQUIRE(rate > 0.60);
        REQUIRE(rate < 0.90);
    }
    SECTION("Irrelevant is not constant") {
        std::set<int> seen;
        for (const auto& row : t.rows) seen.insert(row[4]);
        REQUIRE(seen.size() == 2);
    }
}

TEST_CASE("default error-propagation network needs three simultaneous errors") {
    CloudNetworkConfig cfg = default_cloud_config();
    Scm scm = cloud_model(cfg);
    const auto noise = scm.noise_ids();
    REQUIRE(noise.size() == 10);

    // Exhaustively force every noise assignment with at most two errors: the
    // target must stay healthy, since each of its three inputs sits on a
    // separate propagation channel.
    std::uint32_t feasible = 0; // noise values that can actually occur
    for (std::size_t i = 0; i < noise.size(); ++i)
        if (scm.priors[noise[i]]->probabilities[1] > 0.0) feasible |= 1u << i;
    std::uint32_t full = (1u << noise.size()) - 1u;
    int reachable_with_three = 0;
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
        if ((mask & ~feasible) != 0) continue; // would need a zero-probability error
        Observation noise_values(static_cast<std::size_t>(scm.size()));
        for (std::size_t i = 0; i < noise.size(); ++i)
            noise_values.set(noise[i], static_cast<int>((mask >> i) & 1u));
        Observation state = evaluate(scm, noise_values);
        int errors = std::popcount(mask);
        if (errors <= 2) REQUIRE(state[scm.target] == 0);
        if (errors == 3 && state[scm.target] == 1) ++reachable_with_three;
    }
    REQUIRE(reachable_with_three > 0);
}

TEST_CASE("cloud config validation") {
    CloudNetworkConfig cfg = default_cloud_config();
    SECTION("threshold above the parent count is rejected") {
        cfg.nodes[9].threshold = 4; // www has three parents
        REQUIRE_THROWS_MATCHES(
            cloud_model(cfg), Error,
            Catch::Matchers::Predicate<Error>(
                [](const Error& e) { return e.code() == Errc::InvalidThreshold; }));
    }
    SECTION("threshold zero is allowed but warned about") {
        cfg.nodes[0].threshold = 0;
        std::vector<std::string> warnings;
        REQUIRE_NOTHROW(cloud_model(cfg, &warnings));
        REQUIRE(warnings.size() == 1);
        REQUIRE(warnings[0].find("svc-legacy") != std::string::npos);
    }
    SECTION("error rate outside [0,1] is rejected") {
        cfg.nodes[2].error_rate = 1.2;
        REQUIRE_THROWS_AS(cloud_model(cfg), Error);
    }
}

TEST_CASE("forward sampling") {
    Scm scm = and_gate_model(0.1, 0.8);
    SECTION("deterministic per seed, row-partitioned") {
        SampleTable a = generate_samples(scm, 500, 77);
        SampleTable b = generate_samples(scm, 500, 77);
        SampleTable c = generate_samples(scm, 500, 78);
        REQUIRE(a.rows == b.rows);
        REQUIRE(a.rows != c.rows);
        // The first 100 rows of a longer run match a shorter run exactly.
        SampleTable d = generate_samples(scm, 100, 77);
        REQUIRE(std::equal(d.rows.begin(), d.rows.end(), a.rows.begin()));
    }
    SECTION("columns carry roles and hidden noise ground truth") {
        SampleTable t = generate_samples(scm, 50, 5);
        REQUIRE(t.columns.size() == 5);
        REQUIRE(t.columns[0].role == ColumnRole::feature); // X1
        REQUIRE(t.columns[2].role == ColumnRole::target);  // Y
        REQUIRE(t.columns[3].role == ColumnRole::noise);   // L1
        for (const auto& row : t.rows) {
            REQUIRE(row[0] == row[3]); // X1 passes L1 through
            REQUIRE(row[1] == row[4]);
            REQUIRE(row[2] == (row[0] && row[1] ? 1 : 0));
        }
    }
    SECTION("target filter keeps only matching rows but tallies everything") {
        SampleTable t = generate_samples(scm, 2000, 9, 1);
        REQUIRE(!t.rows.empty());
        for (const auto& row : t.rows) REQUIRE(row[2] == 1);
        std::uint64_t tallied = 0, erring = 0;
        for (const auto& [errors, counts] : t.error_tally) {
            tallied += counts[0] + counts[1];
            erring += counts[1];
        }
        REQUIRE(tallied == 2000);
        REQUIRE(erring == t.rows.size());
        // Empirical incident rate near p1 * p2 = 0.08.
        REQUIRE(erring > 100);
        REQUIRE(erring < 220);
    }
    SECTION("zero rows requested is an error") {
        REQUIRE_THROWS_AS(generate_samples(scm, 0, 1), Error);
    }
}
