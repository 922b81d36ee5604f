#include "coalex/core.hpp"
#include "coalex/datasets.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace coalex;

namespace {

Domain bin() { return Domain{{"0", "1"}}; }

ScmBuilder two_node_skeleton() {
    ScmBuilder b;
    b.add_variable("L1", VarKind::noise, bin());
    b.add_variable("X1", VarKind::observed, bin());
    b.add_variable("Y", VarKind::target, bin());
    b.add_edge("L1", "X1");
    b.add_edge("X1", "Y");
    b.set_truth_table(b.id_of("X1"), {0, 1});
    b.set_truth_table(b.id_of("Y"), {0, 1});
    b.set_noise_prior(b.id_of("L1"), {0.5, 0.5});
    return b;
}

} // namespace

TEST_CASE("builder accepts a minimal valid model") {
    Scm scm = two_node_skeleton().build();
    REQUIRE(scm.size() == 3);
    REQUIRE(scm.target == scm.id_of("Y"));
    REQUIRE(scm.topo_order.back() == scm.target);
}

TEST_CASE("builder rejects structural defects") {
    SECTION("cycle") {
        ScmBuilder b = two_node_skeleton();
        b.add_edge("Y", "X1"); // X1 -> Y -> X1
        REQUIRE_THROWS_MATCHES(b.build(), Error, Catch::Matchers::Predicate<Error>(
            [](const Error& e) { return e.code() == Errc::CycleDetected; }));
    }
    SECTION("noise with parents") {
        ScmBuilder b = two_node_skeleton();
        b.add_edge("X1", "L1");
        REQUIRE_THROWS_AS(b.build(), Error);
    }
    SECTION("target must be declared last") {
        ScmBuilder b;
        b.add_variable("Y", VarKind::target, bin());
        b.add_variable("L1", VarKind::noise, bin());
        b.set_truth_table(0, {0, 1});
        b.set_noise_prior(1, {0.5, 0.5});
        b.add_edge(1, 0);
        REQUIRE_THROWS_AS(b.build(), Error);
    }
    SECTION("incomplete truth table") {
        ScmBuilder b = two_node_skeleton();
        b.set_truth_table(b.id_of("Y"), {0}); // needs 2 rows
        REQUIRE_THROWS_MATCHES(b.build(), Error, Catch::Matchers::Predicate<Error>(
            [](const Error& e) { return e.code() == Errc::IncompleteTruthTable; }));
    }
    SECTION("truth table output outside the domain") {
        ScmBuilder b = two_node_skeleton();
        b.set_truth_table(b.id_of("Y"), {0, 7});
        REQUIRE_THROWS_MATCHES(b.build(), Error, Catch::Matchers::Predicate<Error>(
            [](const Error& e) { return e.code() == Errc::ValueOutOfDomain; }));
    }
    SECTION("observed variable without noise parent") {
        ScmBuilder b;
        b.add_variable("X1", VarKind::observed, bin());
        b.add_variable("L", VarKind::noise, bin());
        b.add_variable("Y", VarKind::target, bin());
        b.add_edge("X1", "Y");
        b.add_edge("L", "Y");
        b.set_truth_table(b.id_of("X1"), {1});
        b.set_truth_table(b.id_of("Y"), {0, 0, 0, 1});
        b.set_noise_prior(b.id_of("L"), {0.5, 0.5});
        REQUIRE_THROWS_MATCHES(b.build(), Error, Catch::Matchers::Predicate<Error>(
            [](const Error& e) { return e.code() == Errc::ObservedWithoutNoiseParent; }));
    }
    SECTION("deterministic target without noise is allowed") {
        REQUIRE_NOTHROW(and_gate_model(0.1, 0.8));
    }
}

TEST_CASE("threshold gate validation") {
    auto gate_builder = [](int threshold) {
        ScmBuilder b;
        b.add_variable("L", VarKind::noise, bin());
        b.add_variable("Lp", VarKind::noise, bin());
        b.add_variable("P", VarKind::observed, bin());
        b.add_variable("Y", VarKind::target, bin());
        b.add_edge("Lp", "P");
        b.set_truth_table(b.id_of("P"), {0, 1});
        b.add_edge("L", "Y");
        b.add_edge("P", "Y");
        b.set_threshold_gate(b.id_of("Y"), threshold);
        b.set_noise_prior(b.id_of("L"), {0.9, 0.1});
        b.set_noise_prior(b.id_of("Lp"), {0.9, 0.1});
        return b;
    };
    REQUIRE_NOTHROW(gate_builder(0).build());
    REQUIRE_NOTHROW(gate_builder(1).build());
    REQUIRE_THROWS_MATCHES(gate_builder(2).build(), Error,
        Catch::Matchers::Predicate<Error>(
            [](const Error& e) { return e.code() == Errc::InvalidThreshold; }));

    SECTION("a root gate may use threshold 1 (never fires from parents)") {
        ScmBuilder b;
        b.add_variable("L", VarKind::noise, bin());
        b.add_variable("Y", VarKind::target, bin());
        b.add_edge("L", "Y");
        b.set_threshold_gate(b.id_of("Y"), 1);
        b.set_noise_prior(b.id_of("L"), {0.7, 0.3});
        Scm scm = b.build();
        Observation noise(static_cast<std::size_t>(scm.size()));
        noise.set(scm.id_of("L"), 0);
        REQUIRE(evaluate(scm, noise)[scm.target] == 0);
        noise.set(scm.id_of("L"), 1);
        REQUIRE(evaluate(scm, noise)[scm.target] == 1);
    }
}

TEST_CASE("forward evaluation of the AND gate") {
    Scm scm = and_gate_model(0.1, 0.8);
    Observation noise(static_cast<std::size_t>(scm.size()));
    for (int l1 : {0, 1})
        for (int l2 : {0, 1}) {
            noise.set(scm.id_of("L1"), l1);
            noise.set(scm.id_of("L2"), l2);
            Observation full = evaluate(scm, noise);
            REQUIRE(full[scm.id_of("X1")] == l1);
            REQUIRE(full[scm.id_of("X2")] == l2);
            REQUIRE(full[scm.target] == (l1 & l2));
        }
}

TEST_CASE("hard interventions rewrite mechanisms") {
    Scm scm = and_gate_model(0.1, 0.8);
    Coalition pin{{scm.id_of("X1")}, {0}};
    Scm cut = apply_intervention(scm, pin);
    Observation noise(static_cast<std::size_t>(cut.size()));
    noise.set(cut.id_of("L1"), 1);
    noise.set(cut.id_of("L2"), 1);
    Observation full = evaluate(cut, noise);
    REQUIRE(full[cut.id_of("X1")] == 0); // pinned despite L1 = 1
    REQUIRE(full[cut.target] == 0);

    SECTION("the target cannot be pinned") {
        Coalition bad{{scm.target}, {0}};
        REQUIRE_THROWS_MATCHES(apply_intervention(scm, bad), Error,
            Catch::Matchers::Predicate<Error>(
                [](const Error& e) { return e.code() == Errc::TargetInCoalition; }));
    }
}

TEST_CASE("domain label lookup") {
    Domain d{{"low", "high"}};
    REQUIRE(d.index_of("high") == 1);
    REQUIRE_THROWS_AS(d.index_of("medium"), Error);
}
