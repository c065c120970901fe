#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mpm/discrete_engine.hpp"
#include "mpm/model.hpp"
#include "mpm/parser.hpp"
#include "support.hpp"

using namespace mpm;
namespace ts = testsupport;

TEST_CASE("step distribution normalizes command rates") {
    Model m = parse_model(
        "var x = 1;\nsemantics dtmc;\n"
        "a: x > 0 |- 2 -> x := x + 1;\n"
        "b: x > 0 |- 3 -> x := x - 1;\n"
        "c: x > 5 |- 10 -> x := x + 2;\n");
    auto probs = step_probabilities(m, State{1});
    REQUIRE(probs.size() == 2);
    CHECK(probs[0].first == 0);
    CHECK(probs[0].second == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(probs[1].first == 1);
    CHECK(probs[1].second == doctest::Approx(0.6).epsilon(1e-15));
    // No enabled command: absorbing, empty distribution.
    CHECK(step_probabilities(m, State{0}).empty());
}

TEST_CASE("zero-rate commands drop out of the step distribution") {
    Model m = parse_model(
        "var x = 2;\nsemantics dtmc;\n"
        "a: true |- x - 2 -> x := x + 1;\n"
        "b: true |- 5 -> x := x - 1;\n");
    auto probs = step_probabilities(m, State{2});  // first rate evaluates to 0
    REQUIRE(probs.size() == 1);
    CHECK(probs[0].first == 1);
    CHECK(probs[0].second == 1.0);
}

TEST_CASE("transient distribution matches dense matrix powers") {
    // Criterion-grade oracle: random bounded chains, no truncation, engine
    // result compared per state against long double vector-matrix powers
    // computed straight from the generator metadata.
    std::mt19937 rng(20240817);
    for (int trial = 0; trial < 12; ++trial) {
        CAPTURE(trial);
        int L = std::uniform_int_distribution<int>(3, 40)(rng);
        ts::ChainSpec spec = ts::random_chain(rng, L);
        Model m = parse_model(spec.model_text(false));
        PropagationConfig cfg;
        cfg.delta = 0.0;
        cfg.store.chunk_size = 64;
        const std::uint64_t k = 20;
        TransientResult res = dtmc_transient(m, k, cfg);
        ts::Vec oracle = ts::dense_power(spec, k);
        ts::Vec got = ts::to_dense(res.distribution, spec.L);
        CHECK(ts::max_abs_diff(got, oracle) <= 1e-12);
        CHECK(res.dropped_mass == 0.0);
        CHECK(res.accumulated_error == 0.0);
        CHECK(res.steps == k);
        CHECK(std::fabs(ts::dist_sum(res.distribution) - 1.0) <= 1e-12);
    }
}

TEST_CASE("bounded birth-death ladder occupies the full range") {
    // Two-command random-walk ladder on {0..20}: after enough steps every
    // level has been reached and, with no truncation, none is ever dropped.
    std::string text =
        "const N = 20;\nconst s = 0.01;\n"
        "var a = 1;\nvar b = 19;\n"
        "semantics dtmc;\n"
        "up: a > 0 and b > 0 |- (1 - s) / 2 + s * a / N -> a := a + 1, b := b - 1;\n"
        "down: a > 0 and b > 0 |- (1 - s) / 2 + s * b / N -> a := a - 1, b := b + 1;\n";
    Model m = parse_model(text);
    PropagationConfig cfg;
    cfg.delta = 0.0;
    TransientResult res = dtmc_transient(m, 2000, cfg);
    CHECK(res.num_active == 21);
    CHECK(res.dropped_mass == 0.0);
    CHECK(std::fabs(ts::dist_sum(res.distribution) - 1.0) <= 1e-12);

    // Independent dense reference over the ladder (a determines b).
    ts::ChainSpec spec;
    spec.L = 21;
    spec.x0 = 1;
    for (int a = 1; a < 20; ++a) {
        double up = (1.0 - 0.01) / 2.0 + 0.01 * a / 20.0;
        double down = (1.0 - 0.01) / 2.0 + 0.01 * (20.0 - a) / 20.0;
        spec.cmds.push_back(ts::ChainCmd{a, 1, up});
        spec.cmds.push_back(ts::ChainCmd{a, -1, down});
    }
    ts::Vec oracle = ts::dense_power(spec, 2000);
    ts::Vec got(21, 0.0L);
    for (const auto& [st, p] : res.distribution) got[st[0]] += p;
    CHECK(ts::max_abs_diff(got, oracle) <= 1e-12);
}

TEST_CASE("threshold drops tails and accounts them as error") {
    // Symmetric random walk spreads mass; a large threshold must shed the
    // tails into dropped_mass while keeping the ledger consistent.
    Model m = parse_model(
        "var x = 50;\nsemantics dtmc;\n"
        "up: true |- 1 -> x := x + 1;\n"
        "down: x > 0 |- 1 -> x := x - 1;\n");
    PropagationConfig cfg;
    cfg.delta = 1e-3;
    TransientResult res = dtmc_transient(m, 200, cfg);
    CHECK(res.dropped_mass > 0.0);
    CHECK(res.accumulated_error == res.dropped_mass);
    double sum = ts::dist_sum(res.distribution);
    CHECK(std::fabs(sum + res.dropped_mass - 1.0) <= 1e-9);
    CHECK(sum <= 1.0 + 1e-9);
    // Kept entries respect the threshold at the final step.
    for (const auto& [st, p] : res.distribution) CHECK(p >= cfg.delta);
}

TEST_CASE("absorbing states hold their mass") {
    Model m = parse_model(
        "var x = 3;\nsemantics dtmc;\n"
        "down: x > 0 |- 1 -> x := x - 1;\n");
    PropagationConfig cfg;
    // Tiny positive threshold: sweeps exact-zero entries (the sweep is a
    // strict comparison, so 0 survives delta = 0) without costing any mass.
    cfg.delta = 1e-300;
    TransientResult res = dtmc_transient(m, 50, cfg);
    CHECK(res.dropped_mass == 0.0);
    // Everything has reached the absorbing origin.
    REQUIRE(res.distribution.size() == 1);
    CHECK(res.distribution[0].first == State{0});
    CHECK(res.distribution[0].second == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("zero steps returns the initial distribution") {
    Model m = parse_model(
        "var x = 7;\nsemantics dtmc;\nup: true |- 1 -> x := x + 1;\n");
    PropagationConfig cfg;
    TransientResult res = dtmc_transient(m, 0, cfg);
    REQUIRE(res.distribution.size() == 1);
    CHECK(res.distribution[0].first == State{7});
    CHECK(res.distribution[0].second == 1.0);
    CHECK(res.steps == 0);
}

TEST_CASE("dump callback fires at the requested cadence") {
    Model m = parse_model(
        "var x = 0;\nsemantics dtmc;\nup: true |- 1 -> x := x + 1;\n");
    PropagationConfig cfg;
    cfg.delta = 1e-300;  // sweep exact zeros, cost nothing
    cfg.dump_interval = 5;
    std::vector<std::uint64_t> seen;
    std::vector<double> sums;
    TransientResult res = dtmc_transient(m, 17, cfg, [&](const TransientResult& r) {
        seen.push_back(r.steps);
        sums.push_back(ts::dist_sum(r.distribution));
    });
    // Only exact multiples fire the callback; the partial tail is the
    // function's return value, not a dump.
    CHECK(seen == std::vector<std::uint64_t>{5, 10, 15});
    for (double s : sums) CHECK(std::fabs(s - 1.0) <= 1e-12);
    CHECK(res.steps == 17);
    // The deterministic counter puts all mass on x = steps.
    REQUIRE(res.distribution.size() == 1);
    CHECK(res.distribution[0].first == State{17});
}

TEST_CASE("conservation holds at every dump under truncation") {
    Model m = parse_model(
        "var x = 30;\nsemantics dtmc;\n"
        "up: true |- 1 -> x := x + 1;\n"
        "down: x > 0 |- 1 -> x := x - 1;\n");
    PropagationConfig cfg;
    cfg.delta = 1e-6;
    cfg.dump_interval = 10;
    dtmc_transient(m, 100, cfg, [&](const TransientResult& r) {
        CHECK(std::fabs(ts::dist_sum(r.distribution) + r.dropped_mass - 1.0) <= 1e-9);
        CHECK(r.accumulated_error == r.dropped_mass);
    });
}

TEST_CASE("per-node caches survive slot recycling under heavy truncation") {
    // A drifting wave with an aggressive threshold forces constant
    // deactivation, slot reuse and compaction while the wave happily moves
    // through fresh states; the final distribution must still be a
    // probability vector concentrated around the drift.
    Model m = parse_model(
        "var x = 0;\nsemantics dtmc;\n"
        "fwd: true |- 3 -> x := x + 1;\n"
        "back: x > 0 |- 1 -> x := x - 1;\n");
    PropagationConfig cfg;
    cfg.delta = 1e-8;
    cfg.store.chunk_size = 32;
    TransientResult res = dtmc_transient(m, 400, cfg);
    double sum = ts::dist_sum(res.distribution);
    CHECK(sum + res.dropped_mass == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.compressions > 0);
    // Drift 3/4 - 1/4 = 1/2 per step: the bulk sits near x = 200.
    double mean = 0.0;
    for (const auto& [st, p] : res.distribution) mean += p * st[0];
    CHECK(mean == doctest::Approx(200.0).epsilon(0.05));
}
