#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mpm/errors.hpp"
#include "mpm/jump_weights.hpp"

using namespace mpm;

namespace {

// Reference Poisson pmf in extended precision, usable for moderate means.
long double poisson_pmf(double mean, std::size_t k) {
    long double log_p = -static_cast<long double>(mean) +
                        static_cast<long double>(k) * std::log((long double)mean);
    for (std::size_t i = 2; i <= k; ++i) log_p -= std::log((long double)i);
    return std::exp(log_p);
}

// Independent reference for the jump-count distribution of a pure birth
// process: integrate the coupled linear system b_k' = r_{k-1} b_{k-1} -
// r_k b_k with classical RK4 at a tiny fixed step in long double. Slow and
// simple on purpose — it shares no code or method with the implementation
// under test (which uses exact exponential steps per grid cell).
std::vector<long double> birth_reference(const std::vector<double>& rates,
                                         double t, std::size_t levels) {
    std::vector<long double> b(levels, 0.0L), k1(levels), k2(levels),
        k3(levels), k4(levels), tmp(levels);
    b[0] = 1.0L;
    auto deriv = [&](const std::vector<long double>& y,
                     std::vector<long double>& out) {
        for (std::size_t k = 0; k < levels; ++k) {
            long double v = 0.0L;
            if (k < rates.size()) v -= (long double)rates[k] * y[k];
            if (k > 0 && k - 1 < rates.size())
                v += (long double)rates[k - 1] * y[k - 1];
            out[k] = v;
        }
    };
    const std::size_t steps = 40000;
    const long double h = (long double)t / steps;
    for (std::size_t s = 0; s < steps; ++s) {
        deriv(b, k1);
        for (std::size_t k = 0; k < levels; ++k) tmp[k] = b[k] + 0.5L * h * k1[k];
        deriv(tmp, k2);
        for (std::size_t k = 0; k < levels; ++k) tmp[k] = b[k] + 0.5L * h * k2[k];
        deriv(tmp, k3);
        for (std::size_t k = 0; k < levels; ++k) tmp[k] = b[k] + h * k3[k];
        deriv(tmp, k4);
        for (std::size_t k = 0; k < levels; ++k) {
            b[k] += h / 6.0L * (k1[k] + 2.0L * k2[k] + 2.0L * k3[k] + k4[k]);
        }
    }
    return b;
}

}  // namespace

TEST_CASE("window sums stay within the budget across magnitudes") {
    const double eps = 1e-8;
    for (double lt : {0.1, 1.0, 10.0, 1e4}) {
        CAPTURE(lt);
        JumpWeights jw = poisson_weights(lt, eps);
        long double sum = 0.0L;
        for (double w : jw.weights) {
            REQUIRE(std::isfinite(w));
            REQUIRE(w >= 0.0);
            sum += w;
        }
        CHECK(sum >= 1.0L - eps);
        CHECK(sum <= 1.0L + 1e-12L);
        CHECK(jw.truncation_error >= 0.0);
        CHECK(jw.truncation_error <= eps);
        CHECK(doctest::Approx(static_cast<double>(sum))
                  .epsilon(1e-12) == 1.0 - jw.truncation_error);
        // The window always contains the mode.
        std::size_t mode = static_cast<std::size_t>(lt);
        CHECK(jw.left <= mode);
        CHECK(mode < jw.left + jw.weights.size());
        // Left truncation engages only for large means.
        if (lt <= 25.0) CHECK(jw.left == 0);
        if (lt == 1e4) CHECK(jw.left > 0);
    }
}

TEST_CASE("window entries equal the exact pmf") {
    JumpWeights jw = poisson_weights(10.0, 1e-10);
    for (std::size_t i = 0; i < jw.weights.size(); ++i) {
        long double exact = poisson_pmf(10.0, jw.left + i);
        CHECK(std::fabs(jw.weights[i] - (double)exact) <=
              1e-12 * (double)exact + 1e-18);
    }
}

TEST_CASE("degenerate mean puts all mass on zero jumps") {
    JumpWeights jw = poisson_weights(0.0, 1e-8);
    REQUIRE(jw.weights.size() == 1);
    CHECK(jw.left == 0);
    CHECK(jw.weights[0] == 1.0);
    CHECK(jw.truncation_error == 0.0);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS((void)poisson_weights(-1.0, 1e-8), InvalidArgumentError);
    CHECK_THROWS_AS((void)poisson_weights(1.0, 0.0), InvalidArgumentError);
    CHECK_THROWS_AS((void)poisson_weights(1.0, 1.0), InvalidArgumentError);
    CHECK_THROWS_AS((void)birth_weights({}, 1.0, 1e-8), InvalidArgumentError);
    CHECK_THROWS_AS((void)BirthWeightSeries(-1.0), InvalidArgumentError);
}

TEST_CASE("two-rate jump counts match the closed form") {
    // Rates 1 and 2 over unit time: P[0 jumps] = e^{-1},
    // P[1 jump] = int_0^1 e^{-s} 2 e^{-2(1-s)} ds = 2(e^{-1} - e^{-2}).
    BirthWeightSeries series(1.0);
    double b0 = series.push_rate(1.0);
    double b1 = series.push_rate(2.0);
    CHECK(std::fabs(b0 - 0.36787944117144232) <= 5e-12);
    CHECK(std::fabs(b1 - 0.23254415793482963) <= 5e-12);
    CHECK(series.count() == 2);
    CHECK(series.total() == doctest::Approx(b0 + b1).epsilon(1e-15));
}

TEST_CASE("ascending-rate sequence matches frozen references") {
    // Rates 1..5 at t = 1; values frozen from an independent high-precision
    // integration of the level equations.
    BirthWeightSeries series(1.0);
    (void)series.push_rate(1.0);
    (void)series.push_rate(2.0);
    double b2 = series.push_rate(3.0);
    double b3 = series.push_rate(4.0);
    CHECK(std::fabs(b2 - 0.14699594306608088) <= 5e-12);
    CHECK(std::fabs(b3 - 0.092919157676461895) <= 5e-12);
}

TEST_CASE("mixed-rate sequence matches frozen references") {
    BirthWeightSeries series(1.5);
    const double expected[] = {0.47236655274101471, 0.052423718707874097,
                               0.28588759065583042, 0.083096444976988761,
                               0.019043669613735627};
    const double rates[] = {0.5, 5.0, 0.75, 2.0, 8.0};
    for (int k = 0; k < 5; ++k) {
        double b = series.push_rate(rates[k]);
        CAPTURE(k);
        CHECK(std::fabs(b - expected[k]) <= 5e-12);
    }
}

TEST_CASE("random rate sequences agree with a fine-step integration") {
    std::mt19937 rng(424242);
    std::uniform_real_distribution<double> rate(0.1, 5.0);
    for (double t : {0.3, 1.7}) {
        for (int trial = 0; trial < 3; ++trial) {
            CAPTURE(t);
            CAPTURE(trial);
            std::vector<double> rates;
            for (int k = 0; k < 8; ++k) rates.push_back(rate(rng));
            auto ref = birth_reference(rates, t, 8);
            BirthWeightSeries series(t);
            for (int k = 0; k < 8; ++k) {
                double b = series.push_rate(rates[k]);
                CAPTURE(k);
                CHECK(std::fabs(b - (double)ref[k]) <= 1e-9);
            }
        }
    }
}

TEST_CASE("constant-rate jump counts collapse to the Poisson law") {
    const double r = 3.7, t = 2.0;  // mean 7.4
    BirthWeightSeries series(t);
    for (std::size_t k = 0; k <= 40; ++k) {
        double b = series.push_rate(r);
        long double exact = poisson_pmf(r * t, k);
        CAPTURE(k);
        CHECK(std::fabs(b - (double)exact) <= 1e-10);
    }
    // Batch interface, same law.
    std::vector<double> rates(30, r);
    JumpWeights jw = birth_weights(rates, t, 1e-6);
    REQUIRE(jw.left == 0);
    for (std::size_t k = 0; k < jw.weights.size(); ++k) {
        CHECK(std::fabs(jw.weights[k] - (double)poisson_pmf(r * t, k)) <= 1e-10);
    }
    CHECK(jw.truncation_error <= 1e-6);
}

TEST_CASE("batch form stops at the requested coverage") {
    JumpWeights jw = birth_weights({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}, 1.0, 0.5);
    // e^{-1} + 2(e^{-1} - e^{-2}) ~ 0.600 >= 0.5 after two entries.
    CHECK(jw.weights.size() == 2);
    CHECK(jw.truncation_error == doctest::Approx(1.0 - (jw.weights[0] + jw.weights[1]))
                                     .epsilon(1e-12));
    // Exhausting the sequence before coverage is an error.
    CHECK_THROWS_AS((void)birth_weights({1.0, 2.0}, 1.0, 1e-8),
                    InvalidArgumentError);
}

TEST_CASE("zero rate absorbs the remaining mass and ends the series") {
    BirthWeightSeries series(1.0);
    double b0 = series.push_rate(1.0);
    double b1 = series.push_rate(0.0);
    CHECK(b1 == doctest::Approx(1.0 - b0).epsilon(1e-14));
    CHECK(series.terminated());
    CHECK(series.total() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS((void)series.push_rate(1.0), InvalidArgumentError);
}

TEST_CASE("cumulative weight is monotone and bounded") {
    BirthWeightSeries series(4.0);
    double prev_total = 0.0;
    for (int k = 0; k < 60; ++k) {
        double b = series.push_rate(1.5);
        CHECK(b >= 0.0);
        CHECK(series.total() >= prev_total);
        CHECK(series.total() <= 1.0 + 1e-12);
        prev_total = series.total();
    }
    CHECK(prev_total >= 1.0 - 1e-9);  // mean 6: 60 levels cover nearly all
}

TEST_CASE("grid refinement keeps accuracy when a large rate arrives") {
    // Start with a small rate (coarse grid), then push rates two orders of
    // magnitude larger, forcing in-place refinement.
    BirthWeightSeries series(1.0);
    std::vector<double> rates = {0.05, 12.0, 9.0, 15.0};
    auto ref = birth_reference(rates, 1.0, 4);
    std::size_t cells_before = 0;
    for (std::size_t k = 0; k < rates.size(); ++k) {
        double b = series.push_rate(rates[k]);
        CAPTURE(k);
        CHECK(std::fabs(b - (double)ref[k]) <= 1e-9);
        if (k == 0) cells_before = series.grid_cells();
    }
    CHECK(series.grid_cells() > cells_before);
}
