#pragma once

// Shared helpers for the test suite: a generator of random bounded
// single-variable chains whose dense transition matrices are computed
// independently from the generator's own metadata (never through the code
// under test), dense reference linear algebra in long double (matrix powers
// and a scaling-and-squaring matrix exponential), and small distribution
// utilities.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "mpm/discrete_engine.hpp"
#include "mpm/model.hpp"

namespace testsupport {

using Vec = std::vector<long double>;
using Mat = std::vector<Vec>;  // row-major; M[i][j] couples state i to j

inline std::string fmt(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

// One command of a bounded chain: source state, signed displacement, rate.
struct ChainCmd {
    int from;
    int delta;
    double rate;
};

// A finite chain on {0, ..., L-1}. Every command is pinned to one source
// state by an equality guard, so the dense matrices below follow directly
// from the metadata.
struct ChainSpec {
    int L = 0;
    int x0 = 0;
    std::vector<ChainCmd> cmds;

    std::string model_text(bool ctmc) const {
        std::string s;
        s += "var x = " + std::to_string(x0) + ";\n";
        s += ctmc ? "semantics ctmc;\n" : "semantics dtmc;\n";
        for (const ChainCmd& c : cmds) {
            s += "x = " + std::to_string(c.from) + " |- " + fmt(c.rate) +
                 " -> x := x " + (c.delta >= 0 ? "+ " : "- ") +
                 std::to_string(std::abs(c.delta)) + ";\n";
        }
        return s;
    }
};

// Random chain with up to three commands per state; some states are left
// absorbing on purpose. Displacements always land inside {0, ..., L-1}.
inline ChainSpec random_chain(std::mt19937& rng, int L) {
    ChainSpec spec;
    spec.L = L;
    spec.x0 = std::uniform_int_distribution<int>(0, L - 1)(rng);
    std::uniform_int_distribution<int> ncmd(0, 3);
    std::uniform_real_distribution<double> rate(0.05, 4.0);
    for (int i = 0; i < L; ++i) {
        int n = ncmd(rng);
        for (int c = 0; c < n; ++c) {
            int j = std::uniform_int_distribution<int>(0, L - 2)(rng);
            if (j >= i) ++j;  // uniform over targets != i
            spec.cmds.push_back(ChainCmd{i, j - i, rate(rng)});
        }
    }
    return spec;
}

// Single-variable cycle where every state has the same exit rate r: states
// 0..L-2 step up, state L-1 wraps to 0.
inline ChainSpec uniform_cycle(int L, double r, int x0 = 0) {
    ChainSpec spec;
    spec.L = L;
    spec.x0 = x0;
    for (int i = 0; i + 1 < L; ++i) spec.cmds.push_back(ChainCmd{i, 1, r});
    spec.cmds.push_back(ChainCmd{L - 1, -(L - 1), r});
    return spec;
}

// Embedded jump matrix with rates normalized per source row; states without
// a command hold their mass (self-loop 1).
inline Mat dense_P(const ChainSpec& spec) {
    Mat P(spec.L, Vec(spec.L, 0.0L));
    std::vector<double> exit(spec.L, 0.0);
    for (const ChainCmd& c : spec.cmds) exit[c.from] += c.rate;
    for (int i = 0; i < spec.L; ++i) {
        if (exit[i] == 0.0) P[i][i] = 1.0L;
    }
    for (const ChainCmd& c : spec.cmds) {
        P[c.from][c.from + c.delta] +=
            static_cast<long double>(c.rate) / exit[c.from];
    }
    return P;
}

// Generator matrix: off-diagonal rates, diagonal minus the exit rate.
inline Mat dense_Q(const ChainSpec& spec) {
    Mat Q(spec.L, Vec(spec.L, 0.0L));
    for (const ChainCmd& c : spec.cmds) {
        Q[c.from][c.from + c.delta] += static_cast<long double>(c.rate);
        Q[c.from][c.from] -= static_cast<long double>(c.rate);
    }
    return Q;
}

inline double max_exit(const ChainSpec& spec) {
    std::vector<double> exit(spec.L, 0.0);
    for (const ChainCmd& c : spec.cmds) exit[c.from] += c.rate;
    double m = 0.0;
    for (double e : exit) m = std::max(m, e);
    return m;
}

inline Vec vec_mat(const Vec& v, const Mat& M) {
    const std::size_t n = v.size();
    Vec out(n, 0.0L);
    for (std::size_t i = 0; i < n; ++i) {
        if (v[i] == 0.0L) continue;
        for (std::size_t j = 0; j < n; ++j) out[j] += v[i] * M[i][j];
    }
    return out;
}

inline Mat mat_mat(const Mat& A, const Mat& B) {
    const std::size_t n = A.size();
    Mat out(n, Vec(n, 0.0L));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            if (A[i][k] == 0.0L) continue;
            const long double a = A[i][k];
            for (std::size_t j = 0; j < n; ++j) out[i][j] += a * B[k][j];
        }
    }
    return out;
}

// Dirac-at-x0 row vector pushed through k dense matrix powers.
inline Vec dense_power(const ChainSpec& spec, std::uint64_t k) {
    Mat P = dense_P(spec);
    Vec v(spec.L, 0.0L);
    v[spec.x0] = 1.0L;
    for (std::uint64_t s = 0; s < k; ++s) v = vec_mat(v, P);
    return v;
}

// Row vector e_{x0} exp(Q t) by scaling and squaring with a long double
// Taylor series.
inline Vec dense_expm(const ChainSpec& spec, double t) {
    const std::size_t n = static_cast<std::size_t>(spec.L);
    Mat Q = dense_Q(spec);
    long double norm = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        long double row = 0.0L;
        for (std::size_t j = 0; j < n; ++j) row += std::fabs(Q[i][j] * (long double)t);
        norm = std::max(norm, row);
    }
    int s = 0;
    while (norm > 0.5L) {
        norm /= 2.0L;
        ++s;
    }
    const long double scale = std::ldexp((long double)t, -s);
    Mat A(n, Vec(n, 0.0L));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) A[i][j] = Q[i][j] * scale;
    }
    // exp(A) = sum A^k / k!
    Mat E(n, Vec(n, 0.0L));
    Mat term(n, Vec(n, 0.0L));
    for (std::size_t i = 0; i < n; ++i) {
        E[i][i] = 1.0L;
        term[i][i] = 1.0L;
    }
    for (int k = 1; k <= 60; ++k) {
        term = mat_mat(term, A);
        long double tn = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                term[i][j] /= (long double)k;
                E[i][j] += term[i][j];
                tn = std::max(tn, std::fabs(term[i][j]));
            }
        }
        if (tn < 1e-30L) break;
    }
    for (int q = 0; q < s; ++q) E = mat_mat(E, E);
    Vec v(n, 0.0L);
    v[spec.x0] = 1.0L;
    return vec_mat(v, E);
}

// Engine distribution of a single-variable chain as a dense vector.
inline Vec to_dense(const std::vector<std::pair<mpm::State, double>>& dist,
                    int L) {
    Vec v(L, 0.0L);
    for (const auto& [state, p] : dist) {
        if (state[0] >= 0 && state[0] < L) v[static_cast<int>(state[0])] += p;
    }
    return v;
}

inline long double tv_distance(const Vec& a, const Vec& b) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return s / 2.0L;
}

inline long double max_abs_diff(const Vec& a, const Vec& b) {
    long double m = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::fabs(a[i] - b[i]));
    }
    return m;
}

inline double dist_sum(const std::vector<std::pair<mpm::State, double>>& d) {
    double s = 0.0;
    for (const auto& [st, p] : d) s += p;
    return s;
}

}  // namespace testsupport
