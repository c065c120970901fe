#pragma once

#include <cstdint>
#include <vector>

#include "mpm/model.hpp"

namespace mpm {

// One point of a deterministic trajectory: time holds the model time for
// continuous-time analyses and the step index for discrete-time ones.
struct MeanFieldSample {
    double time = 0.0;
    std::vector<double> x;  // one concentration per variable, same order
};

struct MeanFieldResult {
    // Ascending; first entry is the initial state, last the horizon (or the
    // last finite point when the integration diverged).
    std::vector<MeanFieldSample> samples;
    bool diverged = false;            // a non-finite entry stopped the run
    bool guard_flip_warning = false;  // a guard flipped while its rate was
                                      // not vanishing: results are
                                      // approximate near that surface
    std::uint64_t clamp_count = 0;    // entries below -1e-9 clamped to 0
};

// Deterministic continuous-time analysis: classical RK4 on
// dx/dt = sum_j v_j * rate_j(x) over the real-valued state, where each
// guard contributes as an indicator factor (a command with a false guard
// or a non-positive rate contributes nothing). Samples are taken at the
// initial state, at every crossed multiple of dump_interval (nearest step
// boundary), and at t. dump_interval 0 keeps only the endpoints.
MeanFieldResult rre_mean_field(const Model& model, double t, double h,
                               double dump_interval = 0.0);

// Deterministic discrete-time analysis: the expected-change iteration
// x(i+1) = x(i) + sum_j p_j(x(i)) * v_j with the step probabilities p_j
// normalized exactly as in the stochastic step (no enabled command means an
// absorbing state). dump_interval counts steps; 0 keeps only the endpoints.
MeanFieldResult dtmc_mean_field(const Model& model, std::uint64_t k,
                                std::uint64_t dump_interval = 0);

}  // namespace mpm
