#pragma once

#include <cstdint>

#include "mpm/discrete_engine.hpp"
#include "mpm/model.hpp"

namespace mpm {

struct UniformizationConfig {
    double epsilon = 1e-8;       // jump-series truncation budget (whole run)
    double delta = 1e-15;        // significance threshold
    double lambda_user = 0.0;    // uniformization rate; standard method only
    double t = 0.0;              // horizon
    double dump_interval = 0.0;  // 0 = no intermediate snapshots
    StoreConfig store;
    std::uint64_t max_jumps = 50'000'000;  // defensive runaway guard
};

// p(t) = sum_k w_k (initial-Dirac P^k) with Poisson(lambda t) jump weights
// and the DTMC uniformized at cfg.lambda_user (required; every explored
// state must have exit rate <= lambda or RateExceededError is thrown).
// Dump times split the horizon into segments, each with a fresh jump series
// and an even share of epsilon.
TransientResult standard_uniformization(const Model& model,
                                        const UniformizationConfig& cfg,
                                        const DumpFn& dump = {});

// Adaptive variant: no user rate. Each step k recomputes
// lambda_k = 1.0001 * max exit rate over the significant set, feeds it to
// the incremental birth-weight series, and accumulates weight_k * p(k) until
// the cumulative weight reaches 1 - epsilon. A state discovered mid-step
// whose exit exceeds lambda_k forces a redo of that step with the larger
// rate (possible because the rate enters the series only after the step
// propagates cleanly).
TransientResult fast_adaptive_uniformization(const Model& model,
                                             const UniformizationConfig& cfg,
                                             const DumpFn& dump = {});

// Classical RK4 on dp/dt = p Q over the truncated set. Before each step the
// successors of active states are materialized so the derivative sees one
// ring of fringe states; outflow into unmaterialized states surfaces as the
// reported mass defect. States below delta are dropped after each step.
// Aborts with DivergenceError on probabilities below -1e-9 or a mass defect
// above 1e-3 (step size too large).
TransientResult rk4_cme(const Model& model, double t, double h, double delta,
                        const DumpFn& dump = {}, double dump_interval = 0.0,
                        StoreConfig store_cfg = {});

}  // namespace mpm
