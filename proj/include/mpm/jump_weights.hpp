#pragma once

#include <cstddef>
#include <vector>

namespace mpm {

// Truncated jump-count probabilities w[left..left+weights.size()-1] of the
// process a uniformized analysis is subordinated to, with the omitted tail
// mass reported in truncation_error. Sum of weights is 1 - truncation_error
// up to roundoff (never above 1 + 1e-12).
struct JumpWeights {
    std::size_t left = 0;
    std::vector<double> weights;
    double truncation_error = 0.0;
};

// Poisson(lambda_t) window: weights are the pmf normalized through the full
// scaled sum of the mode-anchored recurrence, so no overflow or underflow
// occurs even for lambda_t in the thousands. The error budget is split
// evenly between the two tails; left truncation only engages for
// lambda_t > 25.
JumpWeights poisson_weights(double lambda_t, double epsilon);

// Batch form over a fixed rate sequence: weights[k] = probability that the
// birth process with holding rates rates[0..] has taken exactly k jumps by
// time t. Stops early once the cumulative weight reaches 1 - epsilon; a zero
// rate makes its level absorbing (collecting all remaining mass). Throws if
// the sequence is exhausted first.
JumpWeights birth_weights(const std::vector<double>& rates, double t, double epsilon);

// Jump-count distribution of a pure birth process whose k-th holding rate is
// supplied incrementally: the k-th push_rate call returns
// beta_k(t) = P[exactly k jumps in [0,t]], which depends only on rates
// 0..k. Weights are produced by integrating the chain of coupled linear
// ODEs  beta_k' = rate_{k-1} beta_{k-1} - rate_k beta_k  on a fixed tau-grid
// over [0,t] with an exact exponential step per cell; the inflow from level
// k-1 is interpolated cubic-Hermite from its stored value and derivative
// samples. The grid keeps rate*h <= z_max so the phi-function Taylor series
// converges in a few terms; pushing a rate above that policy refines the
// grid in place (halving h and resampling the previous level).
//
// A zero rate makes level k absorbing: the call returns the remaining mass
// 1 - sum of earlier weights and terminates the series. Rates must be
// finite and non-negative; pushing after termination is an error.
class BirthWeightSeries {
public:
    struct Config {
        double z_max = 5e-3;             // max rate*h per grid cell
        std::size_t min_cells = 16;
        std::size_t max_cells = std::size_t{1} << 21;
    };

    explicit BirthWeightSeries(double t);
    BirthWeightSeries(double t, Config config);

    // beta_k(t) for the k-th call (k counted from 0).
    double push_rate(double rate);

    bool terminated() const { return terminated_; }
    std::size_t count() const { return k_; }
    double total() const { return sum_; }
    std::size_t grid_cells() const { return cells_; }
    double time() const { return t_; }

private:
    void init_grid(double rate);
    void refine_grid();
    double integrate_level(double rate);

    double t_;
    Config config_;
    std::vector<double> val_, der_;    // level k-1 on the grid
    std::vector<double> nval_, nder_;  // level k under construction
    double prev_rate_ = 0.0;
    std::size_t cells_ = 0;
    double h_ = 0.0;
    std::size_t k_ = 0;
    double sum_ = 0.0;
    bool terminated_ = false;
};

}  // namespace mpm
