#include "mpm/jump_weights.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "mpm/errors.hpp"

namespace mpm {
namespace {

// Scaled Poisson terms below this fraction of the mode are ignored; their
// total is far below any usable epsilon.
constexpr double kTermFloor = 1e-35;

// phi_p(x) = sum_{i>=0} x^i / (i+p)!, evaluated by Taylor series. Callers
// keep |x| small (grid policy z_max <= 0.5) so a few terms suffice.
double phi_taylor(double x, int p) {
    double fact = 1.0;
    for (int i = 2; i <= p; ++i) fact *= i;
    double term = 1.0 / fact;
    double sum = term;
    for (int i = 1; i <= 16; ++i) {
        term *= x / static_cast<double>(p + i);
        sum += term;
        if (std::fabs(term) < 1e-20 * std::fabs(sum)) break;
    }
    return sum;
}

}  // namespace

JumpWeights poisson_weights(double lambda_t, double epsilon) {
    if (!std::isfinite(lambda_t) || lambda_t < 0.0) {
        throw InvalidArgumentError("Poisson parameter must be finite and non-negative");
    }
    if (!(epsilon > 0.0) || epsilon >= 1.0) {
        throw InvalidArgumentError("truncation budget must lie in (0, 1)");
    }
    JumpWeights out;
    if (lambda_t == 0.0) {
        out.weights.assign(1, 1.0);
        return out;
    }

    const auto mode = static_cast<std::size_t>(lambda_t);
    // Terms scaled so the mode has value 1; true magnitudes never matter
    // because the final division restores a distribution.
    std::vector<double> down;  // q_{mode-1}, q_{mode-2}, ...
    {
        double q = 1.0;
        for (std::size_t k = mode; k >= 1; --k) {
            q *= static_cast<double>(k) / lambda_t;
            down.push_back(q);
            if (q < kTermFloor) break;
        }
    }
    std::vector<double> up;  // q_{mode+1}, q_{mode+2}, ...
    {
        double q = 1.0;
        for (std::size_t k = mode;; ++k) {
            q *= lambda_t / static_cast<double>(k + 1);
            up.push_back(q);
            if (q < kTermFloor) break;
        }
    }
    const std::size_t kmin = mode - down.size();
    const std::size_t n = down.size() + 1 + up.size();

    std::vector<double> q(n);
    for (std::size_t i = 0; i < down.size(); ++i) q[down.size() - 1 - i] = down[i];
    q[down.size()] = 1.0;
    for (std::size_t i = 0; i < up.size(); ++i) q[down.size() + 1 + i] = up[i];

    // Total scaled mass, each tail summed smallest-first.
    double w_down = 0.0;
    for (std::size_t i = down.size(); i-- > 0;) w_down += down[i];
    double w_up = 0.0;
    for (std::size_t i = up.size(); i-- > 0;) w_up += up[i];
    const double total = w_down + 1.0 + w_up;

    const double budget = 0.5 * epsilon * total;
    std::size_t lo = 0;
    double dropped_left = 0.0;
    if (lambda_t > 25.0) {
        while (lo + kmin < mode && dropped_left + q[lo] <= budget) {
            dropped_left += q[lo];
            ++lo;
        }
    }
    std::size_t hi = n - 1;
    double dropped_right = 0.0;
    while (hi + kmin > mode && dropped_right + q[hi] <= budget) {
        dropped_right += q[hi];
        --hi;
    }

    out.left = kmin + lo;
    out.weights.resize(hi - lo + 1);
    for (std::size_t i = lo; i <= hi; ++i) out.weights[i - lo] = q[i] / total;
    out.truncation_error = (dropped_left + dropped_right) / total;
    return out;
}

JumpWeights birth_weights(const std::vector<double>& rates, double t, double epsilon) {
    if (rates.empty()) {
        throw InvalidArgumentError("birth rate sequence must be non-empty");
    }
    if (!(epsilon > 0.0) || epsilon >= 1.0) {
        throw InvalidArgumentError("truncation budget must lie in (0, 1)");
    }
    BirthWeightSeries series(t);
    JumpWeights out;
    for (double r : rates) {
        out.weights.push_back(series.push_rate(r));
        if (series.total() >= 1.0 - epsilon || series.terminated()) break;
    }
    if (series.total() < 1.0 - epsilon) {
        throw InvalidArgumentError(
            "birth rate sequence exhausted at cumulative weight " +
            std::to_string(series.total()) +
            " before reaching 1 - epsilon; supply more rates");
    }
    double err = 1.0 - series.total();
    out.truncation_error = err > 0.0 ? err : 0.0;
    return out;
}

BirthWeightSeries::BirthWeightSeries(double t) : BirthWeightSeries(t, Config{}) {}

BirthWeightSeries::BirthWeightSeries(double t, Config config)
    : t_(t), config_(config) {
    if (!std::isfinite(t) || t < 0.0) {
        throw InvalidArgumentError("birth series horizon must be finite and non-negative");
    }
    if (!(config_.z_max > 0.0) || config_.z_max > 0.5) {
        throw InvalidArgumentError("grid policy z_max must lie in (0, 0.5]");
    }
    if (config_.min_cells < 2 || config_.max_cells < config_.min_cells) {
        throw InvalidArgumentError("invalid birth series grid bounds");
    }
}

double BirthWeightSeries::push_rate(double rate) {
    if (terminated_) {
        throw InvalidArgumentError("push_rate called after an absorbing (zero) rate");
    }
    if (!std::isfinite(rate) || rate < 0.0) {
        throw InvalidArgumentError("birth rate must be finite and non-negative");
    }
    double beta;
    if (rate == 0.0) {
        // Absorbing level: collects everything that has not jumped past it.
        terminated_ = true;
        beta = 1.0 - sum_;
        if (beta < 0.0) beta = 0.0;
    } else if (t_ == 0.0) {
        beta = k_ == 0 ? 1.0 : 0.0;
    } else if (k_ == 0) {
        init_grid(rate);
        for (std::size_t j = 0; j <= cells_; ++j) {
            double v = std::exp(-rate * (h_ * static_cast<double>(j)));
            val_[j] = v;
            der_[j] = -rate * v;
        }
        val_[cells_] = std::exp(-rate * t_);
        der_[cells_] = -rate * val_[cells_];
        prev_rate_ = rate;
        beta = val_[cells_];
    } else {
        while (rate * h_ > config_.z_max) refine_grid();
        beta = integrate_level(rate);
        prev_rate_ = rate;
    }
    ++k_;
    sum_ += beta;
    return beta;
}

void BirthWeightSeries::init_grid(double rate) {
    double want = std::ceil(rate * t_ / config_.z_max);
    std::size_t cells = config_.min_cells;
    if (want > static_cast<double>(config_.min_cells)) {
        if (want > static_cast<double>(config_.max_cells)) {
            throw CapacityError(
                "birth-weight grid would need " + std::to_string(want) +
                " cells (cap " + std::to_string(config_.max_cells) +
                "); split the horizon or use a coarser policy");
        }
        cells = static_cast<std::size_t>(want);
    }
    cells_ = cells;
    h_ = t_ / static_cast<double>(cells_);
    val_.assign(cells_ + 1, 0.0);
    der_.assign(cells_ + 1, 0.0);
    nval_.assign(cells_ + 1, 0.0);
    nder_.assign(cells_ + 1, 0.0);
}

void BirthWeightSeries::refine_grid() {
    if (cells_ * 2 > config_.max_cells) {
        throw CapacityError(
            "birth-weight grid refinement would exceed the cap of " +
            std::to_string(config_.max_cells) +
            " cells; split the horizon or use a coarser policy");
    }
    std::size_t cells2 = cells_ * 2;
    std::vector<double> v2(cells2 + 1), d2(cells2 + 1);
    double h = h_;
    for (std::size_t j = 0; j < cells_; ++j) {
        double v0 = val_[j], v1 = val_[j + 1];
        double d0 = der_[j], d1 = der_[j + 1];
        v2[2 * j] = v0;
        d2[2 * j] = d0;
        // Cubic Hermite midpoint value and slope.
        v2[2 * j + 1] = 0.5 * (v0 + v1) + 0.125 * h * (d0 - d1);
        d2[2 * j + 1] = 1.5 * (v1 - v0) / h - 0.25 * (d0 + d1);
    }
    v2[cells2] = val_[cells_];
    d2[cells2] = der_[cells_];
    val_ = std::move(v2);
    der_ = std::move(d2);
    nval_.assign(cells2 + 1, 0.0);
    nder_.assign(cells2 + 1, 0.0);
    cells_ = cells2;
    h_ = t_ / static_cast<double>(cells2);
}

double BirthWeightSeries::integrate_level(double rate) {
    const double h = h_;
    const double z = rate * h;
    const double decay = std::exp(-z);
    // Exact cell step: beta(tau+h) = e^{-z} beta(tau)
    //   + sum_p c_p p! h^{p+1} phi_{p+1}(-z)
    // for the source written as c0 + c1 u + c2 u^2 + c3 u^3 on the cell.
    const double i1 = h * phi_taylor(-z, 1);
    const double i2 = h * h * phi_taylor(-z, 2);
    const double i3 = 2.0 * h * h * h * phi_taylor(-z, 3);
    const double i4 = 6.0 * h * h * h * h * phi_taylor(-z, 4);
    const double b = prev_rate_;
    const double inv_h2 = 1.0 / (h * h);
    const double inv_h3 = inv_h2 / h;

    nval_[0] = 0.0;
    nder_[0] = b * val_[0];
    double cur = 0.0;
    for (std::size_t j = 0; j < cells_; ++j) {
        double s0 = b * val_[j], s1 = b * val_[j + 1];
        double d0 = b * der_[j], d1 = b * der_[j + 1];
        double c2 = (3.0 * (s1 - s0) - h * (2.0 * d0 + d1)) * inv_h2;
        double c3 = (2.0 * (s0 - s1) + h * (d0 + d1)) * inv_h3;
        cur = decay * cur + s0 * i1 + d0 * i2 + c2 * i3 + c3 * i4;
        nval_[j + 1] = cur;
        nder_[j + 1] = s1 - rate * cur;
    }
    std::swap(val_, nval_);
    std::swap(der_, nder_);
    double beta = val_[cells_];
    return beta < 0.0 ? 0.0 : beta;
}

}  // namespace mpm
