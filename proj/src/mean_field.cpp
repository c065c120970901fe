#include "mpm/mean_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "mpm/errors.hpp"

namespace mpm {

namespace {

// Indicator-weighted rate on the real-valued state: 0 when the guard is
// false, and never negative (rates below 0 have no mass-action meaning and
// would corrupt the drift).
double real_rate(const GuardedCommand& cmd, std::span<const double> x) {
    if (!eval_bool(*cmd.guard, x)) return 0.0;
    double r = eval_number(*cmd.rate, x);
    return r > 0.0 ? r : 0.0;
}

struct GuardWatch {
    std::vector<char> truth;
    std::vector<double> prev;

    explicit GuardWatch(const Model& model, const std::vector<double>& x)
        : prev(x) {
        truth.reserve(model.commands.size());
        for (const GuardedCommand& cmd : model.commands) {
            truth.push_back(eval_bool(*cmd.guard, x) ? 1 : 0);
        }
    }

    // True when some guard changed truth value while its rate expression is
    // not vanishing at the switching surface — a genuine discontinuity in the
    // drift, as opposed to a mass-action rate sliding through 0 together with
    // its guard.  The surface is located by bisecting the segment between the
    // previous and current points on the guard's truth value.
    bool flipped_hard(const Model& model, const std::vector<double>& x) {
        bool hard = false;
        for (std::size_t j = 0; j < model.commands.size(); ++j) {
            const char now = eval_bool(*model.commands[j].guard, x) ? 1 : 0;
            if (now != truth[j]) {
                if (rate_at_surface_nonzero(model.commands[j], x)) hard = true;
                truth[j] = now;
            }
        }
        prev = x;
        return hard;
    }

 private:
    bool rate_at_surface_nonzero(const GuardedCommand& cmd,
                                 const std::vector<double>& x) const {
        const bool side = eval_bool(*cmd.guard, prev);
        std::vector<double> lo = prev;
        std::vector<double> hi = x;
        std::vector<double> mid(x.size());
        for (int it = 0; it < 60; ++it) {
            for (std::size_t v = 0; v < mid.size(); ++v) {
                mid[v] = 0.5 * (lo[v] + hi[v]);
            }
            if (eval_bool(*cmd.guard, mid) == side) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        const double r = eval_number(*cmd.rate, mid);
        const double scale =
            std::max({1.0, std::abs(eval_number(*cmd.rate, prev)),
                      std::abs(eval_number(*cmd.rate, x))});
        return !std::isfinite(r) || std::abs(r) > 1e-9 * scale;
    }
};

std::vector<double> initial_concentrations(const Model& model) {
    std::vector<double> x;
    x.reserve(model.initial_state.size());
    for (std::int64_t v : model.initial_state) x.push_back(static_cast<double>(v));
    return x;
}

std::vector<std::vector<std::int64_t>> change_vectors(const Model& model) {
    std::vector<std::vector<std::int64_t>> cv;
    cv.reserve(model.commands.size());
    for (const GuardedCommand& cmd : model.commands) {
        cv.push_back(cmd.change_vector(model.variables.size()));
    }
    return cv;
}

bool all_finite(const std::vector<double>& x) {
    for (double v : x) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void clamp_negatives(std::vector<double>& x, std::uint64_t& clamp_count) {
    for (double& v : x) {
        if (v < 0.0) {
            if (v < -1e-9) ++clamp_count;
            v = 0.0;
        }
    }
}

void push_sample(MeanFieldResult& out, double time, const std::vector<double>& x) {
    if (!out.samples.empty() && out.samples.back().time == time) return;
    out.samples.push_back(MeanFieldSample{time, x});
}

}  // namespace

MeanFieldResult rre_mean_field(const Model& model, double t, double h,
                               double dump_interval) {
    if (!std::isfinite(t) || t < 0.0) {
        throw InvalidArgumentError("time horizon must be finite and non-negative");
    }
    if (!std::isfinite(h) || h <= 0.0) {
        throw InvalidArgumentError("step size must be finite and positive");
    }
    if (!std::isfinite(dump_interval) || dump_interval < 0.0) {
        throw InvalidArgumentError("dump interval must be finite and non-negative");
    }
    const std::size_t n = model.variables.size();
    const auto cv = change_vectors(model);

    MeanFieldResult out;
    std::vector<double> x = initial_concentrations(model);
    push_sample(out, 0.0, x);
    if (t == 0.0) return out;

    auto drift = [&](const std::vector<double>& y, std::vector<double>& d) {
        std::fill(d.begin(), d.end(), 0.0);
        for (std::size_t j = 0; j < model.commands.size(); ++j) {
            double r = real_rate(model.commands[j], y);
            if (r == 0.0) continue;
            for (std::size_t v = 0; v < n; ++v) {
                d[v] += r * static_cast<double>(cv[j][v]);
            }
        }
    };

    GuardWatch watch(model, x);
    const std::uint64_t n_steps =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(t / h - 1e-9)));
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), next(n);
    double next_dump = dump_interval;
    double t_prev = 0.0;
    for (std::uint64_t s = 0; s < n_steps; ++s) {
        const bool last = (s + 1 == n_steps);
        const double hs = last ? t - h * static_cast<double>(n_steps - 1) : h;
        drift(x, k1);
        for (std::size_t v = 0; v < n; ++v) tmp[v] = x[v] + 0.5 * hs * k1[v];
        drift(tmp, k2);
        for (std::size_t v = 0; v < n; ++v) tmp[v] = x[v] + 0.5 * hs * k2[v];
        drift(tmp, k3);
        for (std::size_t v = 0; v < n; ++v) tmp[v] = x[v] + hs * k3[v];
        drift(tmp, k4);
        for (std::size_t v = 0; v < n; ++v) {
            next[v] = x[v] + hs / 6.0 * (k1[v] + 2.0 * k2[v] + 2.0 * k3[v] + k4[v]);
        }
        if (!all_finite(next)) {
            push_sample(out, t_prev, x);
            out.diverged = true;
            return out;
        }
        clamp_negatives(next, out.clamp_count);
        x = next;
        const double t_now = last ? t : h * static_cast<double>(s + 1);
        if (watch.flipped_hard(model, x)) out.guard_flip_warning = true;
        if (dump_interval > 0.0 && !last &&
            t_now >= next_dump - 1e-9 * dump_interval) {
            push_sample(out, t_now, x);
            while (next_dump <= t_now + 1e-9 * dump_interval) {
                next_dump += dump_interval;
            }
        }
        t_prev = t_now;
    }
    push_sample(out, t, x);
    return out;
}

MeanFieldResult dtmc_mean_field(const Model& model, std::uint64_t k,
                                std::uint64_t dump_interval) {
    const std::size_t n = model.variables.size();
    const auto cv = change_vectors(model);

    MeanFieldResult out;
    std::vector<double> x = initial_concentrations(model);
    push_sample(out, 0.0, x);
    if (k == 0) return out;

    GuardWatch watch(model, x);
    std::vector<double> rates(model.commands.size());
    std::vector<double> prev(n);
    for (std::uint64_t i = 0; i < k; ++i) {
        prev = x;
        double total = 0.0;
        for (std::size_t j = 0; j < model.commands.size(); ++j) {
            rates[j] = real_rate(model.commands[j], x);
            total += rates[j];
        }
        if (total > 0.0) {
            for (std::size_t j = 0; j < model.commands.size(); ++j) {
                if (rates[j] == 0.0) continue;
                const double p = rates[j] / total;
                for (std::size_t v = 0; v < n; ++v) {
                    x[v] += p * static_cast<double>(cv[j][v]);
                }
            }
            clamp_negatives(x, out.clamp_count);
        }
        if (!all_finite(x)) {
            push_sample(out, static_cast<double>(i), prev);
            out.diverged = true;
            return out;
        }
        if (watch.flipped_hard(model, x)) out.guard_flip_warning = true;
        const double step = static_cast<double>(i + 1);
        if (dump_interval > 0 && (i + 1) % dump_interval == 0) {
            push_sample(out, step, x);
        }
    }
    push_sample(out, static_cast<double>(k), x);
    return out;
}

}  // namespace mpm
