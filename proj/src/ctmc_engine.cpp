#include "mpm/ctmc_engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mpm/errors.hpp"
#include "mpm/jump_weights.hpp"

namespace mpm {

namespace {

void validate_common(const UniformizationConfig& cfg) {
    if (!std::isfinite(cfg.t) || cfg.t < 0.0) {
        throw InvalidArgumentError("time horizon must be finite and non-negative");
    }
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) {
        throw InvalidArgumentError("epsilon must lie in (0, 1)");
    }
    if (!std::isfinite(cfg.delta) || cfg.delta < 0.0) {
        throw InvalidArgumentError("delta must be finite and non-negative");
    }
    if (!std::isfinite(cfg.dump_interval) || cfg.dump_interval < 0.0) {
        throw InvalidArgumentError("dump interval must be finite and non-negative");
    }
}

StateStore init_store(const Model& model, const StoreConfig& store_cfg) {
    StateStore store(model.variables.size(), store_cfg);
    auto r = store.find_or_insert(model.initial_state);
    store.node(r.index).p = 1.0;
    store.record_peak();
    return store;
}

// Horizon split at dump times: d, 2d, ... strictly inside (0, t), then t.
std::vector<double> segment_ends(double t, double dump_interval) {
    std::vector<double> ends;
    if (dump_interval > 0.0) {
        for (std::uint64_t i = 1;; ++i) {
            double x = static_cast<double>(i) * dump_interval;
            if (x >= t - 1e-9 * dump_interval) break;
            ends.push_back(x);
        }
    }
    ends.push_back(t);
    return ends;
}

// acc[state] += w * p for every active state carrying mass.
void accumulate_weighted(StateStore& acc, StateStore& store, double w) {
    if (w <= 0.0) return;
    for (std::uint32_t i = 0; i < store.num_nodes(); ++i) {
        const Node& n = store.node(i);
        if (!n.active || n.p <= 0.0) continue;
        auto r = acc.find_or_insert(n.state);
        acc.node(r.index).p += w * n.p;
    }
}

// Replaces the store's distribution with the accumulated one, then applies
// the significance threshold and compaction. States that stayed in the
// store but received no accumulated mass end at p = 0 (and are dropped by
// any positive threshold).
void rebuild_from_accumulator(StateStore& store, StateStore& acc, double delta) {
    for (std::uint32_t i = 0; i < store.num_nodes(); ++i) {
        Node& n = store.node(i);
        if (n.active) n.p = 0.0;
    }
    for (std::uint32_t j = 0; j < acc.num_nodes(); ++j) {
        const Node& a = acc.node(j);
        if (!a.active || a.p == 0.0) continue;
        auto r = store.find_or_insert(a.state);
        store.node(r.index).p = a.p;
    }
    if (delta > 0.0) {
        std::vector<std::uint32_t> doomed;
        for (std::uint32_t i = 0; i < store.num_nodes(); ++i) {
            const Node& n = store.node(i);
            if (n.active && n.p < delta) doomed.push_back(i);
        }
        for (std::uint32_t i : doomed) store.deactivate(i);
    }
    store.maybe_compress();
    store.record_peak();
}

[[noreturn]] void jump_budget_exhausted(std::uint64_t budget) {
    throw DivergenceError("transient analysis exceeded the jump budget of " +
                          std::to_string(budget) +
                          " steps; raise max_jumps or shorten the horizon");
}

}  // namespace

TransientResult standard_uniformization(const Model& model,
                                        const UniformizationConfig& cfg,
                                        const DumpFn& dump) {
    validate_common(cfg);
    if (!std::isfinite(cfg.lambda_user) || cfg.lambda_user <= 0.0) {
        throw InvalidArgumentError(
            "standard uniformization requires a positive uniformization rate");
    }
    StateStore store = init_store(model, cfg.store);
    if (cfg.t == 0.0) {
        TransientResult out = detail::snapshot(store, 0.0);
        if (dump) dump(out);
        return out;
    }
    const std::vector<double> ends = segment_ends(cfg.t, cfg.dump_interval);
    const double eps_seg = cfg.epsilon / static_cast<double>(ends.size());
    double total_trunc = 0.0;
    std::uint64_t jumps = 0;
    double prev = 0.0;
    for (double end : ends) {
        const double tau = end - prev;
        JumpWeights jw = poisson_weights(cfg.lambda_user * tau, eps_seg);
        total_trunc += jw.truncation_error;
        StateStore acc(model.variables.size(), cfg.store);
        const std::size_t last = jw.left + jw.weights.size() - 1;
        for (std::size_t k = 0;; ++k) {
            if (k >= jw.left) accumulate_weighted(acc, store, jw.weights[k - jw.left]);
            if (k == last) break;
            detail::propagate_into_shadow(store, model, cfg.lambda_user);
            detail::commit_step(store, cfg.delta);
            if (++jumps > cfg.max_jumps) jump_budget_exhausted(cfg.max_jumps);
        }
        rebuild_from_accumulator(store, acc, cfg.delta);
        prev = end;
        if (dump) {
            TransientResult r = detail::snapshot(store, total_trunc);
            r.time = end;
            r.steps = jumps;
            dump(r);
        }
    }
    TransientResult out = detail::snapshot(store, total_trunc);
    out.time = cfg.t;
    out.steps = jumps;
    return out;
}

TransientResult fast_adaptive_uniformization(const Model& model,
                                             const UniformizationConfig& cfg,
                                             const DumpFn& dump) {
    validate_common(cfg);
    StateStore store = init_store(model, cfg.store);
    if (cfg.t == 0.0) {
        TransientResult out = detail::snapshot(store, 0.0);
        if (dump) dump(out);
        return out;
    }
    const std::vector<double> ends = segment_ends(cfg.t, cfg.dump_interval);
    const double eps_seg = cfg.epsilon / static_cast<double>(ends.size());
    double total_trunc = 0.0;
    std::uint64_t jumps = 0;
    double prev = 0.0;
    for (double end : ends) {
        const double tau = end - prev;
        BirthWeightSeries series(tau);
        StateStore acc(model.variables.size(), cfg.store);
        for (;;) {
            // Adaptive rate: the largest exit over states carrying mass.
            // Building links here also materializes the one-ring of
            // successors the coming step can reach.
            double max_exit = 0.0;
            {
                const std::vector<std::uint32_t> actives = store.active_indices();
                for (std::uint32_t i : actives) {
                    if (store.node(i).p <= 0.0) continue;
                    detail::ensure_links(store, model, i);
                    max_exit = std::max(max_exit, store.node(i).exit);
                }
            }
            if (max_exit <= 0.0) {
                // All remaining mass sits in absorbing states: the jump
                // count stops here, so the rest of the series weight
                // belongs to the current distribution.
                double w = series.push_rate(0.0);
                accumulate_weighted(acc, store, w);
                break;
            }
            double lambda_k = max_exit * 1.0001;
            for (;;) {
                try {
                    detail::propagate_into_shadow(store, model, lambda_k);
                    break;
                } catch (const RateExceededError& e) {
                    // Defensive only: the scan above already bounds every
                    // source exit. Redoing the step is sound because the
                    // rate enters the weight series only after the step
                    // propagates cleanly.
                    detail::clear_shadows(store);
                    lambda_k = e.exit_rate() * 1.0001;
                }
            }
            double w = series.push_rate(lambda_k);
            accumulate_weighted(acc, store, w);
            if (series.total() >= 1.0 - eps_seg) {
                detail::clear_shadows(store);
                break;
            }
            detail::commit_step(store, cfg.delta);
            if (++jumps > cfg.max_jumps) jump_budget_exhausted(cfg.max_jumps);
        }
        total_trunc += std::max(0.0, 1.0 - series.total());
        rebuild_from_accumulator(store, acc, cfg.delta);
        prev = end;
        if (dump) {
            TransientResult r = detail::snapshot(store, total_trunc);
            r.time = end;
            r.steps = jumps;
            dump(r);
        }
    }
    TransientResult out = detail::snapshot(store, total_trunc);
    out.time = cfg.t;
    out.steps = jumps;
    return out;
}

namespace {

// Writes the generator action d/dt of the distribution held in the shadow
// buffers into aux (which must be zero for every active node on entry).
// Nodes without built links are fringe: their inflow is captured through
// their predecessors' links, and their outflow leaves the materialized set
// entirely, surfacing as the mass defect.
void cme_derivative(StateStore& store, const Model& model) {
    // num_nodes() can grow while stale links re-resolve; appended nodes
    // start with shadow 0 and are skipped.
    for (std::uint32_t i = 0; i < store.num_nodes(); ++i) {
        {
            const Node& n = store.node(i);
            if (!n.active || n.shadow == 0.0) continue;
        }
        const double u = store.node(i).shadow;
        if (store.node(i).links_built) {
            const std::size_t nlinks = store.node(i).links.size();
            for (std::size_t j = 0; j < nlinks; ++j) {
                std::uint32_t tgt =
                    detail::link_target(store, model, i, store.node(i).links[j]);
                double rate = store.node(i).links[j].rate;
                store.node(tgt).aux += u * rate;
            }
            Node& n = store.node(i);
            n.aux -= u * n.exit;
        } else {
            // Fringe node: its successors are not materialized, but flow into
            // states that already exist must still be represented — otherwise
            // each step loses mass at second order in h and the integrator
            // degrades to second-order accuracy.  Only flow toward states
            // outside the materialized set is genuine truncation leak.
            const State src = store.node(i).state;
            for (std::size_t j = 0; j < model.commands.size(); ++j) {
                const GuardedCommand& cmd = model.commands[j];
                if (!enabled(model, cmd, src)) continue;
                const double r = eval_rate(model, cmd, src);
                if (r == 0.0) continue;
                const std::uint32_t tgt = store.find(successor(src, cmd));
                if (tgt != StateStore::npos && store.node(tgt).active) {
                    store.node(tgt).aux += u * r;
                }
                store.node(i).aux -= u * r;
            }
        }
    }
}

}  // namespace

TransientResult rk4_cme(const Model& model, double t, double h, double delta,
                        const DumpFn& dump, double dump_interval,
                        StoreConfig store_cfg) {
    if (!std::isfinite(t) || t < 0.0) {
        throw InvalidArgumentError("time horizon must be finite and non-negative");
    }
    if (!std::isfinite(h) || h <= 0.0) {
        throw InvalidArgumentError("step size must be finite and positive");
    }
    if (!std::isfinite(delta) || delta < 0.0) {
        throw InvalidArgumentError("delta must be finite and non-negative");
    }
    if (!std::isfinite(dump_interval) || dump_interval < 0.0) {
        throw InvalidArgumentError("dump interval must be finite and non-negative");
    }
    StateStore store = init_store(model, store_cfg);
    if (t == 0.0) {
        TransientResult out = detail::snapshot(store, 0.0);
        if (dump) dump(out);
        return out;
    }
    const std::uint64_t n_steps =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(t / h - 1e-9)));
    double defect = 0.0;
    double next_dump = dump_interval;
    double t_now = 0.0;
    for (std::uint64_t s = 0; s < n_steps; ++s) {
        const bool last = (s + 1 == n_steps);
        const double hs =
            last ? t - h * static_cast<double>(n_steps - 1) : h;
        // One ring of successors around the current active set, so the
        // derivative sees where mass flows next.
        {
            const std::vector<std::uint32_t> actives = store.active_indices();
            for (std::uint32_t i : actives) detail::ensure_links(store, model, i);
        }
        for (std::uint32_t i = 0; i < store.num_nodes(); ++i) {
            Node& n = store.node(i);
            if (!n.active) continue;
            n.aux2 = 0.0;
            n.shadow = n.p;
            n.aux = 0.0;
        }
        cme_derivative(store, model);  // k1
        for (std::uint32_t i = 0; i < store.num_nodes(); ++i) {
            Node& n = store.node(i);
            if (!n.active) continue;
            n.aux2 += n.aux;
            n.shadow = n.p + 0.5 * hs * n.aux;
            n.aux = 0.0;
        }
        cme_derivative(store, model);  // k2
        for (std::uint32_t i = 0; i < store.num_nodes(); ++i) {
            Node& n = store.node(i);
            if (!n.active) continue;
            n.aux2 += 2.0 * n.aux;
            n.shadow = n.p + 0.5 * hs * n.aux;
            n.aux = 0.0;
        }
        cme_derivative(store, model);  // k3
        for (std::uint32_t i = 0; i < store.num_nodes(); ++i) {
            Node& n = store.node(i);
            if (!n.active) continue;
            n.aux2 += 2.0 * n.aux;
            n.shadow = n.p + hs * n.aux;
            n.aux = 0.0;
        }
        cme_derivative(store, model);  // k4
        for (std::uint32_t i = 0; i < store.num_nodes(); ++i) {
            Node& n = store.node(i);
            if (!n.active) continue;
            n.aux2 += n.aux;
            double next = n.p + hs / 6.0 * n.aux2;
            if (next < 0.0) {
                if (next < -1e-9) {
                    throw DivergenceError(
                        "negative probability " + std::to_string(next) +
                        " at state " + state_to_string(n.state) +
                        "; reduce the step size");
                }
                next = 0.0;
            }
            n.p = next;
            n.shadow = 0.0;
            n.aux = 0.0;
        }
        if (delta > 0.0) {
            std::vector<std::uint32_t> doomed;
            for (std::uint32_t i = 0; i < store.num_nodes(); ++i) {
                const Node& n = store.node(i);
                if (n.active && n.p < delta) doomed.push_back(i);
            }
            for (std::uint32_t i : doomed) store.deactivate(i);
        }
        store.maybe_compress();
        store.record_peak();
        t_now = last ? t : h * static_cast<double>(s + 1);
        defect = std::max(0.0, 1.0 - store.total_mass() - store.dropped_mass());
        if (defect > 1e-3) {
            throw DivergenceError(
                "mass defect " + std::to_string(defect) +
                " exceeds 1e-3; reduce the step size or the threshold");
        }
        if (dump && dump_interval > 0.0 &&
            (last || t_now >= next_dump - 1e-9 * dump_interval)) {
            TransientResult r = detail::snapshot(store, defect);
            r.time = t_now;
            r.steps = s + 1;
            dump(r);
            while (next_dump <= t_now + 1e-9 * dump_interval) {
                next_dump += dump_interval;
            }
        }
    }
    TransientResult out = detail::snapshot(store, defect);
    out.time = t;
    out.steps = n_steps;
    return out;
}

}  // namespace mpm
