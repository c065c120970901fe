#include "mpm/discrete_engine.hpp"

#include <string>

#include "mpm/errors.hpp"

namespace mpm {

std::vector<std::pair<std::size_t, double>> step_probabilities(const Model& model,
                                                               const State& s) {
    std::vector<std::pair<std::size_t, double>> out;
    double total = 0.0;
    for (std::size_t j = 0; j < model.commands.size(); ++j) {
        const GuardedCommand& cmd = model.commands[j];
        if (!enabled(model, cmd, s)) continue;
        double r = eval_rate(model, cmd, s);
        if (r == 0.0) continue;
        out.emplace_back(j, r);
        total += r;
    }
    if (out.empty() || total == 0.0) {
        out.clear();
        return out;
    }
    for (auto& [j, r] : out) r /= total;
    return out;
}

namespace detail {

void ensure_links(StateStore& store, const Model& model, std::uint32_t i) {
    if (store.node(i).links_built) return;
    // Collected first: find_or_insert may move the node array, so no Node
    // reference survives the loop.
    State src = store.node(i).state;
    std::vector<Link> links;
    double exit = 0.0;
    for (std::size_t j = 0; j < model.commands.size(); ++j) {
        const GuardedCommand& cmd = model.commands[j];
        if (!enabled(model, cmd, src)) continue;
        double r = eval_rate(model, cmd, src);
        if (r == 0.0) continue;
        std::uint32_t target = store.find_or_insert(successor(src, cmd)).index;
        links.push_back(Link{target, store.node(target).gen,
                             static_cast<std::uint32_t>(j), r});
        exit += r;
    }
    Node& n = store.node(i);
    n.links = std::move(links);
    n.exit = exit;
    n.links_built = true;
}

// Successor slot for link l of node i, re-resolved if the cached index died
// (slot reused or compacted away).
std::uint32_t link_target(StateStore& store, const Model& model,
                          std::uint32_t i, Link& l) {
    if (l.target != StateStore::npos) {
        const Node& tn = store.node(l.target);
        if (tn.gen == l.target_gen && tn.active) return l.target;
    }
    State succ = successor(store.node(i).state, model.commands[l.cmd]);
    std::uint32_t target = store.find_or_insert(succ).index;
    l.target = target;
    l.target_gen = store.node(target).gen;
    return target;
}

void propagate_into_shadow(StateStore& store, const Model& model, double lambda) {
    auto n0 = static_cast<std::uint32_t>(store.num_nodes());
    for (std::uint32_t i = 0; i < n0; ++i) {
        if (!store.node(i).active || store.node(i).p == 0.0) continue;
        ensure_links(store, model, i);
        double p = store.node(i).p;
        double exit = store.node(i).exit;
        if (lambda > 0.0) {
            if (exit > lambda) {
                throw RateExceededError(state_to_string(store.node(i).state),
                                        exit, lambda);
            }
            store.node(i).shadow += p * (1.0 - exit / lambda);
            std::size_t links = store.node(i).links.size();
            for (std::size_t li = 0; li < links; ++li) {
                std::uint32_t t = link_target(store, model, i, store.node(i).links[li]);
                store.node(t).shadow += p * (store.node(i).links[li].rate / lambda);
            }
        } else if (exit == 0.0) {
            store.node(i).shadow += p;  // absorbing self-loop
        } else {
            double inv = 1.0 / exit;
            std::size_t links = store.node(i).links.size();
            for (std::size_t li = 0; li < links; ++li) {
                std::uint32_t t = link_target(store, model, i, store.node(i).links[li]);
                store.node(t).shadow += p * (store.node(i).links[li].rate * inv);
            }
        }
    }
}

void commit_step(StateStore& store, double delta) {
    store.for_each_active([](std::uint32_t, Node& n) {
        n.p = n.shadow;
        n.shadow = 0.0;
    });
    if (delta > 0.0) {
        auto n1 = static_cast<std::uint32_t>(store.num_nodes());
        for (std::uint32_t i = 0; i < n1; ++i) {
            if (store.node(i).active && store.node(i).p < delta) {
                store.deactivate(i);
            }
        }
    }
    store.maybe_compress();
    store.record_peak();
}

void clear_shadows(StateStore& store) {
    store.for_each_active([](std::uint32_t, Node& n) { n.shadow = 0.0; });
}

TransientResult snapshot(const StateStore& store, double truncation_error) {
    TransientResult r;
    r.distribution.reserve(store.num_active());
    store.for_each_active([&](std::uint32_t, const Node& n) {
        r.distribution.emplace_back(n.state, n.p);
    });
    r.dropped_mass = store.dropped_mass();
    r.truncation_error = truncation_error;
    r.accumulated_error = r.dropped_mass + truncation_error;
    r.num_active = store.num_active();
    r.peak_active = store.peak_active();
    r.num_nodes = store.num_nodes();
    r.compressions = store.compress_count();
    return r;
}

}  // namespace detail

void propagate_step(StateStore& store, const Model& model,
                    const PropagationConfig& cfg) {
    if (cfg.delta < 0.0) {
        throw InvalidArgumentError("significance threshold must be non-negative");
    }
    detail::propagate_into_shadow(store, model, 0.0);
    detail::commit_step(store, cfg.delta);
}

TransientResult dtmc_transient(const Model& model, std::uint64_t k,
                               const PropagationConfig& cfg, const DumpFn& dump) {
    if (cfg.delta < 0.0) {
        throw InvalidArgumentError("significance threshold must be non-negative");
    }
    if (cfg.max_steps != 0 && k > cfg.max_steps) {
        throw InvalidArgumentError("step count exceeds the configured limit");
    }
    if (dump && cfg.dump_interval == 0) {
        throw InvalidArgumentError("dump interval must be at least 1");
    }
    StateStore store(model.num_variables(), cfg.store);
    store.node(store.find_or_insert(model.initial_state).index).p = 1.0;
    store.record_peak();
    for (std::uint64_t step = 1; step <= k; ++step) {
        detail::propagate_into_shadow(store, model, 0.0);
        detail::commit_step(store, cfg.delta);
        if (dump && step % cfg.dump_interval == 0) {
            TransientResult snap = detail::snapshot(store, 0.0);
            snap.steps = step;
            dump(snap);
        }
    }
    TransientResult result = detail::snapshot(store, 0.0);
    result.steps = k;
    return result;
}

}  // namespace mpm
