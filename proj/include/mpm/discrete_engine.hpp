#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "mpm/model.hpp"
#include "mpm/state_store.hpp"

namespace mpm {

struct PropagationConfig {
    double delta = 1e-15;           // significance threshold
    std::uint64_t max_steps = 0;    // 0 = unlimited
    std::uint64_t dump_interval = 0;  // steps between snapshots; 0 = none
    StoreConfig store;
};

// Snapshot of a transient analysis: the retained distribution plus the error
// ledger. accumulated_error = dropped_mass + truncation_error; for pure DTMC
// propagation the truncation component is 0 and the distribution sums to
// 1 - dropped_mass up to summation roundoff.
struct TransientResult {
    std::vector<std::pair<State, double>> distribution;  // ascending node order
    double time = 0.0;        // time reached (continuous-time analyses)
    std::uint64_t steps = 0;  // steps or jumps taken
    double dropped_mass = 0.0;
    double truncation_error = 0.0;
    double accumulated_error = 0.0;
    std::size_t num_active = 0;
    std::size_t peak_active = 0;
    std::size_t num_nodes = 0;
    std::size_t compressions = 0;
};

using DumpFn = std::function<void(const TransientResult&)>;

// Jump distribution of the embedded step at s: (command index, probability)
// for each enabled command, rates normalized to sum to 1. Empty when no
// command is enabled or the total rate is 0; such states are absorbing
// (implicit self-loop of probability 1).
std::vector<std::pair<std::size_t, double>> step_probabilities(const Model& model,
                                                               const State& s);

// One product p·P over the active set with the normalized-step DTMC:
// two-buffer accumulation into shadow fields, swap, then threshold (nodes
// below delta are deactivated into dropped_mass) and possible compaction.
void propagate_step(StateStore& store, const Model& model,
                    const PropagationConfig& cfg);

// k-step transient distribution from the model's initial state, with
// snapshots every cfg.dump_interval steps when a dump callback is given.
TransientResult dtmc_transient(const Model& model, std::uint64_t k,
                               const PropagationConfig& cfg,
                               const DumpFn& dump = {});

namespace detail {

// Fills node i's enabled-command links and exit rate if missing, inserting
// successor nodes on the fly.
void ensure_links(StateStore& store, const Model& model, std::uint32_t i);

// Successor node for link l of node i, re-resolving (and re-inserting) the
// target if the cached slot died. May grow the node array; the link itself
// stays addressable because node moves keep each links buffer in place.
std::uint32_t link_target(StateStore& store, const Model& model,
                          std::uint32_t i, Link& l);

// Accumulates one step into the shadow buffers without committing.
// lambda > 0: transition probabilities rate/lambda with self-loop
// 1 - exit/lambda (RateExceededError if some source exit > lambda).
// lambda <= 0: normalized-step DTMC (absorbing states keep their mass).
void propagate_into_shadow(StateStore& store, const Model& model, double lambda);

// shadow -> p for every active node, then the delta threshold, compaction
// and a peak sample.
void commit_step(StateStore& store, double delta);

// Rolls dirty shadow buffers back to zero (used when a pass is redone).
void clear_shadows(StateStore& store);

// Deep-copy snapshot of the store's active distribution plus error ledger.
TransientResult snapshot(const StateStore& store, double truncation_error);

}  // namespace detail

}  // namespace mpm
