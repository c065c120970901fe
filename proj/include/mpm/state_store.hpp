#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mpm/model.hpp"

namespace mpm {

struct StoreConfig {
    // Initial node-array capacity; later growth adds whole chunks.
    std::size_t chunk_size = std::size_t{1} << 20;
    std::size_t max_nodes = 0;  // 0 = unlimited; exceeding raises CapacityError
    // Compaction runs when inactive nodes exceed this fraction of all nodes.
    double compress_threshold = 0.20;
};

// Cached outgoing transition of one enabled command: the rate value at the
// source state (never stale: it depends only on that state) and the node
// index of the successor, guarded by the target's generation counter. A slot
// reused for a different state bumps its generation, so a mismatch (or a
// compaction marker) tells the engine to re-resolve the successor.
struct Link {
    std::uint32_t target;
    std::uint32_t target_gen;
    std::uint32_t cmd;  // command index, for re-resolving the successor
    double rate;
};

struct Node {
    State state;
    double p = 0.0;       // current probability mass
    double shadow = 0.0;  // next-step buffer / accumulator
    double aux = 0.0;     // engine scratch
    double aux2 = 0.0;    // engine scratch
    double exit = -1.0;   // cached exit rate, negative = not yet computed
    std::vector<Link> links;  // enabled commands in declaration order
    std::uint32_t gen = 0;    // bumped when the slot's state binding dies
    bool links_built = false;
    bool active = true;
};

// Dynamically discovered significant state set: a growable node array, an
// open-addressing hash index from state to node index, and a list of
// inactive (recyclable) node slots. Deactivating a node removes its index
// entry and recycles the slot for the next insertion; dropped probability
// mass is accounted here so every deactivation is counted exactly once.
class StateStore {
public:
    static constexpr std::uint32_t npos = 0xffffffffu;

    struct InsertResult {
        std::uint32_t index;
        bool was_new;
    };

    explicit StateStore(std::size_t num_variables, StoreConfig config = {});

    std::size_t num_variables() const { return num_variables_; }

    // Index of the active node holding s, or npos.
    std::uint32_t find(const State& s) const;

    // Existing active node for s, or a fresh binding with p = 0 and empty
    // caches, recycling an inactive slot when one is available and growing
    // the array by a whole chunk otherwise.
    InsertResult find_or_insert(const State& s);

    Node& node(std::uint32_t i) { return nodes_[i]; }
    const Node& node(std::uint32_t i) const { return nodes_[i]; }

    // Retires an active node: its mass moves to dropped_mass, the index
    // entry disappears, and the slot becomes recyclable. The generation
    // bump invalidates cached links into it.
    void deactivate(std::uint32_t i);

    // Compacts the node array if the inactive fraction exceeds the
    // threshold. Surviving nodes keep their relative order; cached links are
    // remapped in one pass (links into removed slots are marked for lazy
    // re-resolution, keeping their rate). Returns true if compaction ran.
    bool maybe_compress();

    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_active() const { return nodes_.size() - inactive_nodes_.size(); }
    std::size_t num_inactive() const { return inactive_nodes_.size(); }
    std::size_t capacity() const { return nodes_.capacity(); }

    double dropped_mass() const { return dropped_mass_; }

    // Peak statistics. peak_active() is the maximum over record_peak()
    // samples; engines record once per step after dropping insignificant
    // states.
    void record_peak();
    std::size_t peak_active() const { return peak_active_; }
    std::size_t peak_nodes() const { return peak_nodes_; }
    std::size_t compress_count() const { return compress_count_; }

    // Sum of p over active nodes in ascending index order.
    double total_mass() const;

    std::vector<std::uint32_t> active_indices() const;

    template <class F> void for_each_active(F&& f) {
        for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
            if (nodes_[i].active) f(i, nodes_[i]);
        }
    }
    template <class F> void for_each_active(F&& f) const {
        for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
            if (nodes_[i].active) f(i, nodes_[i]);
        }
    }

private:
    static constexpr std::uint32_t kTomb = 0xfffffffeu;

    void grow_for_append();
    void rehash(std::size_t new_size);
    void index_insert(const State& s, std::uint32_t index);
    void index_remove(const State& s);

    std::size_t num_variables_;
    StoreConfig config_;
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> table_;  // npos empty, kTomb deleted
    std::size_t table_filled_ = 0;      // live entries + tombstones
    std::vector<std::uint32_t> inactive_nodes_;
    double dropped_mass_ = 0.0;
    std::size_t peak_active_ = 0;
    std::size_t peak_nodes_ = 0;
    std::size_t compress_count_ = 0;
};

// Endianness-independent hash of a population vector.
std::uint64_t hash_state(const State& s);

}  // namespace mpm
