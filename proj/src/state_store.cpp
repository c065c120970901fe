#include "mpm/state_store.hpp"

#include <cassert>
#include <string>

#include "mpm/errors.hpp"

namespace mpm {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr std::size_t kMinTable = 64;
constexpr double kMaxLoad = 0.7;

}  // namespace

std::uint64_t hash_state(const State& s) {
    std::uint64_t h = 0x6a09e667f3bcc909ull ^ static_cast<std::uint64_t>(s.size());
    for (std::int64_t v : s) {
        h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    }
    return h;
}

StateStore::StateStore(std::size_t num_variables, StoreConfig config)
    : num_variables_(num_variables), config_(config) {
    if (config_.chunk_size == 0) {
        throw InvalidArgumentError("store chunk size must be positive");
    }
    nodes_.reserve(config_.chunk_size);
    table_.assign(kMinTable, npos);
}

std::uint32_t StateStore::find(const State& s) const {
    std::size_t mask = table_.size() - 1;
    std::size_t slot = static_cast<std::size_t>(hash_state(s)) & mask;
    while (true) {
        std::uint32_t e = table_[slot];
        if (e == npos) return npos;
        if (e != kTomb && nodes_[e].state == s) return e;
        slot = (slot + 1) & mask;
    }
}

void StateStore::index_insert(const State& s, std::uint32_t index) {
    if (static_cast<double>(table_filled_ + 1) >
        kMaxLoad * static_cast<double>(table_.size())) {
        rehash(table_.size() * 2);
    }
    std::size_t mask = table_.size() - 1;
    std::size_t slot = static_cast<std::size_t>(hash_state(s)) & mask;
    while (table_[slot] != npos && table_[slot] != kTomb) {
        slot = (slot + 1) & mask;
    }
    if (table_[slot] == npos) ++table_filled_;  // tombstones stay counted
    table_[slot] = index;
}

void StateStore::index_remove(const State& s) {
    std::size_t mask = table_.size() - 1;
    std::size_t slot = static_cast<std::size_t>(hash_state(s)) & mask;
    while (true) {
        std::uint32_t e = table_[slot];
        assert(e != npos && "index entry missing");
        if (e != npos && e != kTomb && nodes_[e].state == s) {
            table_[slot] = kTomb;
            return;
        }
        if (e == npos) return;
        slot = (slot + 1) & mask;
    }
}

void StateStore::rehash(std::size_t new_size) {
    table_.assign(new_size, npos);
    table_filled_ = 0;
    std::size_t mask = new_size - 1;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i].active) continue;
        std::size_t slot = static_cast<std::size_t>(hash_state(nodes_[i].state)) & mask;
        while (table_[slot] != npos) slot = (slot + 1) & mask;
        table_[slot] = i;
        ++table_filled_;
    }
}

void StateStore::grow_for_append() {
    if (nodes_.size() < nodes_.capacity()) return;
    nodes_.reserve(nodes_.capacity() + config_.chunk_size);
}

StateStore::InsertResult StateStore::find_or_insert(const State& s) {
    std::uint32_t existing = find(s);
    if (existing != npos) return {existing, false};

    std::uint32_t index;
    if (!inactive_nodes_.empty()) {
        index = inactive_nodes_.back();
        inactive_nodes_.pop_back();
        Node& n = nodes_[index];
        n.state = s;
        n.p = 0.0;
        n.shadow = 0.0;
        n.aux = 0.0;
        n.aux2 = 0.0;
        n.exit = -1.0;
        n.links.clear();
        n.links_built = false;
        // gen was bumped at deactivation; old inbound links already invalid.
    } else {
        if (config_.max_nodes != 0 && nodes_.size() >= config_.max_nodes) {
            throw CapacityError(
                "state space exceeded the configured limit of " +
                std::to_string(config_.max_nodes) + " nodes (" +
                std::to_string(num_active()) + " active)");
        }
        if (nodes_.size() >= static_cast<std::size_t>(kTomb)) {
            throw CapacityError("state space exceeded the addressable node count");
        }
        grow_for_append();
        index = static_cast<std::uint32_t>(nodes_.size());
        Node n;
        n.state = s;
        nodes_.push_back(std::move(n));
        if (nodes_.size() > peak_nodes_) peak_nodes_ = nodes_.size();
    }
    // Index while the node is still flagged inactive: a load-factor rehash
    // inside index_insert rebuilds the table from the active nodes, and a
    // node visible to that rebuild would end up indexed twice — the stale
    // duplicate would later resurrect the state after deactivation.
    nodes_[index].active = false;
    index_insert(s, index);
    nodes_[index].active = true;
    return {index, true};
}

void StateStore::deactivate(std::uint32_t i) {
    Node& n = nodes_[i];
    assert(n.active && "deactivate on inactive node");
    if (!n.active) return;
    dropped_mass_ += n.p;
    n.p = 0.0;
    n.active = false;
    ++n.gen;
    index_remove(n.state);
    inactive_nodes_.push_back(i);
}

void StateStore::record_peak() {
    std::size_t a = num_active();
    if (a > peak_active_) peak_active_ = a;
}

double StateStore::total_mass() const {
    double sum = 0.0;
    for (const Node& n : nodes_) {
        if (n.active) sum += n.p;
    }
    return sum;
}

std::vector<std::uint32_t> StateStore::active_indices() const {
    std::vector<std::uint32_t> out;
    out.reserve(num_active());
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].active) out.push_back(i);
    }
    return out;
}

bool StateStore::maybe_compress() {
    if (inactive_nodes_.empty()) return false;
    if (static_cast<double>(inactive_nodes_.size()) <=
        config_.compress_threshold * static_cast<double>(nodes_.size())) {
        return false;
    }
    std::vector<std::uint32_t> remap(nodes_.size(), npos);
    std::uint32_t next = 0;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].active) remap[i] = next++;
    }
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
        if (remap[i] == npos) continue;
        Node& n = nodes_[i];
        for (Link& l : n.links) {
            // Dead targets keep their rate; the engine re-resolves lazily.
            l.target = l.target == npos ? npos : remap[l.target];
        }
        if (remap[i] != i) nodes_[remap[i]] = std::move(n);
    }
    nodes_.resize(next);
    inactive_nodes_.clear();
    ++compress_count_;
    std::size_t want = kMinTable;
    while (static_cast<double>(nodes_.size()) > kMaxLoad * static_cast<double>(want)) {
        want *= 2;
    }
    rehash(want);
    return true;
}

}  // namespace mpm
