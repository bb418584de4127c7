#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sovc/model.hpp"

namespace sovc {

struct StateEntry {
    int64_t value = 0;
    Version version;

    bool operator==(const StateEntry&) const = default;
};

// The versioned key-value "current state". Many threads may read while at most
// one thread commits a block; per-key publication is a single atomic pointer
// swap, so a reader always observes a consistent (value, version) pair and the
// per-key version sequence is monotone. No lock serializes simulation reads
// against an in-flight commit: during a commit a reader may already see some of
// the new block's writes while snapshot_last_block_id() still reports the
// previous block — the window the simulation-phase staleness check targets.
class StateStore {
public:
    StateStore() = default;
    explicit StateStore(const std::vector<std::pair<Key, int64_t>>& genesis);

    StateStore(const StateStore&) = delete;
    StateStore& operator=(const StateStore&) = delete;

    // Throws KeyNotFoundError if absent.
    StateEntry read(const Key& key) const;
    std::optional<StateEntry> try_read(const Key& key) const;
    bool contains(const Key& key) const;

    // Id of the last fully committed block; monotonically non-decreasing.
    uint64_t snapshot_last_block_id() const {
        return last_block_id_.load(std::memory_order_acquire);
    }

    // Block commit protocol. begin_block enforces block_id == last + 1; writes
    // applied via apply_writes become visible per key immediately, stamped
    // Version(block_id, tx_seq); end_block advances last_block_id.
    void begin_block(uint64_t block_id);
    void apply_writes(uint32_t tx_seq, const WriteSet& ws);
    void end_block();

    // Convenience wrapper: valid_writes in schedule order, later writes to the
    // same key win and keep the later writer's tx_seq.
    void commit_block(uint64_t block_id,
                      const std::vector<std::pair<uint32_t, WriteSet>>& valid_writes);

    size_t key_count() const;

    // One line per key, `key,value,block_id,tx_seq`, ascending key order.
    void dump(std::ostream& os) const;
    std::string dump_string() const;

private:
    struct Slot {
        std::atomic<const StateEntry*> current{nullptr};
    };

    const StateEntry* publish(int64_t value, Version version);
    Slot* find_or_create_slot(const Key& key);

    // map_mutex_ guards map structure only (lookup/insert); value publication
    // never holds it. Slot addresses are stable (unordered_map is node-based).
    mutable std::shared_mutex map_mutex_;
    std::unordered_map<Key, Slot> slots_;

    // Entry storage, committer-owned; old entries stay alive so concurrent
    // readers never dereference freed memory.
    std::vector<std::unique_ptr<StateEntry>> entries_;

    std::atomic<uint64_t> last_block_id_{0};
    uint64_t committing_block_ = 0;
    bool commit_in_progress_ = false;
};

}  // namespace sovc
