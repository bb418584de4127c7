#include "sovc/state_store.hpp"

#include <algorithm>
#include <mutex>
#include <ostream>
#include <sstream>

#include "sovc/errors.hpp"

namespace sovc {

StateStore::StateStore(const std::vector<std::pair<Key, int64_t>>& genesis) {
    // Genesis writes carry Version(0, 0); last_block_id starts at 0.
    for (const auto& [key, value] : genesis) {
        Slot& slot = slots_[key];
        slot.current.store(publish(value, Version{0, 0}), std::memory_order_release);
    }
}

const StateEntry* StateStore::publish(int64_t value, Version version) {
    entries_.push_back(std::make_unique<StateEntry>(StateEntry{value, version}));
    return entries_.back().get();
}

StateEntry StateStore::read(const Key& key) const {
    auto entry = try_read(key);
    if (!entry) throw KeyNotFoundError(key);
    return *entry;
}

std::optional<StateEntry> StateStore::try_read(const Key& key) const {
    const StateEntry* cur = nullptr;
    {
        std::shared_lock lock(map_mutex_);
        auto it = slots_.find(key);
        if (it == slots_.end()) return std::nullopt;
        cur = it->second.current.load(std::memory_order_acquire);
    }
    if (cur == nullptr) return std::nullopt;
    return *cur;
}

bool StateStore::contains(const Key& key) const {
    std::shared_lock lock(map_mutex_);
    return slots_.count(key) != 0;
}

StateStore::Slot* StateStore::find_or_create_slot(const Key& key) {
    {
        std::shared_lock lock(map_mutex_);
        auto it = slots_.find(key);
        if (it != slots_.end()) return &it->second;
    }
    std::unique_lock lock(map_mutex_);
    return &slots_[key];
}

void StateStore::begin_block(uint64_t block_id) {
    if (commit_in_progress_)
        throw OutOfOrderBlockError(block_id, committing_block_);
    uint64_t last = last_block_id_.load(std::memory_order_acquire);
    if (block_id != last + 1) throw OutOfOrderBlockError(block_id, last + 1);
    committing_block_ = block_id;
    commit_in_progress_ = true;
}

void StateStore::apply_writes(uint32_t tx_seq, const WriteSet& ws) {
    if (!commit_in_progress_) throw OutOfOrderBlockError(0, 0);
    for (const WriteEntry& w : ws.entries) {
        Slot* slot = find_or_create_slot(w.key);
        slot->current.store(publish(w.value, Version{committing_block_, tx_seq}),
                            std::memory_order_release);
    }
}

void StateStore::end_block() {
    if (!commit_in_progress_) throw OutOfOrderBlockError(0, 0);
    commit_in_progress_ = false;
    last_block_id_.store(committing_block_, std::memory_order_release);
}

void StateStore::commit_block(uint64_t block_id,
                              const std::vector<std::pair<uint32_t, WriteSet>>& valid_writes) {
    begin_block(block_id);
    for (const auto& [tx_seq, ws] : valid_writes) apply_writes(tx_seq, ws);
    end_block();
}

size_t StateStore::key_count() const {
    std::shared_lock lock(map_mutex_);
    return slots_.size();
}

void StateStore::dump(std::ostream& os) const {
    std::vector<std::pair<Key, StateEntry>> rows;
    {
        std::shared_lock lock(map_mutex_);
        rows.reserve(slots_.size());
        for (const auto& [key, slot] : slots_) {
            const StateEntry* cur = slot.current.load(std::memory_order_acquire);
            if (cur != nullptr) rows.emplace_back(key, *cur);
        }
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [key, e] : rows) {
        os << key << ',' << e.value << ',' << e.version.block_id << ',' << e.version.tx_seq
           << '\n';
    }
}

std::string StateStore::dump_string() const {
    std::ostringstream ss;
    dump(ss);
    return ss.str();
}

}  // namespace sovc
