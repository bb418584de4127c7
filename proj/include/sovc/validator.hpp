#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sovc/model.hpp"
#include "sovc/state_store.hpp"

namespace sovc {

// Append-only ordered sequence of validated blocks, flags included. Block ids
// are contiguous from 1 (block 0 is the genesis state, not stored here).
class Ledger {
public:
    void append(Block block);
    const std::vector<Block>& blocks() const { return blocks_; }
    size_t block_count() const { return blocks_.size(); }

    // One line per tx: `block_id,tx_seq,tx_id,valid|invalid,reason`.
    void dump(std::ostream& os) const;
    std::string dump_string() const;

private:
    std::vector<Block> blocks_;
};

// Recomputes the content digest over the carried read/write set for every peer
// required by the policy and compares with the carried digests.
bool check_endorsement(const Transaction& tx);

// True iff every read-set version matches the current state. Reads of absent
// keys count as stale.
bool check_serializability(const Transaction& tx, const StateStore& store);

// Validates a block in order and commits it: endorsement first (a failure
// skips the serializability check), then the MVCC conflict check; a valid
// transaction's write set is applied immediately so later transactions in the
// same block see the updated versions. Appends block + flags to the ledger.
// Throws OutOfOrderBlockError unless block.block_id == last committed + 1.
std::vector<TxVerdict> validate_and_commit(Block block, StateStore& store, Ledger& ledger);

}  // namespace sovc
