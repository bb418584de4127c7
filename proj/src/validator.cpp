#include "sovc/validator.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "sovc/errors.hpp"

namespace sovc {

void Ledger::append(Block block) {
    blocks_.push_back(std::move(block));
}

void Ledger::dump(std::ostream& os) const {
    for (const Block& b : blocks_) {
        for (size_t i = 0; i < b.txs.size(); ++i) {
            TxVerdict v = b.validity[i];
            os << b.block_id << ',' << i << ',' << b.txs[i].tx_id << ','
               << (v == TxVerdict::Valid ? "valid" : "invalid") << ','
               << (v == TxVerdict::Valid ? "-"
                   : v == TxVerdict::InvalidEndorsement ? "endorsement"
                                                        : "serializability")
               << '\n';
        }
    }
}

std::string Ledger::dump_string() const {
    std::ostringstream ss;
    dump(ss);
    return ss.str();
}

bool check_endorsement(const Transaction& tx) {
    if (tx.policy.required_endorsers.empty()) return false;
    EndorsementDigest expected =
        compute_digest(tx.rs, tx.ws, tx.contract_name, tx.policy);
    for (const std::string& peer : tx.policy.required_endorsers) {
        auto it = std::find_if(tx.digests.begin(), tx.digests.end(),
                               [&](const PeerDigest& d) { return d.peer_id == peer; });
        if (it == tx.digests.end() || it->digest != expected) return false;
    }
    return true;
}

bool check_serializability(const Transaction& tx, const StateStore& store) {
    for (const ReadEntry& e : tx.rs.entries) {
        auto entry = store.try_read(e.key);
        if (!entry || entry->version != e.version) return false;
    }
    return true;
}

std::vector<TxVerdict> validate_and_commit(Block block, StateStore& store, Ledger& ledger) {
    uint64_t expected = store.snapshot_last_block_id() + 1;
    if (block.block_id != expected) throw OutOfOrderBlockError(block.block_id, expected);

    std::vector<TxVerdict> verdicts(block.txs.size(), TxVerdict::Valid);
    // Policy checks are order-independent; flag them all up front.
    for (size_t i = 0; i < block.txs.size(); ++i)
        if (!check_endorsement(block.txs[i])) verdicts[i] = TxVerdict::InvalidEndorsement;

    store.begin_block(block.block_id);
    for (size_t i = 0; i < block.txs.size(); ++i) {
        if (verdicts[i] == TxVerdict::InvalidEndorsement) continue;  // not checked again
        if (check_serializability(block.txs[i], store)) {
            store.apply_writes(static_cast<uint32_t>(i), block.txs[i].ws);
        } else {
            verdicts[i] = TxVerdict::InvalidSerializability;
        }
    }
    store.end_block();

    block.validity = verdicts;
    ledger.append(std::move(block));
    return verdicts;
}

}  // namespace sovc
