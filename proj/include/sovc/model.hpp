#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sovc {

// Account / state-database key. Keys are opaque strings ("acc0042", "k0007", ...).
using Key = std::string;

// Version stamped on every stored value: the id of the committing block and the
// index of the writing transaction within that block. Total order is lexicographic.
struct Version {
    uint64_t block_id = 0;
    uint32_t tx_seq = 0;

    auto operator<=>(const Version&) const = default;
};

struct ReadEntry {
    Key key;
    Version version;

    bool operator==(const ReadEntry&) const = default;
};

// Keys read during simulation with the version observed on first read.
// Entries are sorted by key and duplicate-free.
struct ReadSet {
    std::vector<ReadEntry> entries;

    // Sorts and keeps the first-inserted entry per key.
    static ReadSet canonicalize(std::vector<ReadEntry> raw);
    bool operator==(const ReadSet&) const = default;
};

struct WriteEntry {
    Key key;
    int64_t value = 0;

    bool operator==(const WriteEntry&) const = default;
};

// Keys written during simulation with their final values; sorted, duplicate-free.
struct WriteSet {
    std::vector<WriteEntry> entries;

    // Sorts and keeps the last-inserted entry per key (the final value wins).
    static WriteSet canonicalize(std::vector<WriteEntry> raw);
    bool operator==(const WriteSet&) const = default;
};

// One peer id per organization that has to endorse a proposal.
struct EndorsementPolicy {
    std::vector<std::string> required_endorsers;

    bool operator==(const EndorsementPolicy&) const = default;
};

// Parameterized contract invocation. Two contracts are built in:
//  - "asset-transfer": reads read_keys and write_keys, then sets each written
//    balance to old + amounts[i] (amounts sum to zero for transfer semantics).
//  - "kv": reads read_keys, blind-writes amounts[i] into write_keys[i].
struct ContractCall {
    std::string contract_name;
    std::vector<Key> read_keys;
    std::vector<Key> write_keys;
    std::vector<int64_t> amounts;  // one per write key
};

struct Proposal {
    uint64_t proposal_id = 0;
    uint64_t client_id = 0;
    ContractCall contract;
    EndorsementPolicy policy;
};

// Unkeyed content digest standing in for an endorsement signature.
struct EndorsementDigest {
    std::array<uint8_t, 32> bytes{};

    bool operator==(const EndorsementDigest&) const = default;
    std::string hex() const;
};

struct PeerDigest {
    std::string peer_id;
    EndorsementDigest digest;

    bool operator==(const PeerDigest&) const = default;
};

// An endorsed transaction as submitted to the ordering service.
struct Transaction {
    uint64_t tx_id = 0;  // equals the originating proposal_id
    ReadSet rs;
    WriteSet ws;
    std::vector<PeerDigest> digests;  // exactly the peers named by policy
    EndorsementPolicy policy;
    std::string contract_name;
};

enum class TxVerdict : uint8_t {
    Valid,
    InvalidEndorsement,
    InvalidSerializability,
};

std::string_view to_string(TxVerdict v);

struct Block {
    uint64_t block_id = 0;
    std::vector<Transaction> txs;
    // Filled by the validator; validity.size() == txs.size() after validation.
    std::vector<TxVerdict> validity;
};

// Pipeline feature selection. PlusPlus is exactly ReorderOnly and EarlyAbortOnly combined.
enum class Mode : uint8_t {
    Vanilla,
    ReorderOnly,
    EarlyAbortOnly,
    PlusPlus,
};

constexpr bool mode_reorders(Mode m) {
    return m == Mode::ReorderOnly || m == Mode::PlusPlus;
}
constexpr bool mode_early_aborts(Mode m) {
    return m == Mode::EarlyAbortOnly || m == Mode::PlusPlus;
}

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);  // throws ConfigError

// Canonical byte encoding of the endorsement payload: little-endian integers,
// length-prefixed UTF-8 strings, set entries in ascending key order. Bit-exact
// so that independent implementations agree on digests.
std::vector<uint8_t> canonical_encoding(const ReadSet& rs, const WriteSet& ws,
                                        std::string_view contract_name,
                                        const EndorsementPolicy& policy);

// SHA-256 of the canonical encoding. Deterministic; any input change alters the
// digest with overwhelming probability.
EndorsementDigest compute_digest(const ReadSet& rs, const WriteSet& ws,
                                 std::string_view contract_name,
                                 const EndorsementPolicy& policy);

// Approximate wire size of a transaction, used by the orderer's byte-based cut
// condition. Deterministic function of the transaction contents.
uint64_t transaction_wire_size(const Transaction& tx);

namespace detail {
std::array<uint8_t, 32> sha256(std::span<const uint8_t> data);
}

}  // namespace sovc
