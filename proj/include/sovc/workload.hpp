#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sovc/model.hpp"

namespace sovc {

// Deterministic, platform-stable generator (splitmix64). std:: distributions
// are implementation-defined, which would break frozen golden values.
struct Rng {
    uint64_t state;

    explicit Rng(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n), n > 0.
    uint64_t uniform(uint64_t n) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    int64_t range(int64_t lo, int64_t hi) {  // inclusive bounds
        return lo + static_cast<int64_t>(uniform(static_cast<uint64_t>(hi - lo + 1)));
    }
};

struct WorkloadParams {
    uint32_t n_accounts = 10000;
    uint32_t rw = 4;  // accounts read and accounts written per transaction
    double hot_read_prob = 0.1;
    double hot_write_prob = 0.05;
    double hot_set_fraction = 0.01;
    uint64_t seed = 1;
};

// Asset-transfer proposal stream. Each proposal reads `rw` accounts (each
// drawn from the hot set with probability HR) and transfers between `rw`
// accounts (each hot with probability HW); transfer amounts sum to zero. The
// hot set is the first ceil(HSS * n_accounts) accounts. Reproducible from
// (params.seed, stream_id).
class AssetWorkload {
public:
    AssetWorkload(const WorkloadParams& params, uint64_t stream_id);

    Proposal next(uint64_t proposal_id, uint64_t client_id, const EndorsementPolicy& policy);

    uint32_t hot_count() const { return hot_count_; }
    static std::string account_name(uint32_t index, uint32_t n_accounts);
    static std::vector<std::pair<Key, int64_t>> genesis_accounts(const WorkloadParams& params);

private:
    uint32_t draw_account(double hot_prob);
    void draw_distinct(double hot_prob, uint32_t count, std::vector<Key>& out);

    WorkloadParams params_;
    uint32_t hot_count_;
    Rng rng_;
    std::vector<uint32_t> scratch_;
};

// Micro-benchmark sequence families. Transactions carry honestly computed
// digests under a single-peer policy so only serializability decides validity;
// read versions reference a genesis where every key is at Version(0, 0).

Transaction make_kv_transaction(uint64_t tx_id,
                                const std::vector<std::pair<Key, Version>>& reads,
                                const std::vector<std::pair<Key, int64_t>>& writes);

// Family 1: S_1 is n/2 single-key writers w(k_1..k_{n/2}) followed by the
// matching readers r(k_1..k_{n/2}); S_i moves the last i-1 transactions of S_1
// to the front. Requires n even and 1 <= i <= n/2 + 1.
std::vector<Transaction> gen_interleaved_rw(uint32_t n, uint32_t i);

// Family 2: n/t groups over disjoint keys; each group is a length-t conflict
// cycle: tx0 = [r k0, w k0], tx_m = [r k_{m-1}, w k_m] (1 <= m <= t-2),
// tx_{t-1} = [r k_{t-2}, w k0]. Requires t >= 2 and t | n.
std::vector<Transaction> gen_cycle_groups(uint32_t n, uint32_t t);

// Genesis covering every key the given transactions touch, value 0 at (0,0).
std::vector<std::pair<Key, int64_t>> genesis_for(std::span<const Transaction> txs);

// Ground-truth MVCC replay, implemented independently of the validator: a
// transaction is valid iff every read version matches this state; valid writes
// apply immediately, stamped Version(block_id, index-in-sequence).
struct OracleState {
    std::map<Key, std::pair<int64_t, Version>> kv;

    static OracleState from_genesis(std::span<const std::pair<Key, int64_t>> genesis);
};

std::vector<bool> mvcc_replay_oracle(std::span<const Transaction> txs, OracleState& state,
                                     uint64_t block_id);

// Convenience: replay against a fresh genesis of the txs' keys; returns the
// number of valid transactions.
size_t oracle_valid_count(std::span<const Transaction> txs, uint64_t block_id = 1);

}  // namespace sovc
