#include "sovc/workload.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <unordered_set>

#include "sovc/errors.hpp"

namespace sovc {

namespace {

uint32_t decimal_width(uint32_t max_value) {
    uint32_t w = 1;
    while (max_value >= 10) {
        max_value /= 10;
        ++w;
    }
    return w;
}

std::string padded(std::string_view prefix, uint32_t index, uint32_t width) {
    std::string digits = std::to_string(index);
    std::string out(prefix);
    out.append(width > digits.size() ? width - digits.size() : 0, '0');
    out += digits;
    return out;
}

}  // namespace

AssetWorkload::AssetWorkload(const WorkloadParams& params, uint64_t stream_id)
    : params_(params),
      hot_count_(0),
      rng_(params.seed * 0x9e3779b97f4a7c15ULL + stream_id + 1) {
    if (params_.n_accounts == 0 || params_.rw == 0 || params_.rw > params_.n_accounts)
        throw ConfigError("workload: need 0 < rw <= n_accounts");
    double frac = params_.hot_set_fraction;
    hot_count_ = static_cast<uint32_t>(
        std::min<double>(params_.n_accounts,
                         std::max(1.0, std::ceil(frac * params_.n_accounts))));
}

std::string AssetWorkload::account_name(uint32_t index, uint32_t n_accounts) {
    uint32_t width = std::max<uint32_t>(4, decimal_width(n_accounts - 1));
    return padded("acc", index, width);
}

std::vector<std::pair<Key, int64_t>> AssetWorkload::genesis_accounts(
    const WorkloadParams& params) {
    Rng rng(params.seed ^ 0xa5a5a5a5a5a5a5a5ULL);
    std::vector<std::pair<Key, int64_t>> out;
    out.reserve(params.n_accounts);
    for (uint32_t i = 0; i < params.n_accounts; ++i)
        out.emplace_back(account_name(i, params.n_accounts),
                         static_cast<int64_t>(rng.uniform(1000000)));
    return out;
}

uint32_t AssetWorkload::draw_account(double hot_prob) {
    bool hot = hot_count_ >= params_.n_accounts ||
               (hot_prob > 0.0 && rng_.unit() < hot_prob);
    if (hot) return static_cast<uint32_t>(rng_.uniform(hot_count_));
    uint32_t cold = params_.n_accounts - hot_count_;
    return hot_count_ + static_cast<uint32_t>(rng_.uniform(cold));
}

void AssetWorkload::draw_distinct(double hot_prob, uint32_t count, std::vector<Key>& out) {
    scratch_.clear();
    while (scratch_.size() < count) {
        uint32_t acc = draw_account(hot_prob);
        if (std::find(scratch_.begin(), scratch_.end(), acc) == scratch_.end())
            scratch_.push_back(acc);
    }
    for (uint32_t acc : scratch_) out.push_back(account_name(acc, params_.n_accounts));
}

Proposal AssetWorkload::next(uint64_t proposal_id, uint64_t client_id,
                             const EndorsementPolicy& policy) {
    Proposal p;
    p.proposal_id = proposal_id;
    p.client_id = client_id;
    p.policy = policy;
    p.contract.contract_name = "asset-transfer";
    draw_distinct(params_.hot_read_prob, params_.rw, p.contract.read_keys);
    draw_distinct(params_.hot_write_prob, params_.rw, p.contract.write_keys);
    p.contract.amounts.resize(params_.rw);
    int64_t sum = 0;
    for (uint32_t i = 0; i + 1 < params_.rw; ++i) {
        p.contract.amounts[i] = rng_.range(-100, 100);
        sum += p.contract.amounts[i];
    }
    p.contract.amounts[params_.rw - 1] = -sum;
    return p;
}

Transaction make_kv_transaction(uint64_t tx_id,
                                const std::vector<std::pair<Key, Version>>& reads,
                                const std::vector<std::pair<Key, int64_t>>& writes) {
    Transaction tx;
    tx.tx_id = tx_id;
    tx.contract_name = "kv";
    tx.policy = EndorsementPolicy{{"m0"}};
    std::vector<ReadEntry> rs;
    rs.reserve(reads.size());
    for (const auto& [k, v] : reads) rs.push_back(ReadEntry{k, v});
    std::vector<WriteEntry> ws;
    ws.reserve(writes.size());
    for (const auto& [k, v] : writes) ws.push_back(WriteEntry{k, v});
    tx.rs = ReadSet::canonicalize(std::move(rs));
    tx.ws = WriteSet::canonicalize(std::move(ws));
    tx.digests.push_back(
        PeerDigest{"m0", compute_digest(tx.rs, tx.ws, tx.contract_name, tx.policy)});
    return tx;
}

std::vector<Transaction> gen_interleaved_rw(uint32_t n, uint32_t i) {
    if (n == 0 || n % 2 != 0) throw InvalidSpecError("interleaved-rw: n must be even");
    if (i < 1 || i > n / 2 + 1)
        throw InvalidSpecError("interleaved-rw: need 1 <= i <= n/2 + 1");

    uint32_t half = n / 2;
    uint32_t width = decimal_width(half);
    std::vector<Transaction> s1;
    s1.reserve(n);
    for (uint32_t j = 1; j <= half; ++j)
        s1.push_back(make_kv_transaction(j - 1, {}, {{padded("k", j, width), int64_t(j)}}));
    for (uint32_t j = 1; j <= half; ++j)
        s1.push_back(make_kv_transaction(half + j - 1, {{padded("k", j, width), Version{0, 0}}}, {}));

    // Moving the last transaction to the front i-1 times rotates right by i-1.
    std::rotate(s1.begin(), s1.begin() + (n - (i - 1)), s1.end());
    return s1;
}

std::vector<Transaction> gen_cycle_groups(uint32_t n, uint32_t t) {
    if (t < 2) throw InvalidSpecError("cycle-groups: need t >= 2");
    if (n == 0 || n % t != 0) throw InvalidSpecError("cycle-groups: t must divide n");

    uint32_t groups = n / t;
    uint32_t gw = decimal_width(groups - 1);
    uint32_t kw = decimal_width(t - 1);
    std::vector<Transaction> out;
    out.reserve(n);
    uint64_t id = 0;
    for (uint32_t g = 0; g < groups; ++g) {
        auto key = [&](uint32_t m) { return padded("g", g, gw) + padded("k", m, kw); };
        out.push_back(make_kv_transaction(id++, {{key(0), Version{0, 0}}}, {{key(0), 1}}));
        for (uint32_t m = 1; m + 1 < t; ++m)
            out.push_back(
                make_kv_transaction(id++, {{key(m - 1), Version{0, 0}}}, {{key(m), 1}}));
        out.push_back(
            make_kv_transaction(id++, {{key(t - 2), Version{0, 0}}}, {{key(0), 2}}));
    }
    return out;
}

std::vector<std::pair<Key, int64_t>> genesis_for(std::span<const Transaction> txs) {
    std::unordered_set<Key> seen;
    std::vector<std::pair<Key, int64_t>> out;
    for (const Transaction& tx : txs) {
        for (const ReadEntry& e : tx.rs.entries)
            if (seen.insert(e.key).second) out.emplace_back(e.key, 0);
        for (const WriteEntry& e : tx.ws.entries)
            if (seen.insert(e.key).second) out.emplace_back(e.key, 0);
    }
    std::sort(out.begin(), out.end());
    return out;
}

OracleState OracleState::from_genesis(std::span<const std::pair<Key, int64_t>> genesis) {
    OracleState s;
    for (const auto& [k, v] : genesis) s.kv[k] = {v, Version{0, 0}};
    return s;
}

std::vector<bool> mvcc_replay_oracle(std::span<const Transaction> txs, OracleState& state,
                                     uint64_t block_id) {
    std::vector<bool> flags;
    flags.reserve(txs.size());
    for (size_t i = 0; i < txs.size(); ++i) {
        const Transaction& tx = txs[i];
        bool valid = true;
        for (const ReadEntry& e : tx.rs.entries) {
            auto it = state.kv.find(e.key);
            if (it == state.kv.end() || it->second.second != e.version) {
                valid = false;
                break;
            }
        }
        if (valid) {
            for (const WriteEntry& e : tx.ws.entries)
                state.kv[e.key] = {e.value, Version{block_id, static_cast<uint32_t>(i)}};
        }
        flags.push_back(valid);
    }
    return flags;
}

size_t oracle_valid_count(std::span<const Transaction> txs, uint64_t block_id) {
    auto genesis = genesis_for(txs);
    OracleState state = OracleState::from_genesis(genesis);
    auto flags = mvcc_replay_oracle(txs, state, block_id);
    return static_cast<size_t>(std::count(flags.begin(), flags.end(), true));
}

}  // namespace sovc
