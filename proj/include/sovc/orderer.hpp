#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sovc/endorser.hpp"
#include "sovc/model.hpp"

namespace sovc {

using SimTime = std::chrono::nanoseconds;  // time since run start, virtual or wall

// Batch finalization thresholds. A batch is cut as soon as any condition holds:
// transaction count, serialized size, elapsed time since the batch's first
// transaction, or number of unique keys accessed.
struct BatchPolicy {
    uint32_t max_tx_count = 256;
    uint64_t max_bytes = 2 * 1024 * 1024;
    SimTime max_wait = std::chrono::seconds(1);
    uint32_t max_unique_keys = 16384;
    // Cycle enumeration budget per breaking round; contended batches can hold
    // astronomically many elementary cycles, so hitting the budget switches the
    // break to a structural heuristic.
    uint32_t max_cycles_per_round = 1024;
};

enum class CutReason : uint8_t { TxCount, Bytes, Timeout, UniqueKeys };

std::string_view to_string(CutReason r);

struct CutBatch {
    std::vector<Transaction> txs;  // arrival order
    CutReason reason = CutReason::TxCount;
};

// Which reader survives when transactions of one batch read different versions
// of the same key. Newest keeps readers of the highest observed version (any
// older read is provably stale, so aborting it can never be wrong). FirstSeen
// keeps readers agreeing with the first observation in arrival order and is
// retained as the historical variant; it can abort transactions that would
// still validate.
enum class WithinBlockKeep : uint8_t { Newest, FirstSeen };

struct WithinBlockResult {
    std::vector<Transaction> kept;     // arrival order preserved
    std::vector<Transaction> aborted;  // arrival order preserved
    std::vector<EarlyAbortNotice> notices;  // one per aborted tx
};

WithinBlockResult within_block_early_abort(std::vector<Transaction> batch,
                                           WithinBlockKeep keep = WithinBlockKeep::Newest);

// Dense per-transaction access vector over a batch's unique-key dictionary.
struct BitVec {
    std::vector<uint64_t> words;
    uint64_t sig = 0;  // 64-bit fold of set bits, cheap disjointness prefilter

    void resize_bits(size_t nbits) { words.assign((nbits + 63) / 64, 0); }
    void set(size_t i) {
        words[i >> 6] |= uint64_t(1) << (i & 63);
        sig |= uint64_t(1) << (i & 63);
    }
    bool test(size_t i) const { return (words[i >> 6] >> (i & 63)) & 1; }
    bool intersects(const BitVec& other) const {
        if ((sig & other.sig) == 0) return false;
        for (size_t w = 0; w < words.size(); ++w)
            if (words[w] & other.words[w]) return true;
        return false;
    }
};

// Directed conflict graph over one batch. Edge i -> j iff T_j writes at least
// one key that T_i reads (i != j): the reader must be scheduled before the
// writer, so a valid schedule is a topological order of this graph.
struct ConflictGraph {
    size_t node_count = 0;
    size_t edge_count = 0;
    std::vector<std::vector<int32_t>> out_edges;  // ascending
    std::vector<std::vector<int32_t>> in_edges;   // ascending
    std::vector<BitVec> read_vectors;
    std::vector<BitVec> write_vectors;
    std::vector<Key> key_universe;  // index -> key, first-appearance order

    bool has_edge(int32_t from, int32_t to) const;
};

ConflictGraph build_conflict_graph(std::span<const Transaction> txs);

// Tarjan. Each component's nodes ascend; components ordered by smallest member.
std::vector<std::vector<int32_t>> strongly_connected_subgraphs(const ConflictGraph& g);

// Johnson's elementary-circuit enumeration restricted to one strongly connected
// subgraph (callers skip singletons). Appends cycles as node paths starting at
// the cycle's smallest node. Returns true if the budget cut enumeration short.
bool enumerate_cycles(const ConflictGraph& g, std::span<const int32_t> scc_nodes,
                      size_t max_cycles, std::vector<std::vector<int32_t>>& cycles);

// Per-transaction cycle participation counts (Table-style bookkeeping for the
// greedy break).
struct CycleTable {
    std::vector<std::vector<int32_t>> cycles;
    std::vector<int32_t> participation;  // size == node count

    static CycleTable build(size_t node_count, std::vector<std::vector<int32_t>> cycles);
};

// Repeatedly removes the transaction participating in most cycles (ties to the
// smallest batch index), clearing every cycle it appears in, until none remain.
// Returns removed indices in removal order.
std::vector<int32_t> greedy_cycle_break(CycleTable table);

// Serializable schedule for a cycle-free conflict graph: walks from the
// smallest unscheduled node up the out-edges to an effective source, emits it,
// descends in-edges, and finally inverts the emission order. For every edge
// i -> j the result places i before j. Throws CycleDetectedError.
std::vector<int32_t> derive_schedule(const ConflictGraph& g);

struct ReorderResult {
    std::vector<Transaction> ordered;        // block content, final order
    std::vector<Transaction> early_aborted;  // version mismatches + cycle removals
    std::vector<EarlyAbortNotice> notices;   // version-mismatch aborts only
    size_t version_aborts = 0;
    size_t cycle_removals = 0;
    size_t cycles_found = 0;
    size_t break_rounds = 0;
};

// Vanilla: arrival order, no aborts. EarlyAbortOnly: within-block version
// filter only. ReorderOnly: conflict-graph pipeline only. PlusPlus: filter,
// then graph -> SCCs -> cycles -> greedy break (re-enumerating when the cycle
// budget truncates) -> schedule.
ReorderResult reorder(std::vector<Transaction> batch, Mode mode, const BatchPolicy& policy);

// Ingest-side batching. In early-abort modes the within-block version filter
// runs incrementally: a transaction reading a version older than the newest
// observation for that key in the current batch is aborted on arrival, and
// admitting a newer observation evicts the provably stale transactions already
// pending, so aborted transactions never consume block capacity.
class Orderer {
public:
    Orderer(BatchPolicy policy, Mode mode) : policy_(policy), mode_(mode) {}

    struct IngestOutcome {
        std::vector<EarlyAbortNotice> aborted;
        std::optional<CutBatch> cut;
    };

    IngestOutcome ingest(Transaction tx, SimTime now);
    std::optional<CutBatch> tick(SimTime now);

    // Deadline of the pending batch's time condition, if a batch is open.
    std::optional<SimTime> cut_deadline() const;
    size_t pending_count() const { return alive_count_; }

private:
    bool stale_on_arrival(const Transaction& tx, EarlyAbortNotice& notice) const;
    void fold_observations(const Transaction& tx);
    std::vector<EarlyAbortNotice> evict_stale(const Transaction& admitted);
    void admit(Transaction tx, SimTime now);
    void drop(size_t idx);
    std::optional<CutReason> condition_met(SimTime now) const;
    CutBatch cut(CutReason reason);

    BatchPolicy policy_;
    Mode mode_;

    std::vector<Transaction> pending_;  // arrival order, including tombstones
    std::vector<char> alive_;
    size_t alive_count_ = 0;
    uint64_t bytes_ = 0;
    std::optional<SimTime> first_ts_;
    std::unordered_map<Key, uint32_t> key_refs_;          // alive txs' rs+ws keys
    std::unordered_map<Key, std::vector<size_t>> readers_;  // rs key -> pending idx
    std::unordered_map<Key, Version> newest_;  // max rs version seen since last cut
};

}  // namespace sovc
