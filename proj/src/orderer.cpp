#include "sovc/orderer.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <limits>
#include <queue>

#include "sovc/errors.hpp"

namespace sovc {

std::string_view to_string(CutReason r) {
    switch (r) {
        case CutReason::TxCount: return "tx-count";
        case CutReason::Bytes: return "bytes";
        case CutReason::Timeout: return "timeout";
        case CutReason::UniqueKeys: return "unique-keys";
    }
    return "?";
}

namespace {

std::optional<Version> read_version_of(const Transaction& tx, const Key& key) {
    const auto& es = tx.rs.entries;
    auto it = std::lower_bound(es.begin(), es.end(), key,
                               [](const ReadEntry& e, const Key& k) { return e.key < k; });
    if (it == es.end() || it->key != key) return std::nullopt;
    return it->version;
}

EarlyAbortNotice ordering_abort(const Transaction& tx, const Key& key, Version observed,
                                Version newest) {
    return EarlyAbortNotice{tx.tx_id, key, observed.block_id, newest.block_id,
                            AbortPhase::Ordering};
}

}  // namespace

WithinBlockResult within_block_early_abort(std::vector<Transaction> batch,
                                           WithinBlockKeep keep) {
    WithinBlockResult out;
    out.kept.reserve(batch.size());

    if (keep == WithinBlockKeep::Newest) {
        std::unordered_map<Key, Version> newest;
        for (const Transaction& tx : batch)
            for (const ReadEntry& e : tx.rs.entries) {
                auto [it, inserted] = newest.try_emplace(e.key, e.version);
                if (!inserted && e.version > it->second) it->second = e.version;
            }
        for (Transaction& tx : batch) {
            const ReadEntry* stale = nullptr;
            for (const ReadEntry& e : tx.rs.entries) {
                if (e.version < newest.at(e.key)) {
                    stale = &e;
                    break;
                }
            }
            if (stale != nullptr) {
                out.notices.push_back(
                    ordering_abort(tx, stale->key, stale->version, newest.at(stale->key)));
                out.aborted.push_back(std::move(tx));
            } else {
                out.kept.push_back(std::move(tx));
            }
        }
        return out;
    }

    // FirstSeen: a read disagreeing with the first observation of its key in
    // arrival order invalidates the later transaction.
    std::unordered_map<Key, Version> first_seen;
    for (Transaction& tx : batch) {
        const ReadEntry* conflict = nullptr;
        for (const ReadEntry& e : tx.rs.entries) {
            auto it = first_seen.find(e.key);
            if (it != first_seen.end() && it->second != e.version) {
                conflict = &e;
                break;
            }
        }
        for (const ReadEntry& e : tx.rs.entries) first_seen.try_emplace(e.key, e.version);
        if (conflict != nullptr) {
            out.notices.push_back(ordering_abort(tx, conflict->key, conflict->version,
                                                 first_seen.at(conflict->key)));
            out.aborted.push_back(std::move(tx));
        } else {
            out.kept.push_back(std::move(tx));
        }
    }
    return out;
}

bool ConflictGraph::has_edge(int32_t from, int32_t to) const {
    const auto& es = out_edges[from];
    return std::binary_search(es.begin(), es.end(), to);
}

ConflictGraph build_conflict_graph(std::span<const Transaction> txs) {
    ConflictGraph g;
    g.node_count = txs.size();
    g.out_edges.resize(g.node_count);
    g.in_edges.resize(g.node_count);

    std::unordered_map<Key, size_t> key_index;
    auto index_of = [&](const Key& k) {
        auto [it, inserted] = key_index.try_emplace(k, g.key_universe.size());
        if (inserted) g.key_universe.push_back(k);
        return it->second;
    };
    for (const Transaction& tx : txs) {
        for (const ReadEntry& e : tx.rs.entries) index_of(e.key);
        for (const WriteEntry& e : tx.ws.entries) index_of(e.key);
    }
    size_t nkeys = g.key_universe.size();

    g.read_vectors.resize(g.node_count);
    g.write_vectors.resize(g.node_count);
    for (size_t i = 0; i < g.node_count; ++i) {
        g.read_vectors[i].resize_bits(nkeys);
        g.write_vectors[i].resize_bits(nkeys);
        for (const ReadEntry& e : txs[i].rs.entries) g.read_vectors[i].set(key_index.at(e.key));
        for (const WriteEntry& e : txs[i].ws.entries) g.write_vectors[i].set(key_index.at(e.key));
    }

    // Small key universes: quadratic bit-vector pass. Large ones: per-key
    // reader x writer lists; identical edge set, bounded by actual conflicts.
    if (nkeys <= 1024) {
        for (size_t i = 0; i < g.node_count; ++i) {
            if (txs[i].rs.entries.empty()) continue;
            for (size_t j = 0; j < g.node_count; ++j) {
                if (i == j) continue;
                if (g.read_vectors[i].intersects(g.write_vectors[j])) {
                    g.out_edges[i].push_back(static_cast<int32_t>(j));
                    g.in_edges[j].push_back(static_cast<int32_t>(i));
                    ++g.edge_count;
                }
            }
        }
    } else {
        std::vector<std::vector<int32_t>> writers(nkeys);
        for (size_t j = 0; j < g.node_count; ++j)
            for (const WriteEntry& e : txs[j].ws.entries)
                writers[key_index.at(e.key)].push_back(static_cast<int32_t>(j));
        std::vector<uint32_t> stamp(g.node_count, UINT32_MAX);
        for (size_t i = 0; i < g.node_count; ++i) {
            auto& out = g.out_edges[i];
            for (const ReadEntry& e : txs[i].rs.entries)
                for (int32_t j : writers[key_index.at(e.key)]) {
                    if (static_cast<size_t>(j) == i) continue;
                    if (stamp[j] != i) {
                        stamp[j] = static_cast<uint32_t>(i);
                        out.push_back(j);
                    }
                }
            std::sort(out.begin(), out.end());
            g.edge_count += out.size();
            for (int32_t j : out) g.in_edges[j].push_back(static_cast<int32_t>(i));
        }
    }
    return g;
}

namespace {

// Iterative Tarjan over the subgraph induced by local vertices >= min_vertex.
// adj uses local vertex ids in [0, n).
std::vector<std::vector<int32_t>> tarjan_local(size_t n,
                                               const std::vector<std::vector<int32_t>>& adj,
                                               int32_t min_vertex) {
    constexpr int32_t kUnvisited = -1;
    std::vector<int32_t> index(n, kUnvisited), lowlink(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<int32_t> stack;
    std::vector<std::vector<int32_t>> sccs;
    int32_t next_index = 0;

    struct Frame {
        int32_t v;
        size_t edge;
    };
    std::vector<Frame> frames;

    for (int32_t root = min_vertex; root < static_cast<int32_t>(n); ++root) {
        if (index[root] != kUnvisited) continue;
        frames.push_back({root, 0});
        while (!frames.empty()) {
            Frame& f = frames.back();
            int32_t v = f.v;
            if (f.edge == 0) {
                index[v] = lowlink[v] = next_index++;
                stack.push_back(v);
                on_stack[v] = 1;
            }
            bool descended = false;
            while (f.edge < adj[v].size()) {
                int32_t w = adj[v][f.edge++];
                if (w < min_vertex) continue;
                if (index[w] == kUnvisited) {
                    frames.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (on_stack[w]) lowlink[v] = std::min(lowlink[v], index[w]);
            }
            if (descended) continue;
            if (lowlink[v] == index[v]) {
                std::vector<int32_t> comp;
                int32_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp.push_back(w);
                } while (w != v);
                std::sort(comp.begin(), comp.end());
                sccs.push_back(std::move(comp));
            }
            frames.pop_back();
            if (!frames.empty()) {
                Frame& parent = frames.back();
                lowlink[parent.v] = std::min(lowlink[parent.v], lowlink[v]);
            }
        }
    }
    std::sort(sccs.begin(), sccs.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return sccs;
}

}  // namespace

std::vector<std::vector<int32_t>> strongly_connected_subgraphs(const ConflictGraph& g) {
    return tarjan_local(g.node_count, g.out_edges, 0);
}

bool enumerate_cycles(const ConflictGraph& g, std::span<const int32_t> scc_nodes,
                      size_t max_cycles, std::vector<std::vector<int32_t>>& cycles) {
    const size_t m = scc_nodes.size();
    if (m < 2) return false;

    // Local adjacency restricted to the component; local ids follow the
    // ascending global order, preserving smallest-index determinism.
    std::vector<int32_t> local_sorted(scc_nodes.begin(), scc_nodes.end());
    std::sort(local_sorted.begin(), local_sorted.end());
    std::unordered_map<int32_t, int32_t> to_local;
    for (size_t i = 0; i < m; ++i) to_local[local_sorted[i]] = static_cast<int32_t>(i);
    std::vector<std::vector<int32_t>> adj(m);
    for (size_t i = 0; i < m; ++i) {
        for (int32_t w : g.out_edges[local_sorted[i]]) {
            auto it = to_local.find(w);
            if (it != to_local.end()) adj[i].push_back(it->second);
        }
        std::sort(adj[i].begin(), adj[i].end());
    }

    std::vector<char> blocked(m, 0);
    std::vector<std::vector<int32_t>> block_list(m);
    std::vector<int32_t> path;
    std::vector<char> in_comp(m, 0);
    bool truncated = false;

    std::function<void(int32_t)> unblock = [&](int32_t v) {
        blocked[v] = 0;
        for (int32_t w : block_list[v])
            if (blocked[w]) unblock(w);
        block_list[v].clear();
    };

    int32_t start = 0;
    std::function<bool(int32_t, int32_t)> circuit = [&](int32_t v, int32_t s) -> bool {
        bool found = false;
        path.push_back(v);
        blocked[v] = 1;
        for (int32_t w : adj[v]) {
            if (truncated) break;
            if (w < s || !in_comp[w]) continue;
            if (w == s) {
                std::vector<int32_t> cycle;
                cycle.reserve(path.size());
                for (int32_t p : path) cycle.push_back(local_sorted[p]);
                cycles.push_back(std::move(cycle));
                found = true;
                if (cycles.size() >= max_cycles) truncated = true;
            } else if (!blocked[w]) {
                if (circuit(w, s)) found = true;
            }
        }
        if (found) {
            unblock(v);
        } else {
            for (int32_t w : adj[v]) {
                if (w < s || !in_comp[w]) continue;
                auto& bl = block_list[w];
                if (std::find(bl.begin(), bl.end(), v) == bl.end()) bl.push_back(v);
            }
        }
        path.pop_back();
        return found;
    };

    while (start < static_cast<int32_t>(m) && !truncated) {
        auto sub_sccs = tarjan_local(m, adj, start);
        const std::vector<int32_t>* comp = nullptr;
        int32_t least = std::numeric_limits<int32_t>::max();
        for (const auto& scc : sub_sccs) {
            if (scc.size() < 2) continue;
            if (scc.front() < least) {
                least = scc.front();
                comp = &scc;
            }
        }
        if (comp == nullptr) break;
        start = least;
        std::fill(in_comp.begin(), in_comp.end(), 0);
        for (int32_t v : *comp) {
            in_comp[v] = 1;
            blocked[v] = 0;
            block_list[v].clear();
        }
        circuit(start, start);
        ++start;
    }
    return truncated;
}

CycleTable CycleTable::build(size_t node_count, std::vector<std::vector<int32_t>> cycles) {
    CycleTable t;
    t.participation.assign(node_count, 0);
    t.cycles = std::move(cycles);
    for (const auto& c : t.cycles)
        for (int32_t v : c) ++t.participation[v];
    return t;
}

std::vector<int32_t> greedy_cycle_break(CycleTable table) {
    const size_t n_cycles = table.cycles.size();
    std::vector<std::vector<int32_t>> cycles_of_node(table.participation.size());
    for (size_t c = 0; c < n_cycles; ++c)
        for (int32_t v : table.cycles[c]) cycles_of_node[v].push_back(static_cast<int32_t>(c));

    std::vector<char> cycle_alive(n_cycles, 1);
    size_t alive = n_cycles;
    // (count, -index) max-heap with lazy deletion of stale counts.
    std::priority_queue<std::pair<int32_t, int32_t>> heap;
    for (size_t v = 0; v < table.participation.size(); ++v)
        if (table.participation[v] > 0)
            heap.emplace(table.participation[v], -static_cast<int32_t>(v));

    std::vector<int32_t> removed;
    while (alive > 0) {
        assert(!heap.empty());
        auto [count, neg_v] = heap.top();
        heap.pop();
        int32_t v = -neg_v;
        if (count != table.participation[v] || count == 0) continue;  // stale entry
        removed.push_back(v);
        table.participation[v] = 0;
        for (int32_t c : cycles_of_node[v]) {
            if (!cycle_alive[c]) continue;
            cycle_alive[c] = 0;
            --alive;
            for (int32_t w : table.cycles[c]) {
                if (w == v || table.participation[w] == 0) continue;
                --table.participation[w];
                if (table.participation[w] > 0) heap.emplace(table.participation[w], -w);
            }
        }
    }
    return removed;
}

// Feedback-vertex heuristic for batches whose elementary cycles outnumber the
// enumeration budget: repeatedly drop, per cyclic component, the node with the
// largest in*out degree product inside its component (ties to the smallest
// index) until the remaining subgraph is acyclic. O(V+E) per removal.
std::vector<int32_t> degree_cycle_break(const ConflictGraph& g) {
    const size_t n = g.node_count;
    std::vector<char> alive(n, 1);
    std::vector<int32_t> removed;
    std::vector<int32_t> scc_of(n, -1);
    std::vector<uint32_t> din(n), dout(n);
    std::vector<std::vector<int32_t>> adj(n);
    std::vector<std::pair<uint64_t, int32_t>> ranked;

    while (true) {
        for (size_t v = 0; v < n; ++v) {
            adj[v].clear();
            if (!alive[v]) continue;
            for (int32_t w : g.out_edges[v])
                if (alive[w]) adj[v].push_back(w);
        }
        auto sccs = tarjan_local(n, adj, 0);
        bool cyclic = false;
        std::fill(scc_of.begin(), scc_of.end(), -1);
        for (size_t c = 0; c < sccs.size(); ++c)
            if (sccs[c].size() > 1)
                for (int32_t v : sccs[c]) scc_of[v] = static_cast<int32_t>(c);
        std::fill(din.begin(), din.end(), 0);
        std::fill(dout.begin(), dout.end(), 0);
        for (size_t v = 0; v < n; ++v) {
            if (scc_of[v] < 0) continue;
            for (int32_t w : adj[v])
                if (scc_of[w] == scc_of[v]) {
                    ++dout[v];
                    ++din[w];
                }
        }
        for (const auto& scc : sccs) {
            if (scc.size() < 2) continue;
            cyclic = true;
            // drop the heaviest hubs of the component; a small group per pass
            // keeps the pass count logarithmic without over-removing
            size_t k = (scc.size() + 63) / 64;
            ranked.clear();
            for (int32_t v : scc) ranked.emplace_back(uint64_t(din[v]) * dout[v], v);
            std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first : a.second < b.second;
            });
            for (size_t i = 0; i < k; ++i) {
                alive[ranked[i].second] = 0;
                removed.push_back(ranked[i].second);
            }
        }
        if (!cyclic) break;
    }
    std::sort(removed.begin(), removed.end());
    return removed;
}

std::vector<int32_t> derive_schedule(const ConflictGraph& g) {
    const size_t n = g.node_count;
    std::vector<int32_t> order;
    order.reserve(n);
    if (n == 0) return order;

    std::vector<char> scheduled(n, 0);
    int32_t scan_from = 0;
    int32_t cur = 0;
    // An acyclic walk schedules one node at least every n steps.
    const uint64_t step_limit = 2 * (static_cast<uint64_t>(n) * n + 2 * n) + 8;
    uint64_t steps = 0;

    while (order.size() < n) {
        if (++steps > step_limit) throw CycleDetectedError();
        if (scheduled[cur]) {
            while (scan_from < static_cast<int32_t>(n) && scheduled[scan_from]) ++scan_from;
            cur = scan_from;
            continue;
        }
        // Ascend towards an effective source: a node whose out-neighbors (the
        // writers of keys it reads) are all scheduled.
        bool moved = false;
        for (int32_t w : g.out_edges[cur]) {
            if (!scheduled[w]) {
                cur = w;
                moved = true;
                break;
            }
        }
        if (moved) continue;
        scheduled[cur] = 1;
        order.push_back(cur);
        for (int32_t r : g.in_edges[cur]) {
            if (!scheduled[r]) {
                cur = r;
                break;
            }
        }
    }
    std::reverse(order.begin(), order.end());
    return order;
}

ReorderResult reorder(std::vector<Transaction> batch, Mode mode, const BatchPolicy& policy) {
    ReorderResult res;
    if (mode == Mode::Vanilla) {
        res.ordered = std::move(batch);
        return res;
    }

    std::vector<Transaction> current;
    if (mode_early_aborts(mode)) {
        WithinBlockResult filtered = within_block_early_abort(std::move(batch));
        current = std::move(filtered.kept);
        res.version_aborts = filtered.aborted.size();
        for (auto& tx : filtered.aborted) res.early_aborted.push_back(std::move(tx));
        res.notices = std::move(filtered.notices);
    } else {
        current = std::move(batch);
    }

    if (!mode_reorders(mode)) {
        res.ordered = std::move(current);
        return res;
    }

    while (true) {
        ++res.break_rounds;
        ConflictGraph g = build_conflict_graph(current);
        if (g.edge_count == 0) {
            // nothing conflicts, arrival order already serializable
            res.ordered = std::move(current);
            return res;
        }
        auto sccs = strongly_connected_subgraphs(g);

        std::vector<std::vector<int32_t>> cycles;
        bool truncated = false;
        for (const auto& scc : sccs) {
            if (scc.size() < 2) continue;
            size_t remaining = policy.max_cycles_per_round > cycles.size()
                                   ? policy.max_cycles_per_round - cycles.size()
                                   : 0;
            if (remaining == 0 || enumerate_cycles(g, scc, remaining, cycles)) {
                truncated = true;
                break;
            }
        }
        res.cycles_found += cycles.size();

        if (!truncated && cycles.empty()) {
            std::vector<int32_t> schedule = derive_schedule(g);
            res.ordered.reserve(schedule.size());
            for (int32_t idx : schedule) res.ordered.push_back(std::move(current[idx]));
            return res;
        }

        // Complete enumeration: greedy max-participation break clears every
        // elementary cycle. Truncated: fall back to the structural breaker.
        std::vector<int32_t> removed =
            truncated ? degree_cycle_break(g)
                      : greedy_cycle_break(CycleTable::build(current.size(), std::move(cycles)));
        res.cycle_removals += removed.size();

        std::vector<char> dead(current.size(), 0);
        for (int32_t v : removed) dead[v] = 1;
        std::vector<Transaction> survivors;
        survivors.reserve(current.size() - removed.size());
        for (size_t i = 0; i < current.size(); ++i) {
            if (dead[i])
                res.early_aborted.push_back(std::move(current[i]));
            else
                survivors.push_back(std::move(current[i]));
        }
        current = std::move(survivors);
    }
}

Orderer::IngestOutcome Orderer::ingest(Transaction tx, SimTime now) {
    IngestOutcome outcome;
    if (mode_early_aborts(mode_)) {
        EarlyAbortNotice notice;
        bool stale = stale_on_arrival(tx, notice);
        fold_observations(tx);  // observations are evidence even from aborted txs
        if (stale) {
            outcome.aborted.push_back(notice);
            return outcome;
        }
        auto evicted = evict_stale(tx);
        outcome.aborted.insert(outcome.aborted.end(), evicted.begin(), evicted.end());
    }
    admit(std::move(tx), now);
    if (auto reason = condition_met(now)) outcome.cut = cut(*reason);
    return outcome;
}

std::optional<CutBatch> Orderer::tick(SimTime now) {
    if (alive_count_ == 0 || !first_ts_) return std::nullopt;
    if (now - *first_ts_ >= policy_.max_wait) return cut(CutReason::Timeout);
    return std::nullopt;
}

std::optional<SimTime> Orderer::cut_deadline() const {
    if (alive_count_ == 0 || !first_ts_) return std::nullopt;
    return *first_ts_ + policy_.max_wait;
}

bool Orderer::stale_on_arrival(const Transaction& tx, EarlyAbortNotice& notice) const {
    for (const ReadEntry& e : tx.rs.entries) {
        auto it = newest_.find(e.key);
        if (it != newest_.end() && e.version < it->second) {
            notice = ordering_abort(tx, e.key, e.version, it->second);
            return true;
        }
    }
    return false;
}

void Orderer::fold_observations(const Transaction& tx) {
    for (const ReadEntry& e : tx.rs.entries) {
        auto [it, inserted] = newest_.try_emplace(e.key, e.version);
        if (!inserted && e.version > it->second) it->second = e.version;
    }
}

std::vector<EarlyAbortNotice> Orderer::evict_stale(const Transaction& admitted) {
    std::vector<EarlyAbortNotice> notices;
    for (const ReadEntry& e : admitted.rs.entries) {
        auto rit = readers_.find(e.key);
        if (rit == readers_.end()) continue;
        Version newest = newest_.at(e.key);
        for (size_t idx : rit->second) {
            if (!alive_[idx]) continue;
            auto v = read_version_of(pending_[idx], e.key);
            if (v && *v < newest) {
                notices.push_back(ordering_abort(pending_[idx], e.key, *v, newest));
                drop(idx);
            }
        }
    }
    return notices;
}

void Orderer::admit(Transaction tx, SimTime now) {
    size_t idx = pending_.size();
    if (!first_ts_) first_ts_ = now;
    bytes_ += transaction_wire_size(tx);
    for (const ReadEntry& e : tx.rs.entries) {
        readers_[e.key].push_back(idx);
        ++key_refs_[e.key];
    }
    for (const WriteEntry& e : tx.ws.entries)
        if (!read_version_of(tx, e.key)) ++key_refs_[e.key];
    pending_.push_back(std::move(tx));
    alive_.push_back(1);
    ++alive_count_;
}

void Orderer::drop(size_t idx) {
    alive_[idx] = 0;
    --alive_count_;
    const Transaction& tx = pending_[idx];
    bytes_ -= transaction_wire_size(tx);
    auto unref = [&](const Key& k) {
        auto it = key_refs_.find(k);
        if (it != key_refs_.end() && --it->second == 0) key_refs_.erase(it);
    };
    for (const ReadEntry& e : tx.rs.entries) unref(e.key);
    for (const WriteEntry& e : tx.ws.entries)
        if (!read_version_of(tx, e.key)) unref(e.key);
    if (alive_count_ == 0) first_ts_.reset();
}

std::optional<CutReason> Orderer::condition_met(SimTime now) const {
    if (alive_count_ >= policy_.max_tx_count) return CutReason::TxCount;
    if (bytes_ >= policy_.max_bytes) return CutReason::Bytes;
    if (first_ts_ && now - *first_ts_ >= policy_.max_wait) return CutReason::Timeout;
    if (key_refs_.size() >= policy_.max_unique_keys) return CutReason::UniqueKeys;
    return std::nullopt;
}

CutBatch Orderer::cut(CutReason reason) {
    CutBatch batch;
    batch.reason = reason;
    batch.txs.reserve(alive_count_);
    for (size_t i = 0; i < pending_.size(); ++i)
        if (alive_[i]) batch.txs.push_back(std::move(pending_[i]));
    pending_.clear();
    alive_.clear();
    alive_count_ = 0;
    bytes_ = 0;
    first_ts_.reset();
    key_refs_.clear();
    readers_.clear();
    newest_.clear();
    return batch;
}

}  // namespace sovc
