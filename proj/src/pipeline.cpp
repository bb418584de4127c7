#include "sovc/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cassert>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <ostream>
#include <thread>
#include <unordered_map>

#include "sovc/endorser.hpp"
#include "sovc/errors.hpp"
#include "sovc/validator.hpp"

namespace sovc {

void RunConfig::validate() const {
    if (topology.organizations < 1 || topology.peers_per_org < 1 || topology.channels < 1 ||
        topology.clients_per_channel < 1)
        throw ConfigError("topology: all counts must be >= 1");
    if (rate_per_client <= 0) throw ConfigError("rate_per_client must be positive");
    if (duration_s < 0) throw ConfigError("duration_s must be >= 0");
    if (workload.rw == 0 || workload.rw > workload.n_accounts)
        throw ConfigError("workload: need 0 < rw <= n_accounts");
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(workload.hot_read_prob) || !prob(workload.hot_write_prob) ||
        !prob(workload.hot_set_fraction))
        throw ConfigError("workload probabilities must be in [0, 1]");
    if (batch.max_tx_count == 0 || batch.max_bytes == 0 || batch.max_unique_keys == 0 ||
        batch.max_wait <= SimTime::zero())
        throw ConfigError("batch policy values must be positive");
    if (sim_delay_ms < 0 || deliver_delay_ms < 0 || deliver_jitter_ms < 0)
        throw ConfigError("delays must be >= 0");
}

namespace {

constexpr int64_t kNsPerSec = 1'000'000'000;

int64_t ms_to_ns(double ms) { return static_cast<int64_t>(std::llround(ms * 1e6)); }

uint64_t mix64(uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

struct Peer {
    std::string id;
    StateStore store;
    Ledger ledger;

    Peer(std::string peer_id, const std::vector<std::pair<Key, int64_t>>& genesis)
        : id(std::move(peer_id)), store(genesis) {}
};

struct Counters {
    std::atomic<uint64_t> fired{0};
    std::atomic<uint64_t> ea_sim{0};
    std::atomic<uint64_t> ea_order{0};
    std::atomic<uint64_t> success{0};
    std::atomic<uint64_t> fail{0};
    std::atomic<uint64_t> mismatched{0};
};

class Buckets {
public:
    enum Kind : size_t { Success = 0, Fail = 1, EaSim = 2, EaOrder = 3 };

    explicit Buckets(size_t seconds) : rows_(seconds) {}

    void add(int64_t t_ns, Kind kind, uint64_t n = 1) {
        size_t sec = static_cast<size_t>(std::max<int64_t>(0, t_ns / kNsPerSec));
        if (sec >= rows_.size()) sec = rows_.size() - 1;
        rows_[sec][kind].fetch_add(n, std::memory_order_relaxed);
    }

    std::vector<SecondRow> collect() const {
        std::vector<SecondRow> out;
        size_t last = 0;
        bool any = false;
        for (size_t s = 0; s < rows_.size(); ++s) {
            for (size_t k = 0; k < 4; ++k)
                if (rows_[s][k].load(std::memory_order_relaxed) != 0) {
                    last = s;
                    any = true;
                }
        }
        if (!any) return out;
        out.reserve(last + 1);
        for (size_t s = 0; s <= last; ++s) {
            SecondRow r;
            r.second = static_cast<uint32_t>(s);
            r.success = rows_[s][Success].load(std::memory_order_relaxed);
            r.fail = rows_[s][Fail].load(std::memory_order_relaxed);
            r.ea_sim = rows_[s][EaSim].load(std::memory_order_relaxed);
            r.ea_order = rows_[s][EaOrder].load(std::memory_order_relaxed);
            out.push_back(r);
        }
        return out;
    }

private:
    std::vector<std::array<std::atomic<uint64_t>, 4>> rows_;
};

struct Channel {
    uint32_t index = 0;
    std::unique_ptr<Orderer> orderer;
    std::vector<std::unique_ptr<Peer>> peers;
    std::unordered_map<std::string, size_t> peer_index;
    EndorsementPolicy default_policy;
    uint64_t next_block_id = 1;
    Counters counters;
    std::vector<int64_t> peer_last_arrival;  // virtual-mode FIFO enforcement
};

struct Env {
    const RunConfig& cfg;
    std::vector<std::unique_ptr<Channel>> channels;
    Buckets buckets;
    int64_t duration_ns;
    int64_t interval_ns;
    int64_t sim_ns;
    int64_t deliver_ns;
    int64_t jitter_ns;
    std::mutex log_mutex;

    Env(const RunConfig& config, const std::vector<std::pair<Key, int64_t>>& genesis,
        size_t bucket_seconds)
        : cfg(config),
          buckets(bucket_seconds),
          duration_ns(static_cast<int64_t>(std::llround(config.duration_s * 1e9))),
          interval_ns(std::max<int64_t>(1, static_cast<int64_t>(std::llround(
                                              1e9 / config.rate_per_client)))),
          sim_ns(ms_to_ns(config.sim_delay_ms)),
          deliver_ns(ms_to_ns(config.deliver_delay_ms)),
          jitter_ns(ms_to_ns(config.deliver_jitter_ms)) {
        for (uint32_t c = 0; c < config.topology.channels; ++c) {
            auto ch = std::make_unique<Channel>();
            ch->index = c;
            ch->orderer = std::make_unique<Orderer>(config.batch, config.mode);
            for (uint32_t o = 0; o < config.topology.organizations; ++o) {
                for (uint32_t p = 0; p < config.topology.peers_per_org; ++p) {
                    std::string id =
                        "org" + std::to_string(o) + ".peer" + std::to_string(p);
                    ch->peer_index[id] = ch->peers.size();
                    ch->peers.push_back(std::make_unique<Peer>(id, genesis));
                }
                ch->default_policy.required_endorsers.push_back("org" + std::to_string(o) +
                                                                ".peer0");
            }
            ch->peer_last_arrival.assign(ch->peers.size(), 0);
            channels.push_back(std::move(ch));
        }
    }

    void log(int64_t t, const std::string& actor, std::string_view event, uint64_t id) {
        if (cfg.event_log == nullptr) return;
        std::lock_guard<std::mutex> lock(log_mutex);
        (*cfg.event_log) << t << ',' << actor << ',' << event << ',' << id << '\n';
    }

    int64_t deliver_jitter(uint32_t channel, uint64_t block_id, size_t peer) {
        if (jitter_ns == 0) return 0;
        Rng rng(mix64(cfg.seed ^ mix64((uint64_t(channel) << 48) ^ (block_id << 8) ^ peer)));
        return static_cast<int64_t>(rng.uniform(static_cast<uint64_t>(jitter_ns) + 1));
    }

    RunMetrics finish(RunArtifacts* artifacts) {
        RunMetrics m;
        m.duration_s = cfg.duration_s;
        m.rows = buckets.collect();
        for (auto& ch : channels) {
            ChannelTotals t;
            t.fired = ch->counters.fired.load();
            t.success = ch->counters.success.load();
            t.fail = ch->counters.fail.load();
            t.ea_sim = ch->counters.ea_sim.load();
            t.ea_order = ch->counters.ea_order.load();
            t.mismatched = ch->counters.mismatched.load();
            t.in_flight = ch->orderer->pending_count();
            m.channels.push_back(t);
            m.fired += t.fired;
            m.success += t.success;
            m.fail += t.fail;
            m.ea_sim += t.ea_sim;
            m.ea_order += t.ea_order;
            m.mismatched += t.mismatched;
            m.in_flight += t.in_flight;
        }
        if (artifacts != nullptr) {
            artifacts->channels.clear();
            for (auto& ch : channels) {
                std::vector<PeerSnapshot> snaps;
                for (auto& peer : ch->peers)
                    snaps.push_back(PeerSnapshot{peer->id, peer->ledger.dump_string(),
                                                 peer->store.dump_string()});
                artifacts->channels.push_back(std::move(snaps));
            }
        }
        return m;
    }
};

// Endorsement for one proposal. Honest endorsers over identical state produce
// identical unkeyed digests, so the contract runs once and the digest is
// replicated per policy peer; fault injection derives the misreported result
// from the honest one.
struct SimTask {
    Proposal proposal;
    std::optional<WriteSet> tamper_ws;
    bool malicious_pack = false;
    Simulation sim;

    SimTask(Proposal p, const StateStore& store, const std::string& peer, SimMode mode,
            std::optional<WriteSet> tamper, bool pack)
        : proposal(std::move(p)),
          tamper_ws(std::move(tamper)),
          malicious_pack(pack),
          sim(proposal, store, peer, mode) {}
};

// Outcome of the client-side endorsement step.
struct Endorsed {
    std::optional<Transaction> tx;
    bool mismatched = false;
};

Endorsed client_assemble(SimTask& task) {
    Endorsed out;
    SimulationResult honest = task.sim.take_result();
    const EndorsementPolicy& policy = task.proposal.policy;

    if (!task.tamper_ws) {
        std::vector<PeerDigest> digests;
        digests.reserve(policy.required_endorsers.size());
        for (const std::string& peer : policy.required_endorsers)
            digests.push_back(PeerDigest{peer, honest.digest});
        out.tx = form_transaction(task.proposal, std::move(honest.rs), std::move(honest.ws),
                                  std::move(digests));
        return out;
    }

    std::vector<SimulationResult> results;
    results.reserve(policy.required_endorsers.size());
    for (size_t i = 0; i < policy.required_endorsers.size(); ++i) {
        SimulationResult r = honest;
        r.peer_id = policy.required_endorsers[i];
        if (i + 1 == policy.required_endorsers.size())
            r = tamper_write_set(r, *task.tamper_ws, task.proposal.contract.contract_name,
                                 policy);
        results.push_back(std::move(r));
    }

    if (task.malicious_pack) {
        std::vector<PeerDigest> digests;
        for (const SimulationResult& r : results)
            digests.push_back(PeerDigest{r.peer_id, r.digest});
        out.tx = form_transaction(task.proposal, results.front().rs, results.back().ws,
                                  std::move(digests));
        return out;
    }

    auto formed = endorse_and_form(task.proposal, results);
    if (std::holds_alternative<Transaction>(formed))
        out.tx = std::get<Transaction>(std::move(formed));
    else
        out.mismatched = true;
    return out;
}

// ---------------------------------------------------------------------------
// Virtual-time scheduler: a single logical clock drives every actor; events at
// equal timestamps run in scheduling order, so runs are bit-deterministic.
// ---------------------------------------------------------------------------

class EventQueue {
public:
    void schedule(int64_t t, std::function<void()> fn) {
        heap_.push_back(Ev{t, next_seq_++, std::move(fn)});
        std::push_heap(heap_.begin(), heap_.end(), later);
    }

    bool run_one() {
        if (heap_.empty()) return false;
        std::pop_heap(heap_.begin(), heap_.end(), later);
        Ev ev = std::move(heap_.back());
        heap_.pop_back();
        now_ = ev.t;
        ev.fn();
        return true;
    }

    int64_t now() const { return now_; }

private:
    struct Ev {
        int64_t t;
        uint64_t seq;
        std::function<void()> fn;
    };
    static bool later(const Ev& a, const Ev& b) {
        return a.t > b.t || (a.t == b.t && a.seq > b.seq);
    }

    std::vector<Ev> heap_;
    uint64_t next_seq_ = 0;
    int64_t now_ = 0;
};

class VirtualPipeline {
public:
    explicit VirtualPipeline(Env& env) : env_(env) {}

    void add_generated_clients() {
        workloads_.resize(env_.channels.size());
        next_pid_.assign(env_.channels.size(), 0);
        for (auto& ch : env_.channels) {
            auto& streams = workloads_[ch->index];
            for (uint32_t c = 0; c < env_.cfg.topology.clients_per_channel; ++c) {
                uint64_t stream_id = (uint64_t(ch->index) << 16) | c;
                streams.push_back(std::make_unique<AssetWorkload>(env_.cfg.workload, stream_id));
                schedule_fire(*ch, c, 0);
            }
        }
    }

    void add_script(const std::vector<ScriptedProposal>& script) {
        Channel& ch = *env_.channels.front();
        for (const ScriptedProposal& sp : script) {
            int64_t t = static_cast<int64_t>(std::llround(sp.fire_at_s * 1e9));
            ScriptedProposal copy = sp;
            q_.schedule(t, [this, &ch, copy = std::move(copy), t]() {
                ch.counters.fired.fetch_add(1);
                env_.log(t, "ch0.client" + std::to_string(copy.client), "fire",
                         copy.proposal.proposal_id);
                begin_simulation(ch, copy.proposal, copy.tamper_ws, copy.malicious_pack);
            });
        }
    }

    void execute() {
        while (q_.run_one()) {
        }
    }

private:
    void schedule_fire(Channel& ch, uint32_t client, uint64_t k) {
        int64_t phase = env_.interval_ns * client /
                        std::max<uint32_t>(1, env_.cfg.topology.clients_per_channel);
        int64_t t = static_cast<int64_t>(k) * env_.interval_ns + phase;
        if (t >= env_.duration_ns) return;
        q_.schedule(t, [this, &ch, client, k, t]() {
            ch.counters.fired.fetch_add(1);
            uint64_t pid = (uint64_t(ch.index) << 40) | next_pid_[ch.index]++;
            Proposal p = workloads_[ch.index][client]->next(pid, client, ch.default_policy);
            env_.log(t, "ch" + std::to_string(ch.index) + ".client" + std::to_string(client),
                     "fire", pid);
            begin_simulation(ch, std::move(p), std::nullopt, false);
            schedule_fire(ch, client, k + 1);
        });
    }

    void begin_simulation(Channel& ch, Proposal proposal, std::optional<WriteSet> tamper,
                          bool pack) {
        SimMode sim_mode =
            mode_early_aborts(env_.cfg.mode) ? SimMode::PlusPlus : SimMode::Vanilla;
        const std::string& endorser = ch.default_policy.required_endorsers.front();
        auto task = std::make_shared<SimTask>(std::move(proposal), ch.peers.front()->store,
                                              endorser, sim_mode, std::move(tamper), pack);
        size_t reads = task->sim.total_reads();
        int64_t start = q_.now();
        if (reads == 0) {
            q_.schedule(start + env_.sim_ns, [this, &ch, task]() { sim_step(ch, *task); });
            return;
        }
        int64_t gap = env_.sim_ns / static_cast<int64_t>(reads + 1);
        for (size_t j = 0; j < reads; ++j) {
            q_.schedule(start + gap * static_cast<int64_t>(j + 1),
                        [this, &ch, task]() { sim_step(ch, *task); });
        }
    }

    void sim_step(Channel& ch, SimTask& task) {
        if (task.sim.status() != Simulation::Status::Running) return;
        task.sim.step();
        int64_t now = q_.now();
        if (task.sim.status() == Simulation::Status::Aborted) {
            ch.counters.ea_sim.fetch_add(1);
            env_.buckets.add(now, Buckets::EaSim);
            env_.log(now, "ch" + std::to_string(ch.index) + ".endorser", "early-abort-sim",
                     task.sim.notice().proposal_id);
            return;
        }
        if (task.sim.status() == Simulation::Status::Done) {
            Endorsed e = client_assemble(task);
            if (e.mismatched) {
                ch.counters.mismatched.fetch_add(1);
                env_.log(now, "ch" + std::to_string(ch.index) + ".client",
                         "endorsement-mismatch", task.proposal.proposal_id);
                return;
            }
            ingest(ch, std::move(*e.tx));
        }
    }

    void ingest(Channel& ch, Transaction tx) {
        int64_t now = q_.now();
        uint64_t tx_id = tx.tx_id;
        env_.log(now, "ch" + std::to_string(ch.index) + ".orderer", "ingest", tx_id);
        auto outcome = ch.orderer->ingest(std::move(tx), SimTime(now));
        account_order_aborts(ch, outcome.aborted, now);
        if (outcome.cut) {
            finalize_block(ch, std::move(*outcome.cut));
        } else if (ch.orderer->pending_count() == 1) {
            auto deadline = ch.orderer->cut_deadline();
            if (deadline)
                q_.schedule(deadline->count(), [this, &ch]() {
                    auto batch = ch.orderer->tick(SimTime(q_.now()));
                    if (batch) finalize_block(ch, std::move(*batch));
                });
        }
    }

    void account_order_aborts(Channel& ch, const std::vector<EarlyAbortNotice>& notices,
                              int64_t now) {
        for (const EarlyAbortNotice& n : notices) {
            ch.counters.ea_order.fetch_add(1);
            env_.buckets.add(now, Buckets::EaOrder);
            env_.log(now, "ch" + std::to_string(ch.index) + ".orderer", "early-abort-order",
                     n.proposal_id);
        }
    }

    void finalize_block(Channel& ch, CutBatch batch) {
        int64_t now = q_.now();
        ReorderResult rr = reorder(std::move(batch.txs), env_.cfg.mode, env_.cfg.batch);
        for (const Transaction& tx : rr.early_aborted) {
            ch.counters.ea_order.fetch_add(1);
            env_.buckets.add(now, Buckets::EaOrder);
            env_.log(now, "ch" + std::to_string(ch.index) + ".orderer", "early-abort-order",
                     tx.tx_id);
        }
        if (rr.ordered.empty()) return;
        Block block;
        block.block_id = ch.next_block_id++;
        block.txs = std::move(rr.ordered);
        env_.log(now, "ch" + std::to_string(ch.index) + ".orderer", "cut", block.block_id);
        for (size_t p = 0; p < ch.peers.size(); ++p) {
            int64_t arrival = now + env_.deliver_ns + env_.deliver_jitter(ch.index, block.block_id, p);
            // per-peer FIFO: a later block never overtakes an earlier one
            arrival = std::max(arrival, ch.peer_last_arrival[p] + 1);
            ch.peer_last_arrival[p] = arrival;
            q_.schedule(arrival, [this, &ch, p, block]() { validate_on_peer(ch, p, block); });
        }
    }

    void validate_on_peer(Channel& ch, size_t peer_idx, Block block) {
        int64_t now = q_.now();
        Peer& peer = *ch.peers[peer_idx];
        uint64_t block_id = block.block_id;
        std::vector<TxVerdict> verdicts =
            validate_and_commit(std::move(block), peer.store, peer.ledger);
        env_.log(now, "ch" + std::to_string(ch.index) + "." + peer.id, "commit", block_id);
        if (peer_idx == 0) {
            for (TxVerdict v : verdicts) {
                if (v == TxVerdict::Valid) {
                    ch.counters.success.fetch_add(1);
                    env_.buckets.add(now, Buckets::Success);
                } else {
                    ch.counters.fail.fetch_add(1);
                    env_.buckets.add(now, Buckets::Fail);
                }
            }
        }
    }

    Env& env_;
    EventQueue q_;
    std::vector<std::vector<std::unique_ptr<AssetWorkload>>> workloads_;
    std::vector<uint64_t> next_pid_;
};

// ---------------------------------------------------------------------------
// Wall-clock scheduler: real threads per actor, used for throughput runs.
// Simulation reads are not spread in time here; cross-block staleness is
// handled by the orderer's ingest filter.
// ---------------------------------------------------------------------------

class WallClockPipeline {
public:
    explicit WallClockPipeline(Env& env) : env_(env) {}

    void run() {
        start_ = std::chrono::steady_clock::now();
        size_t n_channels = env_.channels.size();
        ingest_queues_ = std::vector<IngestQueue>(n_channels);
        peer_queues_.resize(n_channels);
        for (auto& ch : env_.channels)
            peer_queues_[ch->index] = std::vector<BlockQueue>(ch->peers.size());

        std::vector<std::thread> clients, orderers, peers;
        for (auto& ch : env_.channels) {
            for (size_t p = 0; p < ch->peers.size(); ++p)
                peers.emplace_back([this, &ch = *ch, p]() { peer_main(ch, p); });
            orderers.emplace_back([this, &ch = *ch]() { orderer_main(ch); });
            for (uint32_t c = 0; c < env_.cfg.topology.clients_per_channel; ++c)
                clients.emplace_back([this, &ch = *ch, c]() { client_main(ch, c); });
        }

        for (auto& t : clients) t.join();
        {
            for (auto& q : ingest_queues_) {
                std::lock_guard<std::mutex> lock(q.m);
                q.clients_done = true;
                q.cv.notify_all();
            }
        }
        for (auto& t : orderers) t.join();
        for (auto& t : peers) t.join();
    }

private:
    struct IngestQueue {
        std::mutex m;
        std::condition_variable cv;
        std::deque<Transaction> q;
        bool clients_done = false;
    };
    struct BlockQueue {
        std::mutex m;
        std::condition_variable cv;
        std::deque<Block> q;  // block_id 0 is the shutdown sentinel
    };

    int64_t elapsed_ns() const {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

    void client_main(Channel& ch, uint32_t client) {
        AssetWorkload workload(env_.cfg.workload, (uint64_t(ch.index) << 16) | client);
        SimMode sim_mode =
            mode_early_aborts(env_.cfg.mode) ? SimMode::PlusPlus : SimMode::Vanilla;
        int64_t phase = env_.interval_ns * client /
                        std::max<uint32_t>(1, env_.cfg.topology.clients_per_channel);
        const std::string& endorser = ch.default_policy.required_endorsers.front();
        const StateStore& store = ch.peers.front()->store;

        for (uint64_t k = 0;; ++k) {
            int64_t target = static_cast<int64_t>(k) * env_.interval_ns + phase;
            if (target >= env_.duration_ns) break;
            std::this_thread::sleep_until(start_ + std::chrono::nanoseconds(target));

            ch.counters.fired.fetch_add(1);
            uint64_t pid = (uint64_t(ch.index) << 40) | (uint64_t(client) << 32) | k;
            Proposal p = workload.next(pid, client, ch.default_policy);
            auto outcome = simulate(p, store, endorser, sim_mode);
            if (std::holds_alternative<EarlyAbortNotice>(outcome)) {
                ch.counters.ea_sim.fetch_add(1);
                env_.buckets.add(elapsed_ns(), Buckets::EaSim);
                continue;
            }
            SimulationResult& r = std::get<SimulationResult>(outcome);
            std::vector<PeerDigest> digests;
            digests.reserve(ch.default_policy.required_endorsers.size());
            for (const std::string& peer : ch.default_policy.required_endorsers)
                digests.push_back(PeerDigest{peer, r.digest});
            Transaction tx =
                form_transaction(p, std::move(r.rs), std::move(r.ws), std::move(digests));
            IngestQueue& q = ingest_queues_[ch.index];
            {
                std::lock_guard<std::mutex> lock(q.m);
                q.q.push_back(std::move(tx));
            }
            q.cv.notify_one();
        }
    }

    void orderer_main(Channel& ch) {
        IngestQueue& q = ingest_queues_[ch.index];
        std::deque<Transaction> local;
        while (true) {
            bool done = false;
            {
                std::unique_lock<std::mutex> lock(q.m);
                auto ready = [&] { return !q.q.empty() || q.clients_done; };
                auto deadline = ch.orderer->cut_deadline();
                if (deadline)
                    q.cv.wait_until(lock, start_ + *deadline, ready);
                else
                    q.cv.wait(lock, ready);
                local.swap(q.q);
                done = q.clients_done && local.empty();
            }

            int64_t now = elapsed_ns();
            while (!local.empty()) {
                auto outcome = ch.orderer->ingest(std::move(local.front()), SimTime(now));
                local.pop_front();
                account_order_aborts(ch, outcome.aborted, now);
                if (outcome.cut) finalize_block(ch, std::move(*outcome.cut));
            }
            if (auto batch = ch.orderer->tick(SimTime(now))) finalize_block(ch, std::move(*batch));

            if (done) {
                // Final batch gets its timer chance, as it would in a longer run.
                if (ch.orderer->pending_count() > 0) {
                    if (auto deadline = ch.orderer->cut_deadline())
                        std::this_thread::sleep_until(start_ + *deadline);
                    if (auto batch = ch.orderer->tick(SimTime(elapsed_ns())))
                        finalize_block(ch, std::move(*batch));
                }
                for (auto& pq : peer_queues_[ch.index]) {
                    std::lock_guard<std::mutex> lock(pq.m);
                    pq.q.push_back(Block{});  // sentinel
                    pq.cv.notify_one();
                }
                return;
            }
        }
    }

    void account_order_aborts(Channel& ch, const std::vector<EarlyAbortNotice>& notices,
                              int64_t now) {
        if (notices.empty()) return;
        ch.counters.ea_order.fetch_add(notices.size());
        env_.buckets.add(now, Buckets::EaOrder, notices.size());
    }

    void finalize_block(Channel& ch, CutBatch batch) {
        ReorderResult rr = reorder(std::move(batch.txs), env_.cfg.mode, env_.cfg.batch);
        int64_t now = elapsed_ns();
        if (!rr.early_aborted.empty()) {
            ch.counters.ea_order.fetch_add(rr.early_aborted.size());
            env_.buckets.add(now, Buckets::EaOrder, rr.early_aborted.size());
        }
        if (rr.ordered.empty()) return;
        Block block;
        block.block_id = ch.next_block_id++;
        block.txs = std::move(rr.ordered);
        for (size_t p = 0; p < ch.peers.size(); ++p) {
            BlockQueue& pq = peer_queues_[ch.index][p];
            std::lock_guard<std::mutex> lock(pq.m);
            pq.q.push_back(block);
            pq.cv.notify_one();
        }
    }

    void peer_main(Channel& ch, size_t peer_idx) {
        BlockQueue& pq = peer_queues_[ch.index][peer_idx];
        Peer& peer = *ch.peers[peer_idx];
        while (true) {
            Block block;
            {
                std::unique_lock<std::mutex> lock(pq.m);
                pq.cv.wait(lock, [&] { return !pq.q.empty(); });
                block = std::move(pq.q.front());
                pq.q.pop_front();
            }
            if (block.block_id == 0) return;  // sentinel
            std::vector<TxVerdict> verdicts =
                validate_and_commit(std::move(block), peer.store, peer.ledger);
            if (peer_idx == 0) {
                int64_t now = elapsed_ns();
                for (TxVerdict v : verdicts) {
                    if (v == TxVerdict::Valid) {
                        ch.counters.success.fetch_add(1);
                        env_.buckets.add(now, Buckets::Success);
                    } else {
                        ch.counters.fail.fetch_add(1);
                        env_.buckets.add(now, Buckets::Fail);
                    }
                }
            }
        }
    }

    Env& env_;
    std::chrono::steady_clock::time_point start_;
    std::vector<IngestQueue> ingest_queues_;
    std::vector<std::vector<BlockQueue>> peer_queues_;
};

size_t bucket_capacity(const RunConfig& cfg) {
    double wait_s =
        std::chrono::duration_cast<std::chrono::duration<double>>(cfg.batch.max_wait).count();
    return static_cast<size_t>(std::ceil(cfg.duration_s) + std::ceil(wait_s) + 8);
}

}  // namespace

RunMetrics run(const RunConfig& config, RunArtifacts* artifacts) {
    config.validate();
    Env env(config, AssetWorkload::genesis_accounts(config.workload), bucket_capacity(config));
    if (config.wall_clock) {
        WallClockPipeline pipeline(env);
        pipeline.run();
    } else {
        VirtualPipeline pipeline(env);
        pipeline.add_generated_clients();
        pipeline.execute();
    }
    return env.finish(artifacts);
}

RunMetrics run_scripted(const RunConfig& config, const std::vector<ScriptedProposal>& script,
                        RunArtifacts* artifacts) {
    config.validate();
    std::vector<std::pair<Key, int64_t>> genesis;
    {
        std::unordered_map<Key, int64_t> keys;
        for (const ScriptedProposal& sp : script) {
            for (const Key& k : sp.proposal.contract.read_keys) keys.emplace(k, 0);
            for (const Key& k : sp.proposal.contract.write_keys) keys.emplace(k, 0);
        }
        genesis.assign(keys.begin(), keys.end());
        std::sort(genesis.begin(), genesis.end());
    }
    Env env(config, genesis, bucket_capacity(config));
    VirtualPipeline pipeline(env);
    pipeline.add_script(script);
    pipeline.execute();
    return env.finish(artifacts);
}

}  // namespace sovc
