#include "sovc/endorser.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "sovc/errors.hpp"

namespace sovc {

std::string_view to_string(AbortPhase p) {
    return p == AbortPhase::Simulation ? "simulation" : "ordering";
}

Simulation::Simulation(const Proposal& proposal, const StateStore& store, std::string peer_id,
                       SimMode mode)
    : proposal_(proposal), store_(store), peer_id_(std::move(peer_id)), mode_(mode) {
    snapshot_block_id_ = store_.snapshot_last_block_id();

    const ContractCall& c = proposal_.contract;
    // Read plan: declared read keys first, then written balances (the
    // asset-transfer contract reads a balance before updating it). Each key is
    // read once; the first read's version enters the read set.
    std::unordered_set<std::string_view> seen;
    plan_.reserve(c.read_keys.size() + c.write_keys.size());
    for (const Key& k : c.read_keys) {
        if (seen.insert(k).second) plan_.push_back(k);
    }
    if (c.contract_name == "asset-transfer") {
        for (const Key& k : c.write_keys) {
            if (seen.insert(k).second) plan_.push_back(k);
        }
    }
    reads_.reserve(plan_.size());
    read_values_.reserve(plan_.size());
}

Simulation::Status Simulation::step() {
    if (status_ != Status::Running) return status_;
    if (next_read_ >= plan_.size()) {
        finalize();
        return status_;
    }

    const Key& key = plan_[next_read_];
    StateEntry entry = store_.read(key);

    if (mode_ == SimMode::PlusPlus && entry.version.block_id > snapshot_block_id_) {
        // A commit landed mid-simulation. Abort only if it invalidated an
        // earlier read; a consistent read set may still validate.
        for (const ReadEntry& prior : reads_) {
            StateEntry cur = store_.read(prior.key);
            if (cur.version != prior.version) {
                notice_ = EarlyAbortNotice{proposal_.proposal_id, key, entry.version.block_id,
                                           snapshot_block_id_, AbortPhase::Simulation};
                status_ = Status::Aborted;
                return status_;
            }
        }
        snapshot_block_id_ = entry.version.block_id;
    }

    reads_.push_back(ReadEntry{key, entry.version});
    read_values_.push_back(entry.value);
    ++next_read_;
    if (next_read_ == plan_.size()) finalize();
    return status_;
}

void Simulation::finalize() {
    const ContractCall& c = proposal_.contract;
    if (c.write_keys.size() != c.amounts.size())
        throw std::invalid_argument("contract: one amount per write key required");

    std::unordered_map<std::string_view, int64_t> value_of;
    value_of.reserve(reads_.size());
    for (size_t i = 0; i < reads_.size(); ++i) value_of[reads_[i].key] = read_values_[i];

    std::vector<WriteEntry> writes;
    writes.reserve(c.write_keys.size());
    for (size_t i = 0; i < c.write_keys.size(); ++i) {
        int64_t value = c.amounts[i];
        if (c.contract_name == "asset-transfer") value += value_of.at(c.write_keys[i]);
        writes.push_back(WriteEntry{c.write_keys[i], value});
    }

    result_.rs = ReadSet::canonicalize(reads_);
    result_.ws = WriteSet::canonicalize(std::move(writes));
    result_.digest = compute_digest(result_.rs, result_.ws, c.contract_name, proposal_.policy);
    result_.peer_id = peer_id_;
    status_ = Status::Done;
}

SimulationResult&& Simulation::take_result() {
    if (status_ != Status::Done) throw std::logic_error("simulation not complete");
    return std::move(result_);
}

std::variant<SimulationResult, EarlyAbortNotice> simulate(const Proposal& proposal,
                                                          const StateStore& store,
                                                          const std::string& peer_id,
                                                          SimMode mode,
                                                          const ReadHook& before_read) {
    Simulation sim(proposal, store, peer_id, mode);
    while (sim.status() == Simulation::Status::Running) {
        if (before_read && sim.reads_done() < sim.total_reads()) before_read(sim.reads_done());
        sim.step();
    }
    if (sim.status() == Simulation::Status::Aborted) return sim.notice();
    return sim.take_result();
}

SimulationResult tamper_write_set(const SimulationResult& honest, WriteSet tampered_ws,
                                  const std::string& contract_name,
                                  const EndorsementPolicy& policy) {
    SimulationResult out = honest;
    out.ws = std::move(tampered_ws);
    out.digest = compute_digest(out.rs, out.ws, contract_name, policy);
    return out;
}

std::variant<Transaction, EndorsementMismatch> endorse_and_form(
    const Proposal& proposal, const std::vector<SimulationResult>& results) {
    if (results.size() != proposal.policy.required_endorsers.size())
        throw std::invalid_argument("one simulation result per policy peer required");

    std::vector<std::string> disagreeing;
    for (size_t i = 1; i < results.size(); ++i) {
        if (results[i].rs != results[0].rs || results[i].ws != results[0].ws)
            disagreeing.push_back(results[i].peer_id);
    }
    if (!disagreeing.empty())
        return EndorsementMismatch{proposal.proposal_id, std::move(disagreeing)};

    std::vector<PeerDigest> digests;
    digests.reserve(results.size());
    for (const SimulationResult& r : results) digests.push_back(PeerDigest{r.peer_id, r.digest});
    return form_transaction(proposal, results[0].rs, results[0].ws, std::move(digests));
}

Transaction form_transaction(const Proposal& proposal, ReadSet rs, WriteSet ws,
                             std::vector<PeerDigest> digests) {
    Transaction tx;
    tx.tx_id = proposal.proposal_id;
    tx.rs = std::move(rs);
    tx.ws = std::move(ws);
    tx.digests = std::move(digests);
    tx.policy = proposal.policy;
    tx.contract_name = proposal.contract.contract_name;
    return tx;
}

}  // namespace sovc
