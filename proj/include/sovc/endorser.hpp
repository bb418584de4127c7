#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "sovc/model.hpp"
#include "sovc/state_store.hpp"

namespace sovc {

// Simulation staleness checks on (PlusPlus) or off (Vanilla baseline).
enum class SimMode : uint8_t { Vanilla, PlusPlus };

enum class AbortPhase : uint8_t { Simulation, Ordering };

std::string_view to_string(AbortPhase p);

// Notification that a transaction was discarded before validation because its
// eventual serializability failure is already certain.
struct EarlyAbortNotice {
    uint64_t proposal_id = 0;
    Key offending_key;
    uint64_t observed_block_id = 0;
    uint64_t snapshot_block_id = 0;
    AbortPhase phase = AbortPhase::Simulation;
};

struct SimulationResult {
    ReadSet rs;
    WriteSet ws;
    EndorsementDigest digest;
    std::string peer_id;
};

struct EndorsementMismatch {
    uint64_t proposal_id = 0;
    std::vector<std::string> disagreeing_peers;
};

// Stepwise execution of one proposal's smart contract against the current
// state. Each step() performs a single read, so schedulers (and tests) can
// interleave block commits between reads; the store itself is never mutated.
//
// In PlusPlus mode a read whose version carries a block id above the
// simulation-start snapshot signals a concurrent commit. The read set built so
// far is then re-checked against the store: if any previously read version
// changed, the transaction can never validate and is aborted immediately;
// otherwise the read set is still consistent with the current state and the
// simulation continues with an advanced snapshot.
class Simulation {
public:
    enum class Status : uint8_t { Running, Done, Aborted };

    Simulation(const Proposal& proposal, const StateStore& store, std::string peer_id,
               SimMode mode);

    size_t total_reads() const { return plan_.size(); }
    size_t reads_done() const { return next_read_; }

    Status step();  // throws KeyNotFoundError for reads of absent keys
    Status status() const { return status_; }

    SimulationResult&& take_result();
    const EarlyAbortNotice& notice() const { return notice_; }

private:
    void finalize();

    const Proposal& proposal_;
    const StateStore& store_;
    std::string peer_id_;
    SimMode mode_;
    uint64_t snapshot_block_id_ = 0;

    std::vector<Key> plan_;  // keys to read, in contract order, deduplicated
    std::vector<ReadEntry> reads_;
    std::vector<int64_t> read_values_;
    size_t next_read_ = 0;

    Status status_ = Status::Running;
    SimulationResult result_;
    EarlyAbortNotice notice_;
};

// Called before each read when running a simulation to completion; index is the
// position in the read plan. Lets callers pace reads or inject commits.
using ReadHook = std::function<void(size_t read_index)>;

std::variant<SimulationResult, EarlyAbortNotice> simulate(const Proposal& proposal,
                                                          const StateStore& store,
                                                          const std::string& peer_id,
                                                          SimMode mode,
                                                          const ReadHook& before_read = {});

// Fault injection for a misbehaving endorser: reports a different write set but
// digests what it reports, so an honest client sees the results disagree.
SimulationResult tamper_write_set(const SimulationResult& honest, WriteSet tampered_ws,
                                  const std::string& contract_name,
                                  const EndorsementPolicy& policy);

// Honest client path: forms the transaction iff all endorsers returned
// identical read and write sets; otherwise reports which peers disagree with
// the first result received.
std::variant<Transaction, EndorsementMismatch> endorse_and_form(
    const Proposal& proposal, const std::vector<SimulationResult>& results);

// Unchecked assembly, used by the malicious-client path (packs an arbitrary
// write set together with digests taken from honest endorsements).
Transaction form_transaction(const Proposal& proposal, ReadSet rs, WriteSet ws,
                             std::vector<PeerDigest> digests);

}  // namespace sovc
