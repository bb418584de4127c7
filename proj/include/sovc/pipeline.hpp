#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sovc/metrics.hpp"
#include "sovc/model.hpp"
#include "sovc/orderer.hpp"
#include "sovc/workload.hpp"

namespace sovc {

struct NetworkTopology {
    uint32_t organizations = 2;
    uint32_t peers_per_org = 2;
    uint32_t channels = 1;
    uint32_t clients_per_channel = 4;
};

struct RunConfig {
    Mode mode = Mode::Vanilla;
    NetworkTopology topology;
    BatchPolicy batch;
    WorkloadParams workload;
    double rate_per_client = 512.0;  // proposals per second per client
    double duration_s = 90.0;        // firing window; the pipeline drains afterwards
    uint64_t seed = 1;

    // false: deterministic virtual-time scheduler (golden runs, tests).
    // true: threaded wall-clock scheduler (throughput measurement).
    bool wall_clock = false;

    // Virtual scheduler knobs. Reads of one simulation spread over sim_delay so
    // commits can land mid-simulation; block delivery takes deliver_delay plus
    // a seeded per-(block, peer) jitter bounded by deliver_jitter.
    double sim_delay_ms = 1.0;
    double deliver_delay_ms = 1.0;
    double deliver_jitter_ms = 2.0;

    std::ostream* event_log = nullptr;  // one line per event when set

    void validate() const;  // throws ConfigError
};

// Test/fault-injection drive: explicit proposals with optional endorser
// tampering. tamper_ws replaces the write set reported by the last policy
// peer; with malicious_pack the client still assembles the transaction,
// carrying the tampered write set alongside every returned digest (so only
// validation can catch it); without it the honest client detects the mismatch
// and drops the proposal.
struct ScriptedProposal {
    Proposal proposal;
    double fire_at_s = 0.0;
    uint64_t client = 0;
    std::optional<WriteSet> tamper_ws;
    bool malicious_pack = false;
};

// Final per-peer state, for cross-peer consistency checks.
struct PeerSnapshot {
    std::string peer_id;
    std::string ledger_dump;
    std::string state_dump;
};

struct RunArtifacts {
    std::vector<std::vector<PeerSnapshot>> channels;  // [channel][peer]
};

// End-to-end simulate-order-validate-commit run with the generated
// asset-transfer workload.
RunMetrics run(const RunConfig& config, RunArtifacts* artifacts = nullptr);

// Scripted variant; always executes on the virtual scheduler.
RunMetrics run_scripted(const RunConfig& config, const std::vector<ScriptedProposal>& script,
                        RunArtifacts* artifacts = nullptr);

}  // namespace sovc
