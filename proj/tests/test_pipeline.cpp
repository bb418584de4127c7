#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "sovc/errors.hpp"
#include "sovc/pipeline.hpp"

using namespace sovc;

namespace {

RunConfig small_config(Mode mode, uint64_t seed) {
    RunConfig cfg;
    cfg.mode = mode;
    cfg.seed = seed;
    cfg.workload.seed = seed;
    cfg.workload.n_accounts = 500;
    cfg.workload.rw = 4;
    cfg.workload.hot_read_prob = 0.4;
    cfg.workload.hot_write_prob = 0.1;
    cfg.workload.hot_set_fraction = 0.02;
    cfg.rate_per_client = 256;
    cfg.duration_s = 3.0;
    cfg.topology.clients_per_channel = 2;
    cfg.batch.max_tx_count = 64;
    return cfg;
}

// Fixture blocks leaving BalA = (100, v3) and BalB = (50, v2), then the
// running-example trio: honest T7, tampered-but-packed T8, stale T9.
std::vector<ScriptedProposal> running_example_script() {
    std::vector<ScriptedProposal> script;
    auto blind = [](uint64_t id, double at, std::vector<Key> keys,
                    std::vector<int64_t> values) {
        ScriptedProposal sp;
        sp.proposal.proposal_id = id;
        sp.proposal.policy = EndorsementPolicy{{"org0.peer0", "org1.peer0"}};
        sp.proposal.contract = ContractCall{"kv", {}, std::move(keys), std::move(values)};
        sp.fire_at_s = at;
        return sp;
    };
    auto transfer = [](uint64_t id, double at, int64_t amount) {
        ScriptedProposal sp;
        sp.proposal.proposal_id = id;
        sp.proposal.policy = EndorsementPolicy{{"org0.peer0", "org1.peer0"}};
        sp.proposal.contract =
            ContractCall{"asset-transfer", {"BalA", "BalB"}, {"BalA", "BalB"},
                         {-amount, amount}};
        sp.fire_at_s = at;
        return sp;
    };

    script.push_back(blind(1, 0.1, {"BalA", "BalB"}, {80, 30}));
    script.push_back(blind(2, 1.5, {"BalA", "BalB"}, {130, 50}));
    script.push_back(blind(3, 3.0, {"BalA"}, {100}));

    script.push_back(transfer(7, 5.00, 30));
    ScriptedProposal t8 = transfer(8, 5.05, 70);
    t8.tamper_ws = WriteSet::canonicalize({{"BalA", 100}, {"BalB", 120}});
    t8.malicious_pack = true;
    script.push_back(t8);
    script.push_back(transfer(9, 5.10, 100));
    return script;
}

}  // namespace

TEST_CASE("virtual runs are deterministic: same seed, same CSV, same ledgers") {
    for (Mode mode : {Mode::Vanilla, Mode::PlusPlus}) {
        RunArtifacts a1, a2;
        RunMetrics m1 = run(small_config(mode, 11), &a1);
        RunMetrics m2 = run(small_config(mode, 11), &a2);
        CHECK(m1.csv_string() == m2.csv_string());
        REQUIRE(a1.channels.size() == a2.channels.size());
        for (size_t c = 0; c < a1.channels.size(); ++c)
            for (size_t p = 0; p < a1.channels[c].size(); ++p) {
                CHECK(a1.channels[c][p].ledger_dump == a2.channels[c][p].ledger_dump);
                CHECK(a1.channels[c][p].state_dump == a2.channels[c][p].state_dump);
            }

        RunMetrics m3 = run(small_config(mode, 12));
        CHECK(m1.csv_string() != m3.csv_string());  // seed actually matters
    }
}

TEST_CASE("conservation holds across modes and seeds") {
    for (Mode mode :
         {Mode::Vanilla, Mode::ReorderOnly, Mode::EarlyAbortOnly, Mode::PlusPlus}) {
        for (uint64_t seed : {1ull, 2ull}) {
            RunMetrics m = run(small_config(mode, seed));
            INFO("mode=", to_string(mode), " seed=", seed);
            CHECK(m.conservation_holds());
            CHECK(m.fired > 0);
            CHECK(m.success > 0);
        }
    }
}

TEST_CASE("all peers of a channel end with identical ledgers and state") {
    RunConfig cfg = small_config(Mode::PlusPlus, 21);
    cfg.deliver_jitter_ms = 5.0;  // exercise lagging delivery
    RunArtifacts art;
    run(cfg, &art);
    REQUIRE(art.channels.size() == 1);
    REQUIRE(art.channels[0].size() == 4);
    for (size_t p = 1; p < 4; ++p) {
        CHECK(art.channels[0][p].ledger_dump == art.channels[0][0].ledger_dump);
        CHECK(art.channels[0][p].state_dump == art.channels[0][0].state_dump);
    }
    CHECK(!art.channels[0][0].ledger_dump.empty());
}

TEST_CASE("zero-duration run yields empty metrics") {
    RunConfig cfg = small_config(Mode::Vanilla, 1);
    cfg.duration_s = 0.0;
    RunMetrics m = run(cfg);
    CHECK(m.fired == 0);
    CHECK(m.rows.empty());
    CHECK(m.conservation_holds());
    std::istringstream csv(m.csv_string());
    std::string line;
    std::getline(csv, line);
    CHECK(line == "second,total,success,fail,ea_sim,ea_order");
}

TEST_CASE("channels run as independent pipelines") {
    RunConfig cfg = small_config(Mode::PlusPlus, 31);
    cfg.topology.channels = 8;
    cfg.duration_s = 1.0;
    RunArtifacts art;
    RunMetrics m = run(cfg, &art);
    CHECK(m.conservation_holds());
    REQUIRE(m.channels.size() == 8);
    REQUIRE(art.channels.size() == 8);
    for (const ChannelTotals& t : m.channels) CHECK(t.fired > 0);
    for (const auto& peers : art.channels) {
        REQUIRE(peers.size() == 4);
        CHECK(peers[0].ledger_dump == peers[1].ledger_dump);
    }
}

TEST_CASE("event log lines carry time, actor, kind and id") {
    RunConfig cfg = small_config(Mode::Vanilla, 3);
    cfg.duration_s = 0.5;
    std::ostringstream log;
    cfg.event_log = &log;
    run(cfg);
    std::istringstream in(log.str());
    std::string line;
    size_t lines = 0, fires = 0;
    while (std::getline(in, line)) {
        ++lines;
        CHECK(std::count(line.begin(), line.end(), ',') == 3);
        if (line.find(",fire,") != std::string::npos) ++fires;
    }
    CHECK(lines > 0);
    CHECK(fires > 0);
}

TEST_CASE("running example end to end: flags, state and peer agreement") {
    RunConfig cfg;
    cfg.mode = Mode::Vanilla;
    cfg.duration_s = 6.0;
    cfg.rate_per_client = 1;  // ignored by the scripted driver
    RunArtifacts art;
    RunMetrics m = run_scripted(cfg, running_example_script(), &art);

    // three fixture commits plus T7 succeed; T8 and T9 fail
    CHECK(m.fired == 6);
    CHECK(m.success == 4);
    CHECK(m.fail == 2);
    CHECK(m.conservation_holds());

    REQUIRE(art.channels.size() == 1);
    REQUIRE(art.channels[0].size() == 4);
    const std::string& ledger = art.channels[0][0].ledger_dump;
    CHECK(ledger.find("4,0,7,valid,-") != std::string::npos);
    CHECK(ledger.find("4,1,8,invalid,endorsement") != std::string::npos);
    CHECK(ledger.find("4,2,9,invalid,serializability") != std::string::npos);

    const std::string& state = art.channels[0][0].state_dump;
    CHECK(state == "BalA,70,4,0\nBalB,80,4,0\n");

    for (size_t p = 1; p < 4; ++p) {
        CHECK(art.channels[0][p].ledger_dump == ledger);
        CHECK(art.channels[0][p].state_dump == state);
    }
}

TEST_CASE("honest clients drop proposals whose endorsements disagree") {
    auto script = running_example_script();
    for (auto& sp : script)
        if (sp.proposal.proposal_id == 8) sp.malicious_pack = false;
    RunConfig cfg;
    cfg.mode = Mode::Vanilla;
    cfg.duration_s = 6.0;
    RunArtifacts art;
    RunMetrics m = run_scripted(cfg, script, &art);
    CHECK(m.mismatched == 1);
    CHECK(m.success == 4);
    CHECK(m.fail == 1);  // only T9 reaches validation and fails
    CHECK(m.conservation_holds());
    CHECK(art.channels[0][0].ledger_dump.find(",8,") == std::string::npos);
}

TEST_CASE("wall-clock scheduler completes and conserves transactions") {
    RunConfig cfg = small_config(Mode::PlusPlus, 17);
    cfg.wall_clock = true;
    cfg.duration_s = 2.0;
    cfg.rate_per_client = 128;
    RunArtifacts art;
    RunMetrics m = run(cfg, &art);
    CHECK(m.fired > 0);
    CHECK(m.success > 0);
    CHECK(m.conservation_holds());
    REQUIRE(art.channels.size() == 1);
    CHECK(art.channels[0][0].ledger_dump == art.channels[0][1].ledger_dump);
    CHECK(art.channels[0][0].state_dump == art.channels[0][3].state_dump);
}

TEST_CASE("virtual runs drain fully: nothing in flight at shutdown") {
    RunMetrics m = run(small_config(Mode::PlusPlus, 41));
    CHECK(m.in_flight == 0);
}
