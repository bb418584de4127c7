#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sovc/endorser.hpp"
#include "sovc/errors.hpp"
#include "sovc/validator.hpp"
#include "sovc/workload.hpp"

using namespace sovc;

namespace {

WriteSet ws_of(std::vector<WriteEntry> es) { return WriteSet::canonicalize(std::move(es)); }

struct ExampleStore : StateStore {
    ExampleStore() : StateStore({{"BalA", 0}, {"BalB", 0}}) {
        commit_block(1, {{0, ws_of({{"BalA", 80}, {"BalB", 30}})}});
        commit_block(2, {{0, ws_of({{"BalA", 130}, {"BalB", 50}})}});
        commit_block(3, {{0, ws_of({{"BalA", 100}})}});
    }
};

Proposal transfer_proposal(uint64_t id, int64_t amount) {
    Proposal p;
    p.proposal_id = id;
    p.policy = EndorsementPolicy{{"org0.peer0", "org1.peer0"}};
    p.contract = ContractCall{"asset-transfer", {"BalA", "BalB"}, {"BalA", "BalB"},
                              {-amount, amount}};
    return p;
}

Transaction endorse(const Proposal& p, const StateStore& store) {
    auto r = std::get<SimulationResult>(simulate(p, store, "org0.peer0", SimMode::Vanilla));
    std::vector<PeerDigest> digests;
    for (const auto& peer : p.policy.required_endorsers)
        digests.push_back(PeerDigest{peer, r.digest});
    return form_transaction(p, std::move(r.rs), std::move(r.ws), std::move(digests));
}

// The running-example block: honest T7, tampered T8, stale-to-be T9.
Block example_block(const StateStore& store) {
    Transaction t7 = endorse(transfer_proposal(7, 30), store);

    Proposal p8 = transfer_proposal(8, 70);
    p8.policy = EndorsementPolicy{{"org0.peer1", "org1.peer1"}};
    auto honest8 =
        std::get<SimulationResult>(simulate(p8, store, "org1.peer1", SimMode::Vanilla));
    SimulationResult tampered8 = tamper_write_set(
        honest8, ws_of({{"BalA", 100}, {"BalB", 120}}), "asset-transfer", p8.policy);
    tampered8.peer_id = "org0.peer1";
    Transaction t8 = form_transaction(p8, honest8.rs, tampered8.ws,
                                      {{"org0.peer1", tampered8.digest},
                                       {"org1.peer1", honest8.digest}});

    Proposal p9 = transfer_proposal(9, 100);  // ws = {BalA=0, BalB=150}
    Transaction t9 = endorse(p9, store);

    return Block{4, {t7, t8, t9}, {}};
}

}  // namespace

TEST_CASE("endorsement check: honest passes, tampered and empty fail") {
    ExampleStore store;
    Transaction t7 = endorse(transfer_proposal(7, 30), store);
    CHECK(check_endorsement(t7));

    Block blk = example_block(store);
    CHECK_FALSE(check_endorsement(blk.txs[1]));  // T8 carries an unmatchable digest

    Transaction empty = t7;
    empty.digests.clear();
    CHECK_FALSE(check_endorsement(empty));
}

TEST_CASE("serializability check compares read versions against current state") {
    ExampleStore store;
    Transaction t7 = endorse(transfer_proposal(7, 30), store);
    CHECK(check_serializability(t7, store));

    // empty read set is vacuously up to date
    Transaction blind = make_kv_transaction(1, {}, {{"BalA", 1}});
    CHECK(check_serializability(blind, store));

    // reading an absent key is stale by definition
    Transaction ghost = make_kv_transaction(2, {{"ghost", Version{0, 0}}}, {});
    CHECK_FALSE(check_serializability(ghost, store));

    store.commit_block(4, {{0, t7.ws}});
    CHECK_FALSE(check_serializability(t7, store));  // both reads now outdated
}

TEST_CASE("running-example block: valid, invalid-endorsement, invalid-serializability") {
    ExampleStore store;
    Ledger ledger;
    Block blk = example_block(store);

    auto verdicts = validate_and_commit(blk, store, ledger);
    REQUIRE(verdicts.size() == 3);
    CHECK(verdicts[0] == TxVerdict::Valid);
    CHECK(verdicts[1] == TxVerdict::InvalidEndorsement);
    CHECK(verdicts[2] == TxVerdict::InvalidSerializability);

    CHECK(store.read("BalA") == StateEntry{70, {4, 0}});
    CHECK(store.read("BalB") == StateEntry{80, {4, 0}});
    CHECK(store.snapshot_last_block_id() == 4);

    REQUIRE(ledger.block_count() == 1);
    CHECK(ledger.dump_string() ==
          "4,0,7,valid,-\n"
          "4,1,8,invalid,endorsement\n"
          "4,2,9,invalid,serializability\n");
}

TEST_CASE("order-sensitivity: arrival order T1..T4 validates only T1") {
    Version v1{0, 0};
    std::vector<Transaction> txs = {
        make_kv_transaction(1, {}, {{"k1", 2}}),
        make_kv_transaction(2, {{"k1", v1}, {"k2", v1}}, {{"k2", 2}}),
        make_kv_transaction(3, {{"k1", v1}, {"k3", v1}}, {{"k3", 2}}),
        make_kv_transaction(4, {{"k1", v1}, {"k3", v1}}, {{"k4", 2}}),
    };
    StateStore store(genesis_for(txs));
    Ledger ledger;
    auto verdicts = validate_and_commit(Block{1, txs, {}}, store, ledger);
    CHECK(verdicts == std::vector<TxVerdict>{TxVerdict::Valid, TxVerdict::InvalidSerializability,
                                             TxVerdict::InvalidSerializability,
                                             TxVerdict::InvalidSerializability});
}

TEST_CASE("order-sensitivity: schedule T4, T2, T3, T1 validates all four") {
    Version v1{0, 0};
    Transaction t1 = make_kv_transaction(1, {}, {{"k1", 2}});
    Transaction t2 = make_kv_transaction(2, {{"k1", v1}, {"k2", v1}}, {{"k2", 2}});
    Transaction t3 = make_kv_transaction(3, {{"k1", v1}, {"k3", v1}}, {{"k3", 2}});
    Transaction t4 = make_kv_transaction(4, {{"k1", v1}, {"k3", v1}}, {{"k4", 2}});
    std::vector<Transaction> order = {t4, t2, t3, t1};
    StateStore store(genesis_for(order));
    Ledger ledger;
    auto verdicts = validate_and_commit(Block{1, order, {}}, store, ledger);
    CHECK(verdicts == std::vector<TxVerdict>(4, TxVerdict::Valid));
}

TEST_CASE("valid writes become visible to later transactions in the same block") {
    // two honest transfers reading the same versions: the second must fail
    // because the first's writes are applied immediately
    ExampleStore store;
    Transaction a = endorse(transfer_proposal(20, 10), store);
    Transaction b = endorse(transfer_proposal(21, 5), store);
    Ledger ledger;
    auto verdicts = validate_and_commit(Block{4, {a, b}, {}}, store, ledger);
    CHECK(verdicts[0] == TxVerdict::Valid);
    CHECK(verdicts[1] == TxVerdict::InvalidSerializability);
}

TEST_CASE("blind writes may create new keys at the committing version") {
    StateStore store(std::vector<std::pair<Key, int64_t>>{{"seen", 0}});
    Ledger ledger;
    Transaction blind = make_kv_transaction(5, {}, {{"brand-new", 9}});
    auto verdicts = validate_and_commit(Block{1, {blind}, {}}, store, ledger);
    CHECK(verdicts[0] == TxVerdict::Valid);
    CHECK(store.read("brand-new") == StateEntry{9, {1, 0}});
}

TEST_CASE("out-of-order blocks are rejected") {
    ExampleStore store;
    Ledger ledger;
    CHECK_THROWS_AS(validate_and_commit(Block{9, {}, {}}, store, ledger),
                    OutOfOrderBlockError);
}

TEST_CASE("peers given the same block stream agree on flags and state") {
    ExampleStore s1;
    ExampleStore s2;
    Ledger l1, l2;
    Block blk = example_block(s1);
    validate_and_commit(blk, s1, l1);
    validate_and_commit(blk, s2, l2);
    CHECK(l1.dump_string() == l2.dump_string());
    CHECK(s1.dump_string() == s2.dump_string());
}

TEST_CASE("validator flags equal the independent replay oracle on random batches") {
    Rng rng(4242);
    for (int trial = 0; trial < 300; ++trial) {
        size_t n = 1 + rng.uniform(24);
        std::vector<Transaction> txs;
        for (size_t i = 0; i < n; ++i) {
            std::vector<std::pair<Key, Version>> reads;
            std::vector<std::pair<Key, int64_t>> writes;
            size_t nr = rng.uniform(4), nw = rng.uniform(3);
            for (size_t r = 0; r < nr; ++r)
                reads.emplace_back("k" + std::to_string(rng.uniform(12)), Version{0, 0});
            for (size_t w = 0; w < nw; ++w)
                writes.emplace_back("k" + std::to_string(rng.uniform(12)),
                                    int64_t(rng.uniform(100)));
            txs.push_back(make_kv_transaction(i, reads, writes));
        }
        auto genesis = genesis_for(txs);

        StateStore store(genesis);
        Ledger ledger;
        auto verdicts = validate_and_commit(Block{1, txs, {}}, store, ledger);

        OracleState oracle = OracleState::from_genesis(genesis);
        auto flags = mvcc_replay_oracle(txs, oracle, 1);

        REQUIRE(verdicts.size() == flags.size());
        for (size_t i = 0; i < flags.size(); ++i)
            CHECK((verdicts[i] == TxVerdict::Valid) == flags[i]);

        // flag/commit consistency: the store equals the oracle's final state
        for (const auto& [key, vv] : oracle.kv) {
            StateEntry e = store.read(key);
            CHECK(e.value == vv.first);
            CHECK(e.version == vv.second);
        }
    }
}
