#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <map>
#include <thread>

#include "sovc/errors.hpp"
#include "sovc/state_store.hpp"
#include "sovc/workload.hpp"

using namespace sovc;

namespace {

WriteSet ws_of(std::vector<WriteEntry> es) { return WriteSet::canonicalize(std::move(es)); }

// Running-example fixture: three committed blocks leave BalA = 100 at its third
// change (block 3) and BalB = 50 at its second (block 2).
struct ExampleStore : StateStore {
    ExampleStore() : StateStore({{"BalA", 0}, {"BalB", 0}}) {
        commit_block(1, {{0, ws_of({{"BalA", 80}, {"BalB", 30}})}});
        commit_block(2, {{0, ws_of({{"BalA", 130}, {"BalB", 50}})}});
        commit_block(3, {{0, ws_of({{"BalA", 100}})}});
    }
};

}  // namespace

TEST_CASE("read returns the committed (value, version) pair") {
    ExampleStore store;
    StateEntry a = store.read("BalA");
    CHECK(a.value == 100);
    CHECK(a.version == Version{3, 0});
    StateEntry b = store.read("BalB");
    CHECK(b.value == 50);
    CHECK(b.version == Version{2, 0});
}

TEST_CASE("reading an absent key fails") {
    ExampleStore store;
    CHECK_THROWS_AS(store.read("zzz"), KeyNotFoundError);
    CHECK(!store.try_read("zzz"));
}

TEST_CASE("snapshot_last_block_id starts at 0 and follows commits") {
    StateStore fresh(std::vector<std::pair<Key, int64_t>>{{"k", 1}});
    CHECK(fresh.snapshot_last_block_id() == 0);

    ExampleStore store;
    CHECK(store.snapshot_last_block_id() == 3);
    store.commit_block(4, {});
    CHECK(store.snapshot_last_block_id() == 4);
}

TEST_CASE("committing the transfer stamps the committing block's version") {
    ExampleStore store;
    store.commit_block(4, {{0, ws_of({{"BalA", 70}, {"BalB", 80}})}});
    CHECK(store.read("BalA") == StateEntry{70, {4, 0}});
    CHECK(store.read("BalB") == StateEntry{80, {4, 0}});
    CHECK(store.snapshot_last_block_id() == 4);
}

TEST_CASE("out-of-order block ids are rejected") {
    ExampleStore store;
    CHECK_THROWS_AS(store.commit_block(3, {}), OutOfOrderBlockError);
    CHECK_THROWS_AS(store.commit_block(5, {}), OutOfOrderBlockError);
    store.commit_block(4, {});
    CHECK(store.snapshot_last_block_id() == 4);
}

TEST_CASE("empty commit advances last_block_id and leaves state untouched") {
    ExampleStore store;
    std::string before = store.dump_string();
    store.commit_block(4, {});
    CHECK(store.dump_string() == before);
    CHECK(store.snapshot_last_block_id() == 4);
}

TEST_CASE("the last write to a key within a block wins, carrying its tx_seq") {
    StateStore store(std::vector<std::pair<Key, int64_t>>{{"k", 0}, {"m", 0}});
    store.commit_block(1, {{0, ws_of({{"k", 10}})},
                           {3, ws_of({{"k", 20}, {"m", 5}})},
                           {7, ws_of({{"k", 30}})}});
    CHECK(store.read("k") == StateEntry{30, {1, 7}});
    CHECK(store.read("m") == StateEntry{5, {1, 3}});
}

TEST_CASE("random commit sequences replay like sequential map application") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::pair<Key, int64_t>> genesis;
        for (int k = 0; k < 8; ++k) genesis.emplace_back("k" + std::to_string(k), 0);
        StateStore store(genesis);
        std::map<Key, StateEntry> shadow;
        for (auto& [k, v] : genesis) shadow[k] = StateEntry{v, {0, 0}};

        for (uint64_t block = 1; block <= 5; ++block) {
            std::vector<std::pair<uint32_t, WriteSet>> writes;
            uint32_t n_txs = 1 + uint32_t(rng.uniform(4));
            for (uint32_t seq = 0; seq < n_txs; ++seq) {
                std::vector<WriteEntry> es;
                size_t n = 1 + rng.uniform(3);
                for (size_t j = 0; j < n; ++j)
                    es.push_back({"k" + std::to_string(rng.uniform(8)),
                                  int64_t(rng.uniform(1000))});
                WriteSet ws = WriteSet::canonicalize(std::move(es));
                for (const auto& e : ws.entries)
                    shadow[e.key] = StateEntry{e.value, {block, seq}};
                writes.emplace_back(seq, std::move(ws));
            }
            store.commit_block(block, writes);
        }
        for (const auto& [k, expect] : shadow) CHECK(store.read(k) == expect);
    }
}

TEST_CASE("dump lists keys ascending in key,value,block_id,tx_seq form") {
    StateStore store(std::vector<std::pair<Key, int64_t>>{{"b", 2}, {"a", 1}});
    store.commit_block(1, {{4, ws_of({{"b", 9}})}});
    CHECK(store.dump_string() == "a,1,0,0\nb,9,1,4\n");
}

TEST_CASE("mid-commit writes are visible per key before last_block_id advances") {
    StateStore store(std::vector<std::pair<Key, int64_t>>{{"x", 1}, {"y", 1}});
    store.begin_block(1);
    store.apply_writes(0, ws_of({{"x", 42}}));
    // the new value is published atomically while the block is still open
    CHECK(store.read("x") == StateEntry{42, {1, 0}});
    CHECK(store.snapshot_last_block_id() == 0);
    store.end_block();
    CHECK(store.snapshot_last_block_id() == 1);
}

TEST_CASE("concurrent readers never observe torn pairs or version regressions") {
    // value is derived from the version stamp, so any torn read is detectable
    const int n_keys = 16;
    const uint64_t n_blocks = 400;
    std::vector<std::pair<Key, int64_t>> genesis;
    for (int k = 0; k < n_keys; ++k) genesis.emplace_back("k" + std::to_string(k), 0);
    StateStore store(genesis);

    auto value_for = [](Version v) {
        return int64_t(v.block_id * 1000 + v.tx_seq);
    };

    std::atomic<bool> stop{false};
    std::atomic<int> violations{0};
    auto reader = [&]() {
        Rng rng(std::hash<std::thread::id>{}(std::this_thread::get_id()));
        std::vector<Version> last_seen(n_keys, Version{0, 0});
        while (!stop.load(std::memory_order_relaxed)) {
            int k = int(rng.uniform(n_keys));
            StateEntry e = store.read("k" + std::to_string(k));
            bool consistent =
                (e.version == Version{0, 0} && e.value == 0) ||
                (e.version != Version{0, 0} && e.value == value_for(e.version));
            if (!consistent || e.version < last_seen[k]) violations.fetch_add(1);
            last_seen[k] = e.version;
            uint64_t snap = store.snapshot_last_block_id();
            if (snap > n_blocks || e.version.block_id > snap + 1) violations.fetch_add(1);
        }
    };

    std::vector<std::thread> readers;
    for (int i = 0; i < 3; ++i) readers.emplace_back(reader);

    Rng rng(7);
    for (uint64_t b = 1; b <= n_blocks; ++b) {
        std::vector<std::pair<uint32_t, WriteSet>> writes;
        for (uint32_t seq = 0; seq < 3; ++seq) {
            std::vector<WriteEntry> es;
            for (int j = 0; j < 4; ++j) {
                Version v{b, seq};
                es.push_back({"k" + std::to_string(rng.uniform(n_keys)), value_for(v)});
            }
            writes.emplace_back(seq, WriteSet::canonicalize(std::move(es)));
        }
        store.commit_block(b, writes);
    }
    stop.store(true);
    for (auto& t : readers) t.join();
    CHECK(violations.load() == 0);
    CHECK(store.snapshot_last_block_id() == n_blocks);
}
