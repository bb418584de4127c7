#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "sovc/model.hpp"
#include "sovc/workload.hpp"

using namespace sovc;

namespace {

// Test-local re-implementation of the canonical wire format, kept independent
// of canonical_encoding so the digest layout is pinned by two code paths.
void enc_u32(std::vector<uint8_t>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(uint8_t(v >> (8 * i)));
}
void enc_u64(std::vector<uint8_t>& b, uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(uint8_t(v >> (8 * i)));
}
void enc_str(std::vector<uint8_t>& b, const std::string& s) {
    enc_u32(b, uint32_t(s.size()));
    for (char c : s) b.push_back(uint8_t(c));
}

EndorsementDigest reference_digest(const ReadSet& rs, const WriteSet& ws,
                                   const std::string& contract,
                                   const EndorsementPolicy& policy) {
    std::vector<uint8_t> b;
    enc_u32(b, uint32_t(rs.entries.size()));
    for (const auto& e : rs.entries) {
        enc_str(b, e.key);
        enc_u64(b, e.version.block_id);
        enc_u32(b, e.version.tx_seq);
    }
    enc_u32(b, uint32_t(ws.entries.size()));
    for (const auto& e : ws.entries) {
        enc_str(b, e.key);
        enc_u64(b, uint64_t(e.value));
    }
    enc_str(b, contract);
    enc_u32(b, uint32_t(policy.required_endorsers.size()));
    for (const auto& p : policy.required_endorsers) enc_str(b, p);
    return EndorsementDigest{detail::sha256(b)};
}

ReadSet rs_of(std::vector<ReadEntry> es) { return ReadSet::canonicalize(std::move(es)); }
WriteSet ws_of(std::vector<WriteEntry> es) { return WriteSet::canonicalize(std::move(es)); }

}  // namespace

TEST_CASE("sha256 matches the NIST 'abc' vector") {
    const char* msg = "abc";
    auto d = detail::sha256(
        std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(msg), 3));
    CHECK(EndorsementDigest{d}.hex() ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("digest is deterministic and input-sensitive") {
    ReadSet rs = rs_of({{"BalA", {3, 0}}, {"BalB", {2, 0}}});
    WriteSet honest = ws_of({{"BalA", 30}, {"BalB", 120}});
    WriteSet tampered = ws_of({{"BalA", 100}, {"BalB", 120}});
    EndorsementPolicy policy{{"org0.peer1", "org1.peer1"}};

    auto d1 = compute_digest(rs, honest, "asset-transfer", policy);
    auto d2 = compute_digest(rs, honest, "asset-transfer", policy);
    CHECK(d1 == d2);

    // the write set a misbehaving endorser substitutes yields a different digest
    CHECK(compute_digest(rs, tampered, "asset-transfer", policy) != d1);
    CHECK(compute_digest(rs, honest, "kv", policy) != d1);
}

TEST_CASE("canonicalization is insertion-order independent") {
    std::vector<ReadEntry> reads = {
        {"k3", {1, 0}}, {"k1", {2, 1}}, {"k2", {0, 0}}, {"k4", {5, 3}}};
    std::vector<WriteEntry> writes = {{"b", 7}, {"a", -2}, {"c", 9}};
    EndorsementPolicy policy{{"p0"}};

    auto base = compute_digest(rs_of(reads), ws_of(writes), "kv", policy);
    std::mt19937 gen(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(reads.begin(), reads.end(), gen);
        std::shuffle(writes.begin(), writes.end(), gen);
        CHECK(compute_digest(rs_of(reads), ws_of(writes), "kv", policy) == base);
    }
}

TEST_CASE("read set keeps the first read per key, write set the last value") {
    ReadSet rs = rs_of({{"k", {1, 0}}, {"k", {2, 0}}});
    REQUIRE(rs.entries.size() == 1);
    CHECK(rs.entries[0].version == Version{1, 0});

    WriteSet ws = ws_of({{"k", 10}, {"k", 20}});
    REQUIRE(ws.entries.size() == 1);
    CHECK(ws.entries[0].value == 20);
}

TEST_CASE("version ordering is lexicographic on (block_id, tx_seq)") {
    CHECK(Version{1, 5} < Version{2, 0});
    CHECK(Version{2, 0} < Version{2, 1});
    CHECK(Version{2, 1} == Version{2, 1});
    CHECK(Version{3, 0} > Version{2, 9});
}

TEST_CASE("digest layout agrees with an independent serializer on random inputs") {
    Rng rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<ReadEntry> reads;
        std::vector<WriteEntry> writes;
        size_t nr = rng.uniform(6), nw = 1 + rng.uniform(5);
        for (size_t i = 0; i < nr; ++i)
            reads.push_back({"r" + std::to_string(rng.uniform(40)),
                             {rng.uniform(10), uint32_t(rng.uniform(4))}});
        for (size_t i = 0; i < nw; ++i)
            writes.push_back({"w" + std::to_string(rng.uniform(40)),
                              int64_t(rng.uniform(1000)) - 500});
        EndorsementPolicy policy{{"pA", "pB"}};
        ReadSet rs = rs_of(reads);
        WriteSet ws = ws_of(writes);

        auto got = compute_digest(rs, ws, "kv", policy);
        CHECK(got == reference_digest(rs, ws, "kv", policy));

        // perturb one written value: digest must change
        WriteSet ws2 = ws;
        ws2.entries[rng.uniform(ws2.entries.size())].value += 1;
        CHECK(compute_digest(rs, ws2, "kv", policy) != got);
    }
}

TEST_CASE("transaction wire size tracks content size") {
    Transaction small = make_kv_transaction(1, {{"k", {0, 0}}}, {{"k", 1}});
    Transaction big = make_kv_transaction(2, {{std::string(100, 'x'), {0, 0}}},
                                          {{std::string(100, 'y'), 1}});
    CHECK(transaction_wire_size(big) > transaction_wire_size(small));
    CHECK(transaction_wire_size(small) > 0);
}
