#include "sovc/model.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "sovc/errors.hpp"

namespace sovc {

ReadSet ReadSet::canonicalize(std::vector<ReadEntry> raw) {
    std::stable_sort(raw.begin(), raw.end(),
                     [](const ReadEntry& a, const ReadEntry& b) { return a.key < b.key; });
    // first-read-wins: stable sort keeps insertion order among equal keys
    raw.erase(std::unique(raw.begin(), raw.end(),
                          [](const ReadEntry& a, const ReadEntry& b) { return a.key == b.key; }),
              raw.end());
    return ReadSet{std::move(raw)};
}

WriteSet WriteSet::canonicalize(std::vector<WriteEntry> raw) {
    // last write wins: reverse before dedup so the final value survives
    std::reverse(raw.begin(), raw.end());
    std::stable_sort(raw.begin(), raw.end(),
                     [](const WriteEntry& a, const WriteEntry& b) { return a.key < b.key; });
    raw.erase(std::unique(raw.begin(), raw.end(),
                          [](const WriteEntry& a, const WriteEntry& b) { return a.key == b.key; }),
              raw.end());
    return WriteSet{std::move(raw)};
}

std::string EndorsementDigest::hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

std::string_view to_string(TxVerdict v) {
    switch (v) {
        case TxVerdict::Valid: return "valid";
        case TxVerdict::InvalidEndorsement: return "invalid-endorsement";
        case TxVerdict::InvalidSerializability: return "invalid-serializability";
    }
    return "?";
}

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::Vanilla: return "vanilla";
        case Mode::ReorderOnly: return "reorder-only";
        case Mode::EarlyAbortOnly: return "early-abort-only";
        case Mode::PlusPlus: return "plusplus";
    }
    return "?";
}

Mode mode_from_string(std::string_view s) {
    if (s == "vanilla") return Mode::Vanilla;
    if (s == "reorder-only" || s == "reorder_only") return Mode::ReorderOnly;
    if (s == "early-abort-only" || s == "early_abort_only") return Mode::EarlyAbortOnly;
    if (s == "plusplus" || s == "++") return Mode::PlusPlus;
    throw ConfigError("unknown mode: " + std::string(s));
}

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 24));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_str(std::vector<uint8_t>& out, std::string_view s) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

}  // namespace

std::vector<uint8_t> canonical_encoding(const ReadSet& rs, const WriteSet& ws,
                                        std::string_view contract_name,
                                        const EndorsementPolicy& policy) {
    std::vector<uint8_t> out;
    out.reserve(64 + 32 * rs.entries.size() + 24 * ws.entries.size());
    put_u32(out, static_cast<uint32_t>(rs.entries.size()));
    for (const ReadEntry& e : rs.entries) {
        put_str(out, e.key);
        put_u64(out, e.version.block_id);
        put_u32(out, e.version.tx_seq);
    }
    put_u32(out, static_cast<uint32_t>(ws.entries.size()));
    for (const WriteEntry& e : ws.entries) {
        put_str(out, e.key);
        put_u64(out, static_cast<uint64_t>(e.value));
    }
    put_str(out, contract_name);
    put_u32(out, static_cast<uint32_t>(policy.required_endorsers.size()));
    for (const std::string& p : policy.required_endorsers) put_str(out, p);
    return out;
}

EndorsementDigest compute_digest(const ReadSet& rs, const WriteSet& ws,
                                 std::string_view contract_name,
                                 const EndorsementPolicy& policy) {
    return EndorsementDigest{detail::sha256(canonical_encoding(rs, ws, contract_name, policy))};
}

uint64_t transaction_wire_size(const Transaction& tx) {
    uint64_t n = 8;  // tx_id
    n += canonical_encoding(tx.rs, tx.ws, tx.contract_name, tx.policy).size();
    for (const PeerDigest& d : tx.digests) n += 4 + d.peer_id.size() + d.digest.bytes.size();
    return n;
}

namespace detail {

std::array<uint8_t, 32> sha256(std::span<const uint8_t> data) {
    std::array<uint8_t, 32> out{};
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, out.data(), &len) != 1 || len != out.size()) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256 failed");
    }
    EVP_MD_CTX_free(ctx);
    return out;
}

}  // namespace detail

}  // namespace sovc
