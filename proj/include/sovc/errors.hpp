#pragma once

#include <stdexcept>
#include <string>

namespace sovc {

struct KeyNotFoundError : std::runtime_error {
    explicit KeyNotFoundError(const std::string& key)
        : std::runtime_error("key not found: " + key), key(key) {}
    std::string key;
};

struct OutOfOrderBlockError : std::runtime_error {
    OutOfOrderBlockError(uint64_t got, uint64_t expected)
        : std::runtime_error("out-of-order block: got " + std::to_string(got) +
                             ", expected " + std::to_string(expected)),
          got(got), expected(expected) {}
    uint64_t got;
    uint64_t expected;
};

// Internal error: derive_schedule was handed a graph that still contains a cycle.
struct CycleDetectedError : std::runtime_error {
    CycleDetectedError() : std::runtime_error("conflict graph contains a cycle") {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidSpecError : std::runtime_error {
    explicit InvalidSpecError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sovc
