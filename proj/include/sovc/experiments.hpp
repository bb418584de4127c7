#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sovc/metrics.hpp"
#include "sovc/pipeline.hpp"

namespace sovc {

// Flat key=value config with [section] headers; unknown keys are errors.
// Sections/keys are documented in the README; CLI flags override file values.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_stream(std::istream& in, const std::string& origin);

// Executes the pipeline and writes the per-second CSV (plus summary footer)
// when csv_path is non-empty.
RunMetrics run_experiment(const RunConfig& config, const std::string& csv_path,
                          RunArtifacts* artifacts = nullptr);

struct MicrobenchSpec {
    enum class Family : uint8_t { InterleavedRW = 1, CycleGroups = 2 };
    Family family = Family::InterleavedRW;
    uint32_t n = 1024;
    // Family 1: rotation indices i (default: every 1..n/2+1).
    // Family 2: cycle lengths t (default: {2, 4, 8, 16, 32}).
    std::vector<uint32_t> points;
};

struct MicrobenchRow {
    uint32_t param = 0;  // i or t
    uint32_t valid_arrival = 0;
    uint32_t valid_reordered = 0;
    double reorder_time_ms = 0.0;
};

std::vector<MicrobenchRow> run_microbench(const MicrobenchSpec& spec,
                                          const BatchPolicy& policy = {});
void write_microbench_csv(std::ostream& os, const MicrobenchSpec& spec,
                          const std::vector<MicrobenchRow>& rows);

// Full parameter grid of the throughput study: BS x RW x HR x HW x HSS
// (3*2*3*2*3 = 108 configurations), one CSV per configuration. Every
// configuration gets a distinct seed unless reuse_seed is set. Returns the
// file paths written.
struct GridOptions {
    RunConfig base;
    std::string out_dir = ".";
    bool reuse_seed = false;
};
std::vector<std::string> run_grid(const GridOptions& options);

struct BreakdownRow {
    Mode mode = Mode::Vanilla;
    RunMetrics metrics;
};
// Same configuration under all four modes.
std::vector<BreakdownRow> run_breakdown(const RunConfig& base, const std::string& out_dir);

struct ScaleRow {
    std::string kind;  // "channels" or "clients"
    uint32_t value = 0;
    Mode mode = Mode::Vanilla;
    double success_tps = 0.0;
    double fail_tps = 0.0;
};
// Channel sweep (1..8 channels, 2 clients each) and client sweep (1..8 clients,
// one channel), both for Vanilla and PlusPlus.
std::vector<ScaleRow> run_scale(const RunConfig& base, const std::string& which);
void write_scale_csv(std::ostream& os, const std::vector<ScaleRow>& rows);

}  // namespace sovc
