#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sovc/errors.hpp"
#include "sovc/experiments.hpp"

namespace {

struct CommonFlags {
    std::string config_file;
    std::optional<std::string> mode;
    std::optional<uint32_t> bs;
    std::optional<uint32_t> rw;
    std::optional<double> hr, hw, hss;
    std::optional<uint32_t> accounts;
    std::optional<double> rate, duration;
    std::optional<uint64_t> seed;
    std::optional<uint32_t> channels, clients;
    std::optional<bool> wall;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_file, "key=value config file");
    cmd->add_option("--mode", f.mode, "vanilla|reorder-only|early-abort-only|plusplus");
    cmd->add_option("--bs", f.bs, "max transactions per block");
    cmd->add_option("--rw", f.rw, "balances read and written per transaction");
    cmd->add_option("--hr", f.hr, "hot-read probability [0,1]");
    cmd->add_option("--hw", f.hw, "hot-write probability [0,1]");
    cmd->add_option("--hss", f.hss, "hot-set fraction of accounts [0,1]");
    cmd->add_option("--accounts", f.accounts, "number of accounts");
    cmd->add_option("--rate", f.rate, "proposals per second per client");
    cmd->add_option("--duration", f.duration, "firing window in seconds");
    cmd->add_option("--seed", f.seed, "RNG seed");
    cmd->add_option("--channels", f.channels, "number of channels");
    cmd->add_option("--clients", f.clients, "clients per channel");
    cmd->add_flag("--wall,!--virtual", f.wall,
                  "wall-clock scheduler (default: deterministic virtual clock)");
}

sovc::RunConfig build_config(const CommonFlags& f) {
    sovc::RunConfig cfg;
    if (!f.config_file.empty()) cfg = sovc::parse_config_file(f.config_file);
    if (f.mode) cfg.mode = sovc::mode_from_string(*f.mode);
    if (f.bs) cfg.batch.max_tx_count = *f.bs;
    if (f.rw) cfg.workload.rw = *f.rw;
    if (f.hr) cfg.workload.hot_read_prob = *f.hr;
    if (f.hw) cfg.workload.hot_write_prob = *f.hw;
    if (f.hss) cfg.workload.hot_set_fraction = *f.hss;
    if (f.accounts) cfg.workload.n_accounts = *f.accounts;
    if (f.rate) cfg.rate_per_client = *f.rate;
    if (f.duration) cfg.duration_s = *f.duration;
    if (f.seed) {
        cfg.seed = *f.seed;
        cfg.workload.seed = *f.seed;
    } else {
        cfg.workload.seed = cfg.seed;
    }
    if (f.channels) cfg.topology.channels = *f.channels;
    if (f.clients) cfg.topology.clients_per_channel = *f.clients;
    if (f.wall) cfg.wall_clock = *f.wall;
    return cfg;
}

std::string default_out_dir() {
    const char* env = std::getenv("SOVC_OUT_DIR");
    return env != nullptr && *env != '\0' ? env : ".";
}

void print_summary(const sovc::RunMetrics& m) {
    std::printf("fired=%llu success=%llu fail=%llu ea_sim=%llu ea_order=%llu in_flight=%llu\n",
                (unsigned long long)m.fired, (unsigned long long)m.success,
                (unsigned long long)m.fail, (unsigned long long)m.ea_sim,
                (unsigned long long)m.ea_order, (unsigned long long)m.in_flight);
    std::printf("avg_success_tps=%.2f avg_fail_tps=%.2f conservation=%s\n", m.success_tps(),
                m.fail_tps(), m.conservation_holds() ? "ok" : "VIOLATED");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulate-order-validate-commit pipeline simulator and benchmark harness"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    std::string run_out, event_log_path;
    auto* cmd_run = app.add_subcommand("run", "single experiment, per-second CSV");
    add_common(cmd_run, run_flags);
    cmd_run->add_option("--out", run_out, "CSV output path");
    cmd_run->add_option("--event-log", event_log_path, "write a structured event log");

    CommonFlags grid_flags;
    std::string grid_dir = default_out_dir();
    bool reuse_seed = false;
    auto* cmd_grid = app.add_subcommand("grid", "108-configuration BSxRWxHRxHWxHSS sweep");
    add_common(cmd_grid, grid_flags);
    cmd_grid->add_option("--out-dir", grid_dir, "directory for the 108 CSV files");
    cmd_grid->add_flag("--reuse-seed", reuse_seed, "use the same seed for every configuration");

    uint32_t mb_family = 1, mb_n = 1024;
    std::vector<uint32_t> mb_points;
    std::string mb_out;
    auto* cmd_mb = app.add_subcommand("microbench", "ordering micro-benchmarks");
    cmd_mb->add_option("--family", mb_family, "1 = interleaved reads/writes, 2 = cycle groups")
        ->check(CLI::Range(1u, 2u));
    cmd_mb->add_option("--n", mb_n, "sequence length");
    cmd_mb->add_option("--points", mb_points, "explicit i (family 1) or t (family 2) values");
    cmd_mb->add_option("--out", mb_out, "CSV output path");

    CommonFlags bd_flags;
    std::string bd_dir = default_out_dir();
    auto* cmd_bd = app.add_subcommand("breakdown", "one run per mode at a fixed configuration");
    add_common(cmd_bd, bd_flags);
    cmd_bd->add_option("--out-dir", bd_dir, "directory for per-mode CSV files");

    CommonFlags sc_flags;
    std::string sc_out, sc_kind = "both";
    auto* cmd_sc = app.add_subcommand("scale", "channel and client scaling sweeps");
    add_common(cmd_sc, sc_flags);
    cmd_sc->add_option("--kind", sc_kind, "channels|clients|both");
    cmd_sc->add_option("--out", sc_out, "CSV output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            sovc::RunConfig cfg = build_config(run_flags);
            std::ofstream log_stream;
            if (!event_log_path.empty()) {
                log_stream.open(event_log_path, std::ios::trunc);
                if (!log_stream) throw sovc::ConfigError("cannot open " + event_log_path);
                cfg.event_log = &log_stream;
            }
            sovc::RunMetrics m = sovc::run_experiment(cfg, run_out);
            print_summary(m);
        } else if (cmd_grid->parsed()) {
            sovc::GridOptions opt;
            opt.base = build_config(grid_flags);
            opt.out_dir = grid_dir;
            opt.reuse_seed = reuse_seed;
            auto files = sovc::run_grid(opt);
            std::printf("wrote %zu configuration CSVs to %s\n", files.size(), grid_dir.c_str());
        } else if (cmd_mb->parsed()) {
            sovc::MicrobenchSpec spec;
            spec.family = mb_family == 1 ? sovc::MicrobenchSpec::Family::InterleavedRW
                                         : sovc::MicrobenchSpec::Family::CycleGroups;
            spec.n = mb_n;
            spec.points = mb_points;
            auto rows = sovc::run_microbench(spec);
            if (mb_out.empty()) {
                sovc::write_microbench_csv(std::cout, spec, rows);
            } else {
                std::filesystem::path p(mb_out);
                if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
                std::ofstream out(mb_out, std::ios::trunc);
                if (!out) throw sovc::ConfigError("cannot write " + mb_out);
                sovc::write_microbench_csv(out, spec, rows);
                std::printf("wrote %zu rows to %s\n", rows.size(), mb_out.c_str());
            }
        } else if (cmd_bd->parsed()) {
            sovc::RunConfig cfg = build_config(bd_flags);
            auto rows = sovc::run_breakdown(cfg, bd_dir);
            std::printf("mode,success_tps,fail_tps\n");
            for (const auto& r : rows)
                std::printf("%s,%.2f,%.2f\n", std::string(to_string(r.mode)).c_str(),
                            r.metrics.success_tps(), r.metrics.fail_tps());
        } else if (cmd_sc->parsed()) {
            sovc::RunConfig cfg = build_config(sc_flags);
            auto rows = sovc::run_scale(cfg, sc_kind);
            if (sc_out.empty()) {
                sovc::write_scale_csv(std::cout, rows);
            } else {
                std::ofstream out(sc_out, std::ios::trunc);
                if (!out) throw sovc::ConfigError("cannot write " + sc_out);
                sovc::write_scale_csv(out, rows);
            }
        }
    } catch (const sovc::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const sovc::InvalidSpecError& e) {
        std::fprintf(stderr, "invalid spec: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return 3;
    }
    return 0;
}
