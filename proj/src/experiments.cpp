#include "sovc/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sovc/errors.hpp"
#include "sovc/orderer.hpp"
#include "sovc/workload.hpp"

namespace sovc {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + key + ": '" + v + "'");
    }
}

uint64_t to_u64(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        uint64_t n = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError("bad integer value for " + key + ": '" + v + "'");
    }
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("bad boolean value for " + key + ": '" + v + "'");
}

void apply_kv(RunConfig& cfg, const std::string& section, const std::string& key,
              const std::string& value) {
    const std::string id = section + "." + key;
    if (section == "run") {
        if (key == "mode") cfg.mode = mode_from_string(value);
        else if (key == "duration") cfg.duration_s = to_double(value, id);
        else if (key == "seed") cfg.seed = to_u64(value, id);
        else if (key == "rate") cfg.rate_per_client = to_double(value, id);
        else if (key == "wall_clock") cfg.wall_clock = to_bool(value, id);
        else throw ConfigError("unknown config key: " + id);
    } else if (section == "topology") {
        if (key == "organizations") cfg.topology.organizations = (uint32_t)to_u64(value, id);
        else if (key == "peers_per_org") cfg.topology.peers_per_org = (uint32_t)to_u64(value, id);
        else if (key == "channels") cfg.topology.channels = (uint32_t)to_u64(value, id);
        else if (key == "clients_per_channel")
            cfg.topology.clients_per_channel = (uint32_t)to_u64(value, id);
        else throw ConfigError("unknown config key: " + id);
    } else if (section == "batch") {
        if (key == "max_tx_count") cfg.batch.max_tx_count = (uint32_t)to_u64(value, id);
        else if (key == "max_bytes") cfg.batch.max_bytes = to_u64(value, id);
        else if (key == "max_wait_ms")
            cfg.batch.max_wait = std::chrono::nanoseconds(
                (int64_t)std::llround(to_double(value, id) * 1e6));
        else if (key == "max_unique_keys")
            cfg.batch.max_unique_keys = (uint32_t)to_u64(value, id);
        else if (key == "max_cycles_per_round")
            cfg.batch.max_cycles_per_round = (uint32_t)to_u64(value, id);
        else throw ConfigError("unknown config key: " + id);
    } else if (section == "workload") {
        if (key == "n_accounts") cfg.workload.n_accounts = (uint32_t)to_u64(value, id);
        else if (key == "rw") cfg.workload.rw = (uint32_t)to_u64(value, id);
        else if (key == "hr") cfg.workload.hot_read_prob = to_double(value, id);
        else if (key == "hw") cfg.workload.hot_write_prob = to_double(value, id);
        else if (key == "hss") cfg.workload.hot_set_fraction = to_double(value, id);
        else throw ConfigError("unknown config key: " + id);
    } else if (section == "sim") {
        if (key == "sim_delay_ms") cfg.sim_delay_ms = to_double(value, id);
        else if (key == "deliver_delay_ms") cfg.deliver_delay_ms = to_double(value, id);
        else if (key == "deliver_jitter_ms") cfg.deliver_jitter_ms = to_double(value, id);
        else throw ConfigError("unknown config key: " + id);
    } else {
        throw ConfigError("unknown config section: [" + section + "]");
    }
}

}  // namespace

RunConfig parse_config_stream(std::istream& in, const std::string& origin) {
    RunConfig cfg;
    std::string line, section = "run";
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
        apply_kv(cfg, section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config_stream(in, path);
}

RunMetrics run_experiment(const RunConfig& config, const std::string& csv_path,
                          RunArtifacts* artifacts) {
    RunMetrics metrics = run(config, artifacts);
    if (!csv_path.empty()) {
        std::filesystem::path p(csv_path);
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        std::ofstream out(csv_path, std::ios::trunc);
        if (!out) throw ConfigError("cannot write CSV: " + csv_path);
        metrics.write_csv(out);
    }
    return metrics;
}

std::vector<MicrobenchRow> run_microbench(const MicrobenchSpec& spec,
                                          const BatchPolicy& policy) {
    std::vector<uint32_t> points = spec.points;
    if (points.empty()) {
        if (spec.family == MicrobenchSpec::Family::InterleavedRW) {
            for (uint32_t i = 1; i <= spec.n / 2 + 1; ++i) points.push_back(i);
        } else {
            for (uint32_t t : {2u, 4u, 8u, 16u, 32u})
                if (spec.n % t == 0) points.push_back(t);
        }
    }

    std::vector<MicrobenchRow> rows;
    rows.reserve(points.size());
    for (uint32_t p : points) {
        std::vector<Transaction> txs =
            spec.family == MicrobenchSpec::Family::InterleavedRW
                ? gen_interleaved_rw(spec.n, p)
                : gen_cycle_groups(spec.n, p);

        MicrobenchRow row;
        row.param = p;
        row.valid_arrival = static_cast<uint32_t>(oracle_valid_count(txs));

        auto t0 = std::chrono::steady_clock::now();
        ReorderResult rr = reorder(txs, Mode::PlusPlus, policy);
        auto t1 = std::chrono::steady_clock::now();
        row.reorder_time_ms =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 - t0)
                .count();

        row.valid_reordered = static_cast<uint32_t>(oracle_valid_count(rr.ordered));
        rows.push_back(row);
    }
    return rows;
}

void write_microbench_csv(std::ostream& os, const MicrobenchSpec& spec,
                          const std::vector<MicrobenchRow>& rows) {
    os << (spec.family == MicrobenchSpec::Family::InterleavedRW ? "i" : "t")
       << ",valid_arrival,valid_reordered,reorder_time_ms\n";
    char buf[128];
    for (const MicrobenchRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%u,%u,%u,%.3f\n", r.param, r.valid_arrival,
                      r.valid_reordered, r.reorder_time_ms);
        os << buf;
    }
}

std::vector<std::string> run_grid(const GridOptions& options) {
    const uint32_t bs_values[] = {256, 512, 1024};
    const uint32_t rw_values[] = {4, 8};
    const double hr_values[] = {0.10, 0.20, 0.40};
    const double hw_values[] = {0.05, 0.10};
    const double hss_values[] = {0.01, 0.02, 0.04};

    std::filesystem::create_directories(options.out_dir);
    std::vector<std::string> written;
    uint64_t index = 0;
    for (uint32_t bs : bs_values)
        for (uint32_t rw : rw_values)
            for (double hr : hr_values)
                for (double hw : hw_values)
                    for (double hss : hss_values) {
                        RunConfig cfg = options.base;
                        cfg.batch.max_tx_count = bs;
                        cfg.workload.rw = rw;
                        cfg.workload.hot_read_prob = hr;
                        cfg.workload.hot_write_prob = hw;
                        cfg.workload.hot_set_fraction = hss;
                        if (!options.reuse_seed) cfg.seed = options.base.seed + index;
                        char name[128];
                        std::snprintf(name, sizeof(name),
                                      "bs%u_rw%u_hr%02d_hw%02d_hss%d_%s.csv", bs, rw,
                                      (int)std::lround(hr * 100), (int)std::lround(hw * 100),
                                      (int)std::lround(hss * 100),
                                      std::string(to_string(cfg.mode)).c_str());
                        std::string path =
                            (std::filesystem::path(options.out_dir) / name).string();
                        run_experiment(cfg, path);
                        written.push_back(path);
                        ++index;
                    }
    return written;
}

std::vector<BreakdownRow> run_breakdown(const RunConfig& base, const std::string& out_dir) {
    std::vector<BreakdownRow> rows;
    for (Mode mode :
         {Mode::Vanilla, Mode::ReorderOnly, Mode::EarlyAbortOnly, Mode::PlusPlus}) {
        RunConfig cfg = base;
        cfg.mode = mode;
        std::string path;
        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            path = (std::filesystem::path(out_dir) /
                    ("breakdown_" + std::string(to_string(mode)) + ".csv"))
                       .string();
        }
        rows.push_back(BreakdownRow{mode, run_experiment(cfg, path)});
    }
    return rows;
}

std::vector<ScaleRow> run_scale(const RunConfig& base, const std::string& which) {
    std::vector<ScaleRow> rows;
    auto record = [&](const std::string& kind, uint32_t value, const RunConfig& cfg) {
        RunMetrics m = run(cfg);
        rows.push_back(ScaleRow{kind, value, cfg.mode, m.success_tps(), m.fail_tps()});
    };
    for (Mode mode : {Mode::Vanilla, Mode::PlusPlus}) {
        if (which == "channels" || which == "both") {
            for (uint32_t ch : {1u, 2u, 4u, 8u}) {
                RunConfig cfg = base;
                cfg.mode = mode;
                cfg.topology.channels = ch;
                cfg.topology.clients_per_channel = 2;
                record("channels", ch, cfg);
            }
        }
        if (which == "clients" || which == "both") {
            for (uint32_t cl : {1u, 2u, 4u, 8u}) {
                RunConfig cfg = base;
                cfg.mode = mode;
                cfg.topology.channels = 1;
                cfg.topology.clients_per_channel = cl;
                record("clients", cl, cfg);
            }
        }
    }
    return rows;
}

void write_scale_csv(std::ostream& os, const std::vector<ScaleRow>& rows) {
    os << "kind,value,mode,success_tps,fail_tps\n";
    char buf[160];
    for (const ScaleRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%u,%s,%.2f,%.2f\n", r.kind.c_str(), r.value,
                      std::string(to_string(r.mode)).c_str(), r.success_tps, r.fail_tps);
        os << buf;
    }
}

}  // namespace sovc
