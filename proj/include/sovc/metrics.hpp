#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sovc {

struct SecondRow {
    uint32_t second = 0;
    uint64_t success = 0;
    uint64_t fail = 0;
    uint64_t ea_sim = 0;
    uint64_t ea_order = 0;

    uint64_t total() const { return success + fail; }
};

struct ChannelTotals {
    uint64_t fired = 0;
    uint64_t success = 0;
    uint64_t fail = 0;
    uint64_t ea_sim = 0;
    uint64_t ea_order = 0;
    uint64_t mismatched = 0;  // endorsement disagreement, fault-injection runs only
    uint64_t in_flight = 0;   // still pending in the orderer at shutdown

    bool conserved() const {
        return fired == success + fail + ea_sim + ea_order + mismatched + in_flight;
    }
};

struct RunMetrics {
    std::vector<SecondRow> rows;  // aggregated over channels; seconds ascending
    std::vector<ChannelTotals> channels;
    double duration_s = 0.0;

    uint64_t fired = 0, success = 0, fail = 0, ea_sim = 0, ea_order = 0, mismatched = 0,
             in_flight = 0;

    // fired == success + fail + ea_sim + ea_order (+ mismatched) + in_flight,
    // per channel and in total.
    bool conservation_holds() const;

    double success_tps() const { return duration_s > 0 ? double(success) / duration_s : 0.0; }
    double fail_tps() const { return duration_s > 0 ? double(fail) / duration_s : 0.0; }

    // `second,total,success,fail,ea_sim,ea_order` rows plus a `#`-prefixed
    // summary footer. Bit-identical across virtual-clock runs with equal seed.
    void write_csv(std::ostream& os) const;
    std::string csv_string() const;
};

}  // namespace sovc
