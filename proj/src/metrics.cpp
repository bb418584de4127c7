#include "sovc/metrics.hpp"

#include <cinttypes>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace sovc {

bool RunMetrics::conservation_holds() const {
    uint64_t f = 0, s = 0, x = 0, es = 0, eo = 0, mm = 0, fl = 0;
    for (const ChannelTotals& c : channels) {
        if (!c.conserved()) return false;
        f += c.fired;
        s += c.success;
        x += c.fail;
        es += c.ea_sim;
        eo += c.ea_order;
        mm += c.mismatched;
        fl += c.in_flight;
    }
    return f == fired && s == success && x == fail && es == ea_sim && eo == ea_order &&
           mm == mismatched && fl == in_flight &&
           fired == success + fail + ea_sim + ea_order + mismatched + in_flight;
}

void RunMetrics::write_csv(std::ostream& os) const {
    os << "second,total,success,fail,ea_sim,ea_order\n";
    for (const SecondRow& r : rows) {
        os << r.second << ',' << r.total() << ',' << r.success << ',' << r.fail << ','
           << r.ea_sim << ',' << r.ea_order << '\n';
    }
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "# fired=%" PRIu64 " success=%" PRIu64 " fail=%" PRIu64 " ea_sim=%" PRIu64
                  " ea_order=%" PRIu64 " mismatched=%" PRIu64 " in_flight=%" PRIu64 "\n",
                  fired, success, fail, ea_sim, ea_order, mismatched, in_flight);
    os << buf;
    std::snprintf(buf, sizeof(buf), "# duration_s=%.3f avg_success_tps=%.2f avg_fail_tps=%.2f\n",
                  duration_s, success_tps(), fail_tps());
    os << buf;
}

std::string RunMetrics::csv_string() const {
    std::ostringstream ss;
    write_csv(ss);
    return ss.str();
}

}  // namespace sovc
