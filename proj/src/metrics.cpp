#include "trend/metrics.hpp"

#include <cstdio>
#include <fstream>

#include "trend/errors.hpp"

namespace trend {

std::string metrics_csv_header() {
    return "step,eval_success,eval_return,sel_clean_1,sel_clean_2,sel_clean_3,dataset_clean,"
           "reward_loss_1,reward_loss_2,reward_loss_3,feedback_used,alpha_bc";
}

std::string metrics_csv_line(const MetricsRow& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%ld,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%.6f", r.step,
                  r.eval_success, r.eval_return, r.sel_clean[0], r.sel_clean[1], r.sel_clean[2], r.dataset_clean,
                  r.reward_loss[0], r.reward_loss[1], r.reward_loss[2], r.feedback_used, r.alpha_bc);
    return buf;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write metrics file: " + path);
    out << metrics_csv_header() << "\n";
    for (const MetricsRow& r : rows) out << metrics_csv_line(r) << "\n";
}

}  // namespace trend
