#pragma once

#include <array>
#include <string>
#include <vector>

namespace trend {

// One evaluation-point record. Formatting is fixed-width decimal so repeated
// runs produce byte-identical CSVs.
struct MetricsRow {
    long step = 0;
    double eval_success = 0.0;
    double eval_return = 0.0;
    std::array<double, 3> sel_clean{};     // last session's selected-set clean ratio per member
    double dataset_clean = 0.0;            // observed-vs-clean agreement over non-skipped pairs
    std::array<double, 3> reward_loss{};   // last session's mean selection loss per member
    std::size_t feedback_used = 0;
    double alpha_bc = 0.0;                 // demo fraction in effect (0 when no demos)
};

std::string metrics_csv_header();
std::string metrics_csv_line(const MetricsRow& row);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

}  // namespace trend
