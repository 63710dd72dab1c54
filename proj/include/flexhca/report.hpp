#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "flexhca/tail.hpp"

namespace flexhca {

// One sweep cell. mu is +inf for unbounded depth; d is -1 on curtailment
// rows, which have no window.
struct GainRow {
    int k = 0;
    double mu = std::numeric_limits<double>::infinity();
    int d = -1;
    double capacity = 0.0;      // kW
    double gain_percent = 0.0;  // vs the K=0 baseline; NaN when baseline is 0
};

// Depths are fractions in [0,1]; edges has counts.size()+1 entries.
struct DepthHistogram {
    std::vector<double> edges;
    std::vector<long> counts;
};

// Minimal per-event delays, one bin per integer value.
struct DelayHistogram {
    std::vector<int> delay;
    std::vector<long> count;
};

// Side-by-side closed-form vs solved capacities per budget; solver_capacity
// is NaN on rows outside the solved sweep.
struct TheoryRow {
    int k = 0;
    double expected_weibull = 0.0;
    double expected_empirical = 0.0;
    double solver_capacity = std::numeric_limits<double>::quiet_NaN();
};

struct HcaReport {
    std::string version;
    std::uint64_t config_hash = 0;
    std::string mode;          // copperplate | network
    std::string flexibility;   // cf | df
    double baseline_capacity = 0.0;  // zero-intervention capacity
    std::vector<GainRow> rows;
    DepthHistogram depth_histogram;
    DelayHistogram delay_histogram;
    std::map<std::string, long> binding_counts;  // per-slot binding constraint tallies
    std::vector<TheoryRow> theory;
};

double gain_percent(double capacity, double baseline);

DepthHistogram histogram_depths(const std::vector<double>& depths, int bins = 20);
DelayHistogram histogram_delays(const std::vector<int>& delays);

// FNV-1a over the canonical config serialization; stamped into every report
// so outputs can be traced back to the exact configuration.
std::uint64_t fnv1a_hash(const std::string& text);

std::string report_to_json(const HcaReport& report);
void write_report_json(const HcaReport& report, const std::string& path);

void write_gain_csv(const std::vector<GainRow>& rows, const std::string& path);
void write_depth_histogram_csv(const DepthHistogram& hist, const std::string& path);
void write_delay_histogram_csv(const DelayHistogram& hist, const std::string& path);
void write_theory_csv(const std::vector<TheoryRow>& rows, const std::string& path);
void write_mc_report_csv(const McReport& report, const std::string& path);
void write_mc_curves_csv(const McReport& report, const std::string& path);

// Data-only plot description: one entry per emitted CSV naming the axes, so
// figures can be rebuilt with any plotting tool.
struct PlotEntry {
    std::string file;
    std::string title;
    std::string x;
    std::string y;
};
void write_plot_manifest(const std::vector<PlotEntry>& entries, const std::string& path);

} // namespace flexhca
