#include "flexhca/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "flexhca/io.hpp"

namespace flexhca {

using nlohmann::json;

namespace {

// nlohmann serializes non-finite doubles as null; keep them readable instead.
json number_or_string(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

} // namespace

double gain_percent(double capacity, double baseline) {
    if (!(baseline > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return (capacity - baseline) / baseline * 100.0;
}

DepthHistogram histogram_depths(const std::vector<double>& depths, int bins) {
    DepthHistogram hist;
    bins = std::max(1, bins);
    hist.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b)
        hist.edges[static_cast<std::size_t>(b)] = static_cast<double>(b) / bins;
    hist.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double d : depths) {
        if (!std::isfinite(d)) continue;
        int b = static_cast<int>(std::floor(d * bins));
        b = std::clamp(b, 0, bins - 1);  // depth 1.0 lands in the last bin
        ++hist.counts[static_cast<std::size_t>(b)];
    }
    return hist;
}

DelayHistogram histogram_delays(const std::vector<int>& delays) {
    DelayHistogram hist;
    if (delays.empty()) return hist;
    std::map<int, long> counts;
    for (int d : delays) ++counts[d];
    for (const auto& [d, c] : counts) {
        hist.delay.push_back(d);
        hist.count.push_back(c);
    }
    return hist;
}

std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string report_to_json(const HcaReport& report) {
    json j;
    j["version"] = report.version;
    j["config_hash"] = report.config_hash;
    j["mode"] = report.mode;
    j["flexibility"] = report.flexibility;
    j["baseline_capacity_kw"] = number_or_string(report.baseline_capacity);
    j["rows"] = json::array();
    for (const auto& row : report.rows) {
        json r;
        r["k"] = row.k;
        r["mu"] = number_or_string(row.mu);
        if (row.d >= 0) r["d"] = row.d;
        r["capacity_kw"] = number_or_string(row.capacity);
        r["gain_percent"] = number_or_string(row.gain_percent);
        j["rows"].push_back(std::move(r));
    }
    if (!report.depth_histogram.counts.empty()) {
        j["depth_histogram"] = {{"edges", report.depth_histogram.edges},
                                {"counts", report.depth_histogram.counts}};
    }
    if (!report.delay_histogram.delay.empty()) {
        j["delay_histogram"] = {{"delay_slots", report.delay_histogram.delay},
                                {"counts", report.delay_histogram.count}};
    }
    if (!report.binding_counts.empty()) j["binding_counts"] = report.binding_counts;
    if (!report.theory.empty()) {
        j["theory"] = json::array();
        for (const auto& row : report.theory) {
            json r;
            r["k"] = row.k;
            r["expected_weibull_kw"] = number_or_string(row.expected_weibull);
            r["expected_empirical_kw"] = number_or_string(row.expected_empirical);
            if (std::isfinite(row.solver_capacity)) r["solver_capacity_kw"] = row.solver_capacity;
            j["theory"].push_back(std::move(r));
        }
    }
    return j.dump(2) + "\n";
}

void write_report_json(const HcaReport& report, const std::string& path) {
    atomic_write(path, report_to_json(report));
}

void write_gain_csv(const std::vector<GainRow>& rows, const std::string& path) {
    std::ostringstream out;
    out << "k,mu,d,capacity_kw,gain_percent\n";
    for (const auto& row : rows) {
        out << row.k << ',' << format_number(row.mu) << ',';
        if (row.d >= 0) out << row.d;
        out << ',' << format_number(row.capacity) << ',' << format_number(row.gain_percent)
            << '\n';
    }
    atomic_write(path, out.str());
}

void write_depth_histogram_csv(const DepthHistogram& hist, const std::string& path) {
    std::ostringstream out;
    out << "depth_lo,depth_hi,count\n";
    for (std::size_t b = 0; b < hist.counts.size(); ++b)
        out << format_number(hist.edges[b]) << ',' << format_number(hist.edges[b + 1]) << ','
            << hist.counts[b] << '\n';
    atomic_write(path, out.str());
}

void write_delay_histogram_csv(const DelayHistogram& hist, const std::string& path) {
    std::ostringstream out;
    out << "delay_slots,count\n";
    for (std::size_t i = 0; i < hist.delay.size(); ++i)
        out << hist.delay[i] << ',' << hist.count[i] << '\n';
    atomic_write(path, out.str());
}

void write_theory_csv(const std::vector<TheoryRow>& rows, const std::string& path) {
    std::ostringstream out;
    out << "k,expected_weibull_kw,expected_empirical_kw,solver_capacity_kw\n";
    for (const auto& row : rows) {
        out << row.k << ',' << format_number(row.expected_weibull) << ','
            << format_number(row.expected_empirical) << ',';
        if (std::isfinite(row.solver_capacity)) out << format_number(row.solver_capacity);
        out << '\n';
    }
    atomic_write(path, out.str());
}

void write_mc_report_csv(const McReport& report, const std::string& path) {
    std::ostringstream out;
    out << "k,c_kw,exact,poisson,empirical,sigma,within_3sigma\n";
    for (const auto& cell : report.cells)
        out << cell.k << ',' << format_number(cell.c) << ',' << format_number(cell.exact) << ','
            << format_number(cell.poisson) << ',' << format_number(cell.empirical) << ','
            << format_number(cell.sigma) << ',' << (cell.within_3sigma ? 1 : 0) << '\n';
    atomic_write(path, out.str());
}

void write_mc_curves_csv(const McReport& report, const std::string& path) {
    std::ostringstream out;
    out << "k,mc_mean_kw,mc_stderr_kw,expected_weibull_kw\n";
    for (const auto& curve : report.curves)
        out << curve.k << ',' << format_number(curve.mc_mean) << ','
            << format_number(curve.mc_stderr) << ',' << format_number(curve.expected_weibull)
            << '\n';
    atomic_write(path, out.str());
}

void write_plot_manifest(const std::vector<PlotEntry>& entries, const std::string& path) {
    json j = json::array();
    for (const auto& entry : entries)
        j.push_back({{"file", entry.file},
                     {"title", entry.title},
                     {"x", entry.x},
                     {"y", entry.y}});
    atomic_write(path, j.dump(2) + "\n");
}

} // namespace flexhca
