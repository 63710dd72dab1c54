// flexhca command-line front end. Subcommands map onto the library:
//   capacity        per-slot residual/hosting capacity series
//   cf              curtailment sweep: gain curves, depth histogram, plan
//   df              delay sweep: gain curves, delay histogram, plan
//   theory fit      tail density fit on the aggregate load
//   theory expected closed-form capacity curves and depth profile
//   validate        Monte Carlo check of the tail formulas
//   scale           case-study scaling of loads + transformer limit
//
// Configuration comes from an optional JSON file (--config) whose keys match
// the flag names; flags given on the command line win. Exit codes: 0 success,
// 1 unexpected failure or failed validation, 2 configuration/input error,
// 3 infeasible instance, 4 modeling assumption violated.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flexhca/capacity.hpp"
#include "flexhca/cf.hpp"
#include "flexhca/df.hpp"
#include "flexhca/errors.hpp"
#include "flexhca/io.hpp"
#include "flexhca/network.hpp"
#include "flexhca/report.hpp"
#include "flexhca/tail.hpp"
#include "flexhca/types.hpp"
#include "flexhca/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace flexhca;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct RunConfig {
    std::string loads;
    std::string feeder;
    std::string profile;
    std::string attach_bus;
    std::string mode = "copperplate";
    std::string out = "out";
    int slots = 0;  // 0 = infer from the loads/profile CSV
    int slot_minutes = 15;
    int k = 0;
    std::vector<int> k_sweep;
    std::vector<int> d;
    std::vector<double> mu;
    std::uint64_t seed = 42;
    bool restrict_candidates = false;
    bool cap_at_capacity = false;
    double p0_max_kw = 0.0;  // copperplate transformer limit; 0 = take from feeder
    double cutoff_percentile = 90.0;
    std::string fit_method = "mle";
    double lbar_margin = 0.0;
    int k_max = 0;  // theory curve horizon; 0 = min(350, T_L - 2)
    int n_trials = 10000;
    std::vector<double> c_list;
    double headroom = 0.1;
    int bins = 20;
};

double json_to_double(const json& v, const std::string& key) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "inf") return kInf;
        try {
            return std::stod(s);
        } catch (...) {
        }
    }
    throw Error(errc::config_error, "config key '" + key + "' must be a number");
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::config_error, "cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(errc::config_error, std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(errc::config_error, "config file must hold a JSON object");

    static const std::set<std::string> known = {
        "loads",       "feeder",        "profile",      "attach_bus",
        "mode",        "out",           "slots",        "slot_minutes",
        "k",           "k_sweep",       "d",            "mu",
        "seed",        "restrict_candidates",           "cap_at_capacity",
        "p0_max_kw",   "cutoff_percentile",             "fit_method",
        "lbar_margin", "k_max",         "n_trials",     "c_list",
        "headroom",    "bins"};
    for (const auto& [key, val] : j.items()) {
        if (!known.count(key))
            throw Error(errc::config_error, "unknown config key '" + key + "'");
        if (key == "loads") cfg.loads = val.get<std::string>();
        else if (key == "feeder") cfg.feeder = val.get<std::string>();
        else if (key == "profile") cfg.profile = val.get<std::string>();
        else if (key == "attach_bus") cfg.attach_bus = val.get<std::string>();
        else if (key == "mode") cfg.mode = val.get<std::string>();
        else if (key == "out") cfg.out = val.get<std::string>();
        else if (key == "slots") cfg.slots = val.get<int>();
        else if (key == "slot_minutes") cfg.slot_minutes = val.get<int>();
        else if (key == "k") cfg.k = val.get<int>();
        else if (key == "k_sweep") cfg.k_sweep = val.get<std::vector<int>>();
        else if (key == "d") {
            if (val.is_array()) cfg.d = val.get<std::vector<int>>();
            else cfg.d = {val.get<int>()};
        } else if (key == "mu") {
            cfg.mu.clear();
            if (val.is_array())
                for (const auto& e : val) cfg.mu.push_back(json_to_double(e, key));
            else cfg.mu.push_back(json_to_double(val, key));
        } else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
        else if (key == "restrict_candidates") cfg.restrict_candidates = val.get<bool>();
        else if (key == "cap_at_capacity") cfg.cap_at_capacity = val.get<bool>();
        else if (key == "p0_max_kw") cfg.p0_max_kw = json_to_double(val, key);
        else if (key == "cutoff_percentile") cfg.cutoff_percentile = json_to_double(val, key);
        else if (key == "fit_method") cfg.fit_method = val.get<std::string>();
        else if (key == "lbar_margin") cfg.lbar_margin = json_to_double(val, key);
        else if (key == "k_max") cfg.k_max = val.get<int>();
        else if (key == "n_trials") cfg.n_trials = val.get<int>();
        else if (key == "c_list") {
            cfg.c_list.clear();
            for (const auto& e : val) cfg.c_list.push_back(json_to_double(e, key));
        } else if (key == "headroom") cfg.headroom = json_to_double(val, key);
        else if (key == "bins") cfg.bins = val.get<int>();
    }
}

// Canonical serialization of the effective configuration; hashed into every
// report so outputs are traceable to their exact inputs. The output location
// is deliberately left out: it does not affect any computed value, and two
// runs into different directories must produce identical bytes.
std::string config_canonical(const RunConfig& cfg, const std::string& command) {
    json j;
    j["command"] = command;
    j["loads"] = cfg.loads;
    j["feeder"] = cfg.feeder;
    j["profile"] = cfg.profile;
    j["attach_bus"] = cfg.attach_bus;
    j["mode"] = cfg.mode;
    j["slots"] = cfg.slots;
    j["slot_minutes"] = cfg.slot_minutes;
    j["k"] = cfg.k;
    j["k_sweep"] = cfg.k_sweep;
    j["d"] = cfg.d;
    j["mu"] = json::array();
    for (double m : cfg.mu) j["mu"].push_back(std::isfinite(m) ? json(m) : json("inf"));
    j["seed"] = cfg.seed;
    j["restrict_candidates"] = cfg.restrict_candidates;
    j["cap_at_capacity"] = cfg.cap_at_capacity;
    j["p0_max_kw"] = cfg.p0_max_kw;
    j["cutoff_percentile"] = cfg.cutoff_percentile;
    j["fit_method"] = cfg.fit_method;
    j["lbar_margin"] = cfg.lbar_margin;
    j["k_max"] = cfg.k_max;
    j["n_trials"] = cfg.n_trials;
    j["c_list"] = cfg.c_list;
    j["headroom"] = cfg.headroom;
    j["bins"] = cfg.bins;
    return j.dump();
}

int count_csv_data_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::config_error, "cannot open " + path);
    std::string line;
    int rows = 0;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            continue;  // header
        }
        ++rows;
    }
    return rows;
}

TimeGrid make_grid(const RunConfig& cfg) {
    int slots = cfg.slots;
    if (slots <= 0) {
        if (!cfg.loads.empty()) slots = count_csv_data_rows(cfg.loads);
        else if (!cfg.profile.empty()) slots = count_csv_data_rows(cfg.profile);
        else
            throw Error(errc::config_error,
                        "cannot infer the horizon: give --slots or a loads/profile CSV");
    }
    return TimeGrid(slots, cfg.slot_minutes);
}

LoadSet require_loads(const RunConfig& cfg, const TimeGrid& grid) {
    if (cfg.loads.empty()) throw Error(errc::config_error, "this command requires --loads");
    return load_csv(cfg.loads, grid);
}

NewLoadSpec make_spec(const RunConfig& cfg, const TimeGrid& grid) {
    NewLoadSpec spec;
    spec.attach_bus = cfg.attach_bus;
    if (cfg.profile.empty())
        spec.profile = Eigen::VectorXd::Ones(grid.slot_count);  // flat unit profile
    else
        spec.profile = load_profile_csv(cfg.profile, grid);
    return spec;
}

double resolve_p0_max(const RunConfig& cfg) {
    if (cfg.p0_max_kw > 0.0) return cfg.p0_max_kw;
    if (!cfg.feeder.empty()) return load_feeder_json(cfg.feeder).p0_max_kw;
    throw Error(errc::config_error, "transformer limit unknown: give --p0-max or --feeder");
}

// Builds the capacity series in either mode; per-slot binding labels are
// returned for the network mode when requested.
CapacitySeries build_series(const RunConfig& cfg, const TimeGrid& grid, const LoadSet& loads,
                            std::vector<std::string>* binding_labels) {
    const NewLoadSpec spec = make_spec(cfg, grid);
    if (cfg.mode == "network") {
        if (cfg.feeder.empty())
            throw Error(errc::config_error, "mode=network requires --feeder");
        const FeederModel feeder = load_feeder_json(cfg.feeder);
        const ImpedanceMatrices zmats = build_impedance(feeder);
        return capacity_network(loads, spec, feeder, zmats, binding_labels);
    }
    if (cfg.mode != "copperplate")
        throw Error(errc::config_error, "mode must be 'copperplate' or 'network'");
    return capacity_copperplate(loads, spec, resolve_p0_max(cfg));
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out);
    return (fs::path(cfg.out) / name).string();
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

json window_slack_json(const WindowSlackReport& report) {
    json windows = json::array();
    for (const auto& w : report.windows)
        windows.push_back({{"begin", w.begin},
                           {"end", w.end},
                           {"slack_kw", w.slack_kw},
                           {"satisfied", w.satisfied}});
    return windows;
}

std::vector<int> effective_k_list(const RunConfig& cfg) {
    if (!cfg.k_sweep.empty()) return cfg.k_sweep;
    return {cfg.k};
}

// ---------------------------------------------------------------- capacity

int cmd_capacity(const RunConfig& cfg) {
    const TimeGrid grid = make_grid(cfg);
    const LoadSet loads = require_loads(cfg, grid);
    std::vector<std::string> binding;
    const CapacitySeries series =
        build_series(cfg, grid, loads, cfg.mode == "network" ? &binding : nullptr);
    write_capacity_csv(series, out_path(cfg, "capacity.csv"));

    json summary;
    summary["version"] = kVersion;
    summary["config_hash"] = fnv1a_hash(config_canonical(cfg, "capacity"));
    summary["mode"] = cfg.mode;
    summary["slots"] = series.slot_count();
    summary["baseline_capacity_kw"] = order_stat(series, 1).first;
    if (!binding.empty()) {
        std::ostringstream bcsv;
        bcsv << "slot,binding\n";
        std::map<std::string, long> counts;
        for (int t = 0; t < series.slot_count(); ++t) {
            bcsv << t << ',' << binding[static_cast<std::size_t>(t)] << '\n';
            ++counts[binding[static_cast<std::size_t>(t)]];
        }
        atomic_write(out_path(cfg, "binding.csv"), bcsv.str());
        summary["binding_counts"] = counts;
    }
    atomic_write(out_path(cfg, "capacity_summary.json"), summary.dump(2) + "\n");
    std::cout << "capacity series: " << out_path(cfg, "capacity.csv") << " (slots="
              << series.slot_count() << ")\n";
    return 0;
}

// ---------------------------------------------------------------------- cf

int cmd_cf(const RunConfig& cfg) {
    const TimeGrid grid = make_grid(cfg);
    const LoadSet loads = require_loads(cfg, grid);
    std::vector<std::string> binding;
    const CapacitySeries series =
        build_series(cfg, grid, loads, cfg.mode == "network" ? &binding : nullptr);

    const std::vector<int> k_list = effective_k_list(cfg);
    const std::vector<double> mu_list = cfg.mu.empty() ? std::vector<double>{kInf} : cfg.mu;
    const double baseline = solve_cf(series, 0).capacity;

    struct Cell {
        GainRow row;
        CfPlan plan;
    };
    std::vector<std::future<Cell>> futures;
    for (int k : k_list)
        for (double mu : mu_list)
            futures.push_back(std::async(std::launch::async, [&, k, mu] {
                Cell cell;
                cell.plan = mu >= 1.0 ? solve_cf(series, k) : solve_cf_bounded(series, k, mu);
                cell.row = {k, mu, -1, cell.plan.capacity,
                            gain_percent(cell.plan.capacity, baseline)};
                return cell;
            }));

    HcaReport report;
    report.version = kVersion;
    report.config_hash = fnv1a_hash(config_canonical(cfg, "cf"));
    report.mode = cfg.mode;
    report.flexibility = "cf";
    report.baseline_capacity = baseline;
    for (const auto& b : binding) ++report.binding_counts[b];

    // Histogram and plan come from the deepest sweep cell at the first mu.
    const int k_star = *std::max_element(k_list.begin(), k_list.end());
    CfPlan chosen;
    std::size_t idx = 0;
    for (std::size_t ik = 0; ik < k_list.size(); ++ik)
        for (std::size_t im = 0; im < mu_list.size(); ++im, ++idx) {
            Cell cell = futures[idx].get();
            if (k_list[ik] == k_star && im == 0) chosen = cell.plan;
            report.rows.push_back(cell.row);
        }
    report.depth_histogram = histogram_depths(chosen.depths, cfg.bins);

    write_report_json(report, out_path(cfg, "report.json"));
    write_gain_csv(report.rows, out_path(cfg, "gain_cf.csv"));
    write_depth_histogram_csv(report.depth_histogram, out_path(cfg, "depth_histogram.csv"));

    json plan;
    plan["capacity_kw"] = std::isfinite(chosen.capacity) ? json(chosen.capacity) : json("inf");
    plan["k_budget"] = k_star;
    plan["mu"] = std::isfinite(mu_list.front()) ? json(mu_list.front()) : json("inf");
    plan["k_used"] = chosen.k_used();
    plan["slots"] = json::array();
    for (std::size_t i = 0; i < chosen.intervened.size(); ++i) {
        json s;
        s["t"] = chosen.intervened[i];
        s["u_kw"] = chosen.u[i];
        s["depth_frac"] = chosen.depths[i];
        plan["slots"].push_back(std::move(s));
    }
    atomic_write(out_path(cfg, "plan_cf.json"), plan.dump(2) + "\n");

    write_plot_manifest(
        {{"gain_cf.csv", "Hosting capacity gain vs curtailment budget", "k", "gain_percent"},
         {"depth_histogram.csv", "Distribution of curtailment depth", "depth", "count"}},
        out_path(cfg, "plots.json"));

    std::cout << "cf sweep: baseline " << format_number(baseline) << " kW, best "
              << format_number(chosen.capacity) << " kW at k=" << k_star << "\n";
    return 0;
}

// ---------------------------------------------------------------------- df

int cmd_df(const RunConfig& cfg) {
    const TimeGrid grid = make_grid(cfg);
    const LoadSet loads = require_loads(cfg, grid);
    std::vector<std::string> binding;
    const CapacitySeries series =
        build_series(cfg, grid, loads, cfg.mode == "network" ? &binding : nullptr);

    const std::vector<int> k_list = effective_k_list(cfg);
    if (cfg.d.empty()) throw Error(errc::config_error, "df requires --d (window length)");
    const std::vector<int> d_list = cfg.d;
    const double baseline = solve_cf(series, 0).capacity;

    std::vector<std::future<DfPlan>> futures;
    for (int k : k_list)
        for (int d : d_list)
            futures.push_back(std::async(std::launch::async, [&, k, d] {
                return solve_df(series, k, d, cfg.restrict_candidates, cfg.cap_at_capacity);
            }));

    HcaReport report;
    report.version = kVersion;
    report.config_hash = fnv1a_hash(config_canonical(cfg, "df"));
    report.mode = cfg.mode;
    report.flexibility = "df";
    report.baseline_capacity = baseline;
    for (const auto& b : binding) ++report.binding_counts[b];

    const int k_star = *std::max_element(k_list.begin(), k_list.end());
    const int d_star = *std::max_element(d_list.begin(), d_list.end());
    DfPlan chosen;
    std::size_t idx = 0;
    for (std::size_t ik = 0; ik < k_list.size(); ++ik)
        for (std::size_t id = 0; id < d_list.size(); ++id, ++idx) {
            DfPlan plan = futures[idx].get();
            report.rows.push_back({k_list[ik], kInf, d_list[id], plan.capacity,
                                   gain_percent(plan.capacity, baseline)});
            if (k_list[ik] == k_star && d_list[id] == d_star) chosen = std::move(plan);
        }

    chosen = minimal_delays(std::move(chosen), series);
    std::vector<int> delays;
    for (const auto& event : chosen.events) delays.push_back(event.d_min);
    report.delay_histogram = histogram_delays(delays);
    const EquivalenceReport equivalence = check_cf_equivalence(series, k_star);

    write_report_json(report, out_path(cfg, "report.json"));
    write_gain_csv(report.rows, out_path(cfg, "gain_df.csv"));
    write_delay_histogram_csv(report.delay_histogram, out_path(cfg, "delay_histogram.csv"));

    json plan;
    plan["capacity_kw"] = std::isfinite(chosen.capacity) ? json(chosen.capacity) : json("inf");
    plan["k"] = k_star;
    plan["d"] = d_star;
    plan["events"] = json::array();
    for (const auto& event : chosen.events) {
        json e;
        e["t"] = event.t;
        e["reduce_kw"] = event.reduce_kw;
        e["d_min"] = event.d_min;
        e["shifts"] = json::array();
        for (const auto& shift : event.shifts)
            e["shifts"].push_back({{"offset", shift.offset}, {"add_kw", shift.add_kw}});
        plan["events"].push_back(std::move(e));
    }
    plan["merged_windows"] = chosen.merged_windows;
    plan["u_kw"] = to_std(chosen.u);
    plan["window_slack_ok"] = chosen.window_slack.satisfied;
    plan["windows"] = window_slack_json(chosen.window_slack);
    plan["cf_equivalence_ok"] = equivalence.overall;
    plan["equal_delay"] = equivalence.equal_delay;
    atomic_write(out_path(cfg, "plan_df.json"), plan.dump(2) + "\n");

    write_plot_manifest(
        {{"gain_df.csv", "Hosting capacity gain vs delay budget", "k", "gain_percent"},
         {"delay_histogram.csv", "Distribution of minimal delay", "delay_slots", "count"}},
        out_path(cfg, "plots.json"));

    std::cout << "df sweep: baseline " << format_number(baseline) << " kW, best "
              << format_number(chosen.capacity) << " kW at k=" << k_star << " d=" << d_star
              << "\n";

    if (!chosen.window_slack.satisfied) {
        json detail;
        detail["error"] = "WindowSlackUnsatisfied";
        detail["message"] =
            "a merged delay window has negative capacity slack; the reported capacity is a "
            "lower bound without an optimality certificate";
        detail["windows"] = window_slack_json(chosen.window_slack);
        atomic_write(out_path(cfg, "error.json"), detail.dump(2) + "\n");
        std::cerr << "window slack violated; see " << out_path(cfg, "error.json") << "\n";
        return 4;
    }
    return 0;
}

// ------------------------------------------------------------------ theory

TailFitMethod parse_fit_method(const std::string& name) {
    if (name == "mle") return TailFitMethod::mle;
    if (name == "histogram") return TailFitMethod::histogram;
    throw Error(errc::config_error, "fit method must be 'mle' or 'histogram'");
}

TailModel fit_from_loads(const RunConfig& cfg, std::vector<double>* aggregate_out = nullptr) {
    const TimeGrid grid = make_grid(cfg);
    const LoadSet loads = require_loads(cfg, grid);
    std::vector<double> aggregate = to_std(loads.aggregate());
    TailModel model = fit_tail(aggregate, cfg.cutoff_percentile, parse_fit_method(cfg.fit_method),
                               cfg.lbar_margin);
    if (aggregate_out) *aggregate_out = std::move(aggregate);
    return model;
}

int cmd_theory_fit(const RunConfig& cfg) {
    std::vector<double> aggregate;
    const TailModel model = fit_from_loads(cfg, &aggregate);

    json j;
    j["version"] = kVersion;
    j["config_hash"] = fnv1a_hash(config_canonical(cfg, "theory fit"));
    j["L_kw"] = model.L;
    j["L_bar_kw"] = model.L_bar;
    j["kappa_per_kw"] = model.kappa;
    j["alpha"] = model.alpha;
    j["T_L"] = model.T_L;
    j["beta_L"] = model.beta_L;
    j["cutoff_percentile"] = cfg.cutoff_percentile;
    j["fit_method"] = cfg.fit_method;
    atomic_write(out_path(cfg, "theory_fit.json"), j.dump(2) + "\n");

    // Binned empirical density of the high-load sample next to the fitted
    // density at the bin centers.
    std::vector<double> tail;
    for (double x : aggregate)
        if (x >= model.L) tail.push_back(x);
    const int bins = std::max(1, cfg.bins);
    const double width = (model.L_bar - model.L) / bins;
    std::vector<long> counts(static_cast<std::size_t>(bins), 0);
    for (double x : tail) {
        int b = static_cast<int>(std::floor((x - model.L) / width));
        ++counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))];
    }
    std::ostringstream csv;
    csv << "x_lo_kw,x_hi_kw,empirical_density,model_density\n";
    for (int b = 0; b < bins; ++b) {
        const double lo = model.L + b * width, hi = lo + width;
        csv << format_number(lo) << ',' << format_number(hi) << ','
            << format_number(counts[static_cast<std::size_t>(b)] /
                             (static_cast<double>(tail.size()) * width))
            << ',' << format_number(model.density(0.5 * (lo + hi))) << '\n';
    }
    atomic_write(out_path(cfg, "density_fit.csv"), csv.str());
    write_plot_manifest({{"density_fit.csv", "High-load density: empirical vs fitted", "x_kw",
                          "density"}},
                        out_path(cfg, "plots.json"));

    std::cout << "tail fit: kappa=" << format_number(model.kappa)
              << " alpha=" << format_number(model.alpha) << " T_L=" << model.T_L << "\n";
    return 0;
}

int cmd_theory_expected(const RunConfig& cfg) {
    std::vector<double> aggregate;
    const TailModel model = fit_from_loads(cfg, &aggregate);
    const double p0 = resolve_p0_max(cfg);

    std::vector<double> tail;
    for (double x : aggregate)
        if (x >= model.L) tail.push_back(x);

    const int k_max = cfg.k_max > 0 ? std::min(cfg.k_max, model.T_L - 2)
                                    : std::min(350, model.T_L - 2);
    std::vector<TheoryRow> rows;
    for (int k = 0; k <= k_max; ++k) {
        TheoryRow row;
        row.k = k;
        row.expected_weibull = expected_capacity(model, k, p0, ExpectationVariant::weibull);
        row.expected_empirical =
            expected_capacity(model, k, p0, ExpectationVariant::empirical, &tail);
        rows.push_back(row);
    }
    write_theory_csv(rows, out_path(cfg, "theory_expected.csv"));

    const std::vector<double> gains = marginal_gains(model, k_max, p0);
    std::ostringstream gcsv;
    gcsv << "k,marginal_gain_kw\n";
    for (std::size_t i = 0; i < gains.size(); ++i)
        gcsv << (i + 1) << ',' << format_number(gains[i]) << '\n';
    atomic_write(out_path(cfg, "marginal_gains.csv"), gcsv.str());

    json j;
    j["version"] = kVersion;
    j["config_hash"] = fnv1a_hash(config_canonical(cfg, "theory expected"));
    j["p0_max_kw"] = p0;
    j["k_max"] = k_max;
    j["alpha"] = model.alpha;
    if (cfg.k >= 3) {
        const DepthReport depth = depth_requirements(model, cfg.k, p0);
        std::ostringstream dcsv;
        dcsv << "k,depth_kw\n";
        for (std::size_t i = 0; i < depth.r.size(); ++i)
            dcsv << (i + 1) << ',' << format_number(depth.r[i]) << '\n';
        atomic_write(out_path(cfg, "depth_requirements.csv"), dcsv.str());
        j["depth"] = {{"k", cfg.k},
                      {"median_kw", depth.median},
                      {"midpoint_kw", depth.midpoint},
                      {"concentrated", depth.ok}};
    }
    atomic_write(out_path(cfg, "theory_expected.json"), j.dump(2) + "\n");
    write_plot_manifest(
        {{"theory_expected.csv", "Expected hosting capacity vs budget", "k", "capacity_kw"},
         {"marginal_gains.csv", "Marginal capacity gain", "k", "marginal_gain_kw"}},
        out_path(cfg, "plots.json"));

    std::cout << "theory curves up to k=" << k_max << ": " << out_path(cfg, "theory_expected.csv")
              << "\n";
    return 0;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const RunConfig& cfg) {
    const TailModel model = fit_from_loads(cfg);
    const double p0 = resolve_p0_max(cfg);

    int n_trials = cfg.n_trials;
    if (n_trials < 1000) {
        std::cerr << "warning: n_trials=" << n_trials
                  << " is below the 1000 minimum; raising to 1000\n";
        n_trials = 1000;
    }

    std::vector<int> k_list = cfg.k_sweep;
    if (k_list.empty()) {
        for (int k : {0, 10, 100, 350})
            if (k <= model.T_L - 1) k_list.push_back(k);
    }
    std::vector<double> c_list = cfg.c_list;
    if (c_list.empty()) {
        // Thresholds at interior quantiles of the zero-budget capacity.
        for (int j = 1; j <= 5; ++j) {
            const double c = p0 - model.quantile(1.0 - j / 6.0);
            if (c > 0.0) c_list.push_back(c);
        }
        if (c_list.empty())
            throw Error(errc::config_error,
                        "transformer limit leaves no positive capacity; give --c-list");
    }

    const McReport report = monte_carlo_validate(model, p0, k_list, c_list, n_trials, cfg.seed);

    json j;
    j["version"] = kVersion;
    j["config_hash"] = fnv1a_hash(config_canonical(cfg, "validate"));
    j["n_trials"] = report.n_trials;
    j["all_within_3sigma"] = report.all_within_3sigma;
    j["cells"] = json::array();
    for (const auto& cell : report.cells)
        j["cells"].push_back({{"k", cell.k},
                              {"c_kw", cell.c},
                              {"exact", cell.exact},
                              {"poisson", cell.poisson},
                              {"empirical", cell.empirical},
                              {"sigma", cell.sigma},
                              {"within_3sigma", cell.within_3sigma}});
    j["curves"] = json::array();
    for (const auto& curve : report.curves)
        j["curves"].push_back({{"k", curve.k},
                               {"mc_mean_kw", curve.mc_mean},
                               {"mc_stderr_kw", curve.mc_stderr},
                               {"expected_weibull_kw", curve.expected_weibull}});
    atomic_write(out_path(cfg, "validate.json"), j.dump(2) + "\n");
    write_mc_report_csv(report, out_path(cfg, "mc_cells.csv"));
    write_mc_curves_csv(report, out_path(cfg, "mc_curves.csv"));
    write_plot_manifest(
        {{"mc_cells.csv", "Tail probability: Monte Carlo vs closed forms", "c_kw", "probability"},
         {"mc_curves.csv", "Expected capacity: Monte Carlo vs closed form", "k", "capacity_kw"}},
        out_path(cfg, "plots.json"));

    std::cout << "validate: " << report.cells.size() << " cells, "
              << (report.all_within_3sigma ? "all" : "NOT all") << " within 3 sigma\n";
    return report.all_within_3sigma ? 0 : 1;
}

// ------------------------------------------------------------------- scale

int cmd_scale(const RunConfig& cfg) {
    const TimeGrid grid = make_grid(cfg);
    const LoadSet loads = require_loads(cfg, grid);
    if (cfg.feeder.empty()) throw Error(errc::config_error, "scale requires --feeder");
    const FeederModel feeder = load_feeder_json(cfg.feeder);

    const auto [scaled_loads, scaled_feeder] = scale_case_study(loads, feeder, cfg.headroom);
    write_csv(scaled_loads, out_path(cfg, "loads_scaled.csv"));
    write_feeder_json(scaled_feeder, out_path(cfg, "feeder_scaled.json"));

    const ImpedanceMatrices zmats = build_impedance(scaled_feeder);
    const double peak_before = loads.aggregate().maxCoeff();
    const double peak_after = scaled_loads.aggregate().maxCoeff();
    json j;
    j["version"] = kVersion;
    j["config_hash"] = fnv1a_hash(config_canonical(cfg, "scale"));
    j["headroom"] = cfg.headroom;
    j["total_scale_factor"] = peak_before > 0 ? peak_after / peak_before : 0.0;
    j["p0_max_kw"] = scaled_feeder.p0_max_kw;
    j["peak_scaled_kw"] = peak_after;
    j["min_voltage_pu"] = min_network_voltage(scaled_loads, scaled_feeder, zmats);
    j["min_v_lower_pu"] = scaled_feeder.v_lower.minCoeff();
    atomic_write(out_path(cfg, "scale.json"), j.dump(2) + "\n");

    std::cout << "scaled case study: p0_max=" << format_number(scaled_feeder.p0_max_kw)
              << " kW, peak=" << format_number(peak_after) << " kW\n";
    return 0;
}

// -------------------------------------------------------------------- main

int exit_code_for(errc code) {
    switch (code) {
        case errc::malformed_csv:
        case errc::negative_load:
        case errc::rank_out_of_range:
        case errc::not_a_tree:
        case errc::disconnected_bus:
        case errc::event_near_horizon_end:
        case errc::config_error:
            return 2;
        case errc::infeasible_scaling:
        case errc::infeasible:
        case errc::nonnegativity_violated:
            return 3;
        case errc::nonpositive_mutual_impedance:
        case errc::upper_bound_unsafe:
        case errc::degenerate_tail:
        case errc::degenerate_range:
            return 4;
        case errc::lp_numerical_failure:
            return 1;
    }
    return 1;
}

void emit_error_json(const RunConfig& cfg, const std::string& name, const std::string& message,
                     int code) {
    try {
        json detail{{"error", name}, {"message", message}, {"exit_code", code}};
        fs::create_directories(cfg.out);
        atomic_write((fs::path(cfg.out) / "error.json").string(), detail.dump(2) + "\n");
    } catch (...) {
        // error reporting must never mask the original failure
    }
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;

    // The config file seeds the defaults, so parse its location first; CLI11
    // then overrides any key given as a flag.
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
    }
    if (!config_path.empty()) {
        try {
            apply_config_file(cfg, config_path);
        } catch (const Error& e) {
            std::cerr << e.what() << "\n";
            return 2;
        }
    }

    CLI::App app{"flexibility-aware hosting capacity analysis"};
    app.require_subcommand(1);
    std::string config_sink;
    app.add_option("--config", config_sink, "JSON config file; flags override its keys");
    app.add_option("--loads", cfg.loads, "existing-load CSV (slot,bus_...)");
    app.add_option("--feeder", cfg.feeder, "feeder JSON");
    app.add_option("--profile", cfg.profile, "normalized new-load profile CSV (slot,lhat)");
    app.add_option("--attach-bus", cfg.attach_bus, "bus the new load connects to");
    app.add_option("--mode", cfg.mode, "copperplate | network");
    app.add_option("--out", cfg.out, "output directory");
    app.add_option("--slots", cfg.slots, "horizon length; 0 infers from the CSV");
    app.add_option("--slot-minutes", cfg.slot_minutes, "slot length in minutes");
    app.add_option("--k", cfg.k, "intervention budget");
    app.add_option("--k-sweep", cfg.k_sweep, "budgets to sweep")->delimiter(',');
    app.add_option("--d", cfg.d, "delay window length(s)")->delimiter(',');
    app.add_option("--mu", cfg.mu, "depth bound(s); 'inf' for unbounded")->delimiter(',');
    app.add_option("--seed", cfg.seed, "RNG seed");
    app.add_flag("--restrict-candidates", cfg.restrict_candidates,
                 "only pick event slots with a full window before the horizon end");
    app.add_flag("--cap-at-capacity", cfg.cap_at_capacity,
                 "also bound the modified new load by the capacity at every slot");
    app.add_option("--p0-max", cfg.p0_max_kw, "transformer limit, kW (copperplate)");
    app.add_option("--cutoff-percentile", cfg.cutoff_percentile, "tail cutoff percentile");
    app.add_option("--fit-method", cfg.fit_method, "mle | histogram");
    app.add_option("--lbar-margin", cfg.lbar_margin, "right-endpoint inflation fraction");
    app.add_option("--k-max", cfg.k_max, "largest budget for theory curves");
    app.add_option("--n-trials", cfg.n_trials, "Monte Carlo trials");
    app.add_option("--c-list", cfg.c_list, "capacity thresholds, kW")->delimiter(',');
    app.add_option("--headroom", cfg.headroom, "scale-down fraction after voltage scaling");
    app.add_option("--bins", cfg.bins, "histogram bins");

    CLI::App* sub_capacity = app.add_subcommand("capacity", "per-slot capacity series");
    CLI::App* sub_cf = app.add_subcommand("cf", "curtailment-flexibility sweep");
    CLI::App* sub_df = app.add_subcommand("df", "delay-flexibility sweep");
    CLI::App* sub_theory = app.add_subcommand("theory", "tail model and closed forms");
    CLI::App* sub_fit = sub_theory->add_subcommand("fit", "fit the tail density");
    CLI::App* sub_expected = sub_theory->add_subcommand("expected", "expected-capacity curves");
    sub_theory->require_subcommand(1);
    CLI::App* sub_validate = app.add_subcommand("validate", "Monte Carlo validation");
    CLI::App* sub_scale = app.add_subcommand("scale", "case-study scaling");
    for (CLI::App* sub : {sub_capacity, sub_cf, sub_df, sub_theory, sub_fit, sub_expected,
                          sub_validate, sub_scale})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(sub_capacity)) return cmd_capacity(cfg);
        if (app.got_subcommand(sub_cf)) return cmd_cf(cfg);
        if (app.got_subcommand(sub_df)) return cmd_df(cfg);
        if (app.got_subcommand(sub_theory)) {
            if (sub_theory->got_subcommand(sub_fit)) return cmd_theory_fit(cfg);
            return cmd_theory_expected(cfg);
        }
        if (app.got_subcommand(sub_validate)) return cmd_validate(cfg);
        if (app.got_subcommand(sub_scale)) return cmd_scale(cfg);
    } catch (const Error& e) {
        const int code = exit_code_for(e.code());
        std::cerr << e.what() << "\n";
        emit_error_json(cfg, errc_name(e.code()), e.what(), code);
        return code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        emit_error_json(cfg, "Unexpected", e.what(), 1);
        return 1;
    }
    return 0;
}
