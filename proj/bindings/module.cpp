#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flexhca/capacity.hpp"
#include "flexhca/cf.hpp"
#include "flexhca/df.hpp"
#include "flexhca/errors.hpp"
#include "flexhca/io.hpp"
#include "flexhca/network.hpp"
#include "flexhca/synth.hpp"
#include "flexhca/tail.hpp"
#include "flexhca/types.hpp"
#include "flexhca/version.hpp"

namespace py = pybind11;
using namespace flexhca;

PYBIND11_MODULE(_flexhca, m) {
    m.doc() = "flexibility-aware hosting capacity analysis";
    m.attr("__version__") = kVersion;

    py::register_exception<Error>(m, "FlexhcaError");

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init<int, int, std::string>(), py::arg("slots"), py::arg("minutes") = 15,
             py::arg("label") = std::string())
        .def_readonly("slot_count", &TimeGrid::slot_count)
        .def_readonly("slot_minutes", &TimeGrid::slot_minutes)
        .def("slots_per_day", &TimeGrid::slots_per_day);

    py::class_<LoadSet>(m, "LoadSet")
        .def(py::init<>())
        .def_readwrite("grid", &LoadSet::grid)
        .def_readwrite("values", &LoadSet::values)
        .def_readwrite("bus_ids", &LoadSet::bus_ids)
        .def("aggregate", &LoadSet::aggregate)
        .def("bus_count", &LoadSet::bus_count)
        .def("slot_count", &LoadSet::slot_count)
        .def("validate", &LoadSet::validate);

    py::class_<NewLoadSpec>(m, "NewLoadSpec")
        .def(py::init<>())
        .def_readwrite("profile", &NewLoadSpec::profile)
        .def_readwrite("attach_bus", &NewLoadSpec::attach_bus);

    py::class_<Line>(m, "Line")
        .def(py::init<>())
        .def_readwrite("from_bus", &Line::from)
        .def_readwrite("to_bus", &Line::to)
        .def_readwrite("r", &Line::r)
        .def_readwrite("x", &Line::x);

    py::class_<FeederModel>(m, "FeederModel")
        .def(py::init<>())
        .def_readwrite("bus_names", &FeederModel::bus_names)
        .def_readwrite("lines", &FeederModel::lines)
        .def_readwrite("eta", &FeederModel::eta)
        .def_readwrite("v0", &FeederModel::v0)
        .def_readwrite("v_lower", &FeederModel::v_lower)
        .def_readwrite("v_upper", &FeederModel::v_upper)
        .def_readwrite("p0_max_kw", &FeederModel::p0_max_kw)
        .def_readwrite("s_base_kva", &FeederModel::s_base_kva)
        .def("bus_count", &FeederModel::bus_count)
        .def("validate", &FeederModel::validate);

    py::class_<CapacitySeries>(m, "CapacitySeries")
        .def_readonly("c_res", &CapacitySeries::c_res)
        .def_readonly("c_dyn", &CapacitySeries::c_dyn)
        .def_readonly("lhat", &CapacitySeries::lhat)
        .def_readonly("order", &CapacitySeries::order)
        .def_readonly("rank_of", &CapacitySeries::rank_of)
        .def_readonly("sorted", &CapacitySeries::sorted)
        .def_readonly("structurally_infeasible", &CapacitySeries::structurally_infeasible)
        .def("slot_count", &CapacitySeries::slot_count);

    m.def("capacity_copperplate", &capacity_copperplate, py::arg("loads"), py::arg("spec"),
          py::arg("p0_max_kw"));
    m.def("make_capacity_series", &make_capacity_series, py::arg("c_res"), py::arg("lhat"));
    m.def("order_stat", &order_stat, py::arg("series"), py::arg("s"),
          "returns (C[s], slot), s is a 1-based rank");

    py::class_<ImpedanceMatrices>(m, "ImpedanceMatrices")
        .def_readonly("R", &ImpedanceMatrices::R)
        .def_readonly("X", &ImpedanceMatrices::X)
        .def("z_at", &ImpedanceMatrices::z_at)
        .def("bus_count", &ImpedanceMatrices::bus_count);

    m.def("build_impedance", &build_impedance);
    m.def("require_positive_mutual_impedance", &require_positive_mutual_impedance);
    m.def(
        "capacity_network",
        [](const LoadSet& loads, const NewLoadSpec& spec, const FeederModel& feeder,
           const ImpedanceMatrices& zmats) {
            std::vector<std::string> binding;
            CapacitySeries series = capacity_network(loads, spec, feeder, zmats, &binding);
            return py::make_tuple(series, binding);
        },
        py::arg("loads"), py::arg("spec"), py::arg("feeder"), py::arg("zmats"),
        "returns (series, per-slot binding labels)");
    m.def("min_network_voltage", &min_network_voltage);
    m.def("scale_case_study", &scale_case_study, py::arg("loads"), py::arg("feeder"),
          py::arg("headroom_fraction"));

    py::class_<CfPlan>(m, "CfPlan")
        .def_readonly("capacity", &CfPlan::capacity)
        .def_readonly("intervened", &CfPlan::intervened)
        .def_readonly("u", &CfPlan::u)
        .def_readonly("depths", &CfPlan::depths)
        .def("k_used", &CfPlan::k_used);

    m.def("solve_cf", &solve_cf, py::arg("series"), py::arg("k"));
    m.def("solve_cf_bounded", &solve_cf_bounded, py::arg("series"), py::arg("k"), py::arg("mu"));

    py::class_<CfSweepRow>(m, "CfSweepRow")
        .def_readonly("k", &CfSweepRow::k)
        .def_readonly("mu", &CfSweepRow::mu)
        .def_readonly("capacity", &CfSweepRow::capacity)
        .def_readonly("gain_percent", &CfSweepRow::gain_percent);

    m.def("sweep_cf", &sweep_cf, py::arg("series"), py::arg("k_list"), py::arg("mu_list"));

    py::class_<DfShift>(m, "DfShift")
        .def_readonly("offset", &DfShift::offset)
        .def_readonly("add_kw", &DfShift::add_kw);

    py::class_<DfEvent>(m, "DfEvent")
        .def_readonly("t", &DfEvent::t)
        .def_readonly("reduce_kw", &DfEvent::reduce_kw)
        .def_readonly("shifts", &DfEvent::shifts)
        .def_readonly("d_min", &DfEvent::d_min);

    py::class_<WindowSlack>(m, "WindowSlack")
        .def_readonly("begin", &WindowSlack::begin)
        .def_readonly("end", &WindowSlack::end)
        .def_readonly("slack_kw", &WindowSlack::slack_kw)
        .def_readonly("satisfied", &WindowSlack::satisfied);

    py::class_<WindowSlackReport>(m, "WindowSlackReport")
        .def_readonly("windows", &WindowSlackReport::windows)
        .def_readonly("satisfied", &WindowSlackReport::satisfied);

    py::class_<EquivalenceReport>(m, "EquivalenceReport")
        .def_readonly("cf_capacity", &EquivalenceReport::cf_capacity)
        .def_readonly("event_times", &EquivalenceReport::event_times)
        .def_readonly("margins", &EquivalenceReport::margins)
        .def_readonly("event_ok", &EquivalenceReport::event_ok)
        .def_readonly("overall", &EquivalenceReport::overall)
        .def_readonly("equal_delay", &EquivalenceReport::equal_delay);

    py::class_<DfPlan>(m, "DfPlan")
        .def_readonly("capacity", &DfPlan::capacity)
        .def_readonly("delay", &DfPlan::delay)
        .def_readonly("events", &DfPlan::events)
        .def_readonly("merged_windows", &DfPlan::merged_windows)
        .def_readonly("u", &DfPlan::u)
        .def_readonly("window_slack", &DfPlan::window_slack)
        .def_readonly("lower_bound_only", &DfPlan::lower_bound_only);

    m.def("select_events", &select_events, py::arg("series"), py::arg("k"), py::arg("d"),
          py::arg("restrict_candidates") = false);
    m.def("check_window_slack", &check_window_slack, py::arg("series"), py::arg("events"),
          py::arg("windows"), py::arg("k"));
    m.def("solve_df", &solve_df, py::arg("series"), py::arg("k"), py::arg("d"),
          py::arg("restrict_candidates") = false, py::arg("cap_at_capacity") = false);
    m.def("solve_df_lp", &solve_df_lp, py::arg("series"), py::arg("k"), py::arg("d"),
          py::arg("restrict_candidates") = false, py::arg("cap_at_capacity") = false);
    m.def("minimal_delays", &minimal_delays, py::arg("plan"), py::arg("series"));
    m.def("check_cf_equivalence", &check_cf_equivalence, py::arg("series"), py::arg("k"));

    py::class_<TailModel>(m, "TailModel")
        .def(py::init<>())
        .def_readwrite("L", &TailModel::L)
        .def_readwrite("L_bar", &TailModel::L_bar)
        .def_readwrite("kappa", &TailModel::kappa)
        .def_readwrite("alpha", &TailModel::alpha)
        .def_readwrite("T_L", &TailModel::T_L)
        .def_readwrite("beta_L", &TailModel::beta_L)
        .def("density", &TailModel::density)
        .def("cdf", &TailModel::cdf)
        .def("quantile", &TailModel::quantile)
        .def("exceed_prob", &TailModel::exceed_prob)
        .def("validate", &TailModel::validate);

    py::enum_<TailFitMethod>(m, "TailFitMethod")
        .value("mle", TailFitMethod::mle)
        .value("histogram", TailFitMethod::histogram);

    py::enum_<ExpectationVariant>(m, "ExpectationVariant")
        .value("empirical", ExpectationVariant::empirical)
        .value("weibull", ExpectationVariant::weibull);

    m.def("fit_tail", &fit_tail, py::arg("aggregate"), py::arg("cutoff_percentile") = 90.0,
          py::arg("method") = TailFitMethod::mle, py::arg("lbar_margin") = 0.0);
    m.def("sample_tail", &sample_tail, py::arg("model"), py::arg("n"), py::arg("seed"));
    m.def("exact_tail_prob", &exact_tail_prob, py::arg("model"), py::arg("k"), py::arg("c"),
          py::arg("p0_max"));
    m.def("poisson_tail_prob", &poisson_tail_prob, py::arg("model"), py::arg("k"), py::arg("c"),
          py::arg("p0_max"));
    m.def(
        "expected_capacity",
        [](const TailModel& model, int k, double p0_max, ExpectationVariant variant,
           const std::vector<double>& sample) {
            return expected_capacity(model, k, p0_max, variant, sample.empty() ? nullptr : &sample);
        },
        py::arg("model"), py::arg("k"), py::arg("p0_max"),
        py::arg("variant") = ExpectationVariant::weibull,
        py::arg("sample") = std::vector<double>{});
    m.def("marginal_gains", &marginal_gains, py::arg("model"), py::arg("k_max"),
          py::arg("p0_max"));

    py::class_<DepthReport>(m, "DepthReport")
        .def_readonly("r", &DepthReport::r)
        .def_readonly("interior_ok", &DepthReport::interior_ok)
        .def_readonly("ok", &DepthReport::ok)
        .def_readonly("median", &DepthReport::median)
        .def_readonly("midpoint", &DepthReport::midpoint);

    m.def("depth_requirements", &depth_requirements, py::arg("model"), py::arg("k"),
          py::arg("p0_max"));

    py::class_<McCell>(m, "McCell")
        .def_readonly("k", &McCell::k)
        .def_readonly("c", &McCell::c)
        .def_readonly("exact", &McCell::exact)
        .def_readonly("poisson", &McCell::poisson)
        .def_readonly("empirical", &McCell::empirical)
        .def_readonly("sigma", &McCell::sigma)
        .def_readonly("within_3sigma", &McCell::within_3sigma);

    py::class_<McCurve>(m, "McCurve")
        .def_readonly("k", &McCurve::k)
        .def_readonly("mc_mean", &McCurve::mc_mean)
        .def_readonly("mc_stderr", &McCurve::mc_stderr)
        .def_readonly("expected_weibull", &McCurve::expected_weibull);

    py::class_<McReport>(m, "McReport")
        .def_readonly("n_trials", &McReport::n_trials)
        .def_readonly("cells", &McReport::cells)
        .def_readonly("curves", &McReport::curves)
        .def_readonly("all_within_3sigma", &McReport::all_within_3sigma);

    m.def("monte_carlo_validate", &monte_carlo_validate, py::arg("model"), py::arg("p0_max"),
          py::arg("k_list"), py::arg("c_list"), py::arg("n_trials"), py::arg("seed"));

    m.def("synth_loads", &synth_loads, py::arg("n_buses"), py::arg("grid"), py::arg("seed"),
          py::arg("peak_kw"), py::arg("tail_alpha"));
    m.def("synth_profile", &synth_profile, py::arg("grid"), py::arg("seed"));
    m.def("synth_feeder", &synth_feeder, py::arg("n_buses"), py::arg("seed"),
          py::arg("p0_max_kw"), py::arg("v_lower") = 0.95, py::arg("v_upper") = 1.05);

    m.def("load_csv", &load_csv, py::arg("path"), py::arg("grid"));
    m.def("write_csv", &write_csv, py::arg("loads"), py::arg("path"));
    m.def("load_profile_csv", &load_profile_csv, py::arg("path"), py::arg("grid"));
    m.def("write_profile_csv", &write_profile_csv, py::arg("profile"), py::arg("path"));
    m.def("load_feeder_json", &load_feeder_json, py::arg("path"));
    m.def("write_feeder_json", &write_feeder_json, py::arg("feeder"), py::arg("path"));
    m.def("write_capacity_csv", &write_capacity_csv, py::arg("series"), py::arg("path"));
}
