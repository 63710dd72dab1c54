#include <doctest.h>

#include <string>
#include <vector>

#include "flexhca/network.hpp"
#include "flexhca/synth.hpp"
#include "helpers.hpp"

using namespace flexhca;
using namespace flexhca::testing;

namespace {

// Feeder with buses named "0", "1", ... and uniform bounds; the topology is
// whatever `lines` says, bus count is lines.size()+1 unless overridden.
FeederModel feeder_of(std::vector<Line> lines, double v_lo = 0.95, double eta_val = 0.0,
                      double p0_max = 7000.0, int bus_count = -1) {
    FeederModel feeder;
    const int nb = bus_count > 0 ? bus_count : static_cast<int>(lines.size()) + 1;
    for (int b = 0; b < nb; ++b) feeder.bus_names.push_back(std::to_string(b));
    feeder.lines = std::move(lines);
    feeder.eta = Eigen::MatrixXd::Constant(nb - 1, 1, eta_val);
    feeder.v_lower = Eigen::VectorXd::Constant(nb - 1, v_lo);
    feeder.v_upper = Eigen::VectorXd::Constant(nb - 1, 1.05);
    feeder.p0_max_kw = p0_max;
    feeder.s_base_kva = 1000.0;
    return feeder;
}

LoadSet loads_for(const FeederModel& feeder, const Eigen::MatrixXd& values) {
    LoadSet loads;
    loads.grid = TimeGrid(static_cast<int>(values.cols()));
    loads.values = values;
    for (int b = 1; b < feeder.bus_count(); ++b) loads.bus_ids.push_back(feeder.bus_names[b]);
    return loads;
}

} // namespace

TEST_CASE("impedance entries are shared-root-path sums") {
    // chain 0 -1- 1 -2- 2: bus 2's path contains bus 1's, so the off-diagonal
    // equals the first line and the deep diagonal accumulates both.
    const FeederModel chain =
        feeder_of({{0, 1, 0.1, 0.05}, {1, 2, 0.2, 0.1}});
    const ImpedanceMatrices zm = build_impedance(chain);
    Eigen::MatrixXd r_want(2, 2), x_want(2, 2);
    r_want << 0.1, 0.1, 0.1, 0.3;
    x_want << 0.05, 0.05, 0.05, 0.15;
    CHECK(zm.R.isApprox(r_want, 1e-15));
    CHECK(zm.X.isApprox(x_want, 1e-15));

    // uniform eta scales columns of X into Z
    const Eigen::MatrixXd z = zm.z_at(Eigen::VectorXd::Constant(2, 0.4));
    CHECK(z(0, 0) == doctest::Approx(0.12));
    CHECK(z(0, 1) == doctest::Approx(0.12));
    CHECK(z(1, 0) == doctest::Approx(0.12));
    CHECK(z(1, 1) == doctest::Approx(0.36));
    CHECK_NOTHROW(require_positive_mutual_impedance(zm, chain));

    const FeederModel single = feeder_of({{0, 1, 0.05, 0.05}}, 0.95, 0.3);
    const ImpedanceMatrices zs = build_impedance(single);
    CHECK(zs.z_at(single.eta.col(0))(0, 0) == doctest::Approx(0.065));
}

TEST_CASE("buses on separate laterals have no common path") {
    // star: 1 and 2 hang directly off the root, so Z_12 = 0 and the
    // single-series reduction is not valid.
    const FeederModel star = feeder_of({{0, 1, 0.1, 0.05}, {0, 2, 0.2, 0.1}});
    const ImpedanceMatrices zm = build_impedance(star);
    CHECK(zm.R(0, 1) == 0.0);
    CHECK_ERRC(require_positive_mutual_impedance(zm, star), nonpositive_mutual_impedance);

    LoadSet loads = loads_for(star, Eigen::MatrixXd::Constant(2, 3, 5.0));
    CHECK_ERRC(capacity_network(loads, spec_of({1, 1, 1}, "1"), star, zm),
               nonpositive_mutual_impedance);
}

TEST_CASE("impedance matrices on synthetic feeders stay symmetric and path-dominated") {
    const FeederModel feeder = synth_feeder(12, 5, 400.0);
    const ImpedanceMatrices zm = build_impedance(feeder);
    CHECK(exactly_equal(zm.R, zm.R.transpose()));
    CHECK(exactly_equal(zm.X, zm.X.transpose()));
    CHECK((zm.R.array() >= 0.0).all());
    CHECK((zm.X.array() >= 0.0).all());
    for (int i = 0; i < zm.bus_count(); ++i)
        for (int j = 0; j < zm.bus_count(); ++j) {
            CHECK(zm.R(i, j) <= std::min(zm.R(i, i), zm.R(j, j)) + 1e-15);
            CHECK(zm.X(i, j) <= std::min(zm.X(i, i), zm.X(j, j)) + 1e-15);
        }
}

TEST_CASE("topology defects are reported by kind") {
    // wrong line count
    CHECK_ERRC(build_impedance(feeder_of({{0, 1, 0.1, 0.0}}, 0.95, 0.0, 7000.0, 3)),
               not_a_tree);
    // parallel lines form a cycle
    CHECK_ERRC(build_impedance(feeder_of({{0, 1, 0.1, 0.0}, {0, 1, 0.2, 0.0}})), not_a_tree);
    // line count right, but buses 2 and 3 form their own island
    CHECK_ERRC(
        build_impedance(feeder_of({{0, 1, 0.1, 0.0}, {2, 3, 0.1, 0.0}, {2, 3, 0.1, 0.0}})),
        disconnected_bus);
    // an upper voltage bound below v0 can never be certified for load-only flow
    FeederModel bad = feeder_of({{0, 1, 0.1, 0.0}});
    bad.v_upper[0] = 0.98;
    CHECK_ERRC(build_impedance(bad), upper_bound_unsafe);
}

TEST_CASE("voltage limit carves out the residual capacity") {
    // v(t) = 1 - 2*0.01*l(t)/1000; with l = 1000 kW the drop is 0.02, leaving
    // 0.03 p.u. of margin at 2e-5 p.u. per kW of new load: 1500 kW, well under
    // the 6000 kW transformer margin.
    const FeederModel feeder = feeder_of({{0, 1, 0.01, 0.0}});
    const ImpedanceMatrices zm = build_impedance(feeder);
    LoadSet loads = single_bus_loads({1000.0, 1000.0, 1000.0});
    std::vector<std::string> binding;
    CapacitySeries series =
        capacity_network(loads, spec_of({1, 1, 1}, "1"), feeder, zm, &binding);
    for (int t = 0; t < 3; ++t) {
        CHECK(series.c_res[t] == doctest::Approx(1500.0));
        CHECK(series.c_dyn[t] == doctest::Approx(1500.0));
        CHECK(binding[t] == "voltage@1");
    }

    // past the voltage bound the residual goes negative
    loads = single_bus_loads({2600.0});
    series = capacity_network(loads, spec_of({1}, "1"), feeder, zm, &binding);
    CHECK(series.c_res[0] == doctest::Approx(-100.0));
    CHECK(binding[0] == "voltage@1");

    // a tight transformer flips the binding constraint
    const FeederModel tight = feeder_of({{0, 1, 0.01, 0.0}}, 0.95, 0.0, 1600.0);
    loads = single_bus_loads({1000.0});
    series = capacity_network(loads, spec_of({1}, "1"), tight, build_impedance(tight), &binding);
    CHECK(series.c_res[0] == doctest::Approx(600.0));
    CHECK(binding[0] == "transformer");

    // zero existing load: the full voltage margin divided by the sensitivity
    loads = single_bus_loads({0.0});
    series = capacity_network(loads, spec_of({1}, "1"), feeder, zm, &binding);
    CHECK(series.c_res[0] == doctest::Approx(2500.0));
}

TEST_CASE("slack voltage bounds reduce the network series to the copperplate one") {
    const FeederModel feeder =
        feeder_of({{0, 1, 0.1, 0.05}, {1, 2, 0.2, 0.1}}, 0.5, 0.2, 50.0);
    const ImpedanceMatrices zm = build_impedance(feeder);
    Eigen::MatrixXd values(2, 4);
    values << 4, 8, 6, 2, 1, 3, 5, 7;
    const LoadSet loads = loads_for(feeder, values);
    const NewLoadSpec spec = spec_of({1.0, 0.5, 1.0, 0.25}, "2");

    std::vector<std::string> binding;
    const CapacitySeries net = capacity_network(loads, spec, feeder, zm, &binding);
    const CapacitySeries flat = capacity_copperplate(loads, spec, feeder.p0_max_kw);
    for (int t = 0; t < 4; ++t) {
        CHECK(std::abs(net.c_res[t] - flat.c_res[t]) <= 1e-9);
        CHECK(binding[t] == "transformer");
    }
    CHECK(net.order == flat.order);
}

TEST_CASE("more load or tighter bounds never increase capacity") {
    const FeederModel feeder = synth_feeder(8, 9, 500.0);
    const ImpedanceMatrices zm = build_impedance(feeder);
    const TimeGrid grid(48, 30);
    const LoadSet loads = synth_loads(7, grid, 17, 300.0, 1.1);
    const NewLoadSpec spec =
        spec_of(std::vector<double>(48, 1.0), feeder.bus_names.back());

    const CapacitySeries base = capacity_network(loads, spec, feeder, zm);

    LoadSet heavier = loads;
    heavier.values *= 1.1;
    const CapacitySeries loaded = capacity_network(heavier, spec, feeder, zm);

    FeederModel stricter = feeder;
    stricter.v_lower.array() += 0.01;
    const CapacitySeries bounded = capacity_network(loads, spec, stricter, zm);

    for (int t = 0; t < 48; ++t) {
        CHECK(loaded.c_res[t] <= base.c_res[t] + 1e-12);
        CHECK(bounded.c_res[t] <= base.c_res[t] + 1e-12);
    }
}

TEST_CASE("slot-varying reactive ratios match the stationary path when constant") {
    FeederModel feeder = synth_feeder(6, 13, 400.0);
    const TimeGrid grid(16);
    const LoadSet loads = synth_loads(5, grid, 19, 250.0, 1.1);
    const NewLoadSpec spec = spec_of(std::vector<double>(16, 1.0), feeder.bus_names.back());

    const ImpedanceMatrices zm = build_impedance(feeder);
    const CapacitySeries stationary = capacity_network(loads, spec, feeder, zm);

    feeder.eta = feeder.eta.col(0).replicate(1, 16).eval();
    const CapacitySeries varying = capacity_network(loads, spec, feeder, zm);
    for (int t = 0; t < 16; ++t)
        CHECK(varying.c_res[t] == doctest::Approx(stationary.c_res[t]).epsilon(1e-12));
}

TEST_CASE("network input mismatches raise configuration errors") {
    const FeederModel feeder = feeder_of({{0, 1, 0.01, 0.0}});
    const ImpedanceMatrices zm = build_impedance(feeder);
    const LoadSet loads = single_bus_loads({10.0, 10.0, 10.0});

    CHECK_ERRC(capacity_network(loads, spec_of({1, 1, 1}, "zz"), feeder, zm), config_error);
    CHECK_ERRC(capacity_network(loads, spec_of({1, 1, 1}, "0"), feeder, zm), config_error);

    FeederModel bad_eta = feeder;
    bad_eta.eta = Eigen::MatrixXd::Zero(1, 2);  // neither stationary nor T columns
    CHECK_ERRC(capacity_network(loads, spec_of({1, 1, 1}, "1"), bad_eta, zm), config_error);

    LoadSet extra = loads;
    extra.values = Eigen::MatrixXd::Constant(2, 3, 5.0);
    extra.bus_ids = {"1", "2"};
    CHECK_ERRC(capacity_network(extra, spec_of({1, 1, 1}, "1"), feeder, zm), config_error);
}

TEST_CASE("case-study scaling lands on the voltage bound before carving headroom") {
    // v(p) = 1 - 1e-5 * p, so the 0.95 bound is reached by a 4 kW peak scaled
    // to 5000 kW; the transformer is sized at that peak and only then is the
    // 10% headroom cut out of the loads.
    const FeederModel feeder = feeder_of({{0, 1, 0.005, 0.0}}, 0.95, 0.0, 100.0);
    const LoadSet loads = single_bus_loads({1.0, 2.0, 4.0, 3.0});

    auto [scaled, sized] = scale_case_study(loads, feeder, 0.1);
    CHECK(sized.p0_max_kw == doctest::Approx(5000.0).epsilon(1e-9));
    CHECK(scaled.values(0, 2) == doctest::Approx(4500.0).epsilon(1e-9));
    CHECK(scaled.values(0, 0) == doctest::Approx(1125.0).epsilon(1e-9));

    const ImpedanceMatrices zm = build_impedance(sized);
    // undo step (b): the step-(a) loads must sit exactly on the bound
    LoadSet step_a = scaled;
    step_a.values /= 0.9;
    CHECK(std::abs(min_network_voltage(step_a, sized, zm) - 0.95) <= 1e-6);
    CHECK(min_network_voltage(scaled, sized, zm) == doctest::Approx(0.955).epsilon(1e-6));

    auto [same, sized0] = scale_case_study(loads, feeder, 0.0);
    CHECK(same.values(0, 2) == doctest::Approx(5000.0).epsilon(1e-9));
    CHECK(sized0.p0_max_kw == doctest::Approx(5000.0).epsilon(1e-9));
}

TEST_CASE("case-study scaling on a synthetic feeder hits the bound within 1e-6") {
    const FeederModel feeder = synth_feeder(10, 3, 400.0);
    const TimeGrid grid(48, 30);
    const LoadSet loads = synth_loads(9, grid, 11, 200.0, 1.1);

    auto [scaled, sized] = scale_case_study(loads, feeder, 0.25);
    LoadSet step_a = scaled;
    step_a.values /= 0.75;
    const ImpedanceMatrices zm = build_impedance(sized);
    CHECK(std::abs(min_network_voltage(step_a, sized, zm) - feeder.v_lower.minCoeff()) <= 1e-6);
    CHECK(sized.p0_max_kw ==
          doctest::Approx(step_a.aggregate().maxCoeff()).epsilon(1e-9));
    CHECK(sized.p0_max_kw > 0.0);
}

TEST_CASE("scaling rejects bad headroom and loads that never trip the bound") {
    const FeederModel feeder = feeder_of({{0, 1, 0.005, 0.0}}, 0.95, 0.0, 100.0);
    const LoadSet loads = single_bus_loads({1.0, 2.0});
    CHECK_ERRC(scale_case_study(loads, feeder, -0.1), config_error);
    CHECK_ERRC(scale_case_study(loads, feeder, 1.0), config_error);
    CHECK_ERRC(scale_case_study(single_bus_loads({0.0, 0.0}), feeder, 0.1),
               infeasible_scaling);
}
