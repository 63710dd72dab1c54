#include "flexhca/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace flexhca {

namespace {

// Maps LoadSet rows onto feeder branch buses. Uses bus ids when every one
// resolves to a distinct non-root bus, otherwise falls back to positional
// order (row i = bus i+1).
std::vector<int> map_rows_to_buses(const LoadSet& loads, const FeederModel& feeder) {
    const int n = feeder.branch_bus_count();
    if (loads.bus_count() != n)
        throw Error(errc::config_error, "load set has " + std::to_string(loads.bus_count()) +
                                            " buses, feeder expects " + std::to_string(n));
    std::vector<int> row_bus(n);  // row -> 0-based branch index
    std::vector<bool> seen(n, false);
    bool by_name = true;
    for (int i = 0; i < n && by_name; ++i) {
        int b = feeder.bus_index(loads.bus_ids[i]);
        if (b < 1 || seen[b - 1]) by_name = false;
        else {
            row_bus[i] = b - 1;
            seen[b - 1] = true;
        }
    }
    if (!by_name)
        for (int i = 0; i < n; ++i) row_bus[i] = i;
    return row_bus;
}

// Loads rearranged to branch-bus order, buses x slots.
Eigen::MatrixXd loads_by_bus(const LoadSet& loads, const FeederModel& feeder) {
    const std::vector<int> row_bus = map_rows_to_buses(loads, feeder);
    Eigen::MatrixXd by_bus(loads.bus_count(), loads.slot_count());
    for (int i = 0; i < loads.bus_count(); ++i) by_bus.row(row_bus[i]) = loads.values.row(i);
    return by_bus;
}

Eigen::VectorXd eta_at(const FeederModel& feeder, int t) {
    return feeder.eta_stationary() ? feeder.eta.col(0) : feeder.eta.col(t);
}

// Per-bus minimum of eta over time; with X >= 0 this gives the pointwise
// minimum of Z over all slots.
Eigen::VectorXd eta_floor(const FeederModel& feeder) {
    return feeder.eta.rowwise().minCoeff();
}

} // namespace

ImpedanceMatrices build_impedance(const FeederModel& feeder) {
    feeder.validate();
    const int n_total = feeder.bus_count();
    const int n = feeder.branch_bus_count();

    // adjacency: bus -> (neighbor, line index)
    std::vector<std::vector<std::pair<int, int>>> adj(n_total);
    for (int e = 0; e < static_cast<int>(feeder.lines.size()); ++e) {
        adj[feeder.lines[e].from].push_back({feeder.lines[e].to, e});
        adj[feeder.lines[e].to].push_back({feeder.lines[e].from, e});
    }

    // BFS from the root; parent pointers give root paths. Revisiting a bus
    // means a cycle (a second line to it), which a radial feeder cannot have.
    std::vector<int> parent(n_total, -1), parent_edge(n_total, -1), bfs_order;
    std::vector<bool> visited(n_total, false);
    std::queue<int> queue;
    queue.push(0);
    visited[0] = true;
    while (!queue.empty()) {
        int b = queue.front();
        queue.pop();
        if (b != 0) bfs_order.push_back(b);
        for (auto [nb, e] : adj[b]) {
            if (e == parent_edge[b]) continue;
            if (visited[nb])
                throw Error(errc::not_a_tree, "lines form a cycle through bus " +
                                                  feeder.bus_names[nb]);
            visited[nb] = true;
            parent[nb] = b;
            parent_edge[nb] = e;
            queue.push(nb);
        }
    }
    for (int b = 0; b < n_total; ++b)
        if (!visited[b])
            throw Error(errc::disconnected_bus,
                        "bus " + feeder.bus_names[b] + " is not reachable from the root");

    // In BFS order no earlier bus lies below the current one, so the shared
    // path of bus i with any earlier bus j equals the shared path of i's
    // parent with j; the diagonal adds the parent edge.
    ImpedanceMatrices zm;
    zm.R = Eigen::MatrixXd::Zero(n, n);
    zm.X = Eigen::MatrixXd::Zero(n, n);
    auto r_at = [&](int bus, int col) { return bus == 0 ? 0.0 : zm.R(bus - 1, col); };
    auto x_at = [&](int bus, int col) { return bus == 0 ? 0.0 : zm.X(bus - 1, col); };
    for (int b : bfs_order) {
        const int i = b - 1;
        const int p = parent[b];
        const Line& line = feeder.lines[parent_edge[b]];
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            zm.R(i, j) = zm.R(j, i) = r_at(p, j);
            zm.X(i, j) = zm.X(j, i) = x_at(p, j);
        }
        zm.R(i, i) = (p == 0 ? 0.0 : zm.R(p - 1, p - 1)) + line.r;
        zm.X(i, i) = (p == 0 ? 0.0 : zm.X(p - 1, p - 1)) + line.x;
    }
    return zm;
}

void require_positive_mutual_impedance(const ImpedanceMatrices& zmats,
                                       const FeederModel& feeder) {
    const Eigen::MatrixXd z_min = zmats.z_at(eta_floor(feeder));
    for (int i = 0; i < z_min.rows(); ++i)
        for (int j = 0; j < z_min.cols(); ++j)
            if (!(z_min(i, j) > 0.0))
                throw Error(errc::nonpositive_mutual_impedance,
                            "Z(" + feeder.bus_names[i + 1] + "," + feeder.bus_names[j + 1] +
                                ") = " + std::to_string(z_min(i, j)) +
                                "; all bus pairs must share a positive common-path impedance");
}

CapacitySeries capacity_network(const LoadSet& loads, const NewLoadSpec& spec,
                                const FeederModel& feeder, const ImpedanceMatrices& zmats,
                                std::vector<std::string>* binding) {
    loads.validate();
    spec.validate(loads.grid);
    feeder.validate();
    if (!feeder.eta_stationary() && feeder.eta.cols() != loads.slot_count())
        throw Error(errc::config_error, "eta has " + std::to_string(feeder.eta.cols()) +
                                            " columns for " +
                                            std::to_string(loads.slot_count()) + " slots");
    for (int i = 0; i < feeder.v_upper.size(); ++i)
        if (feeder.v_upper[i] < feeder.v0)
            throw Error(errc::upper_bound_unsafe,
                        "v_upper at bus " + feeder.bus_names[i + 1] +
                            " is below v0; upper voltage bound cannot be ignored");
    require_positive_mutual_impedance(zmats, feeder);

    const int attach = feeder.bus_index(spec.attach_bus);
    if (attach < 0)
        throw Error(errc::config_error, "attach bus '" + spec.attach_bus + "' not in feeder");
    if (attach == 0)
        throw Error(errc::config_error, "attach bus must be a non-root bus");
    const int a = attach - 1;

    const int T = loads.slot_count();
    const int n = feeder.branch_bus_count();
    const Eigen::MatrixXd by_bus = loads_by_bus(loads, feeder);
    const double per_kw = 2.0 / feeder.s_base_kva;

    // drop(i,t) = 2 Z_i(t) l(t) / s_base; denom(i,t) = 2 Z_{i,attach}(t) / s_base.
    // In the stationary case both come from a single matrix product.
    const bool stationary = feeder.eta_stationary();
    Eigen::MatrixXd drop(n, T);
    Eigen::MatrixXd denom;
    Eigen::VectorXd denom_s;
    if (stationary) {
        const Eigen::MatrixXd z = zmats.z_at(feeder.eta.col(0));
        drop = per_kw * (z * by_bus);
        denom_s = per_kw * z.col(a);
    } else {
        denom.resize(n, T);
        for (int t = 0; t < T; ++t) {
            const Eigen::MatrixXd z = zmats.z_at(eta_at(feeder, t));
            drop.col(t) = per_kw * (z * by_bus.col(t));
            denom.col(t) = per_kw * z.col(a);
        }
    }

    const Eigen::VectorXd agg = loads.aggregate();
    std::vector<double> c_res(T), lhat(T);
    if (binding) binding->assign(T, "transformer");
    for (int t = 0; t < T; ++t) {
        double volt = std::numeric_limits<double>::infinity();
        int volt_bus = -1;
        for (int i = 0; i < n; ++i) {
            const double d = stationary ? denom_s[i] : denom(i, t);
            const double cap = (feeder.v0 - feeder.v_lower[i] - drop(i, t)) / d;
            if (cap < volt) {
                volt = cap;
                volt_bus = i;
            }
        }
        const double xfmr = feeder.p0_max_kw - agg[t];
        c_res[t] = std::min(xfmr, volt);
        if (binding && volt < xfmr) (*binding)[t] = "voltage@" + feeder.bus_names[volt_bus + 1];
        lhat[t] = spec.profile[t];
    }
    return make_capacity_series(std::move(c_res), std::move(lhat));
}

double min_network_voltage(const LoadSet& loads, const FeederModel& feeder,
                           const ImpedanceMatrices& zmats) {
    const Eigen::MatrixXd by_bus = loads_by_bus(loads, feeder);
    const double per_kw = 2.0 / feeder.s_base_kva;
    double v_min = feeder.v0;
    if (feeder.eta_stationary()) {
        const Eigen::MatrixXd drop = per_kw * (zmats.z_at(feeder.eta.col(0)) * by_bus);
        v_min = std::min(v_min, feeder.v0 - drop.maxCoeff());
    } else {
        for (int t = 0; t < loads.slot_count(); ++t) {
            const Eigen::VectorXd drop =
                per_kw * (zmats.z_at(eta_at(feeder, t)) * by_bus.col(t));
            v_min = std::min(v_min, feeder.v0 - drop.maxCoeff());
        }
    }
    return v_min;
}

std::pair<LoadSet, FeederModel> scale_case_study(const LoadSet& loads,
                                                 const FeederModel& feeder,
                                                 double headroom_fraction) {
    if (headroom_fraction < 0.0 || headroom_fraction >= 1.0)
        throw Error(errc::config_error, "headroom_fraction must be in [0,1)");
    loads.validate();
    const ImpedanceMatrices zmats = build_impedance(feeder);
    const double target = feeder.v_lower.minCoeff();

    // Voltages are affine in the scaling factor, v_min(gamma) = v0 - gamma*M,
    // so gamma exists iff some drop is positive and v0 is above the target.
    auto v_min_at = [&](double gamma) {
        LoadSet scaled = loads;
        scaled.values *= gamma;
        return min_network_voltage(scaled, feeder, zmats);
    };
    if (v_min_at(0.0) <= target)
        throw Error(errc::infeasible_scaling, "voltage already at or below the bound with zero load");

    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (v_min_at(hi) > target) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 200)
            throw Error(errc::infeasible_scaling,
                        "loads produce no voltage drop; no scaling reaches the bound");
    }
    for (int it = 0; it < 100 && (hi - lo) > 1e-9 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (v_min_at(mid) > target ? lo : hi) = mid;
    }
    double gamma = 0.5 * (lo + hi);
    // One secant step lands exactly on the affine map (up to roundoff).
    const double m = (feeder.v0 - v_min_at(1.0));
    if (m > 0.0) gamma = (feeder.v0 - target) / m;

    LoadSet scaled = loads;
    scaled.values *= gamma;
    FeederModel sized = feeder;
    sized.p0_max_kw = scaled.aggregate().maxCoeff();
    scaled.values *= (1.0 - headroom_fraction);
    return {std::move(scaled), std::move(sized)};
}

} // namespace flexhca
