#include "flexhca/cf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace flexhca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_structurally_feasible(const CapacitySeries& series) {
    if (!series.structurally_infeasible.empty())
        throw Error(errc::infeasible,
                    "existing load alone exceeds the limit at slot " +
                        std::to_string(series.structurally_infeasible.front()) +
                        " and the new load is zero there");
}

void check_budget(const CapacitySeries& series, int K) {
    if (K < 0 || K >= series.slot_count())
        throw Error(errc::config_error,
                    "K must be in [0, T-1], got " + std::to_string(K));
}

} // namespace

CfPlan solve_cf(const CapacitySeries& series, int K) {
    check_budget(series, K);
    require_structurally_feasible(series);

    CfPlan plan;
    plan.capacity = order_stat(series, K + 1).first;
    if (plan.capacity < 0.0)
        throw Error(errc::infeasible, "even " + std::to_string(K) +
                                          " curtailments leave capacity " +
                                          std::to_string(plan.capacity) + " kW");

    std::vector<int> violated;  // intervened slots with negative residual
    for (int s = 0; s < K; ++s) {
        const int t = series.order[s];
        if (!(series.c_dyn[t] < plan.capacity)) continue;  // tie: curtailment vacuous
        if (series.c_res[t] < 0.0) violated.push_back(t);
        plan.intervened.push_back(t);
    }
    if (!violated.empty()) {
        std::string slots;
        for (int t : violated) slots += (slots.empty() ? "" : ",") + std::to_string(t);
        throw Error(errc::nonnegativity_violated,
                    "residual capacity is negative at intervened slot(s) " + slots +
                        "; zeroing the new load there cannot restore feasibility");
    }
    std::sort(plan.intervened.begin(), plan.intervened.end());
    plan.u.resize(plan.intervened.size());
    for (std::size_t i = 0; i < plan.intervened.size(); ++i) {
        const int t = plan.intervened[i];
        // modified new load is pinned at the residual: u = c_res - C*lhat
        plan.u[i] = series.c_res[t] - plan.capacity * series.lhat[t];
        if (std::isnan(plan.u[i])) plan.u[i] = -kInf;
    }
    plan.depths.resize(plan.u.size());
    for (std::size_t i = 0; i < plan.u.size(); ++i)
        plan.depths[i] = plan.capacity > 0.0 ? -plan.u[i] / plan.capacity : 0.0;
    return plan;
}

CfPlan solve_cf_bounded(const CapacitySeries& series, int K, double mu) {
    check_budget(series, K);
    require_structurally_feasible(series);
    if (mu < 0.0 || mu > 1.0)
        throw Error(errc::config_error, "mu must be in [0,1], got " + std::to_string(mu));

    const int T = series.slot_count();
    const double top = order_stat(series, K + 1).first;

    // Feasible iff at most K slots need touching and each of them stays
    // within both the depth bound mu*C and nonnegativity of the new load.
    // A slot is touched exactly when c exceeds its stored c_dyn, so the
    // count agrees bit-for-bit with the order statistics.
    auto feasible = [&](double c) {
        int touched = 0;
        for (int t = 0; t < T; ++t) {
            if (!(c > series.c_dyn[t])) continue;
            if (++touched > K) return false;
            const double floor_kw = c * std::max(series.lhat[t] - mu, 0.0);
            if (floor_kw > series.c_res[t]) return false;
        }
        return true;
    };

    // Each slot caps the capacity at max(c_dyn, c_res/(lhat-mu)): below c_dyn
    // it is untouched, above it the depth bound must absorb the overshoot.
    // Slots with lhat <= mu can be zeroed outright, so only the budget
    // threshold constrains them; a negative residual pins the cap at c_dyn
    // because touching such a slot can never be repaired.
    double cap = top;
    for (int t = 0; t < T; ++t) {
        double b;
        if (series.c_res[t] < 0.0) b = series.c_dyn[t];
        else if (series.lhat[t] <= mu) continue;
        else b = std::max(series.c_dyn[t], series.c_res[t] / (series.lhat[t] - mu));
        cap = std::min(cap, b);
    }

    double best;
    if (cap == kInf || feasible(cap)) {
        best = cap;  // the closed-form threshold is attained
    } else {
        // Rounding pushed the threshold out of the feasible set; fall back to
        // bisection on the monotone region below it.
        double lo = 0.0, hi = cap;
        if (!feasible(lo))
            throw Error(errc::infeasible, "no nonnegative capacity admits a feasible plan");
        for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) ? lo : hi) = mid;
        }
        best = lo;
    }
    if (best < 0.0 || (best == 0.0 && !feasible(0.0)))
        throw Error(errc::infeasible, "no nonnegative capacity admits a feasible plan");

    CfPlan plan;
    plan.capacity = best;
    for (int t = 0; t < T; ++t) {
        if (!(best > series.c_dyn[t])) continue;
        plan.intervened.push_back(t);
        double cut = series.c_res[t] - best * series.lhat[t];
        if (std::isnan(cut)) cut = -kInf;
        plan.u.push_back(std::max(cut, -mu * best));
        plan.depths.push_back(best > 0.0 ? -plan.u.back() / best : 0.0);
    }
    return plan;
}

std::vector<CfSweepRow> sweep_cf(const CapacitySeries& series, const std::vector<int>& k_list,
                                 const std::vector<double>& mu_list) {
    const double base = solve_cf(series, 0).capacity;
    std::vector<CfSweepRow> rows;
    for (int k : k_list)
        for (double mu : mu_list) {
            CfSweepRow row;
            row.k = k;
            row.mu = mu;
            row.capacity =
                (mu >= 1.0 ? solve_cf(series, k) : solve_cf_bounded(series, k, mu)).capacity;
            row.gain_percent = base != 0.0 ? (row.capacity - base) / base * 100.0
                                           : std::numeric_limits<double>::quiet_NaN();
            rows.push_back(row);
        }
    return rows;
}

} // namespace flexhca
