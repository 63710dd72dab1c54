#pragma once

#include <utility>
#include <vector>

#include "flexhca/capacity.hpp"

namespace flexhca {

// Curtailment plan: the admitted capacity plus the per-slot reductions of the
// new load. Slots where the tie C[s] = C make the required curtailment zero
// are left out, so `intervened` reports the minimal set actually touched.
struct CfPlan {
    double capacity = 0.0;                    // kW
    std::vector<int> intervened;              // ascending slot indices
    std::vector<double> u;                    // curtailment per intervened slot, <= 0, kW
    std::vector<double> depths;               // |u| / capacity, dimensionless

    int k_used() const { return static_cast<int>(intervened.size()); }
};

// Exact optimum with at most K curtailed slots: capacity is the (K+1)-th
// order statistic, and each lower-ranked slot is curtailed down to its
// residual capacity.
CfPlan solve_cf(const CapacitySeries& series, int K);

// Depth-bounded variant: curtailment at any slot may not exceed mu*C.
// Maximum feasible C found by bisection over [0, C[K+1]] (relative tolerance
// 1e-9, at most 200 iterations) and snapped to the closed-form threshold
// min(C[K+1], min_t max(c_dyn(t), c_res(t)/(lhat(t)-mu))) when it verifies.
CfPlan solve_cf_bounded(const CapacitySeries& series, int K, double mu);

struct CfSweepRow {
    int k = 0;
    double mu = 1.0;
    double capacity = 0.0;      // kW
    double gain_percent = 0.0;  // vs the K=0 baseline
};

std::vector<CfSweepRow> sweep_cf(const CapacitySeries& series, const std::vector<int>& k_list,
                                 const std::vector<double>& mu_list);

} // namespace flexhca
