#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "flexhca/capacity.hpp"

namespace flexhca {

// One landing of shifted energy: `offset` slots after the event, amount in kW.
struct DfShift {
    int offset = 0;      // >= 1
    double add_kw = 0.0; // >= 0
};

struct DfEvent {
    int t = 0;                   // event slot
    double reduce_kw = 0.0;      // energy removed at t (>= 0)
    std::vector<DfShift> shifts; // landings; add_kw sums to reduce_kw
    int d_min = -1;              // minimal window length, set by minimal_delays
};

// Aggregate feasibility margin of one merged window: sum over the window of
// c_res - C_ref*lhat, where C_ref is the largest per-slot capacity among the
// events (equal to the K-th order statistic for the canonical event set).
struct WindowSlack {
    int begin = 0, end = 0;  // inclusive slot range
    double slack_kw = 0.0;
    bool satisfied = true;
};

struct WindowSlackReport {
    std::vector<WindowSlack> windows;
    bool satisfied = true;
};

// Can delaying match curtailing? Per event, the margin is the tail sum
// sum_{tau >= t_k} (c_res - C_cf*lhat); all margins nonnegative means some
// window length (equal_delay) makes the delay optimum reach the curtailment
// optimum.
struct EquivalenceReport {
    double cf_capacity = 0.0;
    std::vector<int> event_times;
    std::vector<double> margins;
    std::vector<bool> event_ok;
    bool overall = true;
    int equal_delay = 0;  // T-1 - max_k t_k; meaningful when overall holds
};

struct DfPlan {
    double capacity = 0.0;  // kW
    int delay = 0;          // window length used at solve time
    std::vector<DfEvent> events;  // ascending t
    std::vector<std::pair<int, int>> merged_windows;  // inclusive, disjoint
    Eigen::VectorXd u;      // dense aggregate modification, length T
    WindowSlackReport window_slack;
    // Set when the window-slack condition fails: the capacity is still
    // feasible (and maximal for this solver), but the optimality certificate
    // does not apply.
    bool lower_bound_only = false;
    bool cap_at_capacity = false;  // solve-time flag, needed to re-check plans
};

// The K lowest-rank slots and their transitively merged forward windows
// [t_k, t_k+D]. Events too close to the horizon end raise
// EventNearHorizonEnd unless restrict_candidates limits selection to slots
// with a full window ahead.
std::pair<std::vector<int>, std::vector<std::pair<int, int>>> select_events(
    const CapacitySeries& series, int K, int D, bool restrict_candidates = false);

WindowSlackReport check_window_slack(const CapacitySeries& series,
                                     const std::vector<int>& events,
                                     const std::vector<std::pair<int, int>>& windows, int K);

// Maximum capacity when the new load at each event slot may be delayed by up
// to D slots. Bisection over [max(C[1],0), C[K+1]] with an exact feasibility
// kernel per candidate capacity, then a snap step that recovers the exact
// binding balance when the bisection landed on one. cap_at_capacity adds the
// opt-in bound (modified new load) <= C at every slot.
DfPlan solve_df(const CapacitySeries& series, int K, int D, bool restrict_candidates = false,
                bool cap_at_capacity = false);

// Same optimum via an explicit linear program (capacity, per-event
// reductions, per-landing amounts); used as an oracle for the kernel and as
// a fallback. Intended for small instances: the tableau is dense.
DfPlan solve_df_lp(const CapacitySeries& series, int K, int D,
                   bool restrict_candidates = false, bool cap_at_capacity = false);

// Shrinks each event's window, latest event first, to the smallest length
// that keeps the plan's capacity feasible; fills d_min and rebuilds the
// shifts at the shrunken windows.
DfPlan minimal_delays(DfPlan plan, const CapacitySeries& series);

EquivalenceReport check_cf_equivalence(const CapacitySeries& series, int K);

} // namespace flexhca
