#include "flexhca/df.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "flexhca/simplex.hpp"

namespace flexhca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double tol_for(double c) { return 1e-9 * std::max(1.0, std::fabs(c)); }

void check_inputs(const CapacitySeries& series, int K, int D) {
    if (K < 0 || K >= series.slot_count())
        throw Error(errc::config_error, "K must be in [0, T-1], got " + std::to_string(K));
    if (D < 0)
        throw Error(errc::config_error, "D must be >= 0, got " + std::to_string(D));
    if (!series.structurally_infeasible.empty())
        throw Error(errc::infeasible,
                    "existing load alone exceeds the limit at slot " +
                        std::to_string(series.structurally_infeasible.front()) +
                        " and the new load is zero there");
}

// A parcel of new-load energy that has been pumped out of an event slot and
// must land somewhere in (launch, deadline].
struct Mass {
    int deadline = 0;
    int owner = 0;  // index into the ascending event list
    double amount = 0.0;
};
struct LaterDeadline {
    bool operator()(const Mass& a, const Mass& b) const { return a.deadline > b.deadline; }
};

struct KernelResult {
    bool feasible = true;
    int fail_deadline = -1;  // first deadline that expired with mass left
    int busy_start = -1;     // last slot with no tracked pending before the failure
    std::vector<double> reduce;               // per event, when allocation requested
    std::vector<std::vector<DfShift>> shifts; // per event, when allocation requested
};

// Exact feasibility of capacity c with per-event window lengths d: every
// event's deficit is pumped forward, landing earliest-deadline-first into
// per-slot spare. An event slot additionally acts as a relay: up to its
// remaining pump headroom (c*lhat - deficit) of earlier mass may land there
// while the same amount of its own load moves on with the later deadline.
// That relay is what lets chained events vacate room for each other, and is
// required to match the optimum of the explicit linear program.
//
// critical_deadline >= 0 turns on diagnostics for the snap step: busy_start
// tracks the last slot at which no pending mass with deadline <=
// critical_deadline existed.
KernelResult run_kernel(const CapacitySeries& series, const std::vector<int>& events,
                        const std::vector<int>& d, double c, bool cap_at_capacity,
                        bool want_alloc, int critical_deadline = -1) {
    KernelResult res;
    const int K = static_cast<int>(events.size());
    if (want_alloc) {
        res.reduce.assign(K, 0.0);
        res.shifts.assign(K, {});
    }
    if (K == 0) return res;
    const double tol = tol_for(c);

    auto spare_at = [&](int t) {
        double sp = series.c_res[t] - c * series.lhat[t];
        if (cap_at_capacity) sp = std::min(sp, c * (1.0 - series.lhat[t]));
        return std::max(sp, 0.0);
    };

    std::vector<Mass> heap;  // min-heap on deadline via std::push_heap
    const LaterDeadline cmp;
    double critical = 0.0;
    res.busy_start = events.front() - 1;

    int last_deadline = 0;
    for (int k = 0; k < K; ++k) last_deadline = std::max(last_deadline, events[k] + d[k]);

    int next_event = 0;
    for (int t = events.front(); t <= last_deadline; ++t) {
        // land pending mass into this slot's spare, earliest deadline first
        if (!heap.empty()) {
            double sp = spare_at(t);
            while (sp > tol && !heap.empty()) {
                Mass& top = heap.front();
                const double take = std::min(sp, top.amount);
                sp -= take;
                top.amount -= take;
                if (top.deadline <= critical_deadline) critical -= take;
                if (want_alloc)
                    res.shifts[top.owner].push_back({t - events[top.owner], take});
                if (top.amount <= tol) {
                    std::pop_heap(heap.begin(), heap.end(), cmp);
                    heap.pop_back();
                }
            }
        }

        if (next_event < K && events[next_event] == t) {
            const int k = next_event++;
            const double pump = c * series.lhat[t];
            double deficit = pump - series.c_res[t];
            if (deficit > pump + tol) {  // c_res < 0: nothing to pump it from
                res.feasible = false;
                res.fail_deadline = t;
                return res;
            }
            deficit = std::max(deficit, 0.0);
            const int new_deadline = t + d[k];
            double relay = std::min(pump, pump - deficit);  // pump headroom
            double relayed_in = 0.0;
            while (relay > tol && !heap.empty() && heap.front().deadline < new_deadline) {
                Mass& top = heap.front();
                const double take = std::min(relay, top.amount);
                relay -= take;
                top.amount -= take;
                relayed_in += take;
                if (top.deadline <= critical_deadline) critical -= take;
                if (want_alloc)
                    res.shifts[top.owner].push_back({t - events[top.owner], take});
                if (top.amount <= tol) {
                    std::pop_heap(heap.begin(), heap.end(), cmp);
                    heap.pop_back();
                }
            }
            const double launch = deficit + relayed_in;
            if (launch > tol) {
                heap.push_back({new_deadline, k, launch});
                std::push_heap(heap.begin(), heap.end(), cmp);
                if (new_deadline <= critical_deadline) critical += launch;
                if (want_alloc) res.reduce[k] = launch;
            } else if (want_alloc) {
                res.reduce[k] = 0.0;
            }
        }

        // anything still due at t has nowhere left to go
        while (!heap.empty() && heap.front().deadline <= t) {
            if (heap.front().amount > tol) {
                res.feasible = false;
                res.fail_deadline = t;
                return res;
            }
            std::pop_heap(heap.begin(), heap.end(), cmp);
            heap.pop_back();
        }
        if (critical_deadline >= 0 && critical <= tol) res.busy_start = t;
    }
    return res;
}

// Events with c_res < 0 cannot pump their whole deficit, and non-event slots
// with c_res < 0 admit no nonnegative capacity at all.
void check_residuals(const CapacitySeries& series, const std::vector<int>& events) {
    std::vector<char> is_event(series.slot_count(), 0);
    for (int t : events) is_event[t] = 1;
    for (int t = 0; t < series.slot_count(); ++t) {
        if (series.c_res[t] >= 0.0) continue;
        if (is_event[t])
            throw Error(errc::infeasible, "residual capacity is negative at event slot " +
                                              std::to_string(t) +
                                              "; delaying the new load cannot restore it");
        throw Error(errc::infeasible,
                    "residual capacity is negative at slot " + std::to_string(t) +
                        ", which no delay plan touches");
    }
}

DfPlan assemble_plan(const CapacitySeries& series, const std::vector<int>& events,
                     const std::vector<std::pair<int, int>>& windows, int D, double c,
                     bool cap_at_capacity, const KernelResult& alloc) {
    DfPlan plan;
    plan.capacity = c;
    plan.delay = D;
    plan.merged_windows = windows;
    plan.cap_at_capacity = cap_at_capacity;
    plan.u = Eigen::VectorXd::Zero(series.slot_count());
    for (std::size_t k = 0; k < events.size(); ++k) {
        DfEvent ev;
        ev.t = events[k];
        ev.reduce_kw = alloc.reduce.empty() ? 0.0 : alloc.reduce[k];
        if (!alloc.shifts.empty()) {
            // merge landings at the same offset (absorb + relay can both hit one slot)
            std::vector<DfShift> merged = alloc.shifts[k];
            std::sort(merged.begin(), merged.end(),
                      [](const DfShift& a, const DfShift& b) { return a.offset < b.offset; });
            for (const DfShift& s : merged) {
                if (!ev.shifts.empty() && ev.shifts.back().offset == s.offset)
                    ev.shifts.back().add_kw += s.add_kw;
                else
                    ev.shifts.push_back(s);
            }
        }
        plan.u[ev.t] -= ev.reduce_kw;
        for (const DfShift& s : ev.shifts) plan.u[ev.t + s.offset] += s.add_kw;
        plan.events.push_back(std::move(ev));
    }
    return plan;
}

} // namespace

std::pair<std::vector<int>, std::vector<std::pair<int, int>>> select_events(
    const CapacitySeries& series, int K, int D, bool restrict_candidates) {
    const int T = series.slot_count();
    if (K < 1 || K >= T)
        throw Error(errc::config_error, "K must be in [1, T-1], got " + std::to_string(K));
    if (D < 0)
        throw Error(errc::config_error, "D must be >= 0, got " + std::to_string(D));

    std::vector<int> events;
    if (restrict_candidates) {
        for (int s = 0; s < T && static_cast<int>(events.size()) < K; ++s)
            if (series.order[s] + D <= T - 1) events.push_back(series.order[s]);
        if (static_cast<int>(events.size()) < K)
            throw Error(errc::config_error,
                        "fewer than K slots leave a full window before the horizon end");
    } else {
        for (int s = 0; s < K; ++s) {
            const int t = series.order[s];
            if (t + D > T - 1)
                throw Error(errc::event_near_horizon_end,
                            "event slot " + std::to_string(t) + " has no room for a " +
                                std::to_string(D) + "-slot window before the horizon end");
            events.push_back(t);
        }
    }
    std::sort(events.begin(), events.end());

    std::vector<std::pair<int, int>> windows;
    for (int t : events) {
        if (!windows.empty() && t <= windows.back().second)
            windows.back().second = std::max(windows.back().second, t + D);
        else
            windows.push_back({t, t + D});
    }
    return {std::move(events), std::move(windows)};
}

WindowSlackReport check_window_slack(const CapacitySeries& series,
                                     const std::vector<int>& events,
                                     const std::vector<std::pair<int, int>>& windows, int K) {
    WindowSlackReport report;
    if (K < 1 || events.empty()) return report;
    // Reference capacity: the largest per-slot capacity among the events.
    // When the events are the K lowest-rank slots this is exactly C[K]; for
    // hand-supplied event sets it is the value the certificate is about.
    double ck = -kInf;
    for (int t : events) ck = std::max(ck, series.c_dyn[t]);
    for (const auto& [begin, end] : windows) {
        WindowSlack w;
        w.begin = begin;
        w.end = end;
        w.slack_kw = 0.0;
        for (int t = begin; t <= end; ++t) {
            const double need = series.lhat[t] > 0.0 ? ck * series.lhat[t] : 0.0;
            w.slack_kw += series.c_res[t] - need;
        }
        w.satisfied = !(w.slack_kw < -tol_for(std::isfinite(ck) ? ck : 1.0));
        report.satisfied = report.satisfied && w.satisfied;
        report.windows.push_back(w);
    }
    return report;
}

DfPlan solve_df(const CapacitySeries& series, int K, int D, bool restrict_candidates,
                bool cap_at_capacity) {
    check_inputs(series, K, D);
    const double c1 = order_stat(series, 1).first;

    if (K == 0) {
        if (c1 < 0.0)
            throw Error(errc::infeasible, "baseline capacity is negative and K = 0");
        DfPlan plan;
        plan.capacity = c1;
        plan.delay = D;
        plan.cap_at_capacity = cap_at_capacity;
        plan.u = Eigen::VectorXd::Zero(series.slot_count());
        return plan;
    }

    auto [events, windows] = select_events(series, K, D, restrict_candidates);
    check_residuals(series, events);
    const WindowSlackReport slack = check_window_slack(series, events, windows, K);
    const std::vector<int> d(events.size(), D);

    auto feasible = [&](double c) {
        return run_kernel(series, events, d, c, cap_at_capacity, false).feasible;
    };

    double lo = std::max(c1, 0.0);
    // No plan modifies a non-event slot, so each one caps the capacity at its
    // c_dyn outright. With canonical events the smallest untouched slot is the
    // rank-(K+1) one; with restricted candidates a skipped low-rank slot can
    // bind well below that.
    double hi = kInf;
    {
        std::vector<char> is_event(series.slot_count(), 0);
        for (int t : events) is_event[t] = 1;
        for (int t = 0; t < series.slot_count(); ++t)
            if (!is_event[t]) hi = std::min(hi, series.c_dyn[t]);
    }
    if (hi == kInf) {
        // grow a finite bracket; a plan feasible at any scale is unbounded
        double g = std::max(1.0, 2.0 * std::max(lo, 1.0));
        while (g <= 1e15 && feasible(g)) {
            lo = g;
            g *= 2.0;
        }
        if (g > 1e15) {
            KernelResult none;
            DfPlan plan = assemble_plan(series, events, windows, D, kInf, cap_at_capacity, none);
            plan.window_slack = slack;
            plan.lower_bound_only = !slack.satisfied;
            return plan;
        }
        hi = g;
    }

    double best;
    if (feasible(hi)) {
        best = hi;
    } else {
        if (!feasible(lo)) {
            if (lo > 0.0 && feasible(0.0)) lo = 0.0;
            else throw Error(errc::infeasible, "no nonnegative capacity admits a delay plan");
        }
        for (int it = 0; it < 200 && hi - lo > tol_for(hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) ? lo : hi) = mid;
        }
        best = lo;

        // Snap: at the binding capacity the critical busy interval balances
        // exactly — deficits = spares + relayed-out mass, all linear in C.
        // Recover the interval from the failing run just above the optimum,
        // solve the balance, and keep the root only if it verifies.
        const KernelResult fail = run_kernel(series, events, d, hi, cap_at_capacity, false);
        if (!fail.feasible && fail.fail_deadline >= 0) {
            const int tau = fail.fail_deadline;
            const KernelResult diag =
                run_kernel(series, events, d, hi, cap_at_capacity, false, tau);
            const int sigma = diag.busy_start;
            const double tol = tol_for(hi);
            double coef = 0.0, cons = 0.0;
            std::vector<char> is_event(series.slot_count(), 0);
            std::vector<int> event_index(series.slot_count(), -1);
            for (std::size_t k = 0; k < events.size(); ++k) {
                is_event[events[k]] = 1;
                event_index[events[k]] = static_cast<int>(k);
            }
            for (int t = std::max(sigma + 1, 0); t <= tau; ++t) {
                const double deficit = hi * series.lhat[t] - series.c_res[t];
                if (is_event[t] && deficit > tol) {
                    const int k = event_index[t];
                    if (t + d[k] <= tau) {  // critical deficit
                        coef += series.lhat[t];
                        cons -= series.c_res[t];
                    }
                    if (t + d[k] > tau) {  // relay station carrying mass out
                        const double cap = std::min(hi * series.lhat[t], series.c_res[t]);
                        if (cap > tol) {
                            if (hi * series.lhat[t] <= series.c_res[t]) coef -= series.lhat[t];
                            else cons -= series.c_res[t];
                        }
                    }
                } else {
                    double sp = series.c_res[t] - hi * series.lhat[t];
                    bool capped = false;
                    if (cap_at_capacity && hi * (1.0 - series.lhat[t]) < sp) {
                        sp = hi * (1.0 - series.lhat[t]);
                        capped = true;
                    }
                    if (sp > tol) {
                        if (capped) coef -= (1.0 - series.lhat[t]);
                        else {
                            coef += series.lhat[t];
                            cons -= series.c_res[t];
                        }
                    }
                    if (is_event[t] && t + d[event_index[t]] > tau && !(deficit > tol)) {
                        // deficit-free relay station: headroom c*lhat moves on
                        const double cap = std::min(hi * series.lhat[t], series.c_res[t]);
                        if (cap > tol) {
                            if (hi * series.lhat[t] <= series.c_res[t]) coef -= series.lhat[t];
                            else cons -= series.c_res[t];
                        }
                    }
                }
            }
            if (coef > 1e-12) {
                const double root = -cons / coef;
                const double bump = 4.0 * std::max(tol_for(root), 1e-12);
                if (root >= lo - bump && root <= hi + bump && feasible(root) &&
                    !feasible(root + bump))
                    best = root;
            }
        }
    }

    const KernelResult alloc = run_kernel(series, events, d, best, cap_at_capacity, true);
    DfPlan plan = assemble_plan(series, events, windows, D, best, cap_at_capacity, alloc);
    plan.window_slack = slack;
    plan.lower_bound_only = !slack.satisfied;
    return plan;
}

DfPlan solve_df_lp(const CapacitySeries& series, int K, int D, bool restrict_candidates,
                   bool cap_at_capacity) {
    check_inputs(series, K, D);
    if (K == 0) return solve_df(series, 0, D, restrict_candidates, cap_at_capacity);

    auto [events, windows] = select_events(series, K, D, restrict_candidates);
    check_residuals(series, events);
    const int T = series.slot_count();
    const int nk = static_cast<int>(events.size());

    // variables: [C, r_0..r_{K-1}, a_{k,tau} (tau = 1..D)]
    const int n_vars = 1 + nk + nk * D;
    auto a_index = [&](int k, int tau) { return 1 + nk + k * D + (tau - 1); };

    SimplexSolver::Matrix rows;
    SimplexSolver::Vector rhs;
    auto add_row = [&](std::vector<double>&& row, double b) {
        rows.push_back(std::move(row));
        rhs.push_back(b);
    };

    for (int k = 0; k < nk; ++k) {
        // r_k == sum of its landings, and r_k <= C * lhat(t_k)
        std::vector<double> eq(n_vars, 0.0);
        eq[1 + k] = 1.0;
        for (int tau = 1; tau <= D; ++tau) eq[a_index(k, tau)] = -1.0;
        std::vector<double> eq_neg(n_vars, 0.0);
        for (int j = 0; j < n_vars; ++j) eq_neg[j] = -eq[j];
        add_row(std::move(eq), 0.0);
        add_row(std::move(eq_neg), 0.0);

        std::vector<double> pump(n_vars, 0.0);
        pump[1 + k] = 1.0;
        pump[0] = -series.lhat[events[k]];
        add_row(std::move(pump), 0.0);
    }

    std::vector<int> event_at(T, -1);
    for (int k = 0; k < nk; ++k) event_at[events[k]] = k;
    for (int t = 0; t < T; ++t) {
        std::vector<double> row(n_vars, 0.0);
        row[0] = series.lhat[t];
        if (event_at[t] >= 0) row[1 + event_at[t]] = -1.0;
        for (int k = 0; k < nk; ++k) {
            const int tau = t - events[k];
            if (tau >= 1 && tau <= D) row[a_index(k, tau)] = 1.0;
        }
        if (cap_at_capacity) {
            std::vector<double> capped = row;
            capped[0] -= 1.0;
            add_row(std::move(capped), 0.0);
        }
        add_row(std::move(row), series.c_res[t]);
    }

    SimplexSolver::Vector objective(n_vars, 0.0);
    objective[0] = 1.0;
    SimplexSolver::Vector x;
    const double value = SimplexSolver(rows, rhs, objective).solve(x);
    if (value == -kInf)
        throw Error(errc::lp_numerical_failure,
                    "simplex reported an infeasible program for a pre-checked instance");

    KernelResult alloc;
    alloc.reduce.assign(nk, 0.0);
    alloc.shifts.assign(nk, {});
    double c = value;
    if (value == kInf) {
        c = kInf;
    } else {
        for (int k = 0; k < nk; ++k) {
            alloc.reduce[k] = x[1 + k];
            for (int tau = 1; tau <= D; ++tau)
                if (x[a_index(k, tau)] > 1e-9)
                    alloc.shifts[k].push_back({tau, x[a_index(k, tau)]});
        }
    }
    DfPlan plan = assemble_plan(series, events, windows, D, c, cap_at_capacity, alloc);
    plan.window_slack = check_window_slack(series, events, windows, K);
    plan.lower_bound_only = !plan.window_slack.satisfied;
    return plan;
}

DfPlan minimal_delays(DfPlan plan, const CapacitySeries& series) {
    const int nk = static_cast<int>(plan.events.size());
    if (nk == 0 || !std::isfinite(plan.capacity)) {
        for (DfEvent& ev : plan.events) ev.d_min = 0;
        return plan;
    }
    std::vector<int> events(nk);
    std::vector<int> d(nk, plan.delay);
    for (int k = 0; k < nk; ++k) events[k] = plan.events[k].t;

    // shrink latest event first; feasibility is monotone in each window length
    for (int k = nk - 1; k >= 0; --k) {
        int lo = 0, hi = d[k];
        auto fits = [&](int trial) {
            std::vector<int> probe = d;
            probe[k] = trial;
            return run_kernel(series, events, probe, plan.capacity, plan.cap_at_capacity, false)
                .feasible;
        };
        while (lo < hi) {
            const int mid = lo + (hi - lo) / 2;
            if (fits(mid)) hi = mid;
            else lo = mid + 1;
        }
        d[k] = lo;
    }

    const KernelResult alloc =
        run_kernel(series, events, d, plan.capacity, plan.cap_at_capacity, true);
    DfPlan out = assemble_plan(series, events, plan.merged_windows, plan.delay, plan.capacity,
                               plan.cap_at_capacity, alloc);
    out.window_slack = plan.window_slack;
    out.lower_bound_only = plan.lower_bound_only;
    for (int k = 0; k < nk; ++k) out.events[k].d_min = d[k];
    return out;
}

EquivalenceReport check_cf_equivalence(const CapacitySeries& series, int K) {
    if (K < 0 || K >= series.slot_count())
        throw Error(errc::config_error, "K must be in [0, T-1], got " + std::to_string(K));
    EquivalenceReport report;
    report.cf_capacity = order_stat(series, K + 1).first;
    if (K == 0) return report;

    const int T = series.slot_count();
    std::vector<double> tail(T + 1, 0.0);  // tail[t] = sum_{tau >= t} (c_res - C*lhat)
    for (int t = T - 1; t >= 0; --t) {
        const double need = series.lhat[t] > 0.0 ? report.cf_capacity * series.lhat[t] : 0.0;
        tail[t] = tail[t + 1] + (series.c_res[t] - need);
    }

    for (int s = 0; s < K; ++s) report.event_times.push_back(series.order[s]);
    std::sort(report.event_times.begin(), report.event_times.end());
    const double tol = tol_for(std::isfinite(report.cf_capacity) ? report.cf_capacity : 1.0);
    for (int t : report.event_times) {
        report.margins.push_back(tail[t]);
        const bool ok = !(tail[t] < -tol);
        report.event_ok.push_back(ok);
        report.overall = report.overall && ok;
    }
    report.equal_delay = T - 1 - report.event_times.back();
    return report;
}

} // namespace flexhca
