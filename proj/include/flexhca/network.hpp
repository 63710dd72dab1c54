#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flexhca/capacity.hpp"
#include "flexhca/types.hpp"

namespace flexhca {

// Common-root-path sensitivity matrices of the linearized power flow, indexed
// by non-root bus (bus b maps to row/column b-1). R_ij is the sum of line
// resistances over the intersection of the root paths of buses i and j, X_ij
// likewise; both are symmetric and in p.u. The per-slot sensitivity is
// Z(t) = R + X * diag(eta(t)), in p.u. voltage per p.u. injection.
struct ImpedanceMatrices {
    Eigen::MatrixXd R;
    Eigen::MatrixXd X;

    int bus_count() const { return static_cast<int>(R.rows()); }

    Eigen::MatrixXd z_at(const Eigen::VectorXd& eta) const {
        return R + X * eta.asDiagonal();
    }
};

ImpedanceMatrices build_impedance(const FeederModel& feeder);

// The reduction to a single capacity series is only valid when every pair of
// buses is electrically coupled: Z_ij(t) > 0 for all i, j, t. Since X >= 0
// this is checked once at the per-bus minimum of eta over time. Throws
// NonpositiveMutualImpedance naming the first offending pair.
void require_positive_mutual_impedance(const ImpedanceMatrices& zmats,
                                       const FeederModel& feeder);

// Network-aware capacities for a new load at spec.attach_bus:
//   c_res[t] = min( p0_max - l_agg(t),
//                   min_i (v0 - v_lower_i - 2 Z_i(t) l(t) / s_base)
//                         / (2 Z_{i,attach}(t) / s_base) )
// and c_dyn[t] = c_res[t]/lhat(t) with the same order statistics as the
// copperplate path. `binding`, when non-null, receives one label per slot:
// "transformer" or "voltage@<bus>" for whichever limit sets c_res[t].
CapacitySeries capacity_network(const LoadSet& loads, const NewLoadSpec& spec,
                                const FeederModel& feeder, const ImpedanceMatrices& zmats,
                                std::vector<std::string>* binding = nullptr);

// Minimum of v_i(t) = v0 - 2 Z_i(t) l(t) / s_base over buses and slots, for
// the existing loads alone (no new load).
double min_network_voltage(const LoadSet& loads, const FeederModel& feeder,
                           const ImpedanceMatrices& zmats);

// Two-step uniform scaling used to set up a case study: (a) scale all loads
// by the gamma that brings the minimum network voltage down to min(v_lower)
// (bisection to 1e-6 p.u. plus one exact polish step on the linear map) and
// set p0_max to the peak of the scaled total load; (b) multiply loads by
// (1 - headroom_fraction). Returns modified copies.
std::pair<LoadSet, FeederModel> scale_case_study(const LoadSet& loads,
                                                 const FeederModel& feeder,
                                                 double headroom_fraction);

} // namespace flexhca
