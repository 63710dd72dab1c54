#pragma once

#include <utility>
#include <vector>

#include "flexhca/types.hpp"

namespace flexhca {

// Per-slot residual and hosting capacity plus the sorted order statistics the
// solvers operate on. `order[s]` is the slot holding rank s+1 (ranks are
// 1-based at the API surface, storage is 0-based); ties are broken by the
// smaller slot index so intervention sets are reproducible.
struct CapacitySeries {
    std::vector<double> c_res;   // kW
    std::vector<double> c_dyn;   // kW; +inf sentinel where lhat == 0
    std::vector<double> lhat;    // profile copy, solvers need it to build u
    std::vector<int> order;      // order[s] = slot with rank s+1
    std::vector<int> rank_of;    // inverse of order: rank_of[slot] = s (0-based)
    std::vector<double> sorted;  // sorted[s] = c_dyn[order[s]], non-decreasing

    // Slots where lhat == 0 and c_res < 0: the existing load alone violates
    // the limit there and no modification of the new load can help.
    std::vector<int> structurally_infeasible;

    int slot_count() const { return static_cast<int>(c_res.size()); }
};

// Copperplate capacities: c_res(t) = p0_max - sum_i loads(i,t).
CapacitySeries capacity_copperplate(const LoadSet& loads, const NewLoadSpec& spec,
                                    double p0_max_kw);

// Builds the order statistics for externally supplied c_res/lhat vectors.
// This is the shared substrate; capacity_copperplate and the network variant
// both end here.
CapacitySeries make_capacity_series(std::vector<double> c_res, std::vector<double> lhat);

// s is a 1-based rank in [1, T]; returns (C[s], slot of rank s).
std::pair<double, int> order_stat(const CapacitySeries& series, int s);

} // namespace flexhca
