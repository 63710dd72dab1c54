#include "flexhca/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace flexhca {

CapacitySeries make_capacity_series(std::vector<double> c_res, std::vector<double> lhat) {
    const int T = static_cast<int>(c_res.size());
    if (T == 0) throw Error(errc::config_error, "empty capacity series");
    if (lhat.size() != c_res.size())
        throw Error(errc::config_error, "profile length does not match series length");

    CapacitySeries s;
    s.c_res = std::move(c_res);
    s.lhat = std::move(lhat);
    s.c_dyn.resize(T);
    for (int t = 0; t < T; ++t) {
        if (s.lhat[t] > 0.0) {
            s.c_dyn[t] = s.c_res[t] / s.lhat[t];
        } else {
            s.c_dyn[t] = std::numeric_limits<double>::infinity();
            if (s.c_res[t] < 0.0) s.structurally_infeasible.push_back(t);
        }
    }

    s.order.resize(T);
    std::iota(s.order.begin(), s.order.end(), 0);
    std::sort(s.order.begin(), s.order.end(), [&](int a, int b) {
        if (s.c_dyn[a] != s.c_dyn[b]) return s.c_dyn[a] < s.c_dyn[b];
        return a < b;
    });

    s.sorted.resize(T);
    s.rank_of.resize(T);
    for (int r = 0; r < T; ++r) {
        s.sorted[r] = s.c_dyn[s.order[r]];
        s.rank_of[s.order[r]] = r;
    }
    return s;
}

CapacitySeries capacity_copperplate(const LoadSet& loads, const NewLoadSpec& spec,
                                    double p0_max_kw) {
    loads.validate();
    spec.validate(loads.grid);
    const int T = loads.slot_count();
    const Eigen::VectorXd agg = loads.aggregate();

    std::vector<double> c_res(T), lhat(T);
    for (int t = 0; t < T; ++t) {
        c_res[t] = p0_max_kw - agg[t];
        lhat[t] = spec.profile[t];
    }
    return make_capacity_series(std::move(c_res), std::move(lhat));
}

std::pair<double, int> order_stat(const CapacitySeries& series, int s) {
    if (s < 1 || s > series.slot_count())
        throw Error(errc::rank_out_of_range,
                    "rank " + std::to_string(s) + " not in [1, " +
                        std::to_string(series.slot_count()) + "]");
    return {series.sorted[s - 1], series.order[s - 1]};
}

} // namespace flexhca
