#include "flexhca/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "flexhca/rng.hpp"

namespace flexhca {

namespace {

constexpr double kTailStartFrac = 0.56;  // tail cutoff L as a fraction of the peak

double hour_of_day(int t, const TimeGrid& grid) {
    const int spd = grid.slots_per_day();
    return 24.0 * static_cast<double>(t % spd) / static_cast<double>(spd);
}

// circular distance in hours
double hour_dist(double a, double b) {
    double d = std::fabs(a - b);
    return std::min(d, 24.0 - d);
}

} // namespace

LoadSet synth_loads(int n_buses, const TimeGrid& grid, std::uint64_t seed, double peak_kw,
                    double tail_alpha) {
    if (n_buses < 1) throw Error(errc::config_error, "n_buses must be >= 1");
    if (!(tail_alpha > 0.0)) throw Error(errc::config_error, "tail_alpha must be > 0");
    if (!(peak_kw > 0.0)) throw Error(errc::config_error, "peak_kw must be > 0");

    const int T = grid.slot_count;
    const int spd = grid.slots_per_day();
    constexpr double two_pi = 2.0 * std::numbers::pi;

    LoadSet loads;
    loads.grid = grid;
    loads.values.resize(n_buses, T);
    for (int i = 0; i < n_buses; ++i) loads.bus_ids.push_back(std::to_string(i + 1));

    for (int i = 0; i < n_buses; ++i) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        const double scale = uniform(rng, 0.5, 1.5);
        const double peak_hour = uniform(rng, 18.0, 20.0);
        for (int t = 0; t < T; ++t) {
            const double h = hour_of_day(t, grid);
            const double diurnal = 1.0 + 0.5 * std::cos(two_pi * (h - peak_hour) / 24.0);
            const double day = static_cast<double>(t / spd);
            const double weekly = 1.0 + 0.08 * std::cos(two_pi * day / 7.0);
            const double noise = uniform(rng, 0.75, 1.25);
            loads.values(i, t) = scale * diurnal * weekly * noise;
        }
    }

    // Monotone remap of the aggregate: bottom 90% of slots scaled linearly so
    // the decile boundary lands on L; top decile assigned the inverse-CDF
    // values of the target tail density at grades j/m, putting the maximum at
    // peak_kw exactly.
    Eigen::VectorXd agg = loads.aggregate();
    std::vector<int> idx(T);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (agg[a] != agg[b]) return agg[a] < agg[b];
        return a < b;
    });

    const double tail_top = peak_kw;
    const double tail_lo = kTailStartFrac * peak_kw;
    const int k90 = static_cast<int>(std::floor(0.9 * T));  // slots below the tail
    const int m = T - k90;
    const double inv_exp = 1.0 / (tail_alpha + 1.0);

    Eigen::VectorXd target(T);
    const double low_ref = (k90 > 0) ? agg[idx[k90 - 1]] : 1.0;
    for (int r = 0; r < k90; ++r) target[idx[r]] = agg[idx[r]] * (tail_lo / low_ref);
    for (int j = 1; j <= m; ++j) {
        const double grade = static_cast<double>(j) / static_cast<double>(m);
        target[idx[k90 + j - 1]] =
            tail_top - (tail_top - tail_lo) * std::pow(1.0 - grade, inv_exp);
    }

    for (int t = 0; t < T; ++t) loads.values.col(t) *= target[t] / agg[t];
    return loads;
}

Eigen::VectorXd synth_profile(const TimeGrid& grid, std::uint64_t seed) {
    const int T = grid.slot_count;
    std::mt19937_64 rng(mix_seed(seed, 0x70726f66ULL));

    Eigen::VectorXd profile(T);
    for (int t = 0; t < T; ++t) {
        const double h = hour_of_day(t, grid);
        const double d = hour_dist(h, 21.5) / 3.2;
        const double envelope = 0.12 + 0.88 * std::exp(-0.5 * d * d);
        profile[t] = envelope * uniform(rng, 0.55, 1.0);
    }
    profile /= profile.maxCoeff();
    return profile.cwiseMax(0.0).cwiseMin(1.0);
}

FeederModel synth_feeder(int n_buses, std::uint64_t seed, double p0_max_kw, double v_lower,
                         double v_upper) {
    if (n_buses < 2) throw Error(errc::config_error, "synth_feeder needs >= 2 buses");
    std::mt19937_64 rng(mix_seed(seed, 0x66656564ULL));

    FeederModel f;
    for (int i = 0; i < n_buses; ++i) f.bus_names.push_back(std::to_string(i));
    for (int i = 1; i < n_buses; ++i) {
        Line l;
        // trunk along consecutive buses with occasional short laterals
        const bool lateral = i > 1 && uniform01(rng) < 0.3;
        l.from = lateral ? std::max(1, i - 1 - static_cast<int>(uniform(rng, 1.0, 4.0))) : i - 1;
        l.to = i;
        l.r = uniform(rng, 0.0005, 0.004);
        l.x = l.r * uniform(rng, 0.6, 1.1);
        f.lines.push_back(l);
    }
    const int n = n_buses - 1;
    f.eta.resize(n, 1);
    for (int i = 0; i < n; ++i) f.eta(i, 0) = uniform(rng, 0.25, 0.40);
    f.v0 = 1.0;
    f.v_lower = Eigen::VectorXd::Constant(n, v_lower);
    f.v_upper = Eigen::VectorXd::Constant(n, v_upper);
    f.p0_max_kw = p0_max_kw;
    f.s_base_kva = 1000.0;
    return f;
}

} // namespace flexhca
