#pragma once

#include "flexhca/types.hpp"

namespace flexhca {

// Deterministic synthetic load fixture. Each bus is a diurnal sinusoid with
// an evening peak, a weekly modulation, and i.i.d. multiplicative noise; the
// aggregate's top decile is then monotone-remapped onto the density
// kappa*(1 - x/peak_kw)^tail_alpha supported on [0.56*peak_kw, peak_kw], and
// the maximum aggregate value equals peak_kw. The generator only uses
// mt19937_64 draws converted to doubles explicitly, so output is identical
// across platforms for a fixed seed.
LoadSet synth_loads(int n_buses, const TimeGrid& grid, std::uint64_t seed, double peak_kw,
                    double tail_alpha);

// Normalized EV-charging-style profile: low midday floor, evening ramp with
// overnight decay, mild day-to-day noise, max value exactly 1.
Eigen::VectorXd synth_profile(const TimeGrid& grid, std::uint64_t seed);

// Random radial feeder laid out as a trunk with short laterals; impedances
// and reactive ratios in typical distribution ranges. Used by tests and the
// README walkthrough as a stand-in for a utility feeder model.
FeederModel synth_feeder(int n_buses, std::uint64_t seed, double p0_max_kw,
                         double v_lower = 0.95, double v_upper = 1.05);

} // namespace flexhca
