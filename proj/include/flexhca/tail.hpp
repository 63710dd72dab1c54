#pragma once

#include <cstdint>
#include <vector>

#include "flexhca/errors.hpp"

namespace flexhca {

// Right-tail model of the aggregate load: density kappa*(1 - x/L_bar)^alpha
// on [L, L_bar], fitted to the high-load slots (the top (100-p)% of the
// horizon). All capacity distribution formulas condition on this set.
struct TailModel {
    double L = 0.0;          // tail cutoff, kW
    double L_bar = 0.0;      // right endpoint, kW
    double kappa = 0.0;      // density scale, 1/kW
    double alpha = 0.0;      // shape exponent
    int T_L = 0;             // number of high-load slots
    double beta_L = 0.0;     // T_L / T

    double density(double x) const;
    double cdf(double x) const;
    double quantile(double f) const;          // inverse CDF, f in [0,1]
    double exceed_prob(double threshold) const;  // P(X > threshold)

    void validate() const;
};

enum class TailFitMethod { mle, histogram };

// L is the cutoff percentile of the aggregate, L_bar its maximum (optionally
// inflated by lbar_margin). alpha maximizes the high-load log-likelihood via
// golden-section search (histogram mode instead least-squares-fits the
// binned density); samples equal to L_bar are excluded — the density is zero
// there under the open-interval convention.
TailModel fit_tail(const std::vector<double>& aggregate, double cutoff_percentile = 90.0,
                   TailFitMethod method = TailFitMethod::mle, double lbar_margin = 0.0);

// Inverse-CDF sampling, deterministic per seed.
std::vector<double> sample_tail(const TailModel& model, int n, std::uint64_t seed);

// P(capacity with K curtailments > c) when the high loads are i.i.d. draws
// from the tail: binomial sum over at most K exceedances of p0_max - c,
// evaluated in log space; and its Poisson approximation with rate T_L*rho.
double exact_tail_prob(const TailModel& model, int K, double c, double p0_max);
double poisson_tail_prob(const TailModel& model, int K, double c, double p0_max);

enum class ExpectationVariant { empirical, weibull };

// Expected capacity after K curtailments via the quantile closed form:
// `weibull` uses the fitted tail, `empirical` the supplied high-load sample
// (falling back to the fitted quantile when none is given).
double expected_capacity(const TailModel& model, int K, double p0_max,
                         ExpectationVariant variant,
                         const std::vector<double>* high_load_sample = nullptr);

// gains[k] = E[C*_{k+1}] - E[C*_k] for k = 0..k_max-1, from the fitted form.
std::vector<double> marginal_gains(const TailModel& model, int k_max, double p0_max);

// Expected curtailment depths r_k = E[C*_K] - E[C*_{k-1}] for k = 1..K and
// the quantile-concentration check: the normalized depth of each interior
// rank stays below the fraction of strictly smaller depths.
struct DepthReport {
    std::vector<double> r;         // depths by rank, r[0] is the deepest
    std::vector<bool> interior_ok; // Eq. check per k = 2..K-1 (size K-2)
    bool ok = true;
    double median = 0.0;
    double midpoint = 0.0;         // (min + max) / 2
};
DepthReport depth_requirements(const TailModel& model, int K, double p0_max);

struct McCell {
    int k = 0;
    double c = 0.0;       // kW
    double exact = 0.0;   // binomial formula
    double poisson = 0.0;
    double empirical = 0.0;
    double sigma = 0.0;   // binomial std of the empirical proportion
    bool within_3sigma = true;
};
struct McCurve {
    int k = 0;
    double mc_mean = 0.0;
    double mc_stderr = 0.0;  // standard error of the mean over trials
    double expected_weibull = 0.0;
};
struct McReport {
    int n_trials = 0;
    std::vector<McCell> cells;
    std::vector<McCurve> curves;
    bool all_within_3sigma = true;
};

// Per trial: draw T_L i.i.d. high loads, take the (K+1)-th smallest residual
// p0_max - x as the capacity (unit new-load profile). Trial seeds are derived
// from (seed, trial), so the result is independent of execution order.
McReport monte_carlo_validate(const TailModel& model, double p0_max,
                              const std::vector<int>& k_list, const std::vector<double>& c_list,
                              int n_trials, std::uint64_t seed);

} // namespace flexhca
