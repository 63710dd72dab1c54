#include "flexhca/tail.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "flexhca/rng.hpp"

namespace flexhca {

namespace {

// Linear-interpolation percentile on a sorted vector, p in [0, 100].
double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    if (lo == hi) return sorted[lo];
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Maximizes f on [lo, hi] by golden-section search; stops once the bracket
// shrinks below tol and returns the bracket midpoint.
template <typename F>
double golden_max(double lo, double hi, double tol, F&& f) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

constexpr double kAlphaLo = 1e-3;
constexpr double kAlphaHi = 50.0;

double fit_alpha_mle(const std::vector<double>& tail, double l_bar, double width) {
    // Log-likelihood of alpha for density (alpha+1)(L_bar-x)^alpha / width^(alpha+1):
    //   m*log(alpha+1) + alpha * sum(log((L_bar-x_i)/width)) - m*log(width).
    // Samples at L_bar carry zero density and are excluded (open-interval
    // convention); without that the maximum sample would pin alpha at 0.
    double sum_log = 0.0;
    int m = 0;
    for (double x : tail) {
        if (x >= l_bar) continue;
        sum_log += std::log((l_bar - x) / width);
        ++m;
    }
    if (m < 2)
        throw Error(errc::degenerate_tail, "high-load samples all sit at the right endpoint");
    auto loglik = [&](double alpha) {
        return m * std::log(alpha + 1.0) + alpha * sum_log;
    };
    const double alpha = golden_max(kAlphaLo, kAlphaHi, 1e-8, loglik);
    // The likelihood is strictly concave with stationary point
    // alpha+1 = m / sum(log(width/(L_bar-x_i))); snap to it when the search
    // landed there, so downstream closed forms are exact.
    if (sum_log < 0.0) {
        const double closed = -static_cast<double>(m) / sum_log - 1.0;
        if (closed >= kAlphaLo && closed <= kAlphaHi &&
            std::abs(closed - alpha) <= 1e-6 * std::max(1.0, std::abs(closed)))
            return closed;
    }
    return alpha;
}

double fit_alpha_histogram(const std::vector<double>& tail, double l, double l_bar) {
    // Least-squares fit of log density against log(1 - x/L_bar) over
    // equal-width bins; kept for visual comparison against the empirical
    // histogram, MLE is the default.
    const int bins = std::max(8, static_cast<int>(std::floor(std::sqrt(static_cast<double>(tail.size())))));
    const double width = (l_bar - l) / bins;
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (double x : tail) {
        int b = static_cast<int>(std::floor((x - l) / width));
        b = std::clamp(b, 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    // u = log(1 - center/L_bar), v = log density, weighted by the bin count:
    // the variance of a logged Poisson count is roughly 1/count, so sparse
    // far-tail bins should not get the same vote as bins holding hundreds of
    // samples (empty bins carry no weight at all).
    std::vector<double> u, v, w;
    for (int b = 0; b < bins; ++b) {
        if (counts[static_cast<std::size_t>(b)] == 0) continue;
        const double center = l + (b + 0.5) * width;
        if (center >= l_bar) continue;
        u.push_back(std::log1p(-center / l_bar));
        v.push_back(std::log(counts[static_cast<std::size_t>(b)] /
                             (static_cast<double>(tail.size()) * width)));
        w.push_back(static_cast<double>(counts[static_cast<std::size_t>(b)]));
    }
    if (u.size() < 2)
        throw Error(errc::degenerate_tail, "too few occupied histogram bins to fit the tail");
    double wsum = 0.0, mu = 0.0, mv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        wsum += w[i];
        mu += w[i] * u[i];
        mv += w[i] * v[i];
    }
    mu /= wsum;
    mv /= wsum;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        sxy += w[i] * (u[i] - mu) * (v[i] - mv);
        sxx += w[i] * (u[i] - mu) * (u[i] - mu);
    }
    if (sxx <= 0.0)
        throw Error(errc::degenerate_tail, "histogram bins give no spread to fit the tail exponent");
    return std::clamp(sxy / sxx, kAlphaLo, kAlphaHi);
}

// P(Binomial(n, rho) <= K), terms evaluated in log space: at n ~ 3500 the
// raw binomial coefficients overflow long before the products underflow.
double binomial_cdf(int n, int K, double rho) {
    if (K >= n) return 1.0;
    if (rho <= 0.0) return 1.0;
    if (rho >= 1.0) return 0.0;
    const double log_n_fact = std::lgamma(n + 1.0);
    const double log_rho = std::log(rho);
    const double log_1m = std::log1p(-rho);
    double sum = 0.0;
    for (int k = 0; k <= K; ++k) {
        const double lg = log_n_fact - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                          k * log_rho + (n - k) * log_1m;
        sum += std::exp(lg);
    }
    return std::min(sum, 1.0);
}

double poisson_cdf(int K, double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    for (int k = 0; k <= K; ++k)
        sum += std::exp(-lambda + k * std::log(lambda) - std::lgamma(k + 1.0));
    return std::min(sum, 1.0);
}

void check_budget_range(int k, int limit, const char* what) {
    if (k < 0 || k > limit)
        throw Error(errc::config_error, std::string(what) + " must lie in [0, " +
                                            std::to_string(limit) + "], got " + std::to_string(k));
}

void check_threshold(double c) {
    if (!std::isfinite(c) || !(c > 0.0))
        throw Error(errc::config_error, "capacity threshold must be positive and finite");
}

} // namespace

double TailModel::density(double x) const {
    if (x < L || x > L_bar) return 0.0;
    return kappa * std::pow(1.0 - x / L_bar, alpha);
}

double TailModel::cdf(double x) const {
    if (x <= L) return 0.0;
    if (x >= L_bar) return 1.0;
    return 1.0 - std::pow((L_bar - x) / (L_bar - L), alpha + 1.0);
}

double TailModel::quantile(double f) const {
    f = std::clamp(f, 0.0, 1.0);
    return L_bar - (L_bar - L) * std::pow(1.0 - f, 1.0 / (alpha + 1.0));
}

double TailModel::exceed_prob(double threshold) const {
    if (threshold <= L) return 1.0;
    if (threshold >= L_bar) return 0.0;
    return std::pow((L_bar - threshold) / (L_bar - L), alpha + 1.0);
}

void TailModel::validate() const {
    if (!std::isfinite(L) || !std::isfinite(L_bar) || !(L < L_bar))
        throw Error(errc::config_error, "tail model needs L < L_bar with both finite");
    if (!(L_bar > 0.0))
        throw Error(errc::config_error, "tail model right endpoint must be positive");
    if (!std::isfinite(alpha) || alpha < 0.0)
        throw Error(errc::config_error, "tail model shape exponent must be nonnegative");
    if (!std::isfinite(kappa) || !(kappa > 0.0))
        throw Error(errc::config_error, "tail model density scale must be positive");
    if (T_L < 1)
        throw Error(errc::config_error, "tail model needs at least one high-load slot");
    if (!(beta_L > 0.0) || beta_L > 1.0)
        throw Error(errc::config_error, "tail model high-load fraction must lie in (0, 1]");
}

TailModel fit_tail(const std::vector<double>& aggregate, double cutoff_percentile,
                   TailFitMethod method, double lbar_margin) {
    if (aggregate.empty())
        throw Error(errc::config_error, "aggregate load series is empty");
    for (double v : aggregate)
        if (!std::isfinite(v))
            throw Error(errc::config_error, "aggregate load series has non-finite entries");
    if (!(cutoff_percentile > 50.0) || !(cutoff_percentile < 100.0))
        throw Error(errc::config_error, "tail cutoff percentile must lie in (50, 100)");
    if (!std::isfinite(lbar_margin) || lbar_margin < 0.0)
        throw Error(errc::config_error, "right-endpoint margin must be nonnegative");

    std::vector<double> sorted = aggregate;
    std::sort(sorted.begin(), sorted.end());
    const double l = percentile_sorted(sorted, cutoff_percentile);
    const double l_bar = sorted.back() * (1.0 + lbar_margin);

    const auto first_tail = std::lower_bound(sorted.begin(), sorted.end(), l);
    std::vector<double> tail(first_tail, sorted.end());
    if (tail.size() < 30)
        throw Error(errc::degenerate_tail, "only " + std::to_string(tail.size()) +
                                               " high-load samples above the cutoff (need 30)");
    if (!(l_bar > l))
        throw Error(errc::degenerate_tail, "tail has zero width (cutoff equals the maximum)");
    if (tail.front() == tail.back())
        throw Error(errc::degenerate_tail, "all high-load samples are equal");
    if (!(l_bar > 0.0))
        throw Error(errc::degenerate_tail, "aggregate maximum must be positive to model the tail");

    TailModel model;
    model.L = l;
    model.L_bar = l_bar;
    model.T_L = static_cast<int>(tail.size());
    model.beta_L = static_cast<double>(tail.size()) / static_cast<double>(aggregate.size());
    model.alpha = method == TailFitMethod::mle ? fit_alpha_mle(tail, l_bar, l_bar - l)
                                               : fit_alpha_histogram(tail, l, l_bar);
    // kappa = (alpha+1) L_bar^alpha / (L_bar-L)^(alpha+1), via logs so large
    // endpoints with large alpha cannot overflow the intermediate powers.
    model.kappa = std::exp(std::log(model.alpha + 1.0) + model.alpha * std::log(l_bar) -
                           (model.alpha + 1.0) * std::log(l_bar - l));
    model.validate();
    return model;
}

std::vector<double> sample_tail(const TailModel& model, int n, std::uint64_t seed) {
    model.validate();
    if (n < 0) throw Error(errc::config_error, "sample count must be nonnegative");
    std::mt19937_64 rng(mix_seed(seed, 0x7461696cULL));  // "tail"
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& x : out) x = model.quantile(uniform01(rng));
    return out;
}

double exact_tail_prob(const TailModel& model, int K, double c, double p0_max) {
    model.validate();
    check_budget_range(K, model.T_L, "curtailment budget");
    check_threshold(c);
    return binomial_cdf(model.T_L, K, model.exceed_prob(p0_max - c));
}

double poisson_tail_prob(const TailModel& model, int K, double c, double p0_max) {
    model.validate();
    check_budget_range(K, model.T_L, "curtailment budget");
    check_threshold(c);
    return poisson_cdf(K, model.T_L * model.exceed_prob(p0_max - c));
}

double expected_capacity(const TailModel& model, int K, double p0_max, ExpectationVariant variant,
                         const std::vector<double>* high_load_sample) {
    model.validate();
    check_budget_range(K, model.T_L, "curtailment budget");
    // E[C*_K] = p0_max - E[(K+1)-th largest load]; the order statistic is
    // approximated by the quantile at 1 - (K+1)/(T_L+1).
    const double q = 1.0 - static_cast<double>(K + 1) / static_cast<double>(model.T_L + 1);
    if (variant == ExpectationVariant::empirical && high_load_sample != nullptr &&
        !high_load_sample->empty()) {
        std::vector<double> sorted = *high_load_sample;
        std::sort(sorted.begin(), sorted.end());
        return p0_max - percentile_sorted(sorted, q * 100.0);
    }
    return p0_max - model.quantile(q);
}

std::vector<double> marginal_gains(const TailModel& model, int k_max, double p0_max) {
    model.validate();
    if (k_max < 1 || k_max > model.T_L - 2)
        throw Error(errc::config_error, "gain horizon must lie in [1, T_L - 2]");
    std::vector<double> gains(static_cast<std::size_t>(k_max));
    double prev = expected_capacity(model, 0, p0_max, ExpectationVariant::weibull);
    for (int k = 1; k <= k_max; ++k) {
        const double cur = expected_capacity(model, k, p0_max, ExpectationVariant::weibull);
        gains[static_cast<std::size_t>(k - 1)] = cur - prev;
        prev = cur;
    }
    return gains;
}

DepthReport depth_requirements(const TailModel& model, int K, double p0_max) {
    model.validate();
    if (K < 3 || K > model.T_L)
        throw Error(errc::config_error, "depth profile needs a budget in [3, T_L]");
    DepthReport report;
    report.r.resize(static_cast<std::size_t>(K));
    const double e_full = expected_capacity(model, K, p0_max, ExpectationVariant::weibull);
    for (int k = 1; k <= K; ++k)
        report.r[static_cast<std::size_t>(k - 1)] =
            e_full - expected_capacity(model, k - 1, p0_max, ExpectationVariant::weibull);

    const auto [min_it, max_it] = std::minmax_element(report.r.begin(), report.r.end());
    const double r_min = *min_it, r_max = *max_it;
    if (!(r_max > r_min))
        throw Error(errc::degenerate_range, "curtailment depths are all equal");
    report.midpoint = 0.5 * (r_min + r_max);
    std::vector<double> sorted = report.r;
    std::sort(sorted.begin(), sorted.end());
    report.median = sorted.size() % 2 == 1
                        ? sorted[sorted.size() / 2]
                        : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);

    // Concentration check on interior ranks: the normalized depth must stay
    // below the fraction of strictly smaller depths.
    report.interior_ok.reserve(static_cast<std::size_t>(std::max(0, K - 2)));
    for (int k = 2; k <= K - 1; ++k) {
        const double r_k = report.r[static_cast<std::size_t>(k - 1)];
        const auto below = std::count_if(report.r.begin(), report.r.end(),
                                         [&](double r) { return r < r_k; });
        const double gamma = static_cast<double>(below) / static_cast<double>(K - 1);
        const bool ok = (r_k - r_min) / (r_max - r_min) < gamma;
        report.interior_ok.push_back(ok);
        report.ok = report.ok && ok;
    }
    return report;
}

McReport monte_carlo_validate(const TailModel& model, double p0_max, const std::vector<int>& k_list,
                              const std::vector<double>& c_list, int n_trials,
                              std::uint64_t seed) {
    model.validate();
    if (n_trials < 1000)
        throw Error(errc::config_error, "Monte Carlo validation needs at least 1000 trials");
    if (k_list.empty())
        throw Error(errc::config_error, "Monte Carlo validation needs at least one budget");
    int k_need = 0;
    for (int k : k_list) {
        check_budget_range(k, model.T_L - 1, "curtailment budget");
        k_need = std::max(k_need, k);
    }
    for (double c : c_list) check_threshold(c);

    // Per trial the capacity under budget K is p0_max minus the (K+1)-th
    // largest draw, so one descending partial sort serves every K at once.
    const auto nk = k_list.size(), nc = c_list.size();
    std::vector<double> cap_sum(nk, 0.0), cap_sumsq(nk, 0.0);
    std::vector<long> exceed_count(nk * nc, 0);
    std::vector<double> draws(static_cast<std::size_t>(model.T_L));
    for (int trial = 0; trial < n_trials; ++trial) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(trial)));
        for (auto& x : draws) x = model.quantile(uniform01(rng));
        std::partial_sort(draws.begin(), draws.begin() + k_need + 1, draws.end(),
                          std::greater<double>());
        for (std::size_t i = 0; i < nk; ++i) {
            const double cap = p0_max - draws[static_cast<std::size_t>(k_list[i])];
            cap_sum[i] += cap;
            cap_sumsq[i] += cap * cap;
            for (std::size_t j = 0; j < nc; ++j)
                if (cap > c_list[j]) ++exceed_count[i * nc + j];
        }
    }

    McReport report;
    report.n_trials = n_trials;
    for (std::size_t i = 0; i < nk; ++i) {
        McCurve curve;
        curve.k = k_list[i];
        curve.mc_mean = cap_sum[i] / n_trials;
        const double var = std::max(0.0, cap_sumsq[i] / n_trials - curve.mc_mean * curve.mc_mean);
        curve.mc_stderr = std::sqrt(var / n_trials);
        curve.expected_weibull =
            expected_capacity(model, k_list[i], p0_max, ExpectationVariant::weibull);
        report.curves.push_back(curve);
        for (std::size_t j = 0; j < nc; ++j) {
            McCell cell;
            cell.k = k_list[i];
            cell.c = c_list[j];
            cell.exact = exact_tail_prob(model, cell.k, cell.c, p0_max);
            cell.poisson = poisson_tail_prob(model, cell.k, cell.c, p0_max);
            cell.empirical = static_cast<double>(exceed_count[i * nc + j]) / n_trials;
            cell.sigma = std::sqrt(cell.exact * (1.0 - cell.exact) / n_trials);
            cell.within_3sigma = std::abs(cell.empirical - cell.exact) <= 3.0 * cell.sigma + 1e-12;
            report.all_within_3sigma = report.all_within_3sigma && cell.within_3sigma;
            report.cells.push_back(cell);
        }
    }
    return report;
}

} // namespace flexhca
