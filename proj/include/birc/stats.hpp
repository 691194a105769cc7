#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "birc/env.hpp"
#include "birc/walk.hpp"

namespace birc {

struct KsResult {
  double statistic;
  double p_value;
  bool permutation;  // p-value from a permutation test rather than the asymptotic law
};

// Kolmogorov survival function Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_q(double x);

inline constexpr std::size_t kPermutationThreshold = 50;
inline constexpr std::size_t kPermutations = 2000;

// Two-sample KS. Below 50 points in the smaller sample, the p-value comes
// from 2000 label permutations with a fixed seed.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);
KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf);

struct HillResult {
  double index;  // k / sum log(x_(i) / x_(k+1))
  double gamma;  // reciprocal
};

HillResult hill_estimator(std::span<const double> sample, std::size_t k);

struct SlopeFit {
  double slope;
  double intercept;
  double std_error;
};

// Least squares of log value on log n.
SlopeFit loglog_slope(std::span<const std::pair<double, double>> pairs);

struct SampleSummary {
  std::size_t n;
  double mean;
  double variance;
  std::vector<double> probs;
  std::vector<double> quantiles;
  std::optional<HillResult> hill;
  std::optional<std::size_t> hill_k;
};

SampleSummary summarize(std::span<const double> sample, const std::vector<double>& probs,
                        std::optional<std::size_t> hill_k = std::nullopt);

// Empirical quantile by linear interpolation of order statistics.
double quantile(std::vector<double> sample, double p);

// Positions of one walk at given times.
struct Trajectory {
  Engine engine = Engine::Direct;
  std::vector<std::uint64_t> times;
  std::vector<std::int64_t> positions;
};

// Fraction of trajectories with |X_{floor(h n)} - X_n| <= j_window.
double aging_estimator(std::span<const Trajectory> paths, std::uint64_t n, double h,
                       std::int64_t j_window);

struct PppReport {
  std::size_t environments;
  std::size_t total_points;
  double mean_count;
  double expected_mean;  // eps^-alpha
  double dispersion;     // sample variance / mean of the counts
  double dispersion_lo;  // 95% interval for the dispersion under a chi-square model
  double dispersion_hi;
  double uniformity_chi2;
  double uniformity_p;
  std::size_t bins;
};

// positions[e] holds the rescaled positions in [0,1] of the deep traps found
// in environment e.
PppReport exceedance_ppp_check(const std::vector<std::vector<double>>& positions, double eps,
                               double alpha, std::size_t bins = 10);

struct TrapTypeRow {
  double m;
  double well_fraction;  // c_{-1} > M
  double wall_fraction;  // 1/c_0 > M
  double both_fraction;
  double q_hat;          // well / (well + wall)
};

struct TrapTypeReport {
  std::size_t draws;
  std::size_t exceedances;
  double threshold;
  std::vector<TrapTypeRow> rows;
};

inline constexpr std::size_t kMinExceedances = 200;

// Among i.i.d. pairs (c_{-1}, c_0) with rho_0 > t, how often each conductance is large.
TrapTypeReport trap_type_frequencies(const ConductanceLaw& law, double lambda, double t_threshold,
                                     std::size_t n_samples, std::uint64_t seed,
                                     const std::vector<double>& m_grid);

}  // namespace birc
