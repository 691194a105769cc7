#include "birc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "birc/error.hpp"
#include "birc/numeric.hpp"
#include "birc/rng.hpp"

namespace birc {

double kolmogorov_q(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.18) {
    // Small-x form: 1 - sqrt(2 pi)/x sum_{k odd} exp(-k^2 pi^2 / (8 x^2)).
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double s = 0.0;
    for (int k = 1; k <= 9; k += 2) s += std::exp(-k * k * pi2 / (8.0 * x * x));
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

namespace {

double ks_distance_sorted(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double asymptotic_p(double d, double effective_n) {
  const double en = std::sqrt(effective_n);
  return kolmogorov_q((en + 0.12 + 0.11 / en) * d);
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a_in, std::span<const double> b_in) {
  if (a_in.empty() || b_in.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> a(a_in.begin(), a_in.end()), b(b_in.begin(), b_in.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double d = ks_distance_sorted(a, b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  if (std::min(a.size(), b.size()) >= kPermutationThreshold) {
    return {d, asymptotic_p(d, na * nb / (na + nb)), false};
  }
  std::vector<double> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  Rng rng(0x6b73706572ULL);
  std::size_t hits = 0;
  std::vector<double> pa(a.size()), pb(b.size());
  for (std::size_t r = 0; r < kPermutations; ++r) {
    std::shuffle(pool.begin(), pool.end(), rng);
    std::copy(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(a.size()), pa.begin());
    std::copy(pool.begin() + static_cast<std::ptrdiff_t>(a.size()), pool.end(), pb.begin());
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    if (ks_distance_sorted(pa, pb) >= d - 1e-12) ++hits;
  }
  return {d, static_cast<double>(hits + 1) / static_cast<double>(kPermutations + 1), true};
}

KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, asymptotic_p(d, n), false};
}

HillResult hill_estimator(std::span<const double> sample, std::size_t k) {
  if (k < 1 || k >= sample.size()) throw std::invalid_argument("hill_estimator: need 1 <= k < n");
  std::vector<double> x(sample.begin(), sample.end());
  for (double v : x) {
    if (!(v > 0.0)) throw std::invalid_argument("hill_estimator: sample values must be positive");
  }
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k), x.end(),
                   std::greater<>());
  const double ref = x[k];
  CompensatedSum s;
  for (std::size_t i = 0; i < k; ++i) s += std::log(x[i] / ref);
  const double gamma = s.value() / static_cast<double>(k);
  return {gamma > 0.0 ? 1.0 / gamma : std::numeric_limits<double>::infinity(), gamma};
}

SlopeFit loglog_slope(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw std::invalid_argument("loglog_slope: need at least 3 scales");
  std::vector<double> lx, ly;
  for (const auto& [n, v] : pairs) {
    if (!(n > 0.0 && v > 0.0)) throw std::invalid_argument("loglog_slope: values must be > 0");
    lx.push_back(std::log(n));
    ly.push_back(std::log(v));
  }
  const double m = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / m;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("loglog_slope: scales must differ");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - intercept - slope * lx[i];
    sse += r * r;
  }
  return {slope, intercept, std::sqrt(sse / (m - 2.0) / sxx)};
}

double quantile(std::vector<double> sample, double p) {
  if (sample.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0,1]");
  std::sort(sample.begin(), sample.end());
  const double pos = p * static_cast<double>(sample.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sample.size()) return sample.back();
  return sample[i] + (pos - static_cast<double>(i)) * (sample[i + 1] - sample[i]);
}

SampleSummary summarize(std::span<const double> sample, const std::vector<double>& probs,
                        std::optional<std::size_t> hill_k) {
  if (sample.empty()) throw std::invalid_argument("summarize: empty sample");
  SampleSummary s;
  s.n = sample.size();
  CompensatedSum sum;
  for (double v : sample) sum += v;
  s.mean = sum.value() / static_cast<double>(s.n);
  CompensatedSum sq;
  for (double v : sample) sq += (v - s.mean) * (v - s.mean);
  s.variance = s.n > 1 ? sq.value() / static_cast<double>(s.n - 1) : 0.0;
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  s.probs = probs;
  for (double p : probs) s.quantiles.push_back(quantile(sorted, p));
  if (hill_k) {
    s.hill = hill_estimator(sample, *hill_k);
    s.hill_k = hill_k;
  }
  return s;
}

double aging_estimator(std::span<const Trajectory> paths, std::uint64_t n, double h,
                       std::int64_t j_window) {
  if (!(h > 1.0)) throw std::invalid_argument("aging_estimator: need h > 1");
  if (paths.empty()) throw std::invalid_argument("aging_estimator: no trajectories");
  const auto late = static_cast<std::uint64_t>(std::floor(h * static_cast<double>(n)));
  std::size_t close = 0;
  for (const auto& p : paths) {
    if (p.engine != Engine::Direct) {
      throw UnsupportedError("aging_estimator: branching records carry no joint path law");
    }
    auto at = [&](std::uint64_t t) {
      const auto it = std::find(p.times.begin(), p.times.end(), t);
      if (it == p.times.end()) throw std::invalid_argument("aging_estimator: time not recorded");
      return p.positions[static_cast<std::size_t>(it - p.times.begin())];
    };
    const std::int64_t gap = at(late) - at(n);
    if ((gap < 0 ? -gap : gap) <= j_window) ++close;
  }
  return static_cast<double>(close) / static_cast<double>(paths.size());
}

PppReport exceedance_ppp_check(const std::vector<std::vector<double>>& positions, double eps,
                               double alpha, std::size_t bins) {
  if (positions.size() < 100) {
    throw std::invalid_argument("exceedance_ppp_check: need at least 100 environments");
  }
  if (bins < 2) throw std::invalid_argument("exceedance_ppp_check: need at least 2 bins");
  PppReport rep{};
  rep.environments = positions.size();
  rep.bins = bins;
  rep.expected_mean = std::pow(eps, -alpha);
  const double m = static_cast<double>(positions.size());
  double sum = 0.0;
  for (const auto& v : positions) sum += static_cast<double>(v.size());
  rep.mean_count = sum / m;
  double sq = 0.0;
  for (const auto& v : positions) {
    const double d = static_cast<double>(v.size()) - rep.mean_count;
    sq += d * d;
  }
  const double var = sq / (m - 1.0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.dispersion = rep.mean_count > 0.0 ? var / rep.mean_count : nan;
  const boost::math::chi_squared chi(m - 1.0);
  rep.dispersion_lo = rep.dispersion * (m - 1.0) / boost::math::quantile(chi, 0.975);
  rep.dispersion_hi = rep.dispersion * (m - 1.0) / boost::math::quantile(chi, 0.025);

  std::vector<double> counts(bins, 0.0);
  for (const auto& v : positions) {
    for (double x : v) {
      if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("exceedance_ppp_check: positions must lie in [0,1]");
      }
      const auto b = std::min(bins - 1, static_cast<std::size_t>(x * static_cast<double>(bins)));
      counts[b] += 1.0;
      ++rep.total_points;
    }
  }
  if (rep.total_points == 0) {
    rep.uniformity_chi2 = nan;
    rep.uniformity_p = nan;
    return rep;
  }
  const double expected = static_cast<double>(rep.total_points) / static_cast<double>(bins);
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  rep.uniformity_chi2 = chi2;
  rep.uniformity_p =
      boost::math::cdf(boost::math::complement(
          boost::math::chi_squared(static_cast<double>(bins - 1)), chi2));
  return rep;
}

TrapTypeReport trap_type_frequencies(const ConductanceLaw& law, double lambda, double t_threshold,
                                     std::size_t n_samples, std::uint64_t seed,
                                     const std::vector<double>& m_grid) {
  const std::uint64_t stream = stream_seed(seed, 0, Stream::Stats);
  const double shift = std::exp(-lambda);
  std::vector<std::pair<double, double>> hits;  // (c_{-1}, 1/c_0)
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto k = static_cast<std::int64_t>(2 * i);
    const double left = law.draw(counter_uniform(stream, k, 0), counter_uniform(stream, k, 1));
    const double right =
        law.draw(counter_uniform(stream, k + 1, 0), counter_uniform(stream, k + 1, 1));
    if (shift * left / right > t_threshold) hits.emplace_back(left, 1.0 / right);
  }
  if (hits.size() < kMinExceedances) {
    throw NumericError("trap_type_frequencies: only " + std::to_string(hits.size()) +
                       " exceedances; lower the threshold or draw more samples");
  }
  TrapTypeReport rep{n_samples, hits.size(), t_threshold, {}};
  const double total = static_cast<double>(hits.size());
  for (double m : m_grid) {
    double well = 0, wall = 0, both = 0;
    for (const auto& [l, r] : hits) {
      well += l > m;
      wall += r > m;
      both += (l > m && r > m);
    }
    const double q_hat = well + wall > 0 ? well / (well + wall) : std::numeric_limits<double>::quiet_NaN();
    rep.rows.push_back({m, well / total, wall / total, both / total, q_hat});
  }
  return rep;
}

}  // namespace birc
