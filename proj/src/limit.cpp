#include "birc/limit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "birc/error.hpp"
#include "birc/numeric.hpp"
#include "birc/stats.hpp"
#include "birc/traps.hpp"

namespace birc {

namespace {

constexpr double kPi = std::numbers::pi;

void check_alpha(double alpha, const char* who) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument(std::string(who) + ": alpha must lie in (0,1)");
  }
}

template <class F>
double integrate(F f, double a, double b) {
  if (b <= a) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14, &err);
}

// One grid cell with no kink inside: a couple of refinements suffice.
template <class F>
double integrate_cell(F f, double a, double b) {
  if (b <= a) return 0.0;
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 2, 1e-13, &err);
}

}  // namespace

double stable_increment(double alpha, double du, Rng& rng) {
  check_alpha(alpha, "stable_increment");
  if (!(du > 0.0)) throw std::invalid_argument("stable_increment: du must be > 0");
  // Kanter's representation of the positive stable law with Laplace transform exp(-t^alpha).
  const double u = kPi * uniform_open(rng);
  const double e = -std::log(uniform_open(rng));
  const double s = std::sin(alpha * u) / std::pow(std::sin(u), 1.0 / alpha) *
                   std::pow(std::sin((1.0 - alpha) * u) / e, (1.0 - alpha) / alpha);
  return std::pow(du, 1.0 / alpha) * s;
}

std::vector<double> subordinator_path(double alpha, const std::vector<double>& grid, Rng& rng) {
  std::vector<double> path;
  path.reserve(grid.size());
  double prev = 0.0, level = 0.0;
  for (double u : grid) {
    if (!(u > prev && u <= 1.0)) {
      throw std::invalid_argument("subordinator_path: grid must be increasing in (0,1]");
    }
    level += stable_increment(alpha, u - prev, rng);
    path.push_back(level);
    prev = u;
  }
  return path;
}

double inverse_marginal(double alpha, double u, Rng& rng) {
  if (!(u > 0.0)) throw std::invalid_argument("inverse_marginal: u must be > 0");
  return std::pow(u, alpha) * std::pow(stable_increment(alpha, 1.0, rng), -alpha);
}

double arcsine_aging(double alpha, double h) {
  check_alpha(alpha, "arcsine_aging");
  if (!(h >= 1.0)) throw std::invalid_argument("arcsine_aging: need h >= 1");
  if (std::isinf(h)) return 0.0;
  const double b = 1.0 / h;
  // Near 0, z = y^alpha removes the y^{alpha-1} singularity.
  const double b1 = std::min(b, 0.5);
  double total = integrate(
      [&](double z) { return std::pow(1.0 - std::pow(z, 1.0 / alpha), -alpha) / alpha; }, 0.0,
      std::pow(b1, alpha));
  if (b > 0.5) {
    // Near 1, w = (1-y)^{1-alpha} removes the (1-y)^{-alpha} singularity.
    total += integrate(
        [&](double w) {
          const double y = 1.0 - std::pow(w, 1.0 / (1.0 - alpha));
          return std::pow(y, alpha - 1.0) / (1.0 - alpha);
        },
        std::pow(1.0 - b, 1.0 - alpha), std::pow(0.5, 1.0 - alpha));
  }
  return std::sin(kPi * alpha) / kPi * total;
}

double theorem_constant(double alpha, double e_zeta_alpha) {
  check_alpha(alpha, "theorem_constant");
  return std::pow(kPi * alpha * e_zeta_alpha / std::sin(kPi * alpha), 1.0 / alpha);
}

double front_factor(double alpha, double e_zeta_alpha) {
  check_alpha(alpha, "front_factor");
  return std::sin(kPi * alpha) / (kPi * alpha * e_zeta_alpha);
}

SizeBiasedSampler::SizeBiasedSampler(const ConductanceLaw& law, double a, bool reciprocal) {
  if (!(a > 0.0)) throw std::invalid_argument("SizeBiasedSampler: exponent must be > 0");
  const double m = law.moment(reciprocal ? -a : a);
  if (!std::isfinite(m)) {
    throw NumericError("SizeBiasedSampler: the biasing moment is infinite for this law");
  }
  norm_ = m;
  // Distribution of Y on either scale; right-continuous CDF and survival.
  auto cdf = [&](double y) {
    return reciprocal ? 1.0 - law.prob_less(1.0 / y) : 1.0 - law.prob_greater(y);
  };
  auto surv = [&](double y) {
    return reciprocal ? law.prob_less(1.0 / y) : law.prob_greater(y);
  };
  const TailSpec& heavy = reciprocal ? law.lower() : law.upper();
  const bool heavy_present = reciprocal ? law.p_upper() < 1.0 : law.p_upper() > 0.0;

  // Range: below y_lo the weighted mass is under 1e-16 of the total; above
  // y_hi the Pareto continuation takes over.
  const double y_lo = std::pow(1e-16 * norm_, 1.0 / a);
  double y_hi = reciprocal ? 1.0 / law.body_low() : law.body_high();
  if (heavy_present) {
    while (y_hi < 1e250 && std::pow(y_hi, a) * surv(y_hi) > 1e-13 * norm_) y_hi *= 4.0;
  }
  y_hi = std::max(y_hi, y_lo * 4.0);
  tail_exponent_ = heavy_present ? std::max(heavy.alpha() - a, 0.05) : 1.0;

  constexpr int kGrid = 4096;
  std::vector<double> ly;
  ly.reserve(kGrid + 8);
  const double l0 = std::log(y_lo), l1 = std::log(y_hi);
  for (int i = 0; i < kGrid; ++i) ly.push_back(l0 + (l1 - l0) * i / (kGrid - 1));
  for (double y : {law.body_low(), law.body_high()}) {
    const double v = std::log(reciprocal ? 1.0 / y : y);
    if (v > l0 && v < l1) ly.push_back(v);
  }
  std::sort(ly.begin(), ly.end());
  ly.erase(std::unique(ly.begin(), ly.end()), ly.end());

  log_y_ = ly;
  cum_.assign(ly.size(), 0.0);
  CompensatedSum acc;
  for (std::size_t k = 1; k < ly.size(); ++k) {
    const double lo = std::exp(ly[k - 1]), hi = std::exp(ly[k]);
    double inc;
    if (hi <= 1.0) {
      inc = std::pow(hi, a) * cdf(hi) - std::pow(lo, a) * cdf(lo) -
            integrate_cell([&](double y) { return a * std::pow(y, a - 1.0) * cdf(y); }, lo, hi);
    } else {
      inc = std::pow(lo, a) * surv(lo) - std::pow(hi, a) * surv(hi) +
            integrate_cell([&](double y) { return a * std::pow(y, a - 1.0) * surv(y); }, lo, hi);
    }
    acc += std::max(inc, 0.0);
    cum_[k] = acc.value();
  }
  norm_ = std::max(norm_, cum_.back());
}

double SizeBiasedSampler::draw(double u) const {
  const double target = u * norm_;
  if (target <= cum_.back()) {
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), target);
    const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - cum_.begin()));
    const double width = cum_[k] - cum_[k - 1];
    const double frac = width > 0.0 ? (target - cum_[k - 1]) / width : 1.0;
    return std::exp(log_y_[k - 1] + frac * (log_y_[k] - log_y_[k - 1]));
  }
  const double rest = norm_ - cum_.back();
  const double e = std::clamp((target - cum_.back()) / rest, 0.0, 1.0 - 1e-16);
  return std::exp(log_y_.back()) * std::pow(1.0 - e, -1.0 / tail_exponent_);
}

ZetaLaw::ZetaLaw(const ConductanceLaw& law, double lambda, ZetaIndexing indexing)
    : regime_(law.regime()), alpha_(law.alpha()), lambda_(lambda), indexing_(indexing), law_(law) {
  if (!(lambda > 0.0)) throw ConstructionError("ZetaLaw: lambda must be > 0");
  if (regime_ == Regime::WellAndWalls) {
    q_ = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  q_ = limiting_well_weight(law);
  if (q_ > 0.0) well_right_ = std::make_shared<SizeBiasedSampler>(law, alpha_, true);
  if (q_ < 1.0) wall_left_ = std::make_shared<SizeBiasedSampler>(law, alpha_, false);
}

ZetaLaw ZetaLaw::point_mass(double c, double lambda, double q, double alpha,
                            ZetaIndexing indexing) {
  if (!(c > 0.0)) throw ConstructionError("ZetaLaw::point_mass: c must be > 0");
  if (!(q >= 0.0 && q <= 1.0)) throw ConstructionError("ZetaLaw::point_mass: q must lie in [0,1]");
  if (!(lambda > 0.0)) throw ConstructionError("ZetaLaw: lambda must be > 0");
  ZetaLaw z;
  z.regime_ = Regime::SimpleTraps;
  z.q_ = q;
  z.alpha_ = alpha;
  z.lambda_ = lambda;
  z.indexing_ = indexing;
  z.point_c_ = c;
  return z;
}

double ZetaLaw::conductance(std::uint64_t stream, std::int64_t site) const {
  if (!law_) return point_c_;
  return law_->draw(counter_uniform(stream, site, 0), counter_uniform(stream, site, 1));
}

double ZetaLaw::series(std::uint64_t stream, bool v_series, int depth_multiplier) const {
  // V = sum_{j>=1} e^{-lambda(j+s)} / c_j and W = sum_{j>=2} e^{-lambda(j+s)} c_{-j}.
  const bool printed = indexing_ == ZetaIndexing::AsPrinted;
  const double offset = printed ? 1.0 : (v_series ? 0.0 : -1.0);
  const double decay = std::exp(-lambda_);
  const auto base_depth =
      static_cast<std::int64_t>(std::ceil((std::log(1e12) - std::log1p(-decay)) / lambda_)) + 2;
  const std::int64_t depth = base_depth * std::max(1, depth_multiplier);
  CompensatedSum sum;
  double largest = 0.0;
  for (std::int64_t j = v_series ? 1 : 2; j < 10'000'000; ++j) {
    const double c = conductance(stream, v_series ? j : -j);
    const double y = v_series ? 1.0 / c : c;
    sum += std::exp(-lambda_ * (static_cast<double>(j) + offset)) * y;
    largest = std::max(largest, y);
    if (j >= depth) {
      const double bound =
          std::exp(-lambda_ * (static_cast<double>(j + 1) + offset)) * largest / (1.0 - decay);
      if (bound <= 1e-12 * sum.value()) break;
    }
  }
  return sum.value();
}

double ZetaLaw::sample(std::uint64_t seed, std::uint64_t index, int depth_multiplier) const {
  if (regime_ == Regime::WellAndWalls) return 2.0;
  const std::uint64_t stream = stream_seed(seed, index, Stream::Zeta);
  const bool well = counter_uniform(stream, 0, 2) < q_;
  const double u = counter_uniform(stream, 0, 3);
  if (well) {
    const double c0 = law_ ? 1.0 / well_right_->draw(u) : point_c_;
    return 2.0 * (1.0 + c0 * series(stream, true, depth_multiplier));
  }
  const double c_left = law_ ? wall_left_->draw(u) : point_c_;
  return 2.0 * (1.0 + series(stream, false, depth_multiplier) / c_left);
}

ZetaMoment e_zeta_alpha(const ZetaLaw& law, std::size_t n_samples, std::uint64_t seed) {
  const double alpha = law.alpha();
  if (law.regime() == Regime::WellAndWalls) {
    return {std::pow(2.0, alpha), 0.0, std::numeric_limits<double>::infinity()};
  }
  if (n_samples < 10000) throw std::invalid_argument("e_zeta_alpha: need at least 1e4 samples");
  std::vector<double> zeta(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) zeta[i] = law.sample(seed, i);
  CompensatedSum s, sq;
  for (double z : zeta) s += std::pow(z, alpha);
  const double mean = s.value() / static_cast<double>(n_samples);
  for (double z : zeta) sq += (std::pow(z, alpha) - mean) * (std::pow(z, alpha) - mean);
  const double var = sq.value() / static_cast<double>(n_samples - 1);
  const auto k = std::max<std::size_t>(10, n_samples / 100);
  return {mean, std::sqrt(var / static_cast<double>(n_samples)), hill_estimator(zeta, k).index};
}

}  // namespace birc
