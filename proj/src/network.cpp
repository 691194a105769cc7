#include "birc/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "birc/error.hpp"
#include "birc/numeric.hpp"

namespace birc {

namespace {

// sum_{l=a}^{b} exp(-lambda (l - ref)) / c_l
double shifted_series(const Environment& env, std::int64_t a, std::int64_t b, std::int64_t ref) {
  CompensatedSum s;
  const double lambda = env.lambda();
  for (std::int64_t l = a; l <= b; ++l) {
    s += std::exp(-lambda * static_cast<double>(l - ref)) / env.c(l);
  }
  return s.value();
}

// s(z) = sum_{l=z}^{end-1} exp(-lambda (l - z)) / c_l for z in [from, end], s(end) = 0.
std::vector<double> tail_series(const Environment& env, std::int64_t from, std::int64_t end) {
  std::vector<double> s(static_cast<std::size_t>(end - from + 1), 0.0);
  const double decay = std::exp(-env.lambda());
  for (std::int64_t z = end - 1; z >= from; --z) {
    const auto k = static_cast<std::size_t>(z - from);
    s[k] = 1.0 / env.c(z) + decay * s[k + 1];
  }
  return s;
}

}  // namespace

double series_sum(const Environment& env, std::int64_t i, std::int64_t j) {
  if (j == i - 1) return 0.0;
  if (j < i) throw std::invalid_argument("series_sum: need i <= j + 1");
  env.require(i, j, "series_sum");
  CompensatedSum s;
  for (std::int64_t l = i; l <= j; ++l) {
    s += std::exp(-env.lambda() * static_cast<double>(l)) / env.c(l);
  }
  return s.value();
}

double hit_prob(const Environment& env, std::int64_t x, std::int64_t i, std::int64_t j) {
  if (!(i < x && x < j)) throw std::invalid_argument("hit_prob: need i < x < j");
  env.require(i, j - 1, "hit_prob");
  const double num = shifted_series(env, x, j - 1, i);
  const double den = shifted_series(env, i, j - 1, i);
  return num / den;
}

HitTime expected_hit_time(const Environment& env, std::int64_t x, std::int64_t y,
                          std::optional<std::int64_t> left_floor) {
  if (!(env.lambda() > 0.0)) {
    throw UnsupportedError("expected_hit_time: lambda <= 0 gives an infinite expectation");
  }
  if (!(x < y)) throw std::invalid_argument("expected_hit_time: need x < y");
  const std::int64_t floor = left_floor.value_or(env.left());
  if (floor > x) throw std::invalid_argument("expected_hit_time: left floor right of start");
  env.require(floor, y - 1, "expected_hit_time");

  const double decay = std::exp(-env.lambda());
  const auto s = tail_series(env, x, y);
  auto w = [&](std::int64_t z) {
    const double left_c = z > floor ? env.c(z - 1) : 0.0;
    return left_c * decay + env.c(z);
  };

  // a(x) = sum_{floor <= z <= x} w(z) exp(-lambda (x - z))
  double a = 0.0;
  double c_max = 0.0;
  for (std::int64_t z = floor; z <= x; ++z) {
    a = decay * a + w(z);
    c_max = std::max(c_max, env.c(z));
  }
  CompensatedSum total;
  total += s[0] * a;
  for (std::int64_t z = x + 1; z < y; ++z) {
    total += w(z) * s[static_cast<std::size_t>(z - x)];
  }
  const double value = total.value();
  // Sites below the floor: w(z) <= 2 c_max each, geometric weights from x - floor + 1 on.
  const double tail =
      2.0 * c_max * s[0] * std::exp(-env.lambda() * static_cast<double>(x - floor + 1)) /
      (1.0 - decay);
  return {value, tail, tail <= 1e-12 * value};
}

double killed_expected_hit_time(const Environment& env, std::int64_t x, std::int64_t y,
                                std::int64_t v) {
  if (!(y < x && x < v)) throw std::invalid_argument("killed_expected_hit_time: need y < x < v");
  env.require(y, v - 1, "killed_expected_hit_time");
  const double lambda = env.lambda();
  const double decay = std::exp(-lambda);

  // s_v(z) = sum_{l=z}^{v-1} exp(-lambda (l - z)) / c_l; prefix(z) = sigma(y, z-1).
  const auto sv = tail_series(env, y, v);
  auto s_at = [&](std::int64_t z) { return sv[static_cast<std::size_t>(z - y)]; };
  std::vector<double> prefix(static_cast<std::size_t>(x - y + 1), 0.0);
  {
    CompensatedSum p;
    for (std::int64_t l = y; l < x; ++l) {
      p += std::exp(-lambda * static_cast<double>(l - y)) / env.c(l);
      prefix[static_cast<std::size_t>(l - y + 1)] = p.value();
    }
  }
  const double sigma1 = prefix.back();
  const double shift = lambda * static_cast<double>(x - y);
  auto w = [&](std::int64_t z) { return env.c(z - 1) * decay + env.c(z); };

  // Left branch y < z <= x and right branch x < z < v, each normalised by the
  // effective conductance between x and {y, v}.
  const double d_left = 1.0 / sigma1 + std::exp(shift) / s_at(x);
  const double k_right = s_at(x) * std::exp(-shift) / sigma1 + 1.0;
  CompensatedSum total;
  for (std::int64_t z = y + 1; z <= x; ++z) {
    const double reach = prefix[static_cast<std::size_t>(z - y)] / sigma1;
    total += w(z) * s_at(z) * reach / (s_at(y) * d_left);
  }
  for (std::int64_t z = x + 1; z < v; ++z) {
    const double sz = s_at(z);
    total += w(z) * sz * sz * std::exp(-lambda * static_cast<double>(z - y)) / (k_right * s_at(y));
  }
  return total.value();
}

double escape_prob(const Environment& env, std::int64_t x, std::int64_t horizon) {
  if (horizon < 1) throw std::invalid_argument("escape_prob: horizon must be >= 1");
  env.require(x, x + horizon, "escape_prob");
  CompensatedSum s;
  for (std::int64_t j = 1; j < horizon; ++j) {
    s += std::exp(-env.lambda() * static_cast<double>(j)) / env.c(x + j);
  }
  return 1.0 / (1.0 + env.c(x) * s.value());
}

double theta(const Environment& env, std::int64_t x, std::int64_t horizon) {
  if (horizon < 1) throw std::invalid_argument("theta: horizon must be >= 1");
  env.require(x - horizon, x, "theta");
  CompensatedSum s;
  for (std::int64_t l = x - horizon; l <= x - 2; ++l) {
    s += env.c(l) * std::exp(-env.lambda() * static_cast<double>(x - 1 - l));
  }
  return 2.0 + 2.0 * s.value() / env.c(x - 1);
}

OracleSolution oracle_solve(const WindowChain& chain, OracleKind kind) {
  const auto& env = chain.env;
  const std::int64_t i = chain.i, j = chain.j;
  if (!(i < j)) throw std::invalid_argument("oracle_solve: need i < j");
  if (j - i + 1 > kMaxOracleLength) throw ResourceError("oracle_solve: chain longer than 1e5");
  env.require(i, j, "oracle_solve");
  const auto n = static_cast<std::size_t>(j - i + 1);

  // Row k: lo[k] u[k-1] + di[k] u[k] + up[k] u[k+1] = rhs[k].
  std::vector<double> lo(n, 0.0), di(n, 1.0), up(n, 0.0), rhs(n, 0.0);
  std::vector<double> killed_h;
  if (kind == OracleKind::KilledMeanTime) {
    killed_h = oracle_solve({env, i, j}, OracleKind::HitProb).values;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double om = env.omega(i + static_cast<std::int64_t>(k));
    lo[k] = -(1.0 - om);
    up[k] = -om;
    switch (kind) {
      case OracleKind::HitProb: rhs[k] = 0.0; break;
      case OracleKind::MeanTime: rhs[k] = 1.0; break;
      case OracleKind::KilledMeanTime: rhs[k] = killed_h[k]; break;
    }
  }
  switch (kind) {
    case OracleKind::HitProb: rhs[0] = 1.0; break;
    case OracleKind::MeanTime:
      up[0] = -1.0;
      rhs[0] = 1.0;
      break;
    case OracleKind::KilledMeanTime: break;
  }

  // Thomas elimination.
  std::vector<double> cp(n, 0.0), dp(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double denom = di[k] - (k > 0 ? lo[k] * cp[k - 1] : 0.0);
    if (denom == 0.0 || !std::isfinite(denom)) {
      throw NumericError("oracle_solve: zero pivot at site " +
                         std::to_string(i + static_cast<std::int64_t>(k)));
    }
    cp[k] = up[k] / denom;
    dp[k] = (rhs[k] - (k > 0 ? lo[k] * dp[k - 1] : 0.0)) / denom;
  }
  std::vector<double> u(n);
  u[n - 1] = dp[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) u[k] = dp[k] - cp[k] * u[k + 1];

  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = k > 0 ? lo[k] * u[k - 1] : 0.0;
    const double b = di[k] * u[k];
    const double c = k + 1 < n ? up[k] * u[k + 1] : 0.0;
    const double scale = std::fabs(a) + std::fabs(b) + std::fabs(c) + std::fabs(rhs[k]);
    if (scale > 0.0) worst = std::max(worst, std::fabs(a + b + c - rhs[k]) / scale);
  }
  return {std::move(u), worst};
}

}  // namespace birc
