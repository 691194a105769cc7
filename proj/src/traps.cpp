#include "birc/traps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

#include "birc/error.hpp"

namespace birc {

namespace {

// The pieces of psi that do not depend on t, computed once per law.
struct PsiTerms {
  Regime regime;
  double alpha;
  double prefactor;  // e^{-lambda alpha}
  // Simple-trap regime: wall term E[c^a] L_0(t) t^{a - a_0}, well term E[1/c^a] L_inf(t) t^{a - a_inf}.
  bool has_wall = false;
  bool has_well = false;
  double wall_moment = 0.0;
  double well_moment = 0.0;
  // Well-and-wall regime: alpha B(1 + g_0, 1 + g_inf) with B normalised by Gamma(2 + g_0 + g_inf).
  double beta_factor = 0.0;
  const ConductanceLaw* law;

  double wall(double t) const {
    return has_wall ? wall_moment * law->slowly_varying_zero(t) *
                          std::pow(t, alpha - law->alpha_zero())
                    : 0.0;
  }
  double well(double t) const {
    return has_well ? well_moment * law->slowly_varying_infinity(t) *
                          std::pow(t, alpha - law->alpha_infinity())
                    : 0.0;
  }
  double operator()(double t) const {
    if (regime == Regime::SimpleTraps) return prefactor * (wall(t) + well(t));
    return prefactor * beta_factor * std::log(t) * law->slowly_varying_zero(t) *
           law->slowly_varying_infinity(t);
  }
};

PsiTerms psi_terms(const ConductanceLaw& law, double lambda) {
  PsiTerms p;
  p.regime = law.regime();
  p.alpha = law.alpha();
  p.prefactor = std::exp(-lambda * p.alpha);
  p.law = &law;
  if (p.regime == Regime::SimpleTraps) {
    p.has_wall = law.p_upper() < 1.0 && law.moment_finite(p.alpha);
    p.has_well = law.p_upper() > 0.0 && law.moment_finite(-p.alpha);
    if (p.has_wall) p.wall_moment = law.moment(p.alpha);
    if (p.has_well) p.well_moment = law.moment(-p.alpha);
  } else {
    const double g0 = law.lower().gamma(), gi = law.upper().gamma();
    p.beta_factor = p.alpha * std::exp(std::lgamma(1.0 + g0) + std::lgamma(1.0 + gi) -
                                       std::lgamma(2.0 + g0 + gi));
  }
  return p;
}

double tail_floor(const ConductanceLaw& law) {
  double t = std::exp(1.0);
  if (law.p_upper() > 0.0) t = std::max(t, law.upper().t_min());
  if (law.p_upper() < 1.0) t = std::max(t, law.lower().t_min());
  return t;
}

}  // namespace

double psi_asymptotic(const ConductanceLaw& law, double lambda, double t) {
  if (!(t > 1.0)) throw std::invalid_argument("psi_asymptotic: need t > 1");
  return psi_terms(law, lambda)(t);
}

double well_weight(const ConductanceLaw& law, double t) {
  if (law.regime() != Regime::SimpleTraps) return std::numeric_limits<double>::quiet_NaN();
  const auto p = psi_terms(law, 0.0);
  const double a = p.wall(t), b = p.well(t);
  return b / (a + b);
}

double limiting_well_weight(const ConductanceLaw& law) {
  if (law.regime() != Regime::SimpleTraps) return std::numeric_limits<double>::quiet_NaN();
  const auto p = psi_terms(law, 0.0);
  if (!p.has_wall) return 1.0;
  if (!p.has_well) return 0.0;
  const double a0 = law.alpha_zero(), ai = law.alpha_infinity();
  if (a0 < ai) return 0.0;
  if (ai < a0) return 1.0;
  const double g0 = law.lower().gamma(), gi = law.upper().gamma();
  if (g0 > gi) return 0.0;
  if (gi > g0) return 1.0;
  return well_weight(law, std::exp(1.0));
}

double solve_dn(const std::function<double(double)>& psi, double alpha, double n, double t_lo) {
  if (!(alpha > 0.0)) throw std::invalid_argument("solve_dn: alpha must be > 0");
  if (!(n >= 10.0)) throw std::invalid_argument("solve_dn: need n >= 10");
  const double v_lo = std::log(t_lo);
  const double v_hi = std::log(10.0) * 3.0 / alpha + std::log(n) * 2.0 / alpha;
  const double log_n = std::log(n);
  auto g = [&](double v) {
    const double p = psi(std::exp(v));
    if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
    return std::log(p) - alpha * v + log_n;
  };

  constexpr int kGrid = 4000;
  double best_v = v_lo, best_g = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kGrid; ++i) {
    const double v = v_lo + (v_hi - v_lo) * i / kGrid;
    const double gv = g(v);
    if (gv > best_g) {
      best_g = gv;
      best_v = v;
    }
  }
  if (!(best_g >= 0.0)) {
    throw NumericError("solve_dn: psi(t) t^-alpha n stays below 1 on the bracket");
  }
  if (g(v_hi) >= 0.0) throw NumericError("solve_dn: no sign change before the upper bracket");
  double lo = best_v, hi = v_hi;
  for (int it = 0; it < 300 && hi - lo > 1e-15 * std::max(1.0, std::fabs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) >= 0.0 ? lo : hi) = mid;
  }
  const double d = std::exp(0.5 * (lo + hi));
  const double residual = std::fabs(psi(d) * std::pow(d, -alpha) * n - 1.0);
  if (!(residual <= 1e-9)) {
    std::ostringstream os;
    os << "solve_dn: residual " << residual << " above 1e-9";
    throw NumericError(os.str());
  }
  return d;
}

BlockPlan block_partition(double n, double big_c) {
  if (!(n >= std::exp(1.0))) throw std::invalid_argument("block_partition: need n >= e");
  if (!(big_c > 0.0)) throw std::invalid_argument("block_partition: big_c must be > 0");
  BlockPlan plan;
  plan.c_n = static_cast<std::int64_t>(std::ceil(big_c * std::log(n)));
  plan.k_n = static_cast<std::int64_t>(std::ceil(n / static_cast<double>(plan.c_n)));
  return plan;
}

double LimitParams::trap_threshold() const { return d_n * std::exp(-q_n); }
double LimitParams::k_bound() const { return 6.0 / lambda * q_n; }

LimitParams make_limit_params(const ConductanceLaw& law, double lambda, double n,
                              std::optional<double> big_c) {
  if (!(lambda > 0.0)) throw ConstructionError("make_limit_params: lambda must be > 0");
  LimitParams p;
  p.n = n;
  p.alpha = law.alpha();
  p.lambda = lambda;
  p.regime = law.regime();
  auto law_copy = std::make_shared<ConductanceLaw>(law);
  auto cached = std::make_shared<PsiTerms>(psi_terms(*law_copy, lambda));
  p.psi = [law_copy, cached](double t) { return (*cached)(t); };
  p.d_n = solve_dn(p.psi, p.alpha, n, tail_floor(law));
  p.q_n = std::pow(std::log(n), 0.25);
  p.big_c = big_c.value_or(default_big_c(p.alpha, lambda));
  p.blocks = block_partition(n, p.big_c);
  return p;
}

const char* to_string(TrapKind k) {
  switch (k) {
    case TrapKind::Well: return "well";
    case TrapKind::Wall: return "wall";
    case TrapKind::WellAndWall: return "well_and_wall";
  }
  return "?";
}

bool in_good_triblock(const Environment& env, const LimitParams& params, std::int64_t x,
                      std::int64_t k, bool simple) {
  const double lo_b = std::exp(-4.0 * params.q_n), hi_b = std::exp(4.0 * params.q_n);
  if (simple && (env.c(x) > hi_b || env.c(x - 1) < lo_b)) return false;
  auto [a, b] = params.blocks.triblock(params.blocks.block_of(x));
  a = std::max(a, env.left());
  b = std::min(b, env.right());
  for (std::int64_t y = a; y <= b; ++y) {
    if (y == x - 1 || y == x + k) continue;
    const double c = env.c(y);
    if (c < lo_b || c > hi_b) return false;
  }
  return true;
}

namespace {

ScanRange resolve_range(const Environment& env, const LimitParams& params,
                        std::optional<ScanRange> range) {
  const ScanRange r = range.value_or(ScanRange{0, static_cast<std::int64_t>(params.n) - 1});
  if (r.lo > r.hi) throw std::invalid_argument("scan range is empty");
  env.require(r.lo - 1, r.hi, "detect_traps");
  return r;
}

double rho_k_fast(const Environment& env, std::span<const double> c, std::int64_t x,
                  std::int64_t k) {
  const auto i = static_cast<std::size_t>(x - env.left());
  return std::exp(-env.lambda() * static_cast<double>(k + 1)) * c[i - 1] /
         c[i + static_cast<std::size_t>(k)];
}

}  // namespace

std::vector<TrapRecord> detect_traps(const Environment& env, const LimitParams& params,
                                     std::int64_t k_max, std::optional<ScanRange> range) {
  if (k_max < 0) throw std::invalid_argument("detect_traps: k_max must be >= 0");
  const ScanRange r = resolve_range(env, params, range);
  const auto c = env.conductances();
  const double threshold = params.trap_threshold();
  std::vector<TrapRecord> out;

  if (params.regime == Regime::SimpleTraps) {
    const double sub = params.d_n * std::exp(-params.q_n * params.q_n);
    for (std::int64_t x = r.lo; x <= r.hi; ++x) {
      const double rho = rho_k_fast(env, c, x, 0);
      if (!(rho > threshold)) continue;
      const double left_c = env.c(x - 1), inv_c = 1.0 / env.c(x);
      const bool well = left_c > sub, wall = inv_c > sub;
      TrapKind kind;
      if (well != wall) {
        kind = well ? TrapKind::Well : TrapKind::Wall;
      } else {
        kind = left_c >= inv_c ? TrapKind::Well : TrapKind::Wall;
      }
      out.push_back({x, kind, 0, rho, in_good_triblock(env, params, x, 0, true),
                     params.blocks.block_of(x), !well && !wall});
    }
    return out;
  }

  const double big = std::exp(params.q_n * params.q_n);
  for (std::int64_t x = r.lo; x <= r.hi; ++x) {
    if (!(env.c(x - 1) > big)) continue;
    const std::int64_t k_top = std::min(k_max, env.right() - x);
    for (std::int64_t k = 0; k <= k_top; ++k) {
      if (!(1.0 / env.c(x + k) > big)) continue;
      const double rho = rho_k_fast(env, c, x, k);
      if (!(rho > threshold)) continue;
      out.push_back({x, TrapKind::WellAndWall, k, rho, in_good_triblock(env, params, x, k, false),
                     params.blocks.block_of(x), false});
    }
  }
  return out;
}

CensusReport census(const Environment& env, const LimitParams& params, std::int64_t k_max,
                    std::optional<ScanRange> range) {
  const ScanRange r = resolve_range(env, params, range);
  const auto traps = detect_traps(env, params, k_max, r);
  const auto c = env.conductances();
  const double threshold = params.trap_threshold();
  const double big = std::exp(params.q_n * params.q_n);
  const bool simple = params.regime == Regime::SimpleTraps;

  CensusReport rep;
  rep.trap_count = static_cast<std::int64_t>(traps.size());
  rep.isolation_bound = params.n * std::exp(-5.0 * params.q_n);
  rep.depth_bound = params.d_n * std::exp(params.q_n);
  rep.k_bound = params.k_bound();

  std::set<std::int64_t> sites;
  for (const auto& t : traps) {
    sites.insert(t.x);
    rep.max_k = std::max(rep.max_k, t.k);
    rep.all_good = rep.all_good && t.in_good_triblock;
  }
  for (auto it = sites.begin(); it != sites.end() && std::next(it) != sites.end(); ++it) {
    const std::int64_t d = *std::next(it) - *it;
    rep.min_pairwise_distance = std::min(rep.min_pairwise_distance.value_or(d), d);
  }
  rep.isolation_violation =
      rep.min_pairwise_distance && static_cast<double>(*rep.min_pairwise_distance) < rep.isolation_bound;

  // Depth maximum and the count of large rho^(k) not explained by a trap.
  const double eps = std::pow(params.q_n, -kHEventDelta);
  auto is_simple_trap = [&](std::int64_t y) {
    return y > env.left() && y <= env.right() && rho_k_fast(env, c, y, 0) > threshold;
  };
  for (std::int64_t x = r.lo; x <= r.hi; ++x) {
    const std::int64_t k_top = simple ? std::min<std::int64_t>(0, env.right() - x)
                                      : std::min(k_max, env.right() - x);
    for (std::int64_t k = 0; k <= k_top; ++k) {
      rep.max_depth = std::max(rep.max_depth, rho_k_fast(env, c, x, k));
    }
    const std::int64_t h_top = std::min(k_max, env.right() - x);
    for (std::int64_t k = simple ? 1 : 0; k <= h_top; ++k) {
      const double rho = rho_k_fast(env, c, x, k);
      if (!(rho > eps * std::exp(-params.lambda * static_cast<double>(k) / 2.0) * params.d_n)) {
        continue;
      }
      bool explained;
      if (simple) {
        explained = is_simple_trap(x) || is_simple_trap(x + k);
      } else {
        explained = rho > threshold && env.c(x - 1) > big && 1.0 / env.c(x + k) > big;
      }
      if (!explained) ++rep.h_event_count;
    }
  }
  return rep;
}

}  // namespace birc
