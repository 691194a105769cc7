#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace birc {

// One regularly varying tail: P(Y > t) = min(1, k (1 + log t)^gamma t^-alpha)
// for t >= t_min. Draws below t_min never come from this tail.
class TailSpec {
 public:
  TailSpec(double alpha, double gamma, double k_scale, double t_min);

  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  double k_scale() const { return k_scale_; }
  double t_min() const { return t_min_; }

  // Survival of the tail variable; equals survival(t_min) for t < t_min.
  double survival(double t) const;
  // Probability mass carried by the tail region, survival(t_min).
  double tail_mass() const { return tail_mass_; }
  // Slowly varying part k (1 + log t)^gamma.
  double slowly_varying(double t) const;

  // t with survival(t) = u. Returns t_min when u >= tail_mass().
  double quantile(double u) const;

  // E[Y^a ; Y drawn from the tail region] for real a (may be +inf).
  double tail_moment(double a) const;
  bool tail_moment_finite(double a) const;

 private:
  double log_survival_raw(double v) const;  // v = log t, without the cap at 1

  double alpha_;
  double gamma_;
  double k_scale_;
  double t_min_;
  double tail_mass_;
};

enum class Regime { SimpleTraps, WellAndWalls };

const char* to_string(Regime r);

// Two-sided conductance law. With probability p_upper, c is drawn from the
// upper component (a tail draw from `upper`, else the body); otherwise c is
// the reciprocal of a tail draw from `lower` (else the body). The body is
// uniform on [1/lower.t_min, upper.t_min] and absorbs the mass the tails
// leave below their cutoffs.
class ConductanceLaw {
 public:
  ConductanceLaw(TailSpec upper, TailSpec lower, double p_upper, bool allow_ballistic = false);

  const TailSpec& upper() const { return upper_; }
  const TailSpec& lower() const { return lower_; }
  double p_upper() const { return p_upper_; }
  bool allow_ballistic() const { return allow_ballistic_; }
  Regime regime() const { return regime_; }

  // Tail exponents of c at +inf and of 1/c at +inf. An absent side
  // (p_upper == 0 or 1) has exponent +inf.
  double alpha_infinity() const;
  double alpha_zero() const;
  double alpha() const { return std::min(alpha_infinity(), alpha_zero()); }

  // L_inf(t) with P(c > t) = L_inf(t) t^-alpha_inf for t >= upper.t_min.
  double slowly_varying_infinity(double t) const;
  // L_0(t) with P(c < 1/t) = L_0(t) t^-alpha_0 for t >= lower.t_min.
  double slowly_varying_zero(double t) const;

  double prob_greater(double t) const;  // P(c > t)
  double prob_less(double e) const;     // P(c < e)

  // E[c^a] for real a; E[1/c^a] is moment(-a). May be +inf.
  double moment(double a) const;
  bool moment_finite(double a) const;

  double body_low() const { return 1.0 / lower_.t_min(); }
  double body_high() const { return upper_.t_min(); }

  // Deterministic map from two independent uniforms to a conductance.
  double draw(double u_component, double u_value) const;

 private:
  double body_prob_greater(double t) const;
  double body_prob_less(double e) const;
  double body_moment(double a) const;

  TailSpec upper_;
  TailSpec lower_;
  double p_upper_;
  bool allow_ballistic_;
  Regime regime_;
};

// Finite window [left, right] of conductances tilted by exp(lambda x).
// Edge (x, x+1) carries c_x.
class Environment {
 public:
  Environment(double lambda, std::int64_t left, std::vector<double> conductances,
              std::uint64_t seed = 0);

  double lambda() const { return lambda_; }
  std::int64_t left() const { return left_; }
  std::int64_t right() const { return left_ + static_cast<std::int64_t>(c_.size()) - 1; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return c_.size(); }
  bool contains(std::int64_t x) const { return x >= left_ && x <= right(); }

  double c(std::int64_t x) const;
  std::span<const double> conductances() const { return c_; }

  // c_x^lambda = exp(lambda x) c_x. Overflows for large |x|; prefer ratios.
  double tilted(std::int64_t x) const;
  // omega_x = c_x^l / (c_{x-1}^l + c_x^l), requires left < x <= right.
  double omega(std::int64_t x) const;
  double rho(std::int64_t x) const { return rho_k(x, 0); }
  // exp(-lambda (k+1)) c_{x-1} / c_{x+k}
  double rho_k(std::int64_t x, std::int64_t k) const;

  void require(std::int64_t lo, std::int64_t hi, const char* what) const;

 private:
  double lambda_;
  std::int64_t left_;
  std::vector<double> c_;
  std::uint64_t seed_;
};

inline constexpr std::size_t kMaxEnvironmentSites = std::size_t{1} << 28;

// Conductance of site x for the environment stream `seed`. Pure in (law, seed, x).
double site_conductance(const ConductanceLaw& law, std::uint64_t seed, std::int64_t x);

Environment sample_environment(const ConductanceLaw& law, double lambda, std::int64_t left,
                               std::int64_t right, std::uint64_t seed);

// Flat export: `<base>.json` header plus `<base>.csv` (one column) or
// `<base>.bin` (little-endian float64).
enum class EnvFormat { Csv, Binary };
void save_environment(const Environment& env, const std::string& base, EnvFormat format);
Environment load_environment(const std::string& header_path);

}  // namespace birc
