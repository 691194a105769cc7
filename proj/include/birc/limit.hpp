#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "birc/env.hpp"
#include "birc/rng.hpp"

namespace birc {

// One draw of S_alpha(du), with E[exp(-t S_alpha(du))] = exp(-du t^alpha).
double stable_increment(double alpha, double du, Rng& rng);

// (S_alpha(u))_{u in grid} from independent increments. Grid sorted in (0,1].
std::vector<double> subordinator_path(double alpha, const std::vector<double>& grid, Rng& rng);

// inf{s : S_alpha(s) > u}, sampled as u^alpha S_alpha(1)^-alpha.
double inverse_marginal(double alpha, double u, Rng& rng);

// Mean of the inverse subordinator at 1.
inline double inverse_marginal_mean(double alpha) { return 1.0 / std::tgamma(1.0 + alpha); }

// Probability that the inverse subordinator does not move between t and t h:
// (sin(pi a)/pi) int_0^{1/h} y^{a-1} (1-y)^{-a} dy.
double arcsine_aging(double alpha, double h);

// (pi a E[zeta^a] / sin(pi a))^{1/a}.
double theorem_constant(double alpha, double e_zeta_alpha);
// sin(pi a) / (pi a E[zeta^a]).
double front_factor(double alpha, double e_zeta_alpha);

// How the series V and W of the trap-crossing constant are weighted:
// AsPrinted uses exp(-lambda (j+1)) in both; NetworkConsistent uses the
// weights that come out of the escape probability and return time of a trap,
// exp(-lambda j) for V and exp(-lambda (j-1)) for W.
enum class ZetaIndexing { AsPrinted, NetworkConsistent };

// Sampler for Y^a-size-biased draws, Y = c or Y = 1/c, by inverse CDF on a
// log grid with a Pareto continuation past the grid.
class SizeBiasedSampler {
 public:
  SizeBiasedSampler(const ConductanceLaw& law, double a, bool reciprocal);
  double draw(double u) const;
  double normalizer() const { return norm_; }

 private:
  std::vector<double> log_y_;
  std::vector<double> cum_;  // unnormalised E[Y^a 1{Y <= y_k}]
  double norm_;
  double tail_exponent_;
};

// Law of the crossing constant zeta of a deep trap:
// zeta = 2 (1 + B cbar_0 V + (1 - B) W / cbar_{-1}), B ~ Bernoulli(q) marking a well.
class ZetaLaw {
 public:
  // Derived from a conductance law. q is the limiting well share.
  ZetaLaw(const ConductanceLaw& law, double lambda,
          ZetaIndexing indexing = ZetaIndexing::AsPrinted);
  // All conductances equal to `c`, with well share q and exponent alpha.
  static ZetaLaw point_mass(double c, double lambda, double q, double alpha,
                            ZetaIndexing indexing = ZetaIndexing::AsPrinted);

  Regime regime() const { return regime_; }
  double q() const { return q_; }
  double alpha() const { return alpha_; }
  double lambda() const { return lambda_; }
  ZetaIndexing indexing() const { return indexing_; }

  // Draw number `index` from stream `seed`. Pure in its arguments; the
  // depth multiplier stretches the series truncation to test its effect.
  double sample(std::uint64_t seed, std::uint64_t index, int depth_multiplier = 1) const;

 private:
  ZetaLaw() = default;
  double conductance(std::uint64_t stream, std::int64_t site) const;
  double series(std::uint64_t stream, bool v_series, int depth_multiplier) const;

  Regime regime_ = Regime::SimpleTraps;
  double q_ = 0.0;
  double alpha_ = 0.5;
  double lambda_ = 1.0;
  ZetaIndexing indexing_ = ZetaIndexing::AsPrinted;
  std::optional<ConductanceLaw> law_;
  double point_c_ = 1.0;
  std::shared_ptr<const SizeBiasedSampler> wall_left_;   // cbar_{-1}: c biased by c^a
  std::shared_ptr<const SizeBiasedSampler> well_right_;  // 1/cbar_0: 1/c biased by c^-a
};

struct ZetaMoment {
  double mean;
  double std_error;
  // Hill tail index of the zeta sample (infinity when zeta is degenerate).
  double tail_index;
};

ZetaMoment e_zeta_alpha(const ZetaLaw& law, std::size_t n_samples, std::uint64_t seed);

}  // namespace birc
