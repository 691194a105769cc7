#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "birc/env.hpp"

namespace birc {

// E[c^alpha] (or E[1/c^alpha]) times the slowly varying part of the opposite
// tail, per regime. Evaluates the tail-correction function of rho_0, so that
// P(rho_0 > t) ~ psi(t) t^-alpha.
double psi_asymptotic(const ConductanceLaw& law, double lambda, double t);

// Limit of the well share among deep simple traps: 1 when only wells carry
// weight, 0 when only walls do. NaN in the well-and-wall regime.
double limiting_well_weight(const ConductanceLaw& law);
// Finite-t version of the same ratio.
double well_weight(const ConductanceLaw& law, double t);

// Root of psi(t) t^-alpha n = 1. The search starts at the maximiser of
// psi(t) t^-alpha on a log grid over [t_lo, 10^(3/alpha) n^(2/alpha)].
double solve_dn(const std::function<double(double)>& psi, double alpha, double n, double t_lo);

inline double default_big_c(double alpha, double lambda) { return (3.0 + 3.0 / alpha) / lambda; }

struct BlockPlan {
  std::int64_t c_n;
  std::int64_t k_n;
  // Sites of triblock j: [(j-1) c_n, (j+2) c_n - 1].
  std::pair<std::int64_t, std::int64_t> triblock(std::int64_t j) const {
    return {(j - 1) * c_n, (j + 2) * c_n - 1};
  }
  // Middle block of triblock j: [j c_n, (j+1) c_n - 1].
  std::pair<std::int64_t, std::int64_t> block(std::int64_t j) const {
    return {j * c_n, (j + 1) * c_n - 1};
  }
  std::int64_t block_of(std::int64_t x) const {
    return x >= 0 ? x / c_n : -((-x + c_n - 1) / c_n);
  }
};

BlockPlan block_partition(double n, double big_c);

struct LimitParams {
  double n;
  double alpha;
  double lambda;
  Regime regime;
  std::function<double(double)> psi;
  double d_n;
  double q_n;
  double big_c;
  BlockPlan blocks;

  double trap_threshold() const;  // d_n e^{-q_n}
  double k_bound() const;         // (6/lambda) q_n
};

LimitParams make_limit_params(const ConductanceLaw& law, double lambda, double n,
                              std::optional<double> big_c = std::nullopt);

enum class TrapKind { Well, Wall, WellAndWall };
const char* to_string(TrapKind k);

struct TrapRecord {
  std::int64_t x;
  TrapKind kind;
  std::int64_t k;  // distance; 0 for simple traps
  double depth;    // rho_x or rho_x^(k)
  bool in_good_triblock;
  std::int64_t triblock_index;
  bool atypical;  // simple trap meeting neither the well nor the wall sub-threshold

  bool operator==(const TrapRecord&) const = default;
};

struct ScanRange {
  std::int64_t lo;
  std::int64_t hi;
};

// Scans x in `range` (default [0, n-1]) for traps. Simple-trap regime:
// rho_x above threshold. Well-and-wall regime: rho_x^(k) above threshold with
// c_{x-1} and 1/c_{x+k} both above e^{q_n^2}, for 0 <= k <= k_max.
std::vector<TrapRecord> detect_traps(const Environment& env, const LimitParams& params,
                                     std::int64_t k_max,
                                     std::optional<ScanRange> range = std::nullopt);

// Good-triblock condition for a trap at (x, k): every other conductance of
// its triblock, clipped to the window, lies in [e^{-4q}, e^{4q}]; simple traps
// additionally need c_x <= e^{4q} and c_{x-1} >= e^{-4q}.
bool in_good_triblock(const Environment& env, const LimitParams& params, std::int64_t x,
                      std::int64_t k, bool simple);

inline constexpr double kHEventDelta = 0.25;

struct CensusReport {
  std::int64_t trap_count = 0;
  std::optional<std::int64_t> min_pairwise_distance;
  double max_depth = 0.0;
  std::int64_t max_k = 0;
  bool all_good = true;
  std::int64_t h_event_count = 0;
  bool isolation_violation = false;

  // Bounds the report is measured against.
  double isolation_bound = 0.0;  // n e^{-5 q_n}
  double depth_bound = 0.0;      // d_n e^{q_n}
  double k_bound = 0.0;          // (6/lambda) q_n
};

CensusReport census(const Environment& env, const LimitParams& params, std::int64_t k_max,
                    std::optional<ScanRange> range = std::nullopt);

}  // namespace birc
