#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "birc/env.hpp"

namespace birc {

// S(i,j) = sum_{l=i}^{j} 1/c_l^lambda. Zero when j = i-1. The raw value
// carries exp(-lambda l) and can overflow on windows far from the origin;
// the other routines here work with shifted sums instead.
double series_sum(const Environment& env, std::int64_t i, std::int64_t j);

// P_x(T_i < T_j) for i < x < j.
double hit_prob(const Environment& env, std::int64_t x, std::int64_t i, std::int64_t j);

struct HitTime {
  double value;
  // Bound on the part of the full-line sum lying left of the floor, using the
  // largest conductance seen in the window as a stand-in for the unseen ones.
  double tail_bound;
  bool truncation_ok;  // tail_bound <= 1e-12 * value
};

// E_x[T_y], x < y. The sum over z <= x stops at `left_floor` (default: the
// window's left edge), which is the same as the chain reflected there.
HitTime expected_hit_time(const Environment& env, std::int64_t x, std::int64_t y,
                          std::optional<std::int64_t> left_floor = std::nullopt);

// E_x[T_y 1{T_y < T_v}] for y < x < v.
double killed_expected_hit_time(const Environment& env, std::int64_t x, std::int64_t y,
                                std::int64_t v);

// P_{x+1}(T_{x+horizon} < T_x).
double escape_prob(const Environment& env, std::int64_t x, std::int64_t horizon);

// 1 + E_{x-1}[T_x] with conductances left of x - horizon removed.
double theta(const Environment& env, std::int64_t x, std::int64_t horizon);

// Boundary sites i < j of a finite chain on the window.
struct WindowChain {
  const Environment& env;
  std::int64_t i;
  std::int64_t j;
};

enum class OracleKind {
  HitProb,         // h(i) = 1, h(j) = 0, harmonic inside
  MeanTime,        // reflecting at i, m(j) = 0
  KilledMeanTime,  // g(i) = g(j) = 0, g = P g + P.(T_i < T_j)
};

struct OracleSolution {
  std::vector<double> values;  // indexed by site - i
  double max_residual;         // row residual relative to the row's magnitude
};

inline constexpr std::int64_t kMaxOracleLength = 100000;

// Tridiagonal elimination of the chain's linear system. A zero pivot (an
// interior row that cannot reach either boundary) raises NumericError.
OracleSolution oracle_solve(const WindowChain& chain, OracleKind kind);

}  // namespace birc
