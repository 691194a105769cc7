#include "birc/walk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "birc/error.hpp"
#include "birc/network.hpp"

namespace birc {

namespace {

std::uint64_t omega_threshold(double om) {
  if (!(om >= 0.0 && om <= 1.0)) throw ConstructionError("TransitionTable: omega outside [0,1]");
  return static_cast<std::uint64_t>(std::ldexp(om, 53));
}

std::vector<std::int64_t> checkpoint_targets(std::int64_t n, std::vector<double>& grid) {
  if (grid.empty()) grid = {1.0};
  std::vector<std::int64_t> targets;
  double prev = 0.0;
  for (double u : grid) {
    if (!(u > 0.0 && u <= 1.0)) throw std::invalid_argument("checkpoint grid must lie in (0,1]");
    if (u < prev) throw std::invalid_argument("checkpoint grid must be sorted");
    prev = u;
    targets.push_back(static_cast<std::int64_t>(std::floor(u * static_cast<double>(n))));
  }
  return targets;
}

void check_span(const TransitionTable& table, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("passage target n must be >= 1");
  if (table.lo() > 0) throw BoundaryError("transition table does not contain the origin");
  if (table.hi() < n - 1) {
    throw BoundaryError("transition table ends at " + std::to_string(table.hi()) +
                        ", before the target " + std::to_string(n));
  }
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  if (a > std::numeric_limits<std::uint64_t>::max() - b) {
    throw ResourceError("passage time overflows 64 bits");
  }
  return a + b;
}

}  // namespace

TransitionTable::TransitionTable(const Environment& env) : lo_(env.left() + 1) {
  if (env.size() < 2) throw ConstructionError("TransitionTable: window needs two sites");
  omega_.reserve(env.size() - 1);
  for (std::int64_t x = lo_; x <= env.right(); ++x) omega_.push_back(env.omega(x));
  thresh_.reserve(omega_.size());
  for (double om : omega_) thresh_.push_back(omega_threshold(om));
}

TransitionTable::TransitionTable(std::int64_t lo, std::vector<double> omega)
    : lo_(lo), omega_(std::move(omega)) {
  if (omega_.empty()) throw ConstructionError("TransitionTable: empty");
  thresh_.reserve(omega_.size());
  for (double om : omega_) thresh_.push_back(omega_threshold(om));
}

TransitionTable TransitionTable::forced_right(std::int64_t lo, std::int64_t hi) {
  return TransitionTable(lo, std::vector<double>(static_cast<std::size_t>(hi - lo + 1), 1.0));
}

const char* to_string(Engine e) { return e == Engine::Direct ? "direct" : "branching"; }

PassageRecord direct_passage(const TransitionTable& table, std::int64_t n, std::uint64_t seed,
                             std::uint64_t replica_id, const std::vector<double>& grid_in,
                             DirectOptions opts) {
  check_span(table, n);
  std::vector<double> grid = grid_in;
  const auto targets = checkpoint_targets(n, grid);
  Rng rng = make_rng(seed, replica_id, Stream::Walk);

  PassageRecord rec;
  rec.n = n;
  rec.engine = Engine::Direct;
  rec.replica_id = replica_id;
  rec.seed = seed;
  rec.checkpoints.reserve(grid.size());

  const std::int64_t edge = table.lo() - 1;
  const std::uint64_t budget = opts.max_steps.value_or(std::numeric_limits<std::uint64_t>::max());
  std::int64_t x = 0, top = 0, drawdown = 0;
  std::uint64_t t = 0;
  std::size_t next = 0;
  auto record_reached = [&](std::int64_t level) {
    while (next < targets.size() && targets[next] <= level) {
      rec.checkpoints.push_back({grid[next], targets[next], t});
      ++next;
    }
  };
  record_reached(0);
  while (x < n) {
    x += (rng() >> 11) < table.threshold(x) ? 1 : -1;
    ++t;
    if (x > top) {
      top = x;
      record_reached(top);
    } else {
      drawdown = std::max(drawdown, top - x);
      if (x == edge) throw LeftEdgeHit(edge);
    }
    if (t >= budget && x < n) throw ResourceError("direct_passage: step budget exhausted");
  }
  rec.total_steps = t;
  rec.max_backtrack = drawdown;
  return rec;
}

std::uint64_t sample_negative_binomial(std::uint64_t r, double p, Rng& rng) {
  if (!(p > 0.0)) throw NumericError("negative binomial with success probability 0");
  if (r == 0 || p >= 1.0) return 0;
  constexpr double kMax = 1.8e19;
  if (r <= 16) {
    const double log_q = std::log1p(-p);
    double total = 0.0;
    for (std::uint64_t i = 0; i < r; ++i) total += std::floor(std::log(uniform_open(rng)) / log_q);
    if (!(total < kMax)) throw ResourceError("negative binomial draw overflows 64 bits");
    return static_cast<std::uint64_t>(total);
  }
  const double g = std::gamma_distribution<double>(static_cast<double>(r), 1.0)(rng);
  const double mean = g * ((1.0 - p) / p);
  if (!(mean < kMax / 2)) throw ResourceError("negative binomial draw overflows 64 bits");
  if (mean < 1e12) {
    return std::poisson_distribution<std::uint64_t>(mean)(rng);
  }
  // Poisson(mean) at this size is Gaussian to far below sampling resolution.
  const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
  return static_cast<std::uint64_t>(std::max(0.0, std::round(mean + std::sqrt(mean) * z)));
}

std::uint64_t branching_hit_time(const TransitionTable& table, std::int64_t start,
                                 std::int64_t target, Rng& rng) {
  if (!(start < target)) throw std::invalid_argument("branching_hit_time: need start < target");
  if (start < table.lo() || target - 1 > table.hi()) {
    throw BoundaryError("branching_hit_time: start/target outside the transition table");
  }
  std::uint64_t total = 0, left_jumps_above = 0;
  for (std::int64_t x = target - 1;; --x) {
    if (x < table.lo()) break;  // only reachable with no visits below lo
    const std::uint64_t right = left_jumps_above + (x >= start ? 1 : 0);
    if (right == 0) break;
    const std::uint64_t left = sample_negative_binomial(right, table.omega(x), rng);
    total = checked_add(total, checked_add(right, left));
    if (x == table.lo() && left > 0) throw LeftEdgeHit(x - 1);
    left_jumps_above = left;
  }
  return total;
}

PassageRecord branching_passage(const TransitionTable& table, std::int64_t n, std::uint64_t seed,
                                std::uint64_t replica_id, const std::vector<double>& grid_in) {
  check_span(table, n);
  std::vector<double> grid = grid_in;
  const auto targets = checkpoint_targets(n, grid);
  Rng rng = make_rng(seed, replica_id, Stream::Walk);

  PassageRecord rec;
  rec.n = n;
  rec.engine = Engine::Branching;
  rec.joint_law = false;
  rec.replica_id = replica_id;
  rec.seed = seed;
  rec.total_steps = branching_hit_time(table, 0, n, rng);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::uint64_t t = 0;
    if (targets[k] == n) {
      t = rec.total_steps;
    } else if (targets[k] > 0) {
      t = branching_hit_time(table, 0, targets[k], rng);
    }
    rec.checkpoints.push_back({grid[k], targets[k], t});
  }
  return rec;
}

std::vector<std::int64_t> direct_positions(const TransitionTable& table,
                                           const std::vector<std::uint64_t>& times, Rng& rng) {
  if (!std::is_sorted(times.begin(), times.end())) {
    throw std::invalid_argument("direct_positions: times must be sorted");
  }
  if (table.lo() > 0 || table.hi() < 0) throw BoundaryError("table does not contain the origin");
  std::vector<std::int64_t> out;
  out.reserve(times.size());
  const std::int64_t edge = table.lo() - 1, right_edge = table.hi() + 1;
  std::int64_t x = 0;
  std::uint64_t t = 0;
  for (std::uint64_t target : times) {
    for (; t < target; ++t) {
      x += (rng() >> 11) < table.threshold(x) ? 1 : -1;
      if (x == edge) throw LeftEdgeHit(edge);
      if (x == right_edge) throw BoundaryError("direct_positions: walk left the window on the right");
    }
    out.push_back(x);
  }
  return out;
}

TrapLawSample sample_tau(double p, double theta, Rng& rng) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("sample_tau: p must lie in (0,1]");
  if (!(theta >= 2.0)) throw std::invalid_argument("sample_tau: theta must be >= 2");
  const double xi = theta / p;
  return {p, theta, xi, xi * -std::log(uniform_open(rng))};
}

CrossingSamples crossing_time_vs_tau(const Environment& env, const TrapRecord& trap,
                                     const LimitParams& params, std::size_t replicas,
                                     std::uint64_t seed) {
  if (!env.contains(trap.x - 1) || !env.contains(trap.x + trap.k)) {
    throw BoundaryError("crossing_time_vs_tau: trap not in window");
  }
  const std::int64_t c_n = params.blocks.c_n;
  const std::int64_t start = trap.triblock_index * c_n, target = (trap.triblock_index + 2) * c_n;
  env.require(start, target, "crossing_time_vs_tau");

  CrossingSamples out;
  if (trap.kind == TrapKind::WellAndWall) {
    out.p = 1.0;
    out.theta = 2.0;
  } else {
    out.p = escape_prob(env, trap.x, c_n);
    out.theta = theta(env, trap.x, c_n);
  }
  const TransitionTable table(env);
  out.scaled_crossing.reserve(replicas);
  out.tau.reserve(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    Rng rng = make_rng(seed, r, Stream::Walk);
    const auto t = branching_hit_time(table, start, target, rng);
    out.scaled_crossing.push_back(static_cast<double>(t) / trap.depth);
    out.tau.push_back(sample_tau(out.p, out.theta, rng).tau);
  }
  return out;
}

}  // namespace birc
