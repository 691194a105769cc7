#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "birc/env.hpp"
#include "birc/rng.hpp"
#include "birc/traps.hpp"

namespace birc {

// Right-step probabilities omega_x for sites lo..hi. The walk may stand on
// lo-1 (the window's left edge) only as an abort signal.
class TransitionTable {
 public:
  explicit TransitionTable(const Environment& env);
  TransitionTable(std::int64_t lo, std::vector<double> omega);
  // omega == 1 everywhere on [lo, hi].
  static TransitionTable forced_right(std::int64_t lo, std::int64_t hi);

  std::int64_t lo() const { return lo_; }
  std::int64_t hi() const { return lo_ + static_cast<std::int64_t>(omega_.size()) - 1; }
  double omega(std::int64_t x) const { return omega_[static_cast<std::size_t>(x - lo_)]; }
  // Step right iff (bits >> 11) < threshold(x).
  std::uint64_t threshold(std::int64_t x) const {
    return thresh_[static_cast<std::size_t>(x - lo_)];
  }

 private:
  std::int64_t lo_;
  std::vector<double> omega_;
  std::vector<std::uint64_t> thresh_;
};

enum class Engine { Direct, Branching };
const char* to_string(Engine e);

struct Checkpoint {
  double u;
  std::int64_t target;  // floor(u n)
  std::uint64_t time;   // T_target
};

struct PassageRecord {
  std::int64_t n = 0;
  std::vector<Checkpoint> checkpoints;
  std::uint64_t total_steps = 0;
  // max_t (max_{s<=t} X_s - X_t) up to T_n; not available from the branching engine.
  std::optional<std::int64_t> max_backtrack;
  Engine engine = Engine::Direct;
  bool joint_law = true;
  std::uint64_t replica_id = 0;
  std::uint64_t seed = 0;
};

struct DirectOptions {
  std::optional<std::uint64_t> max_steps;  // ResourceError when exceeded
};

// Checkpoint grid: sorted, in (0, 1]. Empty means {1}.
PassageRecord direct_passage(const TransitionTable& table, std::int64_t n, std::uint64_t seed,
                             std::uint64_t replica_id, const std::vector<double>& grid = {},
                             DirectOptions opts = {});

// Checkpoints are separate recursions with their own draws (marginally exact,
// joint_law = false).
PassageRecord branching_passage(const TransitionTable& table, std::int64_t n, std::uint64_t seed,
                                std::uint64_t replica_id, const std::vector<double>& grid = {});

// One branching recursion: time for the walk started at `start` to first hit
// `target` > start.
std::uint64_t branching_hit_time(const TransitionTable& table, std::int64_t start,
                                 std::int64_t target, Rng& rng);

// Positions X_t at the sorted times given, walk started at 0.
std::vector<std::int64_t> direct_positions(const TransitionTable& table,
                                           const std::vector<std::uint64_t>& times, Rng& rng);

// Number of failures before r successes with success probability p.
std::uint64_t sample_negative_binomial(std::uint64_t r, double p, Rng& rng);

struct TrapLawSample {
  double p;
  double theta;
  double xi;
  double tau;
};

TrapLawSample sample_tau(double p, double theta, Rng& rng);

struct CrossingSamples {
  std::vector<double> scaled_crossing;  // T(B) / rho_B
  std::vector<double> tau;
  double p;
  double theta;
};

// Walk across the trap's triblock, from j c_n to (j+2) c_n, `replicas` times,
// next to draws of the reference law (theta/p) Exp(1), or 2 Exp(1) for
// well-and-wall traps.
CrossingSamples crossing_time_vs_tau(const Environment& env, const TrapRecord& trap,
                                     const LimitParams& params, std::size_t replicas,
                                     std::uint64_t seed);

}  // namespace birc
