#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "birc/env.hpp"
#include "birc/error.hpp"
#include "birc/stats.hpp"
#include "birc/traps.hpp"
#include "birc/walk.hpp"

using namespace birc;

namespace {

const double kLn2 = std::log(2.0);

Environment constant_env(double lambda, std::int64_t left, std::int64_t right) {
  return Environment(lambda, left, std::vector<double>(static_cast<std::size_t>(right - left + 1), 1.0));
}

struct Moments {
  double mean, se;
};

Moments moments(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s2 = 0;
  for (double x : v) s2 += (x - m) * (x - m);
  return {m, std::sqrt(s2 / (v.size() - 1) / v.size())};
}

}  // namespace

TEST_CASE("direct passage basics") {
  const auto env = sample_environment(
      ConductanceLaw(TailSpec(0.6, 0, 1, 1), TailSpec(0.6, 0, 1, 1), 0.5), 1.0, -400, 60, 3);
  const TransitionTable table(env);
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto one = direct_passage(table, 1, 9, r);
    CHECK(one.total_steps >= 1);
    CHECK(one.total_steps % 2 == 1);
    const auto rec = direct_passage(table, 50, 9, r, {0.2, 0.5, 0.5, 1.0});
    CHECK(rec.total_steps >= 50);
    CHECK(rec.total_steps % 2 == 0);
    REQUIRE(rec.checkpoints.size() == 4);
    for (std::size_t k = 1; k < 4; ++k) CHECK(rec.checkpoints[k].time >= rec.checkpoints[k - 1].time);
    CHECK(rec.checkpoints.back().time == rec.total_steps);
    CHECK(rec.checkpoints[0].target == 10);
    CHECK(rec.max_backtrack.has_value());
    // Time to reach level m has the parity of m.
    for (const auto& c : rec.checkpoints) CHECK(c.time % 2 == static_cast<std::uint64_t>(c.target) % 2);
  }
  const auto a = direct_passage(table, 50, 17, 4, {0.5, 1.0});
  const auto b = direct_passage(table, 50, 17, 4, {0.5, 1.0});
  CHECK(a.total_steps == b.total_steps);
  CHECK(a.checkpoints[0].time == b.checkpoints[0].time);
  CHECK(a.max_backtrack == b.max_backtrack);
  CHECK_THROWS_AS(direct_passage(table, 50, 1, 1, {0.7, 0.3}), std::invalid_argument);
  CHECK_THROWS_AS(direct_passage(table, 100, 1, 1), BoundaryError);
  CHECK_THROWS_AS(direct_passage(table, 50, 1, 1, {}, DirectOptions{3}), ResourceError);
}

TEST_CASE("left edge hit is reported") {
  const auto env = constant_env(0.0, -3, 100);  // unbiased, tiny reserve
  const TransitionTable table(env);
  int hits = 0;
  for (std::uint64_t r = 0; r < 50; ++r) {
    try {
      direct_passage(table, 100, 1, r);
    } catch (const LeftEdgeHit& e) {
      CHECK(e.edge() == -3);
      ++hits;
    }
  }
  CHECK(hits > 0);
}

TEST_CASE("both engines have mean 60 for T_20 on the constant biased walk") {
  const auto env = constant_env(kLn2, -200, 40);
  const TransitionTable table(env);
  const int reps = 20000;
  for (auto engine : {Engine::Direct, Engine::Branching}) {
    CAPTURE(to_string(engine));
    std::vector<double> t;
    for (int r = 0; r < reps; ++r) {
      const auto rec = engine == Engine::Direct ? direct_passage(table, 20, 5, r)
                                                : branching_passage(table, 20, 5, r);
      t.push_back(static_cast<double>(rec.total_steps));
    }
    const auto m = moments(t);
    CHECK(std::fabs(m.mean - 60.0) < 3 * m.se);
  }
}

TEST_CASE("branching engine") {
  SUBCASE("forced right gives T_n = n") {
    const auto table = TransitionTable::forced_right(-5, 200);
    for (std::uint64_t r = 0; r < 10; ++r) {
      CHECK(branching_passage(table, 150, 3, r).total_steps == 150);
      CHECK(direct_passage(table, 150, 3, r).total_steps == 150);
    }
  }
  SUBCASE("record flags") {
    const auto table = TransitionTable::forced_right(-5, 200);
    const auto rec = branching_passage(table, 100, 3, 0, {0.5, 1.0});
    CHECK_FALSE(rec.joint_law);
    CHECK_FALSE(rec.max_backtrack.has_value());
    CHECK(rec.checkpoints[0].time == 50);
    CHECK(rec.engine == Engine::Branching);
  }
  SUBCASE("matches the direct engine in law on a heavy-tailed environment") {
    const ConductanceLaw law(TailSpec(0.5, 0, 1, 1), TailSpec(0.5, 0, 1, 1), 0.5);
    const auto env = sample_environment(law, 1.0, -600, 60, 21);
    const TransitionTable table(env);
    std::vector<double> d, b;
    for (std::uint64_t r = 0; r < 10000; ++r) {
      d.push_back(static_cast<double>(direct_passage(table, 50, 1, r).total_steps));
      b.push_back(static_cast<double>(branching_passage(table, 50, 2, r).total_steps));
    }
    CHECK(ks_two_sample(d, b).p_value > 0.01);
  }
}

TEST_CASE("negative binomial sampler moments") {
  Rng rng(77);
  for (auto [r, p] : {std::pair<std::uint64_t, double>{1, 0.3}, {7, 0.6}, {40, 0.2}, {100000, 0.5}}) {
    CAPTURE(r);
    const int reps = 40000;
    std::vector<double> v;
    for (int i = 0; i < reps; ++i) v.push_back(static_cast<double>(sample_negative_binomial(r, p, rng)));
    const double mean = r * (1 - p) / p, var = r * (1 - p) / (p * p);
    CHECK(std::fabs(moments(v).mean - mean) < 4 * std::sqrt(var / reps));
  }
  CHECK(sample_negative_binomial(0, 0.3, rng) == 0);
  CHECK(sample_negative_binomial(5, 1.0, rng) == 0);
  CHECK_THROWS_AS(sample_negative_binomial(5, 0.0, rng), NumericError);
}

TEST_CASE("sample_tau") {
  Rng rng(5);
  for (auto [p, th, mean] : {std::tuple{1.0, 2.0, 2.0}, {0.5, 4.0, 8.0}}) {
    std::vector<double> v;
    for (int i = 0; i < 100000; ++i) v.push_back(sample_tau(p, th, rng).tau);
    const auto m = moments(v);
    CHECK(std::fabs(m.mean - mean) < 3 * m.se);
    const double rate = p / th;
    const auto ks = ks_one_sample(v, [rate](double x) { return 1 - std::exp(-rate * x); });
    CHECK(ks.statistic < 0.01);
  }
  CHECK_THROWS(sample_tau(0.0, 2.0, rng));
  CHECK_THROWS(sample_tau(0.5, 1.0, rng));
}

TEST_CASE("direct_positions") {
  const auto table = TransitionTable::forced_right(-2, 100);
  Rng rng(3);
  const auto pos = direct_positions(table, {0, 5, 5, 60}, rng);
  CHECK(pos == std::vector<std::int64_t>{0, 5, 5, 60});
  CHECK_THROWS_AS(direct_positions(table, {500}, rng), BoundaryError);
}

TEST_CASE("trap crossing time against the reference law") {
  const ConductanceLaw law(TailSpec(0.5, 0, 1, 1), TailSpec(0.5, 0, 1, 1), 0.5);
  const double lambda = 1.0;
  const auto params = make_limit_params(law, lambda, 1e4);
  const std::int64_t c_n = params.blocks.c_n;
  const std::int64_t j = 3, x = j * c_n + c_n / 2;
  std::vector<double> c(static_cast<std::size_t>(8 * c_n), 1.0);
  const std::int64_t left = -2 * c_n;
  auto at = [&](std::int64_t site) -> double& { return c[static_cast<std::size_t>(site - left)]; };

  SUBCASE("deep well") {
    at(x - 1) = 1e6 * std::exp(lambda);
    const Environment env(lambda, left, c);
    REQUIRE(env.rho(x) == doctest::Approx(1e6));
    const TrapRecord trap{x, TrapKind::Well, 0, env.rho(x), true, j, false};
    const auto s = crossing_time_vs_tau(env, trap, params, 5000, 11);
    CHECK(ks_two_sample(s.scaled_crossing, s.tau).statistic < 0.05);
  }
  SUBCASE("well and wall") {
    at(x - 1) = 1e6;
    at(x) = 1e-6;
    const Environment env(lambda, left, c);
    const TrapRecord trap{x, TrapKind::WellAndWall, 0, env.rho(x), true, j, false};
    const auto s = crossing_time_vs_tau(env, trap, params, 5000, 12);
    CHECK(s.p == 1.0);
    CHECK(s.theta == 2.0);
    CHECK(ks_two_sample(s.scaled_crossing, s.tau).statistic < 0.05);
  }
  SUBCASE("shallow trap is only reported") {
    at(x - 1) = 10 * std::exp(lambda);
    const Environment env(lambda, left, c);
    const TrapRecord trap{x, TrapKind::Well, 0, env.rho(x), true, j, false};
    const auto s = crossing_time_vs_tau(env, trap, params, 500, 13);
    CHECK(s.scaled_crossing.size() == 500);
    MESSAGE("shallow trap KS statistic: " << ks_two_sample(s.scaled_crossing, s.tau).statistic);
  }
}
