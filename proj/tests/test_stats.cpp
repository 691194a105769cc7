#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "birc/env.hpp"
#include "birc/error.hpp"
#include "birc/limit.hpp"
#include "birc/stats.hpp"

using namespace birc;

TEST_CASE("two-sample KS statistic") {
  const std::vector<double> a{1, 2, 3, 4};
  CHECK(ks_two_sample(a, a).statistic == 0.0);
  CHECK(ks_two_sample(std::vector<double>{1, 2}, std::vector<double>{3, 4}).statistic == 1.0);
  CHECK(ks_two_sample(std::vector<double>{1, 3}, std::vector<double>{2, 4}).statistic == 0.5);
  // Ties across samples are handled at the shared value.
  CHECK(ks_two_sample(std::vector<double>{1, 2, 2}, std::vector<double>{2, 2, 3}).statistic ==
        doctest::Approx(1.0 / 3.0));
  CHECK(ks_two_sample(std::vector<double>{1, 2}, std::vector<double>{3, 4}).permutation);
}

TEST_CASE("KS p-values under the null are roughly uniform") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  int small = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> a(300), b(200);
    for (auto& x : a) x = nd(rng);
    for (auto& x : b) x = nd(rng);
    small += ks_two_sample(a, b).p_value < 0.05;
  }
  CHECK(std::fabs(small / double(trials) - 0.05) < 3 * std::sqrt(0.05 * 0.95 / trials) + 0.01);
  std::vector<double> a(300), b(300);
  for (auto& x : a) x = nd(rng);
  for (auto& x : b) x = nd(rng) + 1.0;
  CHECK(ks_two_sample(a, b).p_value < 1e-4);
}

TEST_CASE("Kolmogorov distribution") {
  CHECK(kolmogorov_q(0.0) == 1.0);
  // Known quantiles of the Kolmogorov law.
  CHECK(kolmogorov_q(1.3580986) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(kolmogorov_q(1.2238478) == doctest::Approx(0.10).epsilon(1e-5));
  CHECK(kolmogorov_q(1.6276236) == doctest::Approx(0.01).epsilon(1e-5));
  // Both series forms agree near the switch point.
  CHECK(kolmogorov_q(1.1799999) == doctest::Approx(kolmogorov_q(1.1800001)).epsilon(1e-6));
}

TEST_CASE("one-sample KS") {
  std::mt19937_64 rng(2);
  std::exponential_distribution<double> ed(1.0);
  std::vector<double> v(20000);
  for (auto& x : v) x = ed(rng);
  const auto good = ks_one_sample(v, [](double x) { return 1 - std::exp(-x); });
  CHECK(good.p_value > 0.001);
  const auto bad = ks_one_sample(v, [](double x) { return 1 - std::exp(-1.2 * x); });
  CHECK(bad.p_value < 1e-6);
}

TEST_CASE("Hill estimator") {
  const auto h = hill_estimator(std::vector<double>{std::exp(3.0), std::exp(2.0), std::exp(1.0)}, 2);
  CHECK(h.gamma == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(h.index == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> pareto(100000);
  for (auto& x : pareto) x = 1 / (1 - u(rng));
  CHECK(hill_estimator(pareto, 1000).index == doctest::Approx(1.0).epsilon(0.1));
  CHECK_THROWS(hill_estimator(pareto, 0));
  CHECK_THROWS(hill_estimator(pareto, pareto.size()));
}

TEST_CASE("Hill index of rho_0 for a well-and-wall law") {
  const double alpha = 0.5, lambda = 1.0;
  const ConductanceLaw law(TailSpec(alpha, 0, 1, 1), TailSpec(alpha, 0, 1, 1), 0.5);
  const int n = 1000000;
  // rho at odd sites uses disjoint pairs (c_{x-1}, c_x): i.i.d. draws.
  const auto env = sample_environment(law, lambda, 0, 2 * n, 4);
  std::vector<double> rho;
  rho.reserve(n);
  for (std::int64_t x = 1; x < 2 * n; x += 2) rho.push_back(env.rho(x));
  CHECK(std::fabs(hill_estimator(rho, 1000).index - alpha) < 0.1);
}

TEST_CASE("loglog slope") {
  std::vector<std::pair<double, double>> sq, flat, logc;
  for (double n : {1e3, 1e4, 1e5, 1e6}) {
    sq.emplace_back(n, n * n);
    flat.emplace_back(n, 7.0);
    logc.emplace_back(n, 3 * std::sqrt(n) * std::log(n));
  }
  const auto s = loglog_slope(sq);
  CHECK(s.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.std_error == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(loglog_slope(flat).slope == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  const double l = loglog_slope(logc).slope;
  CHECK(l >= 0.5);
  CHECK(l <= 0.62);
  CHECK_THROWS(loglog_slope(std::vector<std::pair<double, double>>{{1, 1}}));
}

TEST_CASE("summaries and quantiles") {
  const std::vector<double> v{4, 1, 3, 2, 5};
  CHECK(quantile(v, 0.5) == 3.0);
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 5.0);
  CHECK(quantile(v, 0.1) == doctest::Approx(1.4));
  const auto s = summarize(v, {0.25, 0.75});
  CHECK(s.mean == 3.0);
  CHECK(s.variance == doctest::Approx(2.5));
  CHECK(s.quantiles == std::vector<double>{2.0, 4.0});
}

TEST_CASE("aging estimator") {
  const std::uint64_t n = 100;
  std::vector<Trajectory> frozen(20, Trajectory{Engine::Direct, {100, 400}, {7, 7}});
  CHECK(aging_estimator(frozen, n, 4.0, 0) == 1.0);
  std::vector<Trajectory> ballistic(20, Trajectory{Engine::Direct, {100, 400}, {100, 400}});
  CHECK(aging_estimator(ballistic, n, 4.0, 299) == 0.0);
  CHECK(aging_estimator(ballistic, n, 4.0, 300) == 1.0);
  std::vector<Trajectory> branching(1, Trajectory{Engine::Branching, {100, 400}, {1, 2}});
  CHECK_THROWS_AS(aging_estimator(branching, n, 4.0, 5), UnsupportedError);
}

TEST_CASE("exceedance PPP check") {
  const double alpha = 0.5;
  SUBCASE("simulated Poisson process") {
    const double eps = 0.2;
    std::mt19937_64 rng(5);
    std::poisson_distribution<int> pois(std::pow(eps, -alpha));
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::vector<double>> pos(400);
    for (auto& v : pos) {
      const int k = pois(rng);
      for (int i = 0; i < k; ++i) v.push_back(u(rng));
    }
    const auto rep = exceedance_ppp_check(pos, eps, alpha);
    CHECK(rep.dispersion_lo <= 1.0);
    CHECK(rep.dispersion_hi >= 1.0);
    CHECK(rep.uniformity_p > 0.001);
    CHECK(std::fabs(rep.mean_count - rep.expected_mean) < 3 * std::sqrt(rep.expected_mean / 400));
  }
  SUBCASE("eps = 1") {
    std::mt19937_64 rng(6);
    std::poisson_distribution<int> pois(1.0);
    std::vector<std::vector<double>> pos(500);
    for (auto& v : pos) v.assign(static_cast<std::size_t>(pois(rng)), 0.5);
    const auto rep = exceedance_ppp_check(pos, 1.0, alpha);
    CHECK(rep.expected_mean == 1.0);
    CHECK(std::fabs(rep.mean_count - 1.0) < 3 * std::sqrt(1.0 / 500));
  }
  SUBCASE("equally spaced fake traps") {
    std::vector<std::vector<double>> pos(200, {0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95});
    const auto rep = exceedance_ppp_check(pos, 0.5, alpha);
    CHECK(rep.uniformity_p > 0.99);
    CHECK(rep.dispersion == 0.0);
    CHECK(rep.dispersion_hi < 1.0);
  }
  CHECK_THROWS(exceedance_ppp_check(std::vector<std::vector<double>>(10), 0.5, alpha));
}

TEST_CASE("trap type frequencies") {
  const double lambda = 1.0;
  SUBCASE("symmetric simple-trap law") {
    const ConductanceLaw law(TailSpec(0.5, -2, 1, 1), TailSpec(0.5, -2, 1, 1), 0.5);
    REQUIRE(law.regime() == Regime::SimpleTraps);
    const auto rep = trap_type_frequencies(law, lambda, 300, 4000000, 7, {30});
    const auto& row = rep.rows.front();
    const double m = rep.exceedances * (row.well_fraction + row.wall_fraction - row.both_fraction);
    CHECK(std::fabs(row.q_hat - 0.5) < 3 * std::sqrt(0.25 / m));
  }
  SUBCASE("wells only") {
    const ConductanceLaw law(TailSpec(0.5, 0, 1, 1), TailSpec(0.9, 0, 1, 1), 0.5);
    const auto rep = trap_type_frequencies(law, lambda, 1e6, 2000000, 8, {1e2, 1e3, 1e4});
    CHECK(rep.rows.back().q_hat > 0.95);
    CHECK(std::fabs(rep.rows.back().q_hat - limiting_well_weight(law)) < 0.1);
  }
  SUBCASE("well-and-wall law: both large") {
    const ConductanceLaw law(TailSpec(0.5, 0, 1, 1), TailSpec(0.5, 0, 1, 1), 0.5);
    const double t = 1e8;
    const auto rep = trap_type_frequencies(law, lambda, t, 4000000, 9,
                                           {std::pow(t, 0.05), std::pow(t, 0.1), std::pow(t, 0.2)});
    CHECK(rep.rows[0].both_fraction > rep.rows[2].both_fraction);
    CHECK(rep.rows[0].both_fraction > 0.8);
    MESSAGE("both-large fractions: " << rep.rows[0].both_fraction << " " << rep.rows[1].both_fraction
                                     << " " << rep.rows[2].both_fraction);
  }
  SUBCASE("too few exceedances") {
    const ConductanceLaw law(TailSpec(0.5, 0, 1, 1), TailSpec(0.5, 0, 1, 1), 0.5);
    CHECK_THROWS_AS(trap_type_frequencies(law, lambda, 1e30, 1000, 1, {10}), NumericError);
  }
}
