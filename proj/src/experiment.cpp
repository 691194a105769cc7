#include "birc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/version.hpp>

#include "birc/error.hpp"
#include "birc/io.hpp"
#include "birc/limit.hpp"
#include "birc/network.hpp"
#include "birc/stats.hpp"
#include "birc/traps.hpp"

namespace birc {

namespace {

using nlohmann::json;

Engine parse_engine(const std::string& s) {
  if (s == "direct") return Engine::Direct;
  if (s == "branching") return Engine::Branching;
  throw ConstructionError("engine must be \"direct\" or \"branching\", got \"" + s + "\"");
}

template <class T>
T field(const json& j, const char* name, T fallback) {
  if (!j.contains(name) || j.at(name).is_null()) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ConstructionError(std::string("config field \"") + name + "\": " + e.what());
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConstructionError("config: " + msg);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

std::int64_t auto_k_max(const LimitParams& p) {
  return 2 * static_cast<std::int64_t>(std::ceil(p.k_bound()));
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"simulate", "scaling", "passage-dist",
                                                 "aging",    "traps",   "velocity"};
  return names;
}

std::int64_t default_reserve(const ConductanceLaw& law, double lambda, double n) {
  const auto plan = block_partition(std::max(n, 3.0), default_big_c(law.alpha(), lambda));
  return 4 * plan.c_n;
}

ExperimentConfig parse_config(const json& input) {
  const json& j = input.contains("schema") && input.contains("config") ? input.at("config") : input;
  require(j.is_object(), "top level must be a JSON object");
  ExperimentConfig c;
  c.experiment = field<std::string>(j, "experiment", c.experiment);
  const auto& names = experiment_names();
  require(std::find(names.begin(), names.end(), c.experiment) != names.end(),
          "unknown experiment \"" + c.experiment + "\"");

  require(j.contains("law"), "missing \"law\" (upper/lower tail specs and p_upper)");
  c.law = j.at("law");
  std::optional<ConductanceLaw> law;
  try {
    law.emplace(law_from_json(c.law));
  } catch (const json::exception& e) {
    throw ConstructionError(std::string("config field \"law\": ") + e.what());
  }
  c.law = to_json(*law);
  c.law.erase("regime");

  c.lambda = field(j, "lambda", c.lambda);
  require(std::isfinite(c.lambda) && c.lambda > 0.0, "lambda must be a positive number");
  c.n = field(j, "n", c.n);
  require(c.n >= 10, "n must be >= 10");
  c.n_grid = field(j, "n_grid", c.n_grid);
  if (c.experiment == "scaling" && c.n_grid.empty()) c.n_grid = {300, 1000, 3000};
  for (auto v : c.n_grid) require(v >= 10, "n_grid entries must be >= 10");
  if (c.experiment == "scaling") require(c.n_grid.size() >= 3, "scaling needs >= 3 n_grid values");
  c.replicas = field(j, "replicas", c.replicas);
  c.seed = field(j, "seed", c.seed);

  const bool branch_default = c.experiment == "scaling" || c.experiment == "passage-dist";
  c.engine = parse_engine(field<std::string>(j, "engine", branch_default ? "branching" : "direct"));
  if (c.experiment == "aging") {
    require(c.engine == Engine::Direct, "aging needs joint paths, i.e. engine \"direct\"");
  }
  c.checkpoints = field(j, "checkpoints", c.checkpoints);
  require(!c.checkpoints.empty(), "checkpoints must not be empty");
  for (std::size_t i = 0; i < c.checkpoints.size(); ++i) {
    require(c.checkpoints[i] > 0.0 && c.checkpoints[i] <= 1.0, "checkpoints must lie in (0,1]");
    require(i == 0 || c.checkpoints[i] >= c.checkpoints[i - 1], "checkpoints must be sorted");
  }
  c.environment_mode = field<std::string>(j, "environment_mode", c.environment_mode);
  require(c.environment_mode == "annealed" || c.environment_mode == "quenched",
          "environment_mode must be \"annealed\" or \"quenched\"");
  c.reserve = field(j, "reserve", c.reserve);
  require(c.reserve >= 0, "reserve must be >= 0 (0 selects 4 C_n)");
  c.eps = field(j, "eps", c.eps);
  require(c.eps > 0.0, "eps must be > 0");
  c.h = field(j, "h", c.h);
  for (double v : c.h) require(v > 1.0, "every h must be > 1");
  c.j_window = field(j, "j_window", c.j_window);
  require(c.j_window >= 0, "j_window must be >= 0");
  c.environments = field(j, "environments", c.environments);
  c.trap_type_samples = field(j, "trap_type_samples", c.trap_type_samples);
  c.zeta_samples = field(j, "zeta_samples", c.zeta_samples);
  require(c.zeta_samples >= 10000, "zeta_samples must be >= 10000");
  c.binary = field(j, "binary", c.binary);
  c.threads = field(j, "threads", c.threads);
  require(c.threads >= 1, "threads must be >= 1");
  c.output = field<std::string>(j, "output", c.output);
  c.t_threshold = field(j, "t_threshold", c.t_threshold);
  c.k_max = field(j, "k_max", c.k_max);
  c.m_grid = field(j, "m_grid", c.m_grid);
  if (j.contains("assert")) c.assertions = j.at("assert");
  require(c.assertions.is_object(), "\"assert\" must map metric names to {min, max}");
  for (const auto& [k, v] : c.assertions.items()) {
    require(v.is_object() && (v.contains("min") || v.contains("max")),
            "assertion \"" + k + "\" needs min and/or max");
  }

  if (c.experiment == "velocity") {
    require(law->allow_ballistic() && law->alpha() > 1.0,
            "velocity needs law.allow_ballistic = true and both tail exponents > 1");
  }
  if (c.experiment == "passage-dist" || c.experiment == "aging" || c.experiment == "traps") {
    require(law->alpha() < 1.0, c.experiment + " needs tail exponent alpha < 1");
  }
  if (c.experiment == "traps") {
    require(c.environments >= 100, "traps needs environments >= 100");
    const auto params = make_limit_params(*law, c.lambda, static_cast<double>(c.n));
    if (c.k_max == 0) c.k_max = auto_k_max(params);
    require(c.k_max >= static_cast<std::int64_t>(std::ceil(params.k_bound())),
            "k_max must be >= ceil((6/lambda) q_n)");
    if (c.t_threshold == 0.0) {
      // About 1000 expected exceedances among the draws.
      const double m = std::max(10.0, static_cast<double>(c.trap_type_samples) / 1000.0);
      c.t_threshold = make_limit_params(*law, c.lambda, m).d_n;
    }
    require(c.t_threshold > 1.0, "t_threshold must be > 1");
    if (c.m_grid.empty()) {
      c.m_grid = {std::pow(c.t_threshold, 0.25), std::pow(c.t_threshold, 0.5),
                  std::pow(c.t_threshold, 0.75)};
    }
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {{"experiment", c.experiment},
          {"law", c.law},
          {"lambda", c.lambda},
          {"n", c.n},
          {"n_grid", c.n_grid},
          {"replicas", c.replicas},
          {"seed", c.seed},
          {"engine", to_string(c.engine)},
          {"checkpoints", c.checkpoints},
          {"environment_mode", c.environment_mode},
          {"reserve", c.reserve},
          {"eps", c.eps},
          {"h", c.h},
          {"j_window", c.j_window},
          {"t_threshold", c.t_threshold},
          {"k_max", c.k_max},
          {"m_grid", c.m_grid},
          {"environments", c.environments},
          {"trap_type_samples", c.trap_type_samples},
          {"zeta_samples", c.zeta_samples},
          {"binary", c.binary},
          {"threads", c.threads},
          {"output", c.output},
          {"assert", c.assertions}};
}

std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("output");
  j.erase("threads");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, count); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; !failed && (i = next++) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

ReplicaOutcome simulate_replica(const ConductanceLaw& law, double lambda, std::int64_t n,
                                std::uint64_t env_seed, std::uint64_t walk_seed,
                                std::uint64_t replica_id, Engine engine,
                                const std::vector<double>& grid, std::int64_t reserve) {
  for (int attempt = 0;; ++attempt) {
    if (reserve > (std::int64_t{1} << 26)) {
      throw ResourceError("left reserve grew past 2^26 sites without containing the walk");
    }
    const auto env = sample_environment(law, lambda, -reserve, n, env_seed);
    const TransitionTable table(env);
    const std::uint64_t seed = attempt == 0 ? walk_seed : hash_combine(walk_seed, attempt);
    try {
      auto rec = engine == Engine::Direct ? direct_passage(table, n, seed, replica_id, grid)
                                          : branching_passage(table, n, seed, replica_id, grid);
      return {std::move(rec), attempt + 1, reserve};
    } catch (const LeftEdgeHit&) {
      reserve *= 2;
    }
  }
}

namespace {

struct Context {
  const ExperimentConfig& cfg;
  ConductanceLaw law;
  std::filesystem::path dir;
  json metrics = json::object();
  json extra = json::object();
};

std::uint64_t env_seed_for(const ExperimentConfig& cfg, std::uint64_t replica) {
  return stream_seed(cfg.seed, cfg.environment_mode == "quenched" ? 0 : replica,
                     Stream::Environment);
}

std::int64_t reserve_for(const Context& ctx, double n) {
  return ctx.cfg.reserve > 0 ? ctx.cfg.reserve : default_reserve(ctx.law, ctx.cfg.lambda, n);
}

std::vector<PassageRecord> passages(const Context& ctx, std::int64_t n, std::uint64_t salt,
                                    int* retries) {
  const auto& cfg = ctx.cfg;
  std::vector<PassageRecord> out(cfg.replicas);
  std::vector<int> attempts(cfg.replicas, 1);
  const std::uint64_t walk_seed = hash_combine(cfg.seed, salt);
  const std::int64_t reserve = reserve_for(ctx, static_cast<double>(n));
  parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
    auto res = simulate_replica(ctx.law, cfg.lambda, n, hash_combine(env_seed_for(cfg, r), salt),
                                walk_seed, r, cfg.engine, cfg.checkpoints, reserve);
    out[r] = std::move(res.record);
    attempts[r] = res.attempts;
  });
  if (retries) {
    for (int a : attempts) *retries += a - 1;
  }
  return out;
}

void run_simulate(Context& ctx) {
  int retries = 0;
  const auto recs = passages(ctx, ctx.cfg.n, 0, &retries);
  std::ofstream out(ctx.dir / "results.csv");
  write_passage_csv(out, recs);
  if (ctx.cfg.binary && !recs.empty()) write_passage_binary(ctx.dir / "samples", recs);
  ctx.metrics["replicas"] = recs.size();
  ctx.metrics["left_edge_retries"] = retries;
  if (!recs.empty()) {
    std::vector<double> t;
    for (const auto& r : recs) t.push_back(static_cast<double>(r.total_steps));
    const auto s = summarize(t, {0.1, 0.5, 0.9});
    ctx.metrics["mean_T"] = s.mean;
    ctx.metrics["median_T"] = s.quantiles[1];
  }
}

void run_scaling(Context& ctx) {
  const auto& cfg = ctx.cfg;
  require(cfg.replicas > 0, "scaling needs replicas > 0");
  std::vector<std::pair<double, double>> t_rows, x_rows;
  std::vector<double> mean_t;
  for (std::size_t k = 0; k < cfg.n_grid.size(); ++k) {
    const std::int64_t n = cfg.n_grid[k];
    const auto recs = passages(ctx, n, k, nullptr);
    std::vector<double> t;
    for (const auto& r : recs) t.push_back(static_cast<double>(r.total_steps));
    t_rows.emplace_back(static_cast<double>(n), median(t));
    mean_t.push_back(summarize(t, {}).mean);

    // Position proxy: |X_n| from direct walks of n steps.
    std::vector<double> x(cfg.replicas);
    const std::int64_t reserve = reserve_for(ctx, static_cast<double>(n));
    parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
      std::int64_t res = std::max(reserve, n);
      const std::uint64_t es = hash_combine(env_seed_for(cfg, r), 1000 + k);
      for (int attempt = 0;; ++attempt) {
        const auto env = sample_environment(ctx.law, cfg.lambda, -res, n + 1, es);
        Rng rng = make_rng(hash_combine(cfg.seed, 2000 + k + (std::uint64_t(attempt) << 32)), r,
                           Stream::Walk);
        try {
          const auto pos = direct_positions(TransitionTable(env), {std::uint64_t(n)}, rng);
          x[r] = static_cast<double>(std::max<std::int64_t>(pos[0], 1));
          return;
        } catch (const LeftEdgeHit&) {
          res *= 2;
        }
      }
    });
    x_rows.emplace_back(static_cast<double>(n), median(x));
  }
  const auto st = loglog_slope(t_rows);
  const auto sx = loglog_slope(x_rows);
  std::ofstream out(ctx.dir / "results.csv");
  out << "n,median_T,mean_T,median_X,slope_T,slope_T_se,slope_X,slope_X_se\n";
  for (std::size_t k = 0; k < t_rows.size(); ++k) {
    out << cfg.n_grid[k] << ',' << fmt(t_rows[k].second) << ',' << fmt(mean_t[k]) << ','
        << fmt(x_rows[k].second) << ',' << fmt(st.slope) << ',' << fmt(st.std_error) << ','
        << fmt(sx.slope) << ',' << fmt(sx.std_error) << '\n';
  }
  ctx.metrics["slope_T"] = st.slope;
  ctx.metrics["slope_T_se"] = st.std_error;
  ctx.metrics["slope_X"] = sx.slope;
  ctx.metrics["slope_X_se"] = sx.std_error;
  ctx.metrics["predicted_slope_T"] = 1.0 / ctx.law.alpha();
  ctx.metrics["predicted_slope_X"] = ctx.law.alpha();
}

void run_passage_dist(Context& ctx) {
  const auto& cfg = ctx.cfg;
  require(cfg.replicas > 0, "passage-dist needs replicas > 0");
  const auto params = make_limit_params(ctx.law, cfg.lambda, static_cast<double>(cfg.n));
  ZetaMoment ez;
  if (ctx.law.regime() == Regime::WellAndWalls) {
    ez = e_zeta_alpha(ZetaLaw(ctx.law, cfg.lambda), cfg.zeta_samples, cfg.seed);
  } else {
    ez = e_zeta_alpha(ZetaLaw(ctx.law, cfg.lambda, ZetaIndexing::NetworkConsistent),
                      cfg.zeta_samples, cfg.seed);
  }
  const double alpha = params.alpha;
  const double constant = theorem_constant(alpha, ez.mean);
  const auto recs = passages(ctx, cfg.n, 0, nullptr);
  std::vector<double> scaled, reference;
  Rng rng = make_rng(cfg.seed, 0, Stream::Limit);
  for (const auto& r : recs) {
    scaled.push_back(static_cast<double>(r.total_steps) / params.d_n);
    reference.push_back(constant * stable_increment(alpha, 1.0, rng));
  }
  const auto ks = ks_two_sample(scaled, reference);
  std::ofstream out(ctx.dir / "results.csv");
  out << "replica_id,scaled_passage,reference\n";
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    out << i << ',' << fmt(scaled[i]) << ',' << fmt(reference[i]) << '\n';
  }
  ctx.metrics["d_n"] = params.d_n;
  ctx.metrics["e_zeta_alpha"] = ez.mean;
  ctx.metrics["e_zeta_alpha_se"] = ez.std_error;
  ctx.metrics["theorem_constant"] = constant;
  ctx.metrics["ks_statistic"] = ks.statistic;
  ctx.metrics["ks_p_value"] = ks.p_value;
  ctx.metrics["median_scaled"] = median(scaled);
  ctx.metrics["median_reference"] = median(reference);
  if (ctx.law.regime() == Regime::WellAndWalls) {
    // k-distant traps add e^{-lambda alpha k} psi(t) t^-alpha each; normalizing
    // by the summed tail instead of psi alone.
    const double f = 1.0 / (1.0 - std::exp(-cfg.lambda * alpha));
    const auto psi = params.psi;
    const double d_k = solve_dn([&](double t) { return f * psi(t); }, alpha,
                                static_cast<double>(cfg.n), params.d_n);
    std::vector<double> rescaled;
    for (double v : scaled) rescaled.push_back(v * params.d_n / d_k);
    ctx.metrics["d_n_k_summed"] = d_k;
    ctx.metrics["ks_statistic_k_summed"] = ks_two_sample(rescaled, reference).statistic;
    ctx.metrics["median_scaled_k_summed"] = median(rescaled);
  }
}

void run_aging(Context& ctx) {
  const auto& cfg = ctx.cfg;
  require(cfg.replicas > 0, "aging needs replicas > 0");
  const auto n = static_cast<std::uint64_t>(cfg.n);
  std::set<std::uint64_t> time_set{n};
  for (double h : cfg.h) time_set.insert(static_cast<std::uint64_t>(std::floor(h * cfg.n)));
  const std::vector<std::uint64_t> times(time_set.begin(), time_set.end());
  const auto right = static_cast<std::int64_t>(times.back()) + 1;
  const std::int64_t reserve = reserve_for(ctx, static_cast<double>(cfg.n));

  std::vector<Trajectory> paths(cfg.replicas);
  parallel_for(cfg.replicas, cfg.threads, [&](std::size_t r) {
    std::int64_t res = reserve;
    for (int attempt = 0;; ++attempt) {
      const auto env = sample_environment(ctx.law, cfg.lambda, -res, right, env_seed_for(cfg, r));
      Rng rng = make_rng(hash_combine(cfg.seed, std::uint64_t(attempt)), r, Stream::Walk);
      try {
        paths[r] = {Engine::Direct, times, direct_positions(TransitionTable(env), times, rng)};
        return;
      } catch (const LeftEdgeHit&) {
        res *= 2;
      }
    }
  });
  std::ofstream out(ctx.dir / "results.csv");
  out << "h,estimate,arcsine,abs_error\n";
  double worst = 0.0;
  for (double h : cfg.h) {
    const double est = aging_estimator(paths, n, h, cfg.j_window);
    const double pred = arcsine_aging(ctx.law.alpha(), h);
    worst = std::max(worst, std::fabs(est - pred));
    out << fmt(h) << ',' << fmt(est) << ',' << fmt(pred) << ',' << fmt(std::fabs(est - pred))
        << '\n';
    ctx.metrics["estimate_h" + fmt(h)] = est;
  }
  ctx.metrics["max_abs_error"] = worst;
  std::ofstream traj(ctx.dir / "positions.csv");
  traj << "replica_id,time,position\n";
  for (std::size_t r = 0; r < paths.size(); ++r) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      traj << r << ',' << times[i] << ',' << paths[r].positions[i] << '\n';
    }
  }
}

void run_traps(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto params = make_limit_params(ctx.law, cfg.lambda, static_cast<double>(cfg.n));
  const std::int64_t c_n = params.blocks.c_n;
  std::vector<CensusReport> reports(cfg.environments);
  std::vector<std::vector<double>> deep(cfg.environments);
  parallel_for(cfg.environments, cfg.threads, [&](std::size_t e) {
    const auto env = sample_environment(ctx.law, cfg.lambda, -2 * c_n, cfg.n + 2 * c_n,
                                        stream_seed(cfg.seed, e, Stream::Environment));
    reports[e] = census(env, params, cfg.k_max);
    std::set<std::int64_t> xs;
    for (const auto& t : detect_traps(env, params, cfg.k_max)) {
      if (t.depth > cfg.eps * params.d_n) xs.insert(t.x);
    }
    for (auto x : xs) deep[e].push_back(static_cast<double>(x) / static_cast<double>(cfg.n));
  });

  std::ofstream out(ctx.dir / "results.csv");
  out << "environment,trap_count,min_pairwise_distance,max_depth,max_k,all_good,h_event_count,"
         "isolation_violation,depth_ok,k_ok\n";
  double iso = 0, depth = 0, kk = 0, good = 0, h_free = 0;
  for (std::size_t e = 0; e < reports.size(); ++e) {
    const auto& r = reports[e];
    const bool depth_ok = r.max_depth <= r.depth_bound;
    const bool k_ok = static_cast<double>(r.max_k) < r.k_bound;
    iso += !r.isolation_violation;
    depth += depth_ok;
    kk += k_ok;
    good += r.all_good;
    h_free += r.h_event_count == 0;
    out << e << ',' << r.trap_count << ','
        << (r.min_pairwise_distance ? std::to_string(*r.min_pairwise_distance) : "") << ','
        << fmt(r.max_depth) << ',' << r.max_k << ',' << r.all_good << ',' << r.h_event_count << ','
        << r.isolation_violation << ',' << depth_ok << ',' << k_ok << '\n';
  }
  const double m = static_cast<double>(reports.size());
  ctx.metrics["isolation_rate"] = iso / m;
  ctx.metrics["depth_rate"] = depth / m;
  ctx.metrics["k_rate"] = kk / m;
  ctx.metrics["all_good_rate"] = good / m;
  ctx.metrics["h_free_rate"] = h_free / m;
  ctx.metrics["d_n"] = params.d_n;

  const auto ppp = exceedance_ppp_check(deep, cfg.eps, params.alpha);
  ctx.metrics["ppp_mean_count"] = ppp.mean_count;
  ctx.metrics["ppp_expected_mean"] = ppp.expected_mean;
  ctx.metrics["ppp_dispersion"] = ppp.dispersion;
  ctx.metrics["ppp_dispersion_lo"] = ppp.dispersion_lo;
  ctx.metrics["ppp_dispersion_hi"] = ppp.dispersion_hi;
  ctx.metrics["ppp_uniformity_p"] = ppp.uniformity_p;

  const auto types = trap_type_frequencies(ctx.law, cfg.lambda, cfg.t_threshold,
                                           cfg.trap_type_samples, cfg.seed, cfg.m_grid);
  const double q_pred = limiting_well_weight(ctx.law);
  ctx.metrics["q_hat"] = types.rows.empty() ? json(nullptr) : json(types.rows.back().q_hat);
  ctx.metrics["q_predicted"] = std::isnan(q_pred) ? json(nullptr) : json(q_pred);
  ctx.metrics["both_large_fraction"] =
      types.rows.empty() ? json(nullptr) : json(types.rows.back().both_fraction);
  ctx.extra["ppp"] = to_json(ppp);
  ctx.extra["trap_types"] = to_json(types);
  std::ofstream(ctx.dir / "report.json") << json{{"ppp", to_json(ppp)},
                                                 {"trap_types", to_json(types)},
                                                 {"census_rates", ctx.metrics}}
                                                .dump(2)
                                         << '\n';
}

void run_velocity(Context& ctx) {
  const auto& cfg = ctx.cfg;
  require(cfg.replicas > 0, "velocity needs replicas > 0");
  const double e_c = ctx.law.moment(1.0), e_inv = ctx.law.moment(-1.0);
  const double q = std::exp(-cfg.lambda);
  const double mean_s = 1.0 + 2.0 * e_c * e_inv * q / (1.0 - q);
  const auto recs = passages(ctx, cfg.n, 0, nullptr);
  std::vector<double> t;
  for (const auto& r : recs) t.push_back(static_cast<double>(r.total_steps));
  const auto s = summarize(t, {0.5});
  const double v_emp = static_cast<double>(cfg.n) / s.mean;
  std::ofstream out(ctx.dir / "results.csv");
  out << "replica_id,T_n,velocity\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    out << i << ',' << fmt(t[i]) << ',' << fmt(static_cast<double>(cfg.n) / t[i]) << '\n';
  }
  ctx.metrics["velocity_theory"] = 1.0 / mean_s;
  ctx.metrics["velocity_empirical"] = v_emp;
  ctx.metrics["relative_error"] = std::fabs(v_emp * mean_s - 1.0);
}

}  // namespace

RunResult run(const ExperimentConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  const std::string stamp = utc_timestamp();
  const std::string hash = config_hash(cfg);
  std::filesystem::path dir = std::filesystem::path(cfg.output) / cfg.experiment / (stamp + "-" + hash);
  for (int k = 1; std::filesystem::exists(dir); ++k) {
    dir = std::filesystem::path(cfg.output) / cfg.experiment /
          (stamp + "-" + hash + "-" + std::to_string(k));
  }
  std::filesystem::create_directories(dir);

  Context ctx{cfg, law_from_json(cfg.law), dir};
  if (cfg.replicas > 0 || cfg.experiment == "traps") {
    if (cfg.experiment == "simulate") run_simulate(ctx);
    if (cfg.experiment == "scaling") run_scaling(ctx);
    if (cfg.experiment == "passage-dist") run_passage_dist(ctx);
    if (cfg.experiment == "aging") run_aging(ctx);
    if (cfg.experiment == "traps") run_traps(ctx);
    if (cfg.experiment == "velocity") run_velocity(ctx);
  }

  json verdicts = json::object();
  bool ok = true;
  for (const auto& [name, bounds] : cfg.assertions.items()) {
    bool pass = ctx.metrics.contains(name) && ctx.metrics[name].is_number();
    const double v = pass ? ctx.metrics[name].get<double>() : std::nan("");
    if (pass && bounds.contains("min")) pass = v >= bounds["min"].get<double>();
    if (pass && bounds.contains("max")) pass = v <= bounds["max"].get<double>();
    verdicts[name] = {{"value", ctx.metrics.contains(name) ? ctx.metrics[name] : json(nullptr)},
                      {"bounds", bounds},
                      {"pass", pass}};
    ok = ok && pass;
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json manifest = {
      {"schema", kManifestSchema},
      {"experiment", cfg.experiment},
      {"config", to_json(cfg)},
      {"config_hash", hash},
      {"versions",
       {{"birc", kVersion}, {"compiler", __VERSION__}, {"boost", BOOST_LIB_VERSION}}},
      {"started_utc", stamp},
      {"wall_time_seconds", wall},
      {"metrics", ctx.metrics},
      {"assertions", verdicts},
      {"status", ok ? "ok" : "assertion_failed"},
  };
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  return {ok ? 0 : 2, dir, ctx.metrics, verdicts};
}

}  // namespace birc
