#include "birc/env.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <json.hpp>

#include "birc/error.hpp"
#include "birc/rng.hpp"

namespace birc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuantileTol = 1e-13;
constexpr int kQuantileMaxIter = 200;

std::string describe(double alpha, double gamma, double k, double t_min) {
  std::ostringstream os;
  os << "TailSpec(alpha=" << alpha << ", gamma=" << gamma << ", k=" << k << ", t_min=" << t_min
     << ")";
  return os.str();
}

// Integral of f over [v0, inf) for an integrand with (at least) exponential decay.
template <class F>
double integrate_to_infinity(F f, double v0) {
  boost::math::quadrature::exp_sinh<double> integrator;
  double err = 0.0;
  const double val = integrator.integrate([&](double s) { return f(v0 + s); }, 0.0, kInf, 1e-12,
                                          &err);
  return val;
}

}  // namespace

const char* to_string(Regime r) {
  return r == Regime::SimpleTraps ? "SimpleTraps" : "WellAndWalls";
}

TailSpec::TailSpec(double alpha, double gamma, double k_scale, double t_min)
    : alpha_(alpha), gamma_(gamma), k_scale_(k_scale), t_min_(t_min) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConstructionError(describe(alpha, gamma, k_scale, t_min) + ": alpha must be > 0");
  }
  if (!(t_min >= 1.0) || !std::isfinite(t_min)) {
    throw ConstructionError(describe(alpha, gamma, k_scale, t_min) + ": t_min must be >= 1");
  }
  if (!(k_scale > 0.0) || !std::isfinite(k_scale)) {
    throw ConstructionError(describe(alpha, gamma, k_scale, t_min) + ": k_scale must be > 0");
  }
  if (!std::isfinite(gamma)) {
    throw ConstructionError(describe(alpha, gamma, k_scale, t_min) + ": gamma must be finite");
  }
  tail_mass_ = std::min(1.0, std::exp(log_survival_raw(std::log(t_min_))));

  // Non-increasing survival on a log grid of [t_min, t_min e^700].
  const double v0 = std::log(t_min_);
  double prev = 1.0;
  for (int i = 0; i <= 4096; ++i) {
    const double v = v0 + 700.0 * i / 4096.0;
    const double s = std::min(0.0, log_survival_raw(v));
    if (i > 0 && s > prev + 1e-12) {
      std::ostringstream os;
      os << describe(alpha, gamma, k_scale, t_min)
         << ": survival increases near t = exp(" << v << "); need gamma <= alpha (1 + log t)";
      throw ConstructionError(os.str());
    }
    prev = s;
  }
}

double TailSpec::log_survival_raw(double v) const {
  return std::log(k_scale_) + gamma_ * std::log1p(v) - alpha_ * v;
}

double TailSpec::slowly_varying(double t) const {
  return k_scale_ * std::pow(1.0 + std::log(t), gamma_);
}

double TailSpec::survival(double t) const {
  if (t <= t_min_) return tail_mass_;
  return std::min(1.0, std::exp(log_survival_raw(std::log(t))));
}

double TailSpec::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::invalid_argument("quantile: u must lie in (0,1)");
  }
  if (u >= tail_mass_) return t_min_;
  const double log_u = std::log(u);
  const double v0 = std::log(t_min_);
  if (gamma_ == 0.0) {
    return std::max(t_min_, std::exp((std::log(k_scale_) - log_u) / alpha_));
  }
  auto g = [&](double v) { return log_survival_raw(v) - log_u; };
  double lo = v0;
  double step = 1.0;
  double hi = v0 + step;
  while (g(hi) > 0.0) {
    lo = hi;
    step *= 2.0;
    hi = v0 + step;
    if (step > 1e6) throw NumericError("quantile: failed to bracket root");
  }
  for (int it = 0; it < kQuantileMaxIter && hi - lo > kQuantileTol * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(0.5 * (lo + hi));
}

bool TailSpec::tail_moment_finite(double a) const {
  if (a < alpha_) return true;
  if (a > alpha_) return false;
  return gamma_ < -1.0;
}

double TailSpec::tail_moment(double a) const {
  if (a == 0.0) return tail_mass_;
  if (!tail_moment_finite(a)) return kInf;
  const double v0 = std::log(t_min_);
  if (a > 0.0) {
    // Layer cake: t_min^a s0 + int_{t_min}^inf a t^{a-1} S(t) dt, in v = log t.
    // Split where the cap min(1, .) stops binding.
    double v_cap = v0;
    if (log_survival_raw(v0) > 0.0) {
      double lo = v0, hi = v0 + 1.0;
      while (log_survival_raw(hi) > 0.0) hi += (hi - v0);
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (log_survival_raw(mid) > 0.0 ? lo : hi) = mid;
      }
      v_cap = hi;
    }
    const double capped = std::exp(a * v_cap) - std::exp(a * v0);
    if (a == alpha_) {
      // Integrand a k (1 + v)^gamma with gamma < -1: no exponential decay, so integrate exactly.
      const double tail = a * k_scale_ * std::pow(1.0 + v_cap, gamma_ + 1.0) / -(gamma_ + 1.0);
      return std::exp(a * v0) * tail_mass_ + capped + tail;
    }
    const double tail = integrate_to_infinity(
        [&](double v) { return a * std::exp(a * v + log_survival_raw(v)); }, v_cap);
    return std::exp(a * v0) * tail_mass_ + capped + tail;
  }
  // a < 0: int_{t_min}^inf |a| t^{a-1} (s0 - S(t)) dt.
  return integrate_to_infinity(
      [&](double v) {
        const double s = std::min(1.0, std::exp(log_survival_raw(v)));
        return -a * std::exp(a * v) * (tail_mass_ - s);
      },
      v0);
}

ConductanceLaw::ConductanceLaw(TailSpec upper, TailSpec lower, double p_upper,
                               bool allow_ballistic)
    : upper_(upper), lower_(lower), p_upper_(p_upper), allow_ballistic_(allow_ballistic) {
  if (!(p_upper >= 0.0 && p_upper <= 1.0)) {
    throw ConstructionError("ConductanceLaw: p_upper must lie in [0,1]");
  }
  const double a = alpha();
  if (!allow_ballistic && !(a < 1.0)) {
    throw ConstructionError(
        "ConductanceLaw: min(alpha_0, alpha_inf) must be < 1 (sub-ballistic regime); "
        "set allow_ballistic for velocity checks");
  }
  if (p_upper > 0.0 && p_upper < 1.0 && upper_.alpha() == lower_.alpha() &&
      (upper_.gamma() == -1.0 || lower_.gamma() == -1.0)) {
    throw ConstructionError("ConductanceLaw: gamma_0 = -1 or gamma_inf = -1 with alpha_0 = alpha_inf");
  }
  const bool c_alpha_infinite = !moment_finite(a);
  const bool inv_alpha_infinite = !moment_finite(-a);
  regime_ = (c_alpha_infinite && inv_alpha_infinite) ? Regime::WellAndWalls : Regime::SimpleTraps;
}

double ConductanceLaw::alpha_infinity() const { return p_upper_ > 0.0 ? upper_.alpha() : kInf; }
double ConductanceLaw::alpha_zero() const { return p_upper_ < 1.0 ? lower_.alpha() : kInf; }

double ConductanceLaw::slowly_varying_infinity(double t) const {
  return p_upper_ * upper_.slowly_varying(t);
}

double ConductanceLaw::slowly_varying_zero(double t) const {
  return (1.0 - p_upper_) * lower_.slowly_varying(t);
}

double ConductanceLaw::body_prob_greater(double t) const {
  const double lo = body_low(), hi = body_high();
  if (hi <= lo) return t < lo ? 1.0 : 0.0;
  return std::clamp((hi - t) / (hi - lo), 0.0, 1.0);
}

double ConductanceLaw::body_prob_less(double e) const {
  const double lo = body_low(), hi = body_high();
  if (hi <= lo) return e > lo ? 1.0 : 0.0;
  return std::clamp((e - lo) / (hi - lo), 0.0, 1.0);
}

double ConductanceLaw::body_moment(double a) const {
  const double lo = body_low(), hi = body_high();
  if (hi <= lo) return std::pow(lo, a);
  if (a == -1.0) return (std::log(hi) - std::log(lo)) / (hi - lo);
  return (std::pow(hi, a + 1.0) - std::pow(lo, a + 1.0)) / ((a + 1.0) * (hi - lo));
}

double ConductanceLaw::prob_greater(double t) const {
  double up = 0.0, down = 0.0;
  if (p_upper_ > 0.0) {
    const double tail = t < upper_.t_min() ? upper_.tail_mass() : upper_.survival(t);
    up = tail + (1.0 - upper_.tail_mass()) * body_prob_greater(t);
  }
  if (p_upper_ < 1.0) {
    // Lower tail draws c = 1/Y lie below body_low().
    double tail = 0.0;
    if (t < body_low()) tail = lower_.tail_mass() - lower_.survival(1.0 / t);
    down = tail + (1.0 - lower_.tail_mass()) * body_prob_greater(t);
  }
  return p_upper_ * up + (1.0 - p_upper_) * down;
}

double ConductanceLaw::prob_less(double e) const {
  double up = 0.0, down = 0.0;
  if (p_upper_ > 0.0) {
    double tail = 0.0;
    if (e > body_high()) tail = upper_.tail_mass() - upper_.survival(e);
    up = tail + (1.0 - upper_.tail_mass()) * body_prob_less(e);
  }
  if (p_upper_ < 1.0) {
    const double tail = e > body_low() ? lower_.tail_mass() : lower_.survival(1.0 / e);
    down = tail + (1.0 - lower_.tail_mass()) * body_prob_less(e);
  }
  return p_upper_ * up + (1.0 - p_upper_) * down;
}

bool ConductanceLaw::moment_finite(double a) const {
  if (a > 0.0) return p_upper_ == 0.0 || upper_.tail_moment_finite(a);
  if (a < 0.0) return p_upper_ == 1.0 || lower_.tail_moment_finite(-a);
  return true;
}

double ConductanceLaw::moment(double a) const {
  if (!moment_finite(a)) return kInf;
  double total = 0.0;
  if (p_upper_ > 0.0) {
    total += p_upper_ * (upper_.tail_moment(a) + (1.0 - upper_.tail_mass()) * body_moment(a));
  }
  if (p_upper_ < 1.0) {
    total += (1.0 - p_upper_) *
             (lower_.tail_moment(-a) + (1.0 - lower_.tail_mass()) * body_moment(a));
  }
  return total;
}

double ConductanceLaw::draw(double u_component, double u_value) const {
  const bool from_upper = u_component < p_upper_;
  const TailSpec& side = from_upper ? upper_ : lower_;
  const double s0 = side.tail_mass();
  if (u_value < s0) {
    const double y = side.quantile(u_value);
    return from_upper ? y : 1.0 / y;
  }
  const double w = s0 < 1.0 ? (u_value - s0) / (1.0 - s0) : 0.5;
  return body_low() + w * (body_high() - body_low());
}

Environment::Environment(double lambda, std::int64_t left, std::vector<double> conductances,
                         std::uint64_t seed)
    : lambda_(lambda), left_(left), c_(std::move(conductances)), seed_(seed) {
  if (!std::isfinite(lambda)) throw ConstructionError("Environment: lambda must be finite");
  if (c_.empty()) throw ConstructionError("Environment: empty window");
  if (c_.size() > kMaxEnvironmentSites) {
    throw ResourceError("Environment: window of " + std::to_string(c_.size()) +
                        " sites exceeds the memory budget");
  }
  for (double v : c_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConstructionError("Environment: conductances must be positive and finite");
    }
  }
}

void Environment::require(std::int64_t lo, std::int64_t hi, const char* what) const {
  if (lo < left_ || hi > right()) {
    std::ostringstream os;
    os << what << ": sites [" << lo << ", " << hi << "] outside window [" << left_ << ", "
       << right() << "]";
    throw BoundaryError(os.str());
  }
}

double Environment::c(std::int64_t x) const {
  require(x, x, "c");
  return c_[static_cast<std::size_t>(x - left_)];
}

double Environment::tilted(std::int64_t x) const {
  return std::exp(lambda_ * static_cast<double>(x)) * c(x);
}

double Environment::omega(std::int64_t x) const {
  if (x <= left_) {
    throw BoundaryError("omega: site " + std::to_string(x) + " needs c_{x-1} left of the window");
  }
  return 1.0 / (1.0 + rho(x));
}

double Environment::rho_k(std::int64_t x, std::int64_t k) const {
  if (k < 0) throw std::invalid_argument("rho_k: k must be >= 0");
  require(x - 1, x + k, "rho_k");
  return std::exp(-lambda_ * static_cast<double>(k + 1)) *
         c_[static_cast<std::size_t>(x - 1 - left_)] / c_[static_cast<std::size_t>(x + k - left_)];
}

double site_conductance(const ConductanceLaw& law, std::uint64_t seed, std::int64_t x) {
  const std::uint64_t s = hash_combine(seed, static_cast<std::uint64_t>(Stream::Environment));
  return law.draw(counter_uniform(s, x, 0), counter_uniform(s, x, 1));
}

Environment sample_environment(const ConductanceLaw& law, double lambda, std::int64_t left,
                               std::int64_t right, std::uint64_t seed) {
  if (!(left <= 0 && 0 < right)) {
    throw std::invalid_argument("sample_environment: need left <= 0 < right");
  }
  const auto count = static_cast<std::uint64_t>(right - left + 1);
  if (count > kMaxEnvironmentSites) {
    throw ResourceError("sample_environment: window of " + std::to_string(count) +
                        " sites exceeds the memory budget");
  }
  std::vector<double> c(count);
  for (std::int64_t x = left; x <= right; ++x) {
    c[static_cast<std::size_t>(x - left)] = site_conductance(law, seed, x);
  }
  return Environment(lambda, left, std::move(c), seed);
}

void save_environment(const Environment& env, const std::string& base, EnvFormat format) {
  const std::string data_file = base + (format == EnvFormat::Csv ? ".csv" : ".bin");
  nlohmann::json header = {
      {"schema", "birc.environment/1"},
      {"lambda", env.lambda()},
      {"left", env.left()},
      {"right", env.right()},
      {"seed", env.seed()},
      {"format", format == EnvFormat::Csv ? "csv" : "binary"},
      {"data_file", data_file.substr(data_file.find_last_of('/') + 1)},
  };
  std::ofstream(base + ".json") << header.dump(2) << '\n';
  if (format == EnvFormat::Csv) {
    std::ofstream out(data_file);
    out << "c\n";
    char buf[32];
    for (double v : env.conductances()) {
      std::snprintf(buf, sizeof buf, "%.17g\n", v);
      out << buf;
    }
  } else {
    static_assert(std::endian::native == std::endian::little, "binary export assumes little-endian");
    std::ofstream out(data_file, std::ios::binary);
    const auto cs = env.conductances();
    out.write(reinterpret_cast<const char*>(cs.data()),
              static_cast<std::streamsize>(cs.size() * sizeof(double)));
  }
}

Environment load_environment(const std::string& header_path) {
  std::ifstream in(header_path);
  if (!in) throw std::runtime_error("load_environment: cannot open " + header_path);
  const auto header = nlohmann::json::parse(in);
  const std::string dir = header_path.substr(0, header_path.find_last_of('/') + 1);
  const std::string data_file = dir + header.at("data_file").get<std::string>();
  const auto left = header.at("left").get<std::int64_t>();
  const auto right = header.at("right").get<std::int64_t>();
  std::vector<double> c(static_cast<std::size_t>(right - left + 1));
  if (header.at("format") == "csv") {
    std::ifstream data(data_file);
    std::string line;
    std::getline(data, line);
    for (double& v : c) {
      if (!std::getline(data, line)) throw std::runtime_error("load_environment: short CSV");
      v = std::stod(line);
    }
  } else {
    std::ifstream data(data_file, std::ios::binary);
    data.read(reinterpret_cast<char*>(c.data()),
              static_cast<std::streamsize>(c.size() * sizeof(double)));
    if (!data) throw std::runtime_error("load_environment: short binary file");
  }
  return Environment(header.at("lambda").get<double>(), left, std::move(c),
                     header.at("seed").get<std::uint64_t>());
}

}  // namespace birc
