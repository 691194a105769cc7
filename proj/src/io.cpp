#include "birc/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include "birc/error.hpp"

namespace birc {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_passage_csv(std::ostream& out, const std::vector<PassageRecord>& records) {
  out << "replica_id,seed,engine,joint_law,n,u,target,time,total_steps,max_backtrack\n";
  for (const auto& r : records) {
    for (const auto& c : r.checkpoints) {
      out << r.replica_id << ',' << r.seed << ',' << to_string(r.engine) << ','
          << (r.joint_law ? 1 : 0) << ',' << r.n << ',' << fmt(c.u) << ',' << c.target << ','
          << c.time << ',' << r.total_steps << ',';
      if (r.max_backtrack) out << *r.max_backtrack;
      out << '\n';
    }
  }
}

void write_passage_binary(const std::filesystem::path& base,
                          const std::vector<PassageRecord>& records) {
  static_assert(std::endian::native == std::endian::little, "binary export assumes little-endian");
  std::filesystem::path bin = base;
  bin += ".bin";
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + bin.string());
  const std::size_t k = records.empty() ? 0 : records.front().checkpoints.size();
  auto put = [&](std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  for (const auto& r : records) {
    if (r.checkpoints.size() != k) throw std::invalid_argument("records use different grids");
    put(r.n);
    put(static_cast<std::int64_t>(r.total_steps));
    put(r.max_backtrack.value_or(-1));
    for (const auto& c : r.checkpoints) put(static_cast<std::int64_t>(c.time));
  }
  nlohmann::json grid = nlohmann::json::array();
  if (!records.empty()) {
    for (const auto& c : records.front().checkpoints) grid.push_back(c.u);
  }
  nlohmann::json header = {
      {"schema", "birc.passage-batch/1"},
      {"records", records.size()},
      {"fields_per_record", 3 + k},
      {"layout", "int64 little-endian: n, total_steps, max_backtrack (-1 = n/a), checkpoint times"},
      {"engine", records.empty() ? "" : to_string(records.front().engine)},
      {"grid", grid},
      {"data_file", bin.filename().string()},
  };
  std::filesystem::path js = base;
  js += ".json";
  std::ofstream(js) << header.dump(2) << '\n';
}

void write_traps_csv(std::ostream& out, const std::vector<TrapRecord>& traps) {
  out << "x,kind,k,depth,in_good_triblock,triblock_index,atypical\n";
  for (const auto& t : traps) {
    out << t.x << ',' << to_string(t.kind) << ',' << t.k << ',' << fmt(t.depth) << ','
        << t.in_good_triblock << ',' << t.triblock_index << ',' << t.atypical << '\n';
  }
}

void write_aging_curve_csv(std::ostream& out, double alpha, const std::vector<double>& h) {
  out << "h,value\n";
  for (double v : h) out << fmt(v) << ',' << fmt(arcsine_aging(alpha, v)) << '\n';
}

void write_samples_csv(std::ostream& out, const std::string& column,
                       const std::vector<double>& samples) {
  out << column << '\n';
  for (double v : samples) out << fmt(v) << '\n';
}

nlohmann::json to_json(const TailSpec& t) {
  return {{"alpha", t.alpha()}, {"gamma", t.gamma()}, {"k_scale", t.k_scale()}, {"t_min", t.t_min()}};
}

nlohmann::json to_json(const ConductanceLaw& law) {
  return {{"upper", to_json(law.upper())},
          {"lower", to_json(law.lower())},
          {"p_upper", law.p_upper()},
          {"allow_ballistic", law.allow_ballistic()},
          {"regime", to_string(law.regime())}};
}

nlohmann::json to_json(const PassageRecord& r) {
  nlohmann::json cps = nlohmann::json::array();
  for (const auto& c : r.checkpoints) cps.push_back({{"u", c.u}, {"target", c.target}, {"time", c.time}});
  nlohmann::json j = {{"n", r.n},
                      {"checkpoints", cps},
                      {"total_steps", r.total_steps},
                      {"engine", to_string(r.engine)},
                      {"joint_law", r.joint_law},
                      {"replica_id", r.replica_id},
                      {"seed", r.seed}};
  j["max_backtrack"] = r.max_backtrack ? nlohmann::json(*r.max_backtrack) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const TrapRecord& t) {
  return {{"x", t.x},
          {"kind", to_string(t.kind)},
          {"k", t.k},
          {"depth", t.depth},
          {"in_good_triblock", t.in_good_triblock},
          {"triblock_index", t.triblock_index},
          {"atypical", t.atypical}};
}

nlohmann::json to_json(const CensusReport& c) {
  nlohmann::json j = {{"trap_count", c.trap_count},
                      {"max_depth", c.max_depth},
                      {"max_k", c.max_k},
                      {"all_good", c.all_good},
                      {"h_event_count", c.h_event_count},
                      {"isolation_violation", c.isolation_violation},
                      {"isolation_bound", c.isolation_bound},
                      {"depth_bound", c.depth_bound},
                      {"k_bound", c.k_bound}};
  j["min_pairwise_distance"] =
      c.min_pairwise_distance ? nlohmann::json(*c.min_pairwise_distance) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const KsResult& k) {
  return {{"statistic", k.statistic}, {"p_value", k.p_value}, {"permutation", k.permutation}};
}

nlohmann::json to_json(const PppReport& p) {
  return {{"environments", p.environments},   {"total_points", p.total_points},
          {"mean_count", p.mean_count},       {"expected_mean", p.expected_mean},
          {"dispersion", p.dispersion},       {"dispersion_ci", {p.dispersion_lo, p.dispersion_hi}},
          {"uniformity_chi2", p.uniformity_chi2}, {"uniformity_p", p.uniformity_p},
          {"bins", p.bins}};
}

nlohmann::json to_json(const TrapTypeReport& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"m", r.m},
                    {"well_fraction", r.well_fraction},
                    {"wall_fraction", r.wall_fraction},
                    {"both_fraction", r.both_fraction},
                    {"q_hat", r.q_hat}});
  }
  return {{"draws", t.draws}, {"exceedances", t.exceedances}, {"threshold", t.threshold}, {"rows", rows}};
}

nlohmann::json to_json(const ZetaMoment& z) {
  return {{"mean", z.mean}, {"std_error", z.std_error}, {"tail_index", z.tail_index}};
}

nlohmann::json to_json(const SampleSummary& s) {
  nlohmann::json j = {{"n", s.n},
                      {"mean", s.mean},
                      {"variance", s.variance},
                      {"probs", s.probs},
                      {"quantiles", s.quantiles}};
  if (s.hill) j["hill"] = {{"k", *s.hill_k}, {"index", s.hill->index}, {"gamma", s.hill->gamma}};
  return j;
}

TailSpec tail_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("alpha")) {
    throw ConstructionError("tail needs at least an \"alpha\" field");
  }
  return TailSpec(j.at("alpha").get<double>(), j.value("gamma", 0.0), j.value("k_scale", 1.0),
                  j.value("t_min", 1.0));
}

ConductanceLaw law_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConstructionError("law must be a JSON object");
  const double p = j.value("p_upper", 0.5);
  const nlohmann::json unused = {{"alpha", 1.0}};
  const auto& up = j.contains("upper") ? j.at("upper") : (p == 0.0 ? unused : j.at("upper"));
  const auto& lo = j.contains("lower") ? j.at("lower") : (p == 1.0 ? unused : j.at("lower"));
  return ConductanceLaw(tail_from_json(up), tail_from_json(lo), p, j.value("allow_ballistic", false));
}

}  // namespace birc
