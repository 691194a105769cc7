// Command-line runner. Settings are resolved as flags > BIRC_* environment
// variables > config file.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "birc/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replicas;
  std::optional<std::string> out;
  std::optional<std::string> engine;
  std::optional<unsigned> threads;
};

void add_flags(CLI::App* app, Overrides& o, bool config_required) {
  auto* c = app->add_option("--config", o.config, "JSON config or manifest file");
  if (config_required) c->required();
  app->add_option("--seed", o.seed, "master seed (env BIRC_SEED)");
  app->add_option("--replicas", o.replicas, "number of replicas (env BIRC_REPLICAS)");
  app->add_option("--out", o.out, "output root directory (env BIRC_OUT)");
  app->add_option("--engine", o.engine, "direct or branching (env BIRC_ENGINE)")
      ->check(CLI::IsMember({"direct", "branching"}));
  app->add_option("--threads", o.threads, "worker threads (env BIRC_THREADS)");
}

std::optional<std::string> env_var(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

std::uint64_t parse_u64(const std::string& s, const char* name) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || s[0] == '-') {
    throw std::invalid_argument(std::string(name) + " must be a non-negative integer, got \"" + s + "\"");
  }
  return v;
}

nlohmann::json build_config(const std::string& experiment, const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw std::invalid_argument("cannot open config file " + o.config);
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("config " + o.config + " is not valid JSON: " + e.what());
    }
    if (j.contains("schema") && j.contains("config")) j = j.at("config");
  }
  if (!experiment.empty()) {
    if (j.contains("experiment") && j["experiment"] != experiment) {
      throw std::invalid_argument("config is for experiment \"" +
                                  j["experiment"].get<std::string>() + "\", not \"" + experiment +
                                  "\"");
    }
    j["experiment"] = experiment;
  }

  if (auto v = env_var("BIRC_SEED")) j["seed"] = parse_u64(*v, "BIRC_SEED");
  if (auto v = env_var("BIRC_REPLICAS")) j["replicas"] = parse_u64(*v, "BIRC_REPLICAS");
  if (auto v = env_var("BIRC_OUT")) j["output"] = *v;
  if (auto v = env_var("BIRC_ENGINE")) j["engine"] = *v;
  if (auto v = env_var("BIRC_THREADS")) j["threads"] = parse_u64(*v, "BIRC_THREADS");

  if (o.seed) j["seed"] = *o.seed;
  if (o.replicas) j["replicas"] = *o.replicas;
  if (o.out) j["output"] = *o.out;
  if (o.engine) j["engine"] = *o.engine;
  if (o.threads) j["threads"] = *o.threads;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Biased random walk among random conductances: simulation and diagnostics"};
  app.set_version_flag("--version", birc::kVersion);
  app.require_subcommand(1);

  Overrides o;
  std::string chosen;
  for (const auto& name : birc::experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    add_flags(sub, o, false);
    sub->callback([&chosen, name] { chosen = name; });
  }
  auto* run_sub = app.add_subcommand("run", "run the experiment named in the config");
  add_flags(run_sub, o, true);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = birc::parse_config(build_config(chosen, o));
    const auto result = birc::run(cfg);
    std::cout << result.directory.string() << '\n';
    for (const auto& [name, verdict] : result.assertion_results.items()) {
      if (!verdict["pass"].get<bool>()) {
        std::cerr << "assertion failed: " << name << " = " << verdict["value"].dump()
                  << " outside " << verdict["bounds"].dump() << '\n';
      }
    }
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "birc: " << e.what() << '\n';
    return 1;
  }
}
