#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "birc/env.hpp"
#include "birc/walk.hpp"

namespace birc {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kManifestSchema = "birc.manifest/1";

const std::vector<std::string>& experiment_names();

// Every field is filled after parse_config; to_json writes all of them back.
struct ExperimentConfig {
  std::string experiment = "simulate";
  nlohmann::json law;
  double lambda = 1.0;
  std::int64_t n = 1000;
  std::vector<std::int64_t> n_grid;
  std::uint64_t replicas = 100;
  std::uint64_t seed = 1;
  Engine engine = Engine::Direct;
  std::vector<double> checkpoints{1.0};
  std::string environment_mode = "annealed";  // or "quenched"
  std::int64_t reserve = 0;                   // 0 = 4 C_n
  double eps = 0.5;
  std::vector<double> h{2.0, 4.0, 8.0};
  std::int64_t j_window = 50;
  double t_threshold = 0.0;  // 0 = automatic
  std::int64_t k_max = 0;    // 0 = 2 ceil((6/lambda) q_n)
  std::vector<double> m_grid;
  std::uint64_t environments = 200;
  std::uint64_t trap_type_samples = 1000000;
  std::uint64_t zeta_samples = 20000;
  bool binary = false;
  unsigned threads = 1;
  std::string output = "runs";
  nlohmann::json assertions = nlohmann::json::object();
};

// Accepts a plain config or a manifest written by a previous run. Throws
// ConstructionError with a field-level message on invalid input.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

// FNV-1a 64 of the canonical config dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

struct RunResult {
  int exit_code;  // 0 ok, 2 failed assertion
  std::filesystem::path directory;
  nlohmann::json metrics;
  nlohmann::json assertion_results;
};

// Runs the configured experiment and writes
// <output>/<experiment>/<timestamp>-<hash>/{manifest.json, results.csv, ...}.
RunResult run(const ExperimentConfig& config);

// Runs fn(i) for i in [0, count) on `threads` workers. The first exception is
// rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

// One passage replica with the left reserve doubled on every LeftEdgeHit.
// The environment is extended from the same seed; each retry uses a fresh walk stream.
struct ReplicaOutcome {
  PassageRecord record;
  int attempts;
  std::int64_t reserve;
};
ReplicaOutcome simulate_replica(const ConductanceLaw& law, double lambda, std::int64_t n,
                                std::uint64_t env_seed, std::uint64_t walk_seed,
                                std::uint64_t replica_id, Engine engine,
                                const std::vector<double>& grid, std::int64_t reserve);

std::int64_t default_reserve(const ConductanceLaw& law, double lambda, double n);

}  // namespace birc
