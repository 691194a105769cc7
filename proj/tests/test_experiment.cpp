#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "birc/error.hpp"
#include "birc/experiment.hpp"
#include "birc/stats.hpp"

using namespace birc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("birc_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json base_law() {
  return {{"upper", {{"alpha", 0.5}}}, {"lower", {{"alpha", 0.5}}}, {"p_upper", 0.5}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

int cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + BIRC_CLI_PATH + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config parsing fills every default") {
  const auto cfg = parse_config({{"experiment", "simulate"}, {"law", base_law()}});
  const auto j = to_json(cfg);
  for (const char* key : {"lambda", "n", "replicas", "seed", "engine", "checkpoints", "reserve",
                          "eps", "h", "j_window", "output", "threads"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["law"]["upper"]["gamma"] == 0.0);
  CHECK(j["law"]["allow_ballistic"] == false);
  // Round trip through the written form.
  CHECK(to_json(parse_config(j)) == j);
  CHECK(config_hash(parse_config(j)) == config_hash(cfg));

  const auto traps = parse_config({{"experiment", "traps"}, {"law", base_law()}, {"n", 1000}});
  CHECK(traps.k_max > 0);
  CHECK(traps.t_threshold > 1);
  CHECK(traps.m_grid.size() == 3);
}

TEST_CASE("config validation") {
  auto bad = [](json j) { CHECK_THROWS_AS(parse_config(j), ConstructionError); };
  bad({{"experiment", "nope"}, {"law", base_law()}});
  bad({{"experiment", "simulate"}});
  bad({{"experiment", "simulate"}, {"law", base_law()}, {"lambda", -1}});
  bad({{"experiment", "simulate"}, {"law", base_law()}, {"n", 3}});
  bad({{"experiment", "simulate"}, {"law", base_law()}, {"engine", "warp"}});
  bad({{"experiment", "simulate"}, {"law", base_law()}, {"checkpoints", {0.5, 0.2}}});
  bad({{"experiment", "aging"}, {"law", base_law()}, {"engine", "branching"}});
  bad({{"experiment", "velocity"}, {"law", base_law()}});
  bad({{"experiment", "scaling"}, {"law", base_law()}, {"n_grid", {100, 200}}});
  bad({{"experiment", "simulate"}, {"law", base_law()}, {"replicas", "many"}});
  json law = base_law();
  law["upper"]["alpha"] = -1;
  bad({{"experiment", "simulate"}, {"law", law}});
}

TEST_CASE("simulate with no replicas writes only the manifest") {
  const auto dir = scratch("empty");
  auto cfg = parse_config({{"experiment", "simulate"}, {"law", base_law()}, {"replicas", 0},
                           {"output", dir.string()}});
  const auto res = run(cfg);
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(res.directory / "manifest.json"));
  CHECK_FALSE(fs::exists(res.directory / "results.csv"));
  const auto manifest = json::parse(slurp(res.directory / "manifest.json"));
  CHECK(manifest["schema"] == kManifestSchema);
  CHECK(manifest["status"] == "ok");
}

TEST_CASE("runs are reproducible from config and from manifest") {
  const auto dir = scratch("repro");
  // Light tails keep the direct engine cheap; the heavy law is covered by the branching run below.
  const json light = {{"upper", {{"alpha", 3.0}}}, {"lower", {{"alpha", 3.0}}}, {"p_upper", 0.5},
                      {"allow_ballistic", true}};
  json j = {{"experiment", "simulate"}, {"law", light}, {"replicas", 30},  {"n", 200},
            {"checkpoints", {0.25, 0.5, 1.0}}, {"output", dir.string()}, {"binary", true}};
  const auto a = run(parse_config(j));
  const auto b = run(parse_config(j));
  CHECK(a.directory != b.directory);
  CHECK(slurp(a.directory / "results.csv") == slurp(b.directory / "results.csv"));
  CHECK(slurp(a.directory / "samples.bin") == slurp(b.directory / "samples.bin"));
  const auto manifest = json::parse(slurp(a.directory / "manifest.json"));
  const auto c = run(parse_config(manifest));
  CHECK(slurp(a.directory / "results.csv") == slurp(c.directory / "results.csv"));

  // Threads do not change results.
  j["threads"] = 3;
  const auto d = run(parse_config(j));
  CHECK(slurp(a.directory / "results.csv") == slurp(d.directory / "results.csv"));

  const auto rows = read_csv(a.directory / "results.csv");
  CHECK(rows.size() == 1 + 30 * 3);
  CHECK(rows[0][0] == "replica_id");

  json heavy = {{"experiment", "simulate"}, {"law", base_law()}, {"replicas", 30}, {"n", 2000},
                {"engine", "branching"}, {"output", dir.string()}};
  const auto e = run(parse_config(heavy));
  heavy["threads"] = 2;
  const auto f = run(parse_config(heavy));
  CHECK(slurp(e.directory / "results.csv") == slurp(f.directory / "results.csv"));
}

TEST_CASE("scaling table slope equals the slope of its own rows") {
  const auto dir = scratch("scaling");
  const auto res = run(parse_config({{"experiment", "scaling"}, {"law", base_law()},
                                     {"n_grid", {1000, 10000, 100000}}, {"replicas", 12},
                                     {"output", dir.string()}}));
  const auto rows = read_csv(res.directory / "results.csv");
  REQUIRE(rows.size() == 4);
  REQUIRE(rows[0][1] == "median_T");
  REQUIRE(rows[0][4] == "slope_T");
  std::vector<std::pair<double, double>> t_rows, x_rows;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    t_rows.emplace_back(std::stod(rows[r][0]), std::stod(rows[r][1]));
    x_rows.emplace_back(std::stod(rows[r][0]), std::stod(rows[r][3]));
  }
  CHECK(std::stod(rows[1][4]) == loglog_slope(t_rows).slope);
  CHECK(std::stod(rows[1][6]) == loglog_slope(x_rows).slope);
  CHECK(res.metrics["slope_T"].get<double>() == loglog_slope(t_rows).slope);
}

TEST_CASE("assertions set exit code 2") {
  const auto dir = scratch("assert");
  json j = {{"experiment", "simulate"}, {"law", base_law()}, {"replicas", 5},
            {"n", 50}, {"output", dir.string()}};
  j["assert"] = {{"replicas", {{"min", 5}, {"max", 5}}}};
  CHECK(run(parse_config(j)).exit_code == 0);
  j["assert"] = {{"replicas", {{"min", 6}}}};
  const auto res = run(parse_config(j));
  CHECK(res.exit_code == 2);
  CHECK(json::parse(slurp(res.directory / "manifest.json"))["status"] == "assertion_failed");
  j["assert"] = {{"no_such_metric", {{"max", 1}}}};
  CHECK(run(parse_config(j)).exit_code == 2);
}

TEST_CASE("other experiments run end to end") {
  const auto dir = scratch("all");
  SUBCASE("aging") {
    const auto res = run(parse_config({{"experiment", "aging"}, {"law", base_law()}, {"n", 200},
                                       {"replicas", 50}, {"output", dir.string()}}));
    CHECK(res.metrics.contains("max_abs_error"));
    CHECK(read_csv(res.directory / "results.csv").size() == 4);
  }
  SUBCASE("passage-dist") {
    const auto res = run(parse_config({{"experiment", "passage-dist"}, {"law", base_law()},
                                       {"n", 300}, {"replicas", 60}, {"output", dir.string()}}));
    CHECK(res.metrics["e_zeta_alpha"].get<double>() == doctest::Approx(std::sqrt(2.0)));
    CHECK(res.metrics["ks_statistic"].get<double>() <= 1.0);
  }
  SUBCASE("traps") {
    const auto res = run(parse_config({{"experiment", "traps"}, {"law", base_law()}, {"n", 2000},
                                       {"environments", 100}, {"trap_type_samples", 300000},
                                       {"output", dir.string()}}));
    CHECK(fs::exists(res.directory / "report.json"));
    CHECK(read_csv(res.directory / "results.csv").size() == 101);
    CHECK(res.metrics["isolation_rate"].get<double>() >= 0.0);
  }
  SUBCASE("velocity") {
    json law = {{"upper", {{"alpha", 3.0}}}, {"lower", {{"alpha", 3.0}}}, {"p_upper", 0.5},
                {"allow_ballistic", true}};
    const auto res = run(parse_config({{"experiment", "velocity"}, {"law", law}, {"n", 2000},
                                       {"replicas", 200}, {"output", dir.string()}}));
    CHECK(res.metrics["relative_error"].get<double>() < 0.05);
  }
}

TEST_CASE("command line") {
  const auto dir = scratch("cli");
  const auto cfg = dir / "cfg.json";
  std::ofstream(cfg) << json{{"experiment", "simulate"}, {"law", base_law()}, {"n", 40},
                             {"replicas", 3}, {"output", (dir / "from_file").string()}}
                            .dump();
  CHECK(cli("simulate --config " + cfg.string()) == 0);
  CHECK(fs::exists(dir / "from_file" / "simulate"));

  // Environment overrides the file, flags override the environment.
  CHECK(cli("run --config " + cfg.string(), "BIRC_OUT=" + (dir / "from_env").string()) == 0);
  CHECK(fs::exists(dir / "from_env" / "simulate"));
  CHECK(cli("run --config " + cfg.string() + " --out " + (dir / "from_flag").string() +
                " --replicas 2 --seed 9",
            "BIRC_OUT=" + (dir / "unused").string()) == 0);
  CHECK(fs::exists(dir / "from_flag" / "simulate"));
  CHECK_FALSE(fs::exists(dir / "unused"));
  const auto run_dir = *fs::directory_iterator(dir / "from_flag" / "simulate");
  const auto manifest = json::parse(slurp(run_dir.path() / "manifest.json"));
  CHECK(manifest["config"]["replicas"] == 2);
  CHECK(manifest["config"]["seed"] == 9);

  CHECK(cli("simulate --config " + (dir / "missing.json").string()) == 1);
  CHECK(cli("velocity --config " + cfg.string()) == 1);
  CHECK(cli("simulate --config " + cfg.string(), "BIRC_REPLICAS=abc") == 1);
  CHECK(cli("simulate --config " + cfg.string() + " --engine warp") != 0);
}
