#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "birc/env.hpp"
#include "birc/limit.hpp"
#include "birc/stats.hpp"
#include "birc/traps.hpp"
#include "birc/walk.hpp"

namespace birc {

// Shortest round-trip decimal form of a double ("%.17g").
std::string fmt(double v);

// One row per checkpoint:
// replica_id,seed,engine,joint_law,n,u,target,time,total_steps,max_backtrack
void write_passage_csv(std::ostream& out, const std::vector<PassageRecord>& records);

// `<base>.bin`: per record n, total_steps, max_backtrack (-1 if absent) and
// the checkpoint times as little-endian 64-bit integers, plus `<base>.json`
// describing the layout and the checkpoint grid.
void write_passage_binary(const std::filesystem::path& base,
                          const std::vector<PassageRecord>& records);

void write_traps_csv(std::ostream& out, const std::vector<TrapRecord>& traps);
void write_aging_curve_csv(std::ostream& out, double alpha, const std::vector<double>& h);
void write_samples_csv(std::ostream& out, const std::string& column,
                       const std::vector<double>& samples);

nlohmann::json to_json(const TailSpec& t);
nlohmann::json to_json(const ConductanceLaw& law);
nlohmann::json to_json(const PassageRecord& r);
nlohmann::json to_json(const TrapRecord& t);
nlohmann::json to_json(const CensusReport& c);
nlohmann::json to_json(const KsResult& k);
nlohmann::json to_json(const PppReport& p);
nlohmann::json to_json(const TrapTypeReport& t);
nlohmann::json to_json(const ZetaMoment& z);
nlohmann::json to_json(const SampleSummary& s);

TailSpec tail_from_json(const nlohmann::json& j);
ConductanceLaw law_from_json(const nlohmann::json& j);

}  // namespace birc
