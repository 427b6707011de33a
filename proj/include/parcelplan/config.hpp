#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "parcelplan/agents.hpp"
#include "parcelplan/baselines.hpp"
#include "parcelplan/rewards.hpp"
#include "parcelplan/synth.hpp"
#include "parcelplan/training.hpp"

namespace parcelplan {

// participatory: the configured roster votes; topdown: a lone planner with
// an unbounded view (the policy the DTP baseline rolls out).
enum class TrainMode { Participatory, TopDown };

struct RunConfig {
  struct Data {
    std::string parcels;     // parcel CSV read by ingest
    std::string bundle;      // directory holding parcels.csv + adjacency.csv
    std::string out = ".";   // output directory of every command
    std::string checkpoint;  // checkpoint manifest read by evaluate
  } data;

  int k = 4;
  double radius_m = kWalkRadiusM;  // default observation radius of residents

  TrainConfig train;
  TrainMode mode = TrainMode::Participatory;
  RewardConfig reward;

  // [agents]: <role> = count, <role>_home = ids, <role>_radius_m = meters.
  std::array<int, kNumRoles> agent_counts{1, 1, 1, 1, 1};
  std::map<AgentRole, std::vector<ParcelId>> homes;
  std::map<AgentRole, double> role_radius_m;

  struct Compare {
    std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::string marl_checkpoint;
    std::string dtp_checkpoint;
  } compare;

  SyntheticSpec synth;

  // Throws ErrorCode::Config.
  void validate() const;

  // Roster with per-role radii falling back to radius_m.
  std::vector<RosterEntry> roster() const;

  // Every setting, in the file format parse_config reads.
  std::string to_ini() const;
  nlohmann::json to_json() const;
};

// Sections: [data] [graph] [train] [reward] [agents] [compare] [synth].
// Unknown sections or keys are configuration errors.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

// Command-line overrides; each set field replaces the file value.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;  // train seed, synth seed, first compare seed
  std::optional<std::string> out;
  std::optional<std::vector<Method>> methods;
  std::optional<int> k;
  std::optional<double> radius_m;
  std::optional<int> epochs;
};

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides);

// "RTP,MARL" -> methods. Throws ErrorCode::Config on unknown names.
std::vector<Method> parse_method_list(std::string_view text);

}  // namespace parcelplan
