#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "parcelplan/agents.hpp"
#include "parcelplan/rewards.hpp"
#include "parcelplan/spatial_graph.hpp"

namespace parcelplan {

// agent id -> voted land use
using JointAction = std::map<int, LandUse>;

struct EpisodeState {
  SpatialGraph graph;              // current land uses
  std::vector<ParcelId> pending;   // unassigned readjustable parcels, ascending; front is the target
  AcceptanceLedger ledger;
  std::size_t step_index = 0;
  std::uint64_t seed = 0;

  bool done() const { return pending.empty(); }
  ParcelId target() const;

  bool operator==(const EpisodeState&) const = default;
};

struct StepOutcome {
  ParcelId target = 0;
  LandUse chosen_use = LandUse::R;
  std::map<int, double> rewards;  // voters only
  std::map<int, RewardComponents> components;
  std::vector<int> winners;  // agent ids whose vote matched the outcome
  bool done = false;
};

// Plurality winner; ties go to the lowest land-use ordinal.
LandUse tally_votes(std::span<const LandUse> votes);

// Sequential per-parcel voting over a fixed base graph. The base graph and
// roster are shared read-only; each EpisodeState owns its land uses.
class Environment {
 public:
  Environment(SpatialGraph base, std::vector<Agent> agents, RewardConfig rewards = {});

  const SpatialGraph& base_graph() const { return *base_; }
  const std::vector<Agent>& agents() const { return agents_; }
  const RewardConfig& reward_config() const { return rewards_; }

  // Throws ErrorCode::Config when the graph has no readjustable parcel.
  EpisodeState reset(std::uint64_t seed) const;

  // Agent ids (ascending) allowed to vote on the current target.
  std::vector<int> eligible_voters(const EpisodeState& state) const;

  // True when parcel `index` lies within the agent's observation radius.
  bool within_reach(std::size_t agent_pos, std::size_t parcel_index) const;

  // Graph indices visible to an agent: its radius around home for residents,
  // the whole graph for professionals.
  const std::vector<std::size_t>& observed_nodes(std::size_t agent_pos) const { return observed_[agent_pos]; }

  // Applies one round of voting to `state` in place. The joint action must
  // cover exactly the eligible voters.
  StepOutcome step(EpisodeState& state, const JointAction& votes) const;

  std::size_t agent_position(int agent_id) const;

 private:
  std::shared_ptr<const SpatialGraph> base_;
  std::vector<Agent> agents_;
  RewardConfig rewards_;
  double district_area_ = 0.0;
  std::vector<std::vector<double>> home_distance_;  // empty for professionals
  std::vector<std::vector<std::size_t>> observed_;
};

// Re-applies recorded joint actions from a fresh reset.
EpisodeState replay(const Environment& env, std::uint64_t seed, std::span<const JointAction> actions);

// One JSON-lines trace record {step, target, votes, chosen, rewards}.
std::string format_trace_record(std::size_t step, const JointAction& votes, const StepOutcome& outcome);

}  // namespace parcelplan
