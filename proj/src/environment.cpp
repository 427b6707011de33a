#include "parcelplan/environment.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "parcelplan/error.hpp"

namespace parcelplan {

ParcelId EpisodeState::target() const {
  if (pending.empty()) fail(ErrorCode::Contract, "episode is done; no target parcel");
  return pending.front();
}

LandUse tally_votes(std::span<const LandUse> votes) {
  if (votes.empty()) fail(ErrorCode::Aggregation, "cannot aggregate an empty vote set");
  std::array<std::size_t, kNumLandUses> counts{};
  for (LandUse v : votes) ++counts[ordinal(v)];
  std::size_t best = 0;
  for (std::size_t j = 1; j < kNumLandUses; ++j) {
    if (counts[j] > counts[best]) best = j;
  }
  return static_cast<LandUse>(best);
}

Environment::Environment(SpatialGraph base, std::vector<Agent> agents, RewardConfig rewards)
    : base_(std::make_shared<const SpatialGraph>(std::move(base))),
      agents_(std::move(agents)),
      rewards_(rewards) {
  validate_agents(*base_, agents_);
  district_area_ = base_->total_area();
  home_distance_.resize(agents_.size());
  observed_.resize(agents_.size());
  for (std::size_t a = 0; a < agents_.size(); ++a) {
    const Agent& agent = agents_[a];
    if (agent.home_parcel) {
      const std::size_t home = base_->index_of(*agent.home_parcel);
      home_distance_[a] = shortest_path_distances(*base_, home, agent.observation_radius_m);
      for (std::size_t i = 0; i < base_->size(); ++i) {
        if (home_distance_[a][i] <= agent.observation_radius_m) observed_[a].push_back(i);
      }
    } else {
      observed_[a].resize(base_->size());
      for (std::size_t i = 0; i < base_->size(); ++i) observed_[a][i] = i;
    }
  }
}

std::size_t Environment::agent_position(int agent_id) const {
  for (std::size_t a = 0; a < agents_.size(); ++a) {
    if (agents_[a].id == agent_id) return a;
  }
  fail(ErrorCode::Lookup, "unknown agent id " + std::to_string(agent_id));
}

EpisodeState Environment::reset(std::uint64_t seed) const {
  EpisodeState state;
  state.graph = *base_;
  state.graph.clear_assigned();
  for (const Parcel& p : state.graph.parcels()) {
    if (p.readjustable) state.pending.push_back(p.id);
  }
  if (state.pending.empty()) fail(ErrorCode::Config, "graph has no readjustable parcels");
  std::sort(state.pending.begin(), state.pending.end());
  state.seed = seed;
  return state;
}

bool Environment::within_reach(std::size_t agent_pos, std::size_t parcel_index) const {
  const auto& dist = home_distance_.at(agent_pos);
  if (dist.empty()) return true;
  return dist.at(parcel_index) <= agents_[agent_pos].observation_radius_m;
}

std::vector<int> Environment::eligible_voters(const EpisodeState& state) const {
  const std::size_t target = base_->index_of(state.target());
  std::vector<int> ids;
  for (std::size_t a = 0; a < agents_.size(); ++a) {
    if (within_reach(a, target)) ids.push_back(agents_[a].id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

StepOutcome Environment::step(EpisodeState& state, const JointAction& votes) const {
  const ParcelId target_id = state.target();
  const std::size_t target = state.graph.index_of(target_id);

  const auto eligible = eligible_voters(state);
  for (const auto& [agent_id, use] : votes) {
    if (!std::binary_search(eligible.begin(), eligible.end(), agent_id)) {
      fail(ErrorCode::Contract, "agent " + std::to_string(agent_id) + " is not eligible to vote on parcel " +
                                    std::to_string(target_id));
    }
  }
  if (votes.size() != eligible.size()) {
    fail(ErrorCode::Contract, "joint action must contain one vote per eligible agent");
  }

  std::vector<LandUse> ballot;
  ballot.reserve(votes.size());
  for (const auto& [agent_id, use] : votes) ballot.push_back(use);
  const LandUse chosen = tally_votes(ballot);

  StepOutcome out;
  out.target = target_id;
  out.chosen_use = chosen;

  // Adoption counts before this decision feed the local reward.
  std::map<int, int> prior;
  for (const auto& [agent_id, use] : votes) {
    prior[agent_id] = state.ledger.adopted(agents_[agent_position(agent_id)].role, use);
  }

  const double parcel_area = state.graph.parcel(target).area;
  state.graph.assign_land_use(target, chosen);
  std::set<AgentRole> credited;
  for (const auto& [agent_id, use] : votes) {
    if (use != chosen) continue;
    out.winners.push_back(agent_id);
    const AgentRole role = agents_[agent_position(agent_id)].role;
    if (credited.insert(role).second) state.ledger.record(role, chosen, parcel_area, district_area_);
  }
  state.pending.erase(state.pending.begin());
  ++state.step_index;
  out.done = state.done();

  const double r_global = global_reward(state.graph, rewards_.targets, rewards_.share_mode);
  const double r_equity = equity_reward(state.ledger);
  for (const auto& [agent_id, use] : votes) {
    const AgentRole role = agents_[agent_position(agent_id)].role;
    RewardComponents c;
    c.self = self_reward(role, use);
    c.local = local_reward(role, use, prior[agent_id], true);
    c.global = r_global;
    c.equity = r_equity;
    out.components[agent_id] = c;
    out.rewards[agent_id] = combined_reward(c, rewards_.weights);
  }
  return out;
}

EpisodeState replay(const Environment& env, std::uint64_t seed, std::span<const JointAction> actions) {
  EpisodeState state = env.reset(seed);
  for (const JointAction& joint : actions) {
    if (state.done()) fail(ErrorCode::Contract, "replay has more actions than pending parcels");
    env.step(state, joint);
  }
  return state;
}

std::string format_trace_record(std::size_t step, const JointAction& votes, const StepOutcome& outcome) {
  nlohmann::json votes_json = nlohmann::json::object();
  for (const auto& [agent_id, use] : votes) votes_json[std::to_string(agent_id)] = std::string(1, land_use_code(use));
  nlohmann::json rewards_json = nlohmann::json::object();
  for (const auto& [agent_id, r] : outcome.rewards) rewards_json[std::to_string(agent_id)] = r;
  nlohmann::json record = {
      {"step", step},
      {"target", outcome.target},
      {"votes", std::move(votes_json)},
      {"chosen", std::string(1, land_use_code(outcome.chosen_use))},
      {"rewards", std::move(rewards_json)},
  };
  return record.dump();
}

}  // namespace parcelplan
