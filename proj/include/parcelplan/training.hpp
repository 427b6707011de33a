#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "parcelplan/environment.hpp"
#include "parcelplan/nn/checkpoint.hpp"
#include "parcelplan/nn/networks.hpp"
#include "parcelplan/rng.hpp"

namespace parcelplan {

struct TrainConfig {
  int epochs = 1;
  int episodes_per_epoch = 1;
  double gamma = 0.95;
  double lr_actor = 1e-3;
  double lr_critic = 1e-3;
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 10000;
  std::uint64_t seed = 0;
  nn::NetConfig net;

  // Throws ErrorCode::Config on out-of-range values.
  void validate() const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// What one agent sees: its observation subgraph with current land uses.
struct Observation {
  std::shared_ptr<const nn::Neighborhoods> nbrs;
  nn::Matrix features;   // N x kNodeFeatureDim
  std::size_t target = 0;  // local index of the parcel being voted on
};

struct Transition {
  std::shared_ptr<const Observation> state;
  std::size_t action = 0;
  double reward = 0.0;
  std::shared_ptr<const Observation> next_state;  // null on the agent's last step
  bool done = false;
  double discounted_return = 0.0;
};

// Bounded FIFO; the oldest transition is evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_.at(i); }  // 0 is the oldest

  // Uniform draws with replacement.
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

// R_t = r_t + gamma * R_{t+1}, R_T = r_T.
std::vector<double> compute_returns(std::span<const double> rewards, double gamma);

// -(1/n) sum Q
double actor_loss(std::span<const double> q_values);
// (1/n) sum (R - V)^2
double critic_loss(std::span<const double> returns, std::span<const double> predictions);

// Builds per-agent observations from episode states.
class ObservationBuilder {
 public:
  ObservationBuilder(const Environment& env, std::size_t agent_pos);

  bool sees(std::size_t graph_index) const { return local_.at(graph_index) != SIZE_MAX; }
  std::size_t node_count() const { return nodes_.size(); }

  // Throws ErrorCode::Lookup when the current target is outside the view.
  std::shared_ptr<const Observation> observe(const EpisodeState& state) const;

 private:
  std::vector<std::size_t> nodes_;
  std::vector<std::size_t> local_;  // graph index -> local index or SIZE_MAX
  std::shared_ptr<const nn::Neighborhoods> nbrs_;
  double area_scale_ = 1.0;
};

// Encodes the nodes of `state_graph` listed in `nodes` (see kNodeFeatureDim).
nn::Matrix node_features(const SpatialGraph& state_graph, std::span<const std::size_t> nodes,
                         std::size_t target_graph_index, double area_scale);

nn::Neighborhoods neighborhoods_with_self_loops(const SpatialGraph& graph);

struct ActorCritic {
  nn::PolicyNet actor;
  nn::ValueNet critic;
};

// One actor-critic pair per role; agents of the same role share it.
struct PolicySet {
  nn::NetConfig net_config;
  std::map<AgentRole, ActorCritic> nets;

  static PolicySet init(const std::vector<Agent>& agents, const nn::NetConfig& config, std::uint64_t seed);

  bool has(AgentRole role) const { return nets.contains(role); }
  ActorCritic& at(AgentRole role);

  nn::Checkpoint to_checkpoint(nlohmann::json metadata) const;
  static PolicySet from_checkpoint(const nn::Checkpoint& checkpoint);
};

struct EpisodeRecord {
  int episode = 0;
  std::map<int, double> agent_reward;  // summed over the episode's steps
  double mean_reward = 0.0;            // mean over agents of agent_reward
  double global_reward = 0.0;          // on the final graph
  double equity_reward = 0.0;          // on the final ledger
};

struct TrainResult {
  PolicySet policies;
  std::vector<EpisodeRecord> curve;
  std::map<int, std::size_t> buffer_sizes;  // per agent id
  std::size_t updates = 0;
};

// Actor-critic training over repeated voting episodes. Bit-reproducible for a
// fixed config (including seed).
TrainResult train(const Environment& env, const TrainConfig& config);

// Same loop starting from existing policies (used by tests and fine-tuning).
TrainResult train(const Environment& env, const TrainConfig& config, PolicySet policies);

// Deterministic rollout: every eligible agent votes the argmax of its policy.
// Writes one JSON-lines record per step when `trace` is given.
EpisodeState rollout_policies(const Environment& env, PolicySet& policies, std::uint64_t seed,
                              std::ostream* trace = nullptr);

std::string format_curves_csv(const std::vector<EpisodeRecord>& curve, const std::vector<Agent>& agents);

}  // namespace parcelplan
