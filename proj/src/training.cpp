#include "parcelplan/training.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "parcelplan/error.hpp"
#include "parcelplan/text.hpp"

namespace parcelplan {

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorCode::Config, "epochs must be >= 1");
  if (episodes_per_epoch < 1) fail(ErrorCode::Config, "episodes_per_epoch must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail(ErrorCode::Config, "gamma must lie in [0, 1]");
  if (!(lr_actor >= 0.0) || !std::isfinite(lr_actor)) fail(ErrorCode::Config, "lr_actor must be finite and >= 0");
  if (!(lr_critic >= 0.0) || !std::isfinite(lr_critic)) fail(ErrorCode::Config, "lr_critic must be finite and >= 0");
  if (batch_size < 1) fail(ErrorCode::Config, "batch_size must be >= 1");
  if (buffer_capacity < 1) fail(ErrorCode::Config, "buffer_capacity must be >= 1");
  if (net.hidden < 1 || net.layers < 1) fail(ErrorCode::Config, "network needs hidden >= 1 and layers >= 1");
  if (!(net.negative_slope >= 0.0)) fail(ErrorCode::Config, "negative_slope must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {
      {"epochs", epochs},
      {"episodes_per_epoch", episodes_per_epoch},
      {"gamma", gamma},
      {"lr_actor", lr_actor},
      {"lr_critic", lr_critic},
      {"batch_size", batch_size},
      {"buffer_capacity", buffer_capacity},
      {"seed", seed},
      {"hidden", net.hidden},
      {"layers", net.layers},
      {"negative_slope", net.negative_slope},
      {"activation", net.activation == nn::Activation::Elu ? "elu" : "identity"},
  };
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.episodes_per_epoch = j.at("episodes_per_epoch").get<int>();
  c.gamma = j.at("gamma").get<double>();
  c.lr_actor = j.at("lr_actor").get<double>();
  c.lr_critic = j.at("lr_critic").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.buffer_capacity = j.at("buffer_capacity").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.net.hidden = j.at("hidden").get<std::size_t>();
  c.net.layers = j.at("layers").get<std::size_t>();
  c.net.negative_slope = j.at("negative_slope").get<double>();
  c.net.activation = j.at("activation").get<std::string>() == "identity" ? nn::Activation::Identity
                                                                         : nn::Activation::Elu;
  return c;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) fail(ErrorCode::Config, "replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (!std::isfinite(t.reward)) fail(ErrorCode::Contract, "transition reward must be finite");
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (items_.empty()) fail(ErrorCode::Contract, "cannot sample from an empty buffer");
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[rng.below(items_.size())]);
  return out;
}

std::vector<double> compute_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + (t + 1 < rewards.size() ? gamma * running : 0.0);
    out[t] = running;
  }
  return out;
}

double actor_loss(std::span<const double> q_values) {
  if (q_values.empty()) fail(ErrorCode::Contract, "actor loss of an empty batch");
  double s = 0.0;
  for (double q : q_values) s += q;
  return -s / static_cast<double>(q_values.size());
}

double critic_loss(std::span<const double> returns, std::span<const double> predictions) {
  if (returns.size() != predictions.size()) fail(ErrorCode::Contract, "critic loss: length mismatch");
  if (returns.empty()) fail(ErrorCode::Contract, "critic loss of an empty batch");
  double s = 0.0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    const double d = returns[i] - predictions[i];
    s += d * d;
  }
  return s / static_cast<double>(returns.size());
}

nn::Neighborhoods neighborhoods_with_self_loops(const SpatialGraph& graph) {
  nn::Neighborhoods nbrs;
  nbrs.lists.resize(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    auto& list = nbrs.lists[i];
    list.push_back(i);
    for (const Edge& e : graph.neighbors(i)) list.push_back(e.node);
    std::sort(list.begin(), list.end());
  }
  return nbrs;
}

nn::Matrix node_features(const SpatialGraph& g, std::span<const std::size_t> nodes, std::size_t target,
                         double area_scale) {
  nn::Matrix f(nodes.size(), nn::kNodeFeatureDim);
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    const Parcel& p = g.parcel(nodes[r]);
    f(r, ordinal(p.land_use)) = 1.0;
    f(r, 5) = p.area / area_scale;
    f(r, 6) = p.readjustable ? 1.0 : 0.0;
    f(r, 7) = p.assigned ? 1.0 : 0.0;
    f(r, 8) = nodes[r] == target ? 1.0 : 0.0;
  }
  return f;
}

ObservationBuilder::ObservationBuilder(const Environment& env, std::size_t agent_pos)
    : nodes_(env.observed_nodes(agent_pos)), local_(env.base_graph().size(), SIZE_MAX) {
  for (std::size_t l = 0; l < nodes_.size(); ++l) local_[nodes_[l]] = l;
  nbrs_ = std::make_shared<const nn::Neighborhoods>(
      neighborhoods_with_self_loops(induced_subgraph(env.base_graph(), nodes_)));
  double max_area = 0.0;
  for (const Parcel& p : env.base_graph().parcels()) max_area = std::max(max_area, p.area);
  area_scale_ = max_area > 0.0 ? max_area : 1.0;
}

std::shared_ptr<const Observation> ObservationBuilder::observe(const EpisodeState& state) const {
  const std::size_t target = state.graph.index_of(state.target());
  if (!sees(target)) fail(ErrorCode::Lookup, "target parcel is outside the agent's observation");
  auto obs = std::make_shared<Observation>();
  obs->nbrs = nbrs_;
  obs->features = node_features(state.graph, nodes_, target, area_scale_);
  obs->target = local_[target];
  return obs;
}

ActorCritic& PolicySet::at(AgentRole role) {
  auto it = nets.find(role);
  if (it == nets.end()) {
    fail(ErrorCode::MissingModel, "no trained policy for role '" + std::string(role_name(role)) + "'");
  }
  return it->second;
}

PolicySet PolicySet::init(const std::vector<Agent>& agents, const nn::NetConfig& config, std::uint64_t seed) {
  PolicySet set;
  set.net_config = config;
  Rng root(seed);
  for (AgentRole role : kAllRoles) {
    // Fork for every role so a role's initial weights do not depend on the roster.
    Rng role_rng = root.fork(ordinal(role) + 1);
    const bool present = std::any_of(agents.begin(), agents.end(), [&](const Agent& a) { return a.role == role; });
    if (!present) continue;
    ActorCritic ac{nn::PolicyNet(config, role_rng), nn::ValueNet(config, role_rng)};
    set.nets.emplace(role, std::move(ac));
  }
  return set;
}

nn::Checkpoint PolicySet::to_checkpoint(nlohmann::json metadata) const {
  nn::Checkpoint cp;
  nlohmann::json roles = nlohmann::json::array();
  for (const auto& [role, ac] : nets) {
    roles.push_back(std::string(role_name(role)));
    const std::string prefix = std::string(role_name(role)) + "/";
    for (const nn::Parameter* p : ac.actor.parameters()) cp.tensors.emplace_back(prefix + p->name, p->value);
    for (const nn::Parameter* p : ac.critic.parameters()) cp.tensors.emplace_back(prefix + p->name, p->value);
  }
  metadata["roles"] = roles;
  metadata["network"] = {
      {"hidden", net_config.hidden},
      {"layers", net_config.layers},
      {"negative_slope", net_config.negative_slope},
      {"activation", net_config.activation == nn::Activation::Elu ? "elu" : "identity"},
  };
  cp.metadata = std::move(metadata);
  return cp;
}

PolicySet PolicySet::from_checkpoint(const nn::Checkpoint& cp) {
  PolicySet set;
  const auto& net = cp.metadata.at("network");
  set.net_config.hidden = net.at("hidden").get<std::size_t>();
  set.net_config.layers = net.at("layers").get<std::size_t>();
  set.net_config.negative_slope = net.at("negative_slope").get<double>();
  set.net_config.activation =
      net.at("activation").get<std::string>() == "identity" ? nn::Activation::Identity : nn::Activation::Elu;
  for (const auto& name : cp.metadata.at("roles")) {
    auto role = parse_role(name.get<std::string>());
    if (!role) fail(ErrorCode::Parse, "checkpoint names unknown role '" + name.get<std::string>() + "'");
    Rng scratch(0);
    ActorCritic ac{nn::PolicyNet(set.net_config, scratch), nn::ValueNet(set.net_config, scratch)};
    const std::string prefix = name.get<std::string>() + "/";
    auto load = [&](std::vector<nn::Parameter*> params) {
      for (nn::Parameter* p : params) {
        const nn::Matrix& m = cp.tensor(prefix + p->name);
        if (!m.same_shape(p->value)) fail(ErrorCode::Dimension, "checkpoint tensor '" + prefix + p->name + "' has the wrong shape");
        p->value = m;
        p->zero_grad();
      }
    };
    load(ac.actor.parameters());
    load(ac.critic.parameters());
    set.nets.emplace(*role, std::move(ac));
  }
  return set;
}

namespace {

std::size_t sample_action(const std::array<double, kNumLandUses>& probs, Rng& rng) {
  return rng.categorical(probs);
}

std::size_t argmax_action(const std::array<double, kNumLandUses>& probs) {
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

void zero_grads(std::vector<nn::Parameter*> params) {
  for (nn::Parameter* p : params) p->zero_grad();
}

// A sampled batch stacked into one disconnected graph.
struct StackedBatch {
  nn::Matrix features;
  nn::Neighborhoods nbrs;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> targets;  // stacked row of each target node
  nn::Matrix returns;                 // B x 1
};

StackedBatch stack_batch(const std::vector<const Transition*>& batch) {
  StackedBatch s;
  std::size_t rows = 0;
  for (const Transition* t : batch) rows += t->state->features.rows();
  s.features = nn::Matrix(rows, nn::kNodeFeatureDim);
  s.nbrs.lists.reserve(rows);
  s.returns = nn::Matrix(batch.size(), 1);
  std::size_t base = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Observation& obs = *batch[b]->state;
    for (std::size_t r = 0; r < obs.features.rows(); ++r) {
      std::copy(obs.features.row(r).begin(), obs.features.row(r).end(), s.features.row(base + r).begin());
    }
    for (const auto& list : obs.nbrs->lists) {
      auto& shifted = s.nbrs.lists.emplace_back(list);
      for (auto& j : shifted) j += base;
    }
    s.targets.push_back(base + obs.target);
    base += obs.features.rows();
    s.offsets.push_back(base);
    s.returns(b, 0) = batch[b]->discounted_return;
  }
  return s;
}

void update_agent(ActorCritic& ac, const ReplayBuffer& buffer, const TrainConfig& config, Rng& rng) {
  const auto batch = buffer.sample(config.batch_size, rng);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const StackedBatch s = stack_batch(batch);

  auto critic_params = ac.critic.parameters();
  auto actor_params = ac.actor.parameters();

  // The actor is untouched by the critic step, so one forward pass serves both updates.
  nn::Tape actor_tape;
  nn::Var features = actor_tape.constant(s.features);
  nn::Var probs = ac.actor.probabilities(actor_tape, features, s.nbrs);

  // Critic: regress Q(s, a) onto the discounted return, with the acting
  // agent's row of the policy input replaced by its taken action.
  zero_grads(critic_params);
  {
    nn::Matrix policy = probs.value();
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (std::size_t j = 0; j < kNumLandUses; ++j) policy(s.targets[b], j) = j == batch[b]->action ? 1.0 : 0.0;
    }
    nn::Tape tape;
    nn::Var q = ac.critic.values(tape, tape.constant(s.features), tape.constant(std::move(policy)), s.nbrs, s.offsets);
    nn::Var diff = nn::sub(q, tape.constant(s.returns));
    tape.backward(nn::scale(nn::sum(nn::mul(diff, diff)), inv_n));
  }
  nn::sgd_step(critic_params, config.lr_critic);

  // Actor: ascend the critic's value of the actor's own distribution.
  zero_grads(actor_params);
  actor_tape.set_frozen(true);
  nn::Var q = ac.critic.values(actor_tape, features, probs, s.nbrs, s.offsets);
  actor_tape.backward(nn::scale(nn::sum(q), -inv_n));
  nn::sgd_step(actor_params, config.lr_actor);
}

struct Staged {
  std::shared_ptr<const Observation> obs;
  std::size_t action = 0;
  double reward = 0.0;
};

}  // namespace

TrainResult train(const Environment& env, const TrainConfig& config) {
  config.validate();
  return train(env, config, PolicySet::init(env.agents(), config.net, config.seed));
}

TrainResult train(const Environment& env, const TrainConfig& config, PolicySet policies) {
  config.validate();
  const auto& agents = env.agents();
  for (const Agent& a : agents) policies.at(a.role);

  Rng rng = Rng(config.seed).fork(0xAC7);
  std::vector<ObservationBuilder> views;
  std::vector<ReplayBuffer> buffers;
  for (std::size_t a = 0; a < agents.size(); ++a) {
    views.emplace_back(env, a);
    buffers.emplace_back(config.buffer_capacity);
  }

  TrainResult result;
  int episode = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (int e = 0; e < config.episodes_per_epoch; ++e, ++episode) {
      EpisodeState state = env.reset(config.seed + static_cast<std::uint64_t>(episode));
      std::vector<std::vector<Staged>> staged(agents.size());
      EpisodeRecord record;
      record.episode = episode;
      for (const Agent& a : agents) record.agent_reward[a.id] = 0.0;

      while (!state.done()) {
        const auto eligible = env.eligible_voters(state);
        JointAction joint;
        std::vector<std::pair<std::size_t, Staged>> pending;
        for (int id : eligible) {
          const std::size_t pos = env.agent_position(id);
          ActorCritic& ac = policies.at(agents[pos].role);
          auto obs = views[pos].observe(state);
          const auto probs = nn::policy_forward(ac.actor, obs->features, *obs->nbrs, obs->target);
          const std::size_t action = sample_action(probs, rng);
          joint[id] = land_use_from_ordinal(action);
          pending.push_back({pos, Staged{std::move(obs), action, 0.0}});
        }
        const StepOutcome outcome = env.step(state, joint);
        for (auto& [pos, s] : pending) {
          s.reward = outcome.rewards.at(agents[pos].id);
          record.agent_reward[agents[pos].id] += s.reward;
          staged[pos].push_back(std::move(s));
        }

        for (std::size_t pos = 0; pos < agents.size(); ++pos) {
          if (buffers[pos].size() < config.batch_size) continue;
          update_agent(policies.at(agents[pos].role), buffers[pos], config, rng);
          ++result.updates;
        }
      }

      // Returns are known once the episode ends.
      for (std::size_t pos = 0; pos < agents.size(); ++pos) {
        auto& steps = staged[pos];
        std::vector<double> rewards;
        for (const Staged& s : steps) rewards.push_back(s.reward);
        const auto returns = compute_returns(rewards, config.gamma);
        for (std::size_t k = 0; k < steps.size(); ++k) {
          Transition t;
          t.state = steps[k].obs;
          t.action = steps[k].action;
          t.reward = steps[k].reward;
          t.done = k + 1 == steps.size();
          t.next_state = t.done ? nullptr : steps[k + 1].obs;
          t.discounted_return = returns[k];
          buffers[pos].push(std::move(t));
        }
      }

      double total = 0.0;
      for (const auto& [id, r] : record.agent_reward) total += r;
      record.mean_reward = total / static_cast<double>(agents.size());
      record.global_reward = global_reward(state.graph, env.reward_config().targets, env.reward_config().share_mode);
      record.equity_reward = equity_reward(state.ledger);
      spdlog::debug("episode {} mean reward {:.4f} global {:.4f} equity {:.4f}", episode, record.mean_reward,
                    record.global_reward, record.equity_reward);
      result.curve.push_back(std::move(record));
    }
  }
  for (std::size_t pos = 0; pos < agents.size(); ++pos) result.buffer_sizes[agents[pos].id] = buffers[pos].size();
  result.policies = std::move(policies);
  return result;
}

EpisodeState rollout_policies(const Environment& env, PolicySet& policies, std::uint64_t seed, std::ostream* trace) {
  const auto& agents = env.agents();
  for (const Agent& a : agents) policies.at(a.role);
  std::vector<ObservationBuilder> views;
  for (std::size_t a = 0; a < agents.size(); ++a) views.emplace_back(env, a);

  EpisodeState state = env.reset(seed);
  while (!state.done()) {
    JointAction joint;
    for (int id : env.eligible_voters(state)) {
      const std::size_t pos = env.agent_position(id);
      auto obs = views[pos].observe(state);
      const auto probs = nn::policy_forward(policies.at(agents[pos].role).actor, obs->features, *obs->nbrs, obs->target);
      joint[id] = land_use_from_ordinal(argmax_action(probs));
    }
    const std::size_t step = state.step_index;
    const StepOutcome outcome = env.step(state, joint);
    if (trace) *trace << format_trace_record(step, joint, outcome) << '\n';
  }
  return state;
}

std::string format_curves_csv(const std::vector<EpisodeRecord>& curve, const std::vector<Agent>& agents) {
  std::string out = "episode";
  for (const Agent& a : agents) out += ",reward_" + std::to_string(a.id) + "_" + std::string(role_name(a.role));
  out += ",mean_reward,global_reward,equity_reward\n";
  for (const EpisodeRecord& r : curve) {
    out += std::to_string(r.episode);
    for (const Agent& a : agents) out += "," + text::format_real(r.agent_reward.at(a.id));
    out += "," + text::format_real(r.mean_reward);
    out += "," + text::format_real(r.global_reward);
    out += "," + text::format_real(r.equity_reward);
    out += '\n';
  }
  return out;
}

}  // namespace parcelplan
