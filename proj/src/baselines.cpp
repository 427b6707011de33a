#include "parcelplan/baselines.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "parcelplan/error.hpp"
#include "parcelplan/text.hpp"

namespace parcelplan {

namespace {
constexpr std::array<std::string_view, 6> kMethodNames = {"RTP", "RPP", "GTP", "GPP", "DTP", "MARL"};
}

std::string_view method_name(Method method) { return kMethodNames[static_cast<std::size_t>(method)]; }

std::optional<Method> parse_method(std::string_view name) {
  for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
    if (kMethodNames[i] == name) return static_cast<Method>(i);
  }
  return std::nullopt;
}

bool is_top_down(Method method) { return method == Method::RTP || method == Method::GTP || method == Method::DTP; }

std::vector<Agent> method_roster(Method method, const std::vector<Agent>& agents) {
  if (!is_top_down(method)) return agents;
  for (const Agent& a : agents) {
    if (a.role == AgentRole::Planners) return {a};
  }
  return top_down_agents();
}

PlanOutcome run_baseline(Method method, const SpatialGraph& graph, const std::vector<Agent>& agents,
                         std::uint64_t seed, const RewardConfig& rewards, TrainedModels models,
                         std::ostream* trace) {
  const Environment env(graph, method_roster(method, agents), rewards);
  EpisodeState final_state;

  if (method == Method::DTP || method == Method::MARL) {
    const PolicySet* trained = method == Method::DTP ? models.dtp : models.marl;
    if (!trained) {
      fail(ErrorCode::MissingModel, std::string(method_name(method)) + " requires a trained checkpoint");
    }
    PolicySet local = *trained;
    final_state = rollout_policies(env, local, seed, trace);
  } else {
    Rng rng(seed);
    const bool random = method == Method::RTP || method == Method::RPP;
    EpisodeState state = env.reset(seed);
    while (!state.done()) {
      JointAction joint;
      for (int id : env.eligible_voters(state)) {
        const Agent& a = env.agents()[env.agent_position(id)];
        joint[id] = random ? land_use_from_ordinal(rng.below(kNumLandUses)) : greedy_vote(a.role);
      }
      const std::size_t step = state.step_index;
      const StepOutcome outcome = env.step(state, joint);
      if (trace) *trace << format_trace_record(step, joint, outcome) << '\n';
    }
    final_state = std::move(state);
  }

  PlanOutcome out;
  out.method = method;
  out.seed = seed;
  for (const Parcel& p : final_state.graph.parcels()) {
    if (p.assigned) out.assignment.emplace(p.id, p.land_use);
  }
  out.final_graph = std::move(final_state.graph);
  out.ledger = final_state.ledger;
  return out;
}

double sustainability(const SpatialGraph& graph, ShareMode mode) {
  return density_score(graph, LandUseSet{LandUse::G, LandUse::C}, mode);
}

MetricsReport original_status(const SpatialGraph& before, const RewardConfig& rewards) {
  MetricsReport r;
  r.global_reward = global_reward(before, rewards.targets, rewards.share_mode);
  r.equity_reward = equity_reward(AcceptanceLedger{});
  r.equity_reward_raw = equity_reward_raw(AcceptanceLedger{});
  r.sustainability = sustainability(before, rewards.share_mode);
  r.diversity = diversity_score(before, rewards.share_mode);
  return r;
}

MetricsReport evaluate_plan(const SpatialGraph& before, const PlanOutcome& outcome, const RewardConfig& rewards) {
  const SpatialGraph& after = outcome.final_graph;
  if (after.size() != before.size()) fail(ErrorCode::Contract, "plan graph and before-graph differ in size");
  std::set<ParcelId> readjustable;
  for (const Parcel& p : before.parcels()) {
    if (p.readjustable) readjustable.insert(p.id);
  }
  for (const auto& [id, use] : outcome.assignment) {
    if (!readjustable.contains(id)) {
      fail(ErrorCode::Contract, "plan assigns non-readjustable parcel " + std::to_string(id));
    }
  }
  if (outcome.assignment.size() != readjustable.size()) {
    fail(ErrorCode::Contract, "plan covers " + std::to_string(outcome.assignment.size()) + " of " +
                                  std::to_string(readjustable.size()) + " readjustable parcels");
  }
  for (const Parcel& p : before.parcels()) {
    const Parcel& q = after.parcel(after.index_of(p.id));
    auto it = outcome.assignment.find(p.id);
    const LandUse expected = it == outcome.assignment.end() ? p.land_use : it->second;
    if (q.land_use != expected) fail(ErrorCode::Contract, "plan graph disagrees with assignment on parcel " + std::to_string(p.id));
  }

  const MetricsReport base = original_status(before, rewards);
  MetricsReport r;
  r.global_reward = global_reward(after, rewards.targets, rewards.share_mode);
  r.equity_reward = equity_reward(outcome.ledger);
  r.equity_reward_raw = equity_reward_raw(outcome.ledger);
  r.sustainability = sustainability(after, rewards.share_mode);
  r.diversity = diversity_score(after, rewards.share_mode);
  r.global_delta = r.global_reward - base.global_reward;
  r.equity_delta = r.equity_reward - base.equity_reward;
  r.sustainability_delta = r.sustainability - base.sustainability;
  r.diversity_delta = r.diversity - base.diversity;
  return r;
}

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::Domain, "median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Comparison compare_methods(const SpatialGraph& graph, const std::vector<Agent>& agents,
                           const std::vector<Method>& methods, const std::vector<std::uint64_t>& seeds,
                           const RewardConfig& rewards, TrainedModels models) {
  if (seeds.empty()) fail(ErrorCode::Config, "at least one seed is required");
  for (Method m : methods) {
    if (m == Method::DTP && !models.dtp) fail(ErrorCode::MissingModel, "DTP requires a trained checkpoint (set compare.dtp_checkpoint)");
    if (m == Method::MARL && !models.marl) fail(ErrorCode::MissingModel, "MARL requires a trained checkpoint (set compare.marl_checkpoint)");
  }
  Comparison c;
  c.summary.push_back({"Original Status", std::nullopt, original_status(graph, rewards)});
  for (Method m : methods) {
    std::vector<MetricsReport> reports;
    for (std::uint64_t seed : seeds) {
      PlanOutcome outcome = run_baseline(m, graph, agents, seed, rewards, models);
      reports.push_back(evaluate_plan(graph, outcome, rewards));
      c.per_seed.push_back({std::string(method_name(m)), seed, reports.back()});
      c.outcomes.push_back(std::move(outcome));
    }
    auto med = [&](double MetricsReport::*field) {
      std::vector<double> v;
      for (const auto& r : reports) v.push_back(r.*field);
      return median(std::move(v));
    };
    MetricsReport summary;
    summary.global_reward = med(&MetricsReport::global_reward);
    summary.equity_reward = med(&MetricsReport::equity_reward);
    summary.equity_reward_raw = med(&MetricsReport::equity_reward_raw);
    summary.sustainability = med(&MetricsReport::sustainability);
    summary.diversity = med(&MetricsReport::diversity);
    summary.global_delta = med(&MetricsReport::global_delta);
    summary.equity_delta = med(&MetricsReport::equity_delta);
    summary.sustainability_delta = med(&MetricsReport::sustainability_delta);
    summary.diversity_delta = med(&MetricsReport::diversity_delta);
    c.summary.push_back({std::string(method_name(m)), std::nullopt, summary});
  }
  return c;
}

std::string format_comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "method,seed,global_reward,equity_reward,equity_reward_raw,sustainability,diversity\n";
  for (const auto& row : rows) {
    out += row.method + ',';
    out += row.seed ? std::to_string(*row.seed) : std::string(row.method == "Original Status" ? "" : "median");
    out += ',' + text::format_real(row.report.global_reward);
    out += ',' + text::format_real(row.report.equity_reward);
    out += ',' + text::format_real(row.report.equity_reward_raw);
    out += ',' + text::format_real(row.report.sustainability);
    out += ',' + text::format_real(row.report.diversity);
    out += '\n';
  }
  return out;
}

std::string format_comparison_text(const std::vector<ComparisonRow>& rows) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %14s %14s %14s %14s\n", "Method", "Global reward", "Equity reward",
                "Sustainability", "Diversity");
  out += line;
  for (const auto& row : rows) {
    std::string label = row.method;
    if (row.seed) label += " #" + std::to_string(*row.seed);
    std::snprintf(line, sizeof line, "%-16s %14.3f %14.3f %14.3f %14.3f\n", label.c_str(), row.report.global_reward,
                  row.report.equity_reward, row.report.sustainability, row.report.diversity);
    out += line;
  }
  return out;
}

std::string format_plan_csv(const PlanOutcome& outcome) {
  std::string out = "parcel_id,land_use\n";
  for (const auto& [id, use] : outcome.assignment) {
    out += std::to_string(id) + ',' + land_use_code(use) + '\n';
  }
  return out;
}

}  // namespace parcelplan
