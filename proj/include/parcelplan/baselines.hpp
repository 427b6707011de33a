#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "parcelplan/environment.hpp"
#include "parcelplan/training.hpp"

namespace parcelplan {

// RTP/GTP/DTP decide top-down (a lone planner); RPP/GPP/MARL are participatory.
enum class Method { RTP, RPP, GTP, GPP, DTP, MARL };

inline constexpr std::array<Method, 6> kAllMethods = {Method::RTP, Method::RPP, Method::GTP,
                                                      Method::GPP, Method::DTP, Method::MARL};

std::string_view method_name(Method method);
std::optional<Method> parse_method(std::string_view name);
bool is_top_down(Method method);

struct PlanOutcome {
  Method method = Method::RTP;
  std::uint64_t seed = 0;
  std::map<ParcelId, LandUse> assignment;  // every readjustable parcel exactly once
  SpatialGraph final_graph;
  AcceptanceLedger ledger;
};

// Trained policies for the learned methods. DTP expects a planner policy
// trained top-down; MARL expects one policy per participating role.
struct TrainedModels {
  const PolicySet* marl = nullptr;
  const PolicySet* dtp = nullptr;
};

// The voters a method uses: the first planner of `agents` (or a fresh one)
// for top-down methods, the full roster otherwise.
std::vector<Agent> method_roster(Method method, const std::vector<Agent>& agents);

PlanOutcome run_baseline(Method method, const SpatialGraph& graph, const std::vector<Agent>& agents,
                         std::uint64_t seed, const RewardConfig& rewards = {}, TrainedModels models = {},
                         std::ostream* trace = nullptr);

// Density of green and commercial land.
double sustainability(const SpatialGraph& graph, ShareMode mode = ShareMode::Area);

struct MetricsReport {
  double global_reward = 0.0;
  double equity_reward = 0.0;      // normalized tallies
  double equity_reward_raw = 0.0;  // square-meter tallies
  double sustainability = 0.0;
  double diversity = 0.0;
  // Changes relative to the before-graph (whose ledger is empty).
  double global_delta = 0.0;
  double equity_delta = 0.0;
  double sustainability_delta = 0.0;
  double diversity_delta = 0.0;
};

// Throws ErrorCode::Contract when the outcome does not cover every
// readjustable parcel of `before` exactly once or touches other parcels.
MetricsReport evaluate_plan(const SpatialGraph& before, const PlanOutcome& outcome, const RewardConfig& rewards = {});

// Metrics of the unmodified district ("Original Status").
MetricsReport original_status(const SpatialGraph& before, const RewardConfig& rewards = {});

struct ComparisonRow {
  std::string method;
  std::optional<std::uint64_t> seed;  // empty for median / original rows
  MetricsReport report;
};

struct Comparison {
  std::vector<ComparisonRow> summary;   // Original Status, then one median row per method
  std::vector<ComparisonRow> per_seed;  // method x seed
  std::vector<PlanOutcome> outcomes;    // aligned with per_seed
};

Comparison compare_methods(const SpatialGraph& graph, const std::vector<Agent>& agents,
                           const std::vector<Method>& methods, const std::vector<std::uint64_t>& seeds,
                           const RewardConfig& rewards = {}, TrainedModels models = {});

double median(std::vector<double> values);

// method,seed,global_reward,equity_reward,equity_reward_raw,sustainability,diversity
std::string format_comparison_csv(const std::vector<ComparisonRow>& rows);
// Aligned columns: Method, Global reward, Equity reward, Sustainability, Diversity.
std::string format_comparison_text(const std::vector<ComparisonRow>& rows);
// parcel_id,land_use
std::string format_plan_csv(const PlanOutcome& outcome);

}  // namespace parcelplan
