#pragma once

#include <array>
#include <span>

#include "parcelplan/agents.hpp"
#include "parcelplan/land_use.hpp"
#include "parcelplan/spatial_graph.hpp"

namespace parcelplan {

struct RewardWeights {
  double self = 1.0;    // beta1
  double local = 1.0;   // beta2
  double global = 1.0;  // beta3
  double equity = 1.0;  // beta4

  bool operator==(const RewardWeights&) const = default;
};

// How land-use proportions are measured: by parcel area or by parcel count.
enum class ShareMode { Area, Count };

struct RewardConfig {
  RewardWeights weights;
  LandUseSet targets{LandUse::G, LandUse::C};
  ShareMode share_mode = ShareMode::Area;
};

struct RewardComponents {
  double self = 0.0;
  double local = 0.0;
  double global = 0.0;
  double equity = 0.0;
};

// Decision-acceptance tallies per role. accepted_area is normalized by the
// district area; accepted_area_raw keeps square meters for reporting.
struct AcceptanceLedger {
  std::array<double, kNumRoles> accepted_area{};
  std::array<double, kNumRoles> accepted_area_raw{};
  std::array<std::array<int, kNumLandUses>, kNumRoles> request_counts{};

  int adopted(AgentRole role, LandUse use) const { return request_counts[ordinal(role)][ordinal(use)]; }

  // Credits `role` with an accepted decision of `use` on a parcel.
  void record(AgentRole role, LandUse use, double parcel_area, double district_area);

  bool operator==(const AcceptanceLedger&) const = default;
};

// r_I: the benefit-matrix entry.
double self_reward(AgentRole role, LandUse action);

// r_L = r_I * 2^-n, where n counts earlier adoptions of the same (role, use)
// preference. Zero when the target lies outside the agent's radius.
double local_reward(AgentRole role, LandUse action, int times_adopted, bool within_radius = true);

// Proportion of each land use in the district.
std::array<double, kNumLandUses> land_use_shares(std::span<const Parcel> parcels,
                                                 ShareMode mode = ShareMode::Area);

double density_score(const SpatialGraph& graph, LandUseSet targets, ShareMode mode = ShareMode::Area);

// Shannon index -sum p ln p over present land uses.
double diversity_score(const SpatialGraph& graph, ShareMode mode = ShareMode::Area);

double global_reward(const SpatialGraph& graph, LandUseSet targets, ShareMode mode = ShareMode::Area);

// -[popstd(low, mid, high) + |(planners + developers) - (low + mid + high)|]
double equity_from_tallies(const std::array<double, kNumRoles>& tallies);

double equity_reward(const AcceptanceLedger& ledger);
double equity_reward_raw(const AcceptanceLedger& ledger);

double combined_reward(const RewardComponents& components, const RewardWeights& weights);

}  // namespace parcelplan
