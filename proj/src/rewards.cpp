#include "parcelplan/rewards.hpp"

#include <cmath>

#include "parcelplan/error.hpp"

namespace parcelplan {

void AcceptanceLedger::record(AgentRole role, LandUse use, double parcel_area, double district_area) {
  accepted_area[ordinal(role)] += parcel_area / district_area;
  accepted_area_raw[ordinal(role)] += parcel_area;
  request_counts[ordinal(role)][ordinal(use)] += 1;
}

double self_reward(AgentRole role, LandUse action) { return expected_benefit(role, action); }

double local_reward(AgentRole role, LandUse action, int times_adopted, bool within_radius) {
  if (times_adopted < 0) fail(ErrorCode::Domain, "adoption count must be non-negative");
  if (!within_radius) return 0.0;
  return std::ldexp(self_reward(role, action), -times_adopted);
}

std::array<double, kNumLandUses> land_use_shares(std::span<const Parcel> parcels, ShareMode mode) {
  if (parcels.empty()) fail(ErrorCode::Domain, "land-use shares of an empty district");
  std::array<double, kNumLandUses> totals{};
  double district = 0.0;
  for (const Parcel& p : parcels) {
    const double w = mode == ShareMode::Area ? p.area : 1.0;
    totals[ordinal(p.land_use)] += w;
    district += w;
  }
  if (!(district > 0.0)) fail(ErrorCode::Domain, "district area must be positive");
  for (double& t : totals) t /= district;
  return totals;
}

double density_score(const SpatialGraph& graph, LandUseSet targets, ShareMode mode) {
  const auto shares = land_use_shares(graph.parcels(), mode);
  double density = 0.0;
  for (LandUse u : kAllLandUses) {
    if (targets.contains(u)) density += shares[ordinal(u)];
  }
  return density;
}

double diversity_score(const SpatialGraph& graph, ShareMode mode) {
  const auto shares = land_use_shares(graph.parcels(), mode);
  double h = 0.0;
  for (double p : shares) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double global_reward(const SpatialGraph& graph, LandUseSet targets, ShareMode mode) {
  return density_score(graph, targets, mode) + diversity_score(graph, mode);
}

double equity_from_tallies(const std::array<double, kNumRoles>& t) {
  const double low = t[ordinal(AgentRole::Low)];
  const double mid = t[ordinal(AgentRole::Mid)];
  const double high = t[ordinal(AgentRole::High)];
  const double mean = (low + mid + high) / 3.0;
  const double var = ((low - mean) * (low - mean) + (mid - mean) * (mid - mean) +
                      (high - mean) * (high - mean)) / 3.0;
  const double professionals = t[ordinal(AgentRole::Planners)] + t[ordinal(AgentRole::Developers)];
  const double residents = low + mid + high;
  return 0.0 - (std::sqrt(var) + std::abs(professionals - residents));  // +0 for an empty ledger
}

double equity_reward(const AcceptanceLedger& ledger) { return equity_from_tallies(ledger.accepted_area); }

double equity_reward_raw(const AcceptanceLedger& ledger) { return equity_from_tallies(ledger.accepted_area_raw); }

double combined_reward(const RewardComponents& c, const RewardWeights& w) {
  return w.self * c.self + w.local * c.local + w.global * c.global + w.equity * c.equity;
}

}  // namespace parcelplan
