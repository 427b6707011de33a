#include "parcelplan/agents.hpp"

#include <algorithm>
#include <set>

#include "parcelplan/error.hpp"

namespace parcelplan {

namespace {
constexpr std::array<std::string_view, kNumRoles> kRoleNames = {"planners", "developers", "low", "mid",
                                                                 "high"};
}

std::string_view role_name(AgentRole role) { return kRoleNames[ordinal(role)]; }

std::optional<AgentRole> parse_role(std::string_view name) {
  for (std::size_t i = 0; i < kNumRoles; ++i) {
    if (kRoleNames[i] == name) return static_cast<AgentRole>(i);
  }
  return std::nullopt;
}

LandUse greedy_vote(AgentRole role) {
  const auto& row = kBenefitMatrix[ordinal(role)];
  std::size_t best = 0;
  for (std::size_t j = 1; j < kNumLandUses; ++j) {
    if (row[j] > row[best]) best = j;
  }
  return static_cast<LandUse>(best);
}

std::vector<RosterEntry> default_roster_spec() {
  std::vector<RosterEntry> roster;
  for (AgentRole role : kAllRoles) roster.push_back({role, 1, {}, kWalkRadiusM});
  return roster;
}

std::array<ParcelId, 3> default_resident_homes(const SpatialGraph& graph) {
  std::vector<const Parcel*> pool;
  for (const Parcel& p : graph.parcels()) {
    if (p.land_use == LandUse::R) pool.push_back(&p);
  }
  if (pool.size() < 3) {
    pool.clear();
    for (const Parcel& p : graph.parcels()) pool.push_back(&p);
  }
  if (pool.size() < 3) fail(ErrorCode::Config, "at least three parcels are needed to place residents");
  std::sort(pool.begin(), pool.end(), [](const Parcel* a, const Parcel* b) {
    return a->area != b->area ? a->area < b->area : a->id < b->id;
  });
  // Tercile t covers [t*n/3, (t+1)*n/3); its largest parcel is the last one.
  const std::size_t n = pool.size();
  std::array<ParcelId, 3> homes{};
  for (std::size_t t = 0; t < 3; ++t) homes[t] = pool[(t + 1) * n / 3 - 1]->id;
  return homes;
}

std::vector<Agent> build_agents(const SpatialGraph& graph, const std::vector<RosterEntry>& roster) {
  std::vector<Agent> agents;
  std::optional<std::array<ParcelId, 3>> defaults;
  for (const RosterEntry& entry : roster) {
    if (entry.count < 0) fail(ErrorCode::Config, "agent count must be non-negative");
    for (int i = 0; i < entry.count; ++i) {
      Agent a;
      a.id = static_cast<int>(agents.size());
      a.role = entry.role;
      if (is_resident(entry.role)) {
        if (!entry.homes.empty()) {
          a.home_parcel = entry.homes[static_cast<std::size_t>(i) % entry.homes.size()];
        } else {
          if (!defaults) defaults = default_resident_homes(graph);
          a.home_parcel = (*defaults)[ordinal(entry.role) - ordinal(AgentRole::Low)];
        }
        a.observation_radius_m = entry.radius_m;
      }
      agents.push_back(a);
    }
  }
  validate_agents(graph, agents);
  return agents;
}

std::vector<Agent> default_agents(const SpatialGraph& graph) {
  return build_agents(graph, default_roster_spec());
}

std::vector<Agent> top_down_agents() { return {Agent{0, AgentRole::Planners, std::nullopt, kUnbounded}}; }

void validate_agents(const SpatialGraph& graph, const std::vector<Agent>& agents) {
  if (agents.empty()) fail(ErrorCode::Config, "agent roster is empty");
  std::set<int> ids;
  for (const Agent& a : agents) {
    if (!ids.insert(a.id).second) fail(ErrorCode::Config, "duplicate agent id " + std::to_string(a.id));
    if (is_resident(a.role)) {
      if (!a.home_parcel) {
        fail(ErrorCode::Config, "resident agent " + std::to_string(a.id) + " has no home parcel");
      }
      if (!graph.contains(*a.home_parcel)) {
        fail(ErrorCode::Config, "home parcel " + std::to_string(*a.home_parcel) + " of agent " +
                                    std::to_string(a.id) + " is not in the graph");
      }
      if (!(a.observation_radius_m >= 0.0)) fail(ErrorCode::Config, "observation radius must be non-negative");
    } else if (a.home_parcel) {
      fail(ErrorCode::Config, "professional agent " + std::to_string(a.id) + " must not have a home parcel");
    }
  }
}

}  // namespace parcelplan
