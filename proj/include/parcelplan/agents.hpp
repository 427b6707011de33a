#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parcelplan/land_use.hpp"
#include "parcelplan/spatial_graph.hpp"

namespace parcelplan {

// Ordinal equals the benefit-matrix row.
enum class AgentRole : int { Planners = 0, Developers = 1, Low = 2, Mid = 3, High = 4 };

inline constexpr std::size_t kNumRoles = 5;

inline constexpr std::array<AgentRole, kNumRoles> kAllRoles = {
    AgentRole::Planners, AgentRole::Developers, AgentRole::Low, AgentRole::Mid, AgentRole::High};

constexpr std::size_t ordinal(AgentRole role) { return static_cast<std::size_t>(role); }

constexpr bool is_resident(AgentRole role) {
  return role == AgentRole::Low || role == AgentRole::Mid || role == AgentRole::High;
}

std::string_view role_name(AgentRole role);
std::optional<AgentRole> parse_role(std::string_view name);

// Expected benefit of each stakeholder role (rows) for each land use
// (columns r, o, g, c, f).
inline constexpr std::array<std::array<double, kNumLandUses>, kNumRoles> kBenefitMatrix = {{
    {1.0, 1.0, 1.0, 0.5, 0.5},  // planners
    {1.0, 1.0, 1.0, 1.0, 1.0},  // developers
    {0.0, 1.0, 1.0, 0.0, 0.5},  // low income
    {1.0, 0.5, 1.0, 0.5, 0.5},  // mid income
    {1.0, 0.0, 0.5, 1.0, 0.5},  // high income
}};

constexpr double expected_benefit(AgentRole role, LandUse use) {
  return kBenefitMatrix[ordinal(role)][ordinal(use)];
}

// Argmax of the role's benefit row; ties go to the lowest land-use ordinal.
LandUse greedy_vote(AgentRole role);

struct Agent {
  int id = 0;
  AgentRole role = AgentRole::Planners;
  std::optional<ParcelId> home_parcel;    // residents only
  double observation_radius_m = kUnbounded;

  bool operator==(const Agent&) const = default;
};

// Per-role instantiation request from the run configuration.
struct RosterEntry {
  AgentRole role = AgentRole::Planners;
  int count = 1;
  std::vector<ParcelId> homes;  // residents; empty selects the default placement
  double radius_m = kWalkRadiusM;
};

// One entry per role, count 1.
std::vector<RosterEntry> default_roster_spec();

// Default resident homes: residential parcels sorted by area are split into
// terciles (low, mid, high) and each income group lives on the largest parcel
// of its tercile. Falls back to all parcels when fewer than three residential
// parcels exist.
std::array<ParcelId, 3> default_resident_homes(const SpatialGraph& graph);

// Expands roster entries into agents with ids 0..n-1 in entry order.
// Residents get homes (validated against the graph) and their radius;
// professionals get no home and an unbounded radius.
std::vector<Agent> build_agents(const SpatialGraph& graph, const std::vector<RosterEntry>& roster);

// The five-agent participatory roster.
std::vector<Agent> default_agents(const SpatialGraph& graph);

// A lone planner, used by the top-down methods.
std::vector<Agent> top_down_agents();

void validate_agents(const SpatialGraph& graph, const std::vector<Agent>& agents);

}  // namespace parcelplan
