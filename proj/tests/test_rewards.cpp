#include <doctest.h>

#include <cmath>
#include <numeric>

#include "parcelplan/rewards.hpp"
#include "support.hpp"

using namespace parcelplan;
using testing::code_of;
using testing::make_parcel;

namespace {

// A district of parcels on a line with the given uses and areas.
SpatialGraph district(const std::vector<std::pair<LandUse, double>>& parcels) {
  std::vector<Parcel> ps;
  for (std::size_t i = 0; i < parcels.size(); ++i) {
    ps.push_back(make_parcel(static_cast<ParcelId>(i + 1), parcels[i].first, parcels[i].second,
                             10.0 * static_cast<double>(i), 0.0));
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 1; i < ps.size(); ++i) edges.push_back({i - 1, i});
  return testing::graph_from_edges(std::move(ps), edges);
}

double shannon_oracle(const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double h = 0.0;
  for (double w : weights) {
    if (w > 0.0) h -= (w / total) * std::log(w / total);
  }
  return h;
}

std::array<double, kNumRoles> tallies(double planners, double developers, double low, double mid, double high) {
  return {planners, developers, low, mid, high};
}

}  // namespace

TEST_SUITE("rewards") {

TEST_CASE("self reward is the benefit entry") {
  CHECK(self_reward(AgentRole::Developers, LandUse::G) == 1.0);
  CHECK(self_reward(AgentRole::Mid, LandUse::O) == 0.5);
  CHECK(self_reward(AgentRole::Low, LandUse::R) == 0.0);
}

TEST_CASE("local reward halves per adoption") {
  CHECK(local_reward(AgentRole::Planners, LandUse::R, 0) == 1.0);
  CHECK(local_reward(AgentRole::Planners, LandUse::R, 1) == 0.5);
  CHECK(local_reward(AgentRole::Planners, LandUse::R, 2) == 0.25);
  CHECK(local_reward(AgentRole::Planners, LandUse::R, 0, false) == 0.0);
  CHECK(code_of([] { local_reward(AgentRole::Planners, LandUse::R, -1); }) == ErrorCode::Domain);
  for (AgentRole role : kAllRoles) {
    for (LandUse use : kAllLandUses) {
      for (int n = 0; n < 20; ++n) {
        const double now = local_reward(role, use, n), next = local_reward(role, use, n + 1);
        CHECK(next <= now);
        CHECK(next == now / 2.0);
      }
    }
  }
}

TEST_CASE("density examples") {
  auto g = district({{LandUse::G, 30}, {LandUse::R, 60}, {LandUse::C, 10}});
  CHECK(density_score(g, {LandUse::G}) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(density_score(g, LandUseSet::all()) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(density_score(g, {LandUse::G, LandUse::C}) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(density_score(g, {}) == 0.0);
}

TEST_CASE("density by parcel count") {
  auto g = district({{LandUse::G, 30}, {LandUse::R, 60}, {LandUse::C, 10}, {LandUse::R, 5}});
  CHECK(density_score(g, {LandUse::G, LandUse::C}, ShareMode::Count) == 0.5);
}

TEST_CASE("diversity examples") {
  auto uniform = district({{LandUse::R, 20}, {LandUse::O, 20}, {LandUse::G, 20}, {LandUse::C, 20}, {LandUse::F, 20}});
  CHECK(diversity_score(uniform) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  auto single = district({{LandUse::G, 10}, {LandUse::G, 30}});
  CHECK(diversity_score(single) == 0.0);
  auto split = district({{LandUse::R, 80}, {LandUse::O, 20}});
  CHECK(diversity_score(split) == doctest::Approx(0.50040).epsilon(1e-5));
  CHECK(diversity_score(split) == doctest::Approx(shannon_oracle({0.8, 0.2})).epsilon(1e-14));
}

TEST_CASE("global reward examples") {
  auto uniform = district({{LandUse::R, 20}, {LandUse::O, 20}, {LandUse::G, 20}, {LandUse::C, 20}, {LandUse::F, 20}});
  CHECK(global_reward(uniform, {LandUse::G, LandUse::C}) == doctest::Approx(0.4 + std::log(5.0)).epsilon(1e-12));
  CHECK(global_reward(uniform, {LandUse::G, LandUse::C}) == doctest::Approx(2.00944).epsilon(1e-5));
  auto green = district({{LandUse::G, 5}, {LandUse::G, 7}});
  CHECK(global_reward(green, {LandUse::G}) == 1.0);
  CHECK(global_reward(uniform, {}) == diversity_score(uniform));
}

TEST_CASE("empty district is a domain error") {
  SpatialGraph empty;
  CHECK(code_of([&] { density_score(empty, {LandUse::G}); }) == ErrorCode::Domain);
  CHECK(code_of([&] { diversity_score(empty); }) == ErrorCode::Domain);
}

TEST_CASE("equity examples") {
  CHECK(equity_from_tallies(tallies(15, 15, 10, 10, 10)) == 0.0);
  CHECK(equity_from_tallies(tallies(2, 3, 10, 20, 30)) == doctest::Approx(-63.16497).epsilon(1e-7));
  CHECK(equity_from_tallies(tallies(2, 3, 10, 20, 30)) ==
        doctest::Approx(-(testing::popstd3(10, 20, 30) + 55.0)).epsilon(1e-14));
  AcceptanceLedger empty;
  CHECK(equity_reward(empty) == 0.0);
  CHECK_FALSE(std::signbit(equity_reward(empty)));
}

TEST_CASE("ledger records normalized and raw areas") {
  AcceptanceLedger ledger;
  ledger.record(AgentRole::Low, LandUse::G, 100.0, 1000.0);
  ledger.record(AgentRole::Low, LandUse::G, 50.0, 1000.0);
  CHECK(ledger.accepted_area[ordinal(AgentRole::Low)] == doctest::Approx(0.15));
  CHECK(ledger.accepted_area_raw[ordinal(AgentRole::Low)] == 150.0);
  CHECK(ledger.adopted(AgentRole::Low, LandUse::G) == 2);
  CHECK(ledger.adopted(AgentRole::Low, LandUse::R) == 0);
  CHECK(equity_reward_raw(ledger) == doctest::Approx(-(testing::popstd3(150, 0, 0) + 150.0)));
}

TEST_CASE("equity is non-positive and zero only at balance") {
  Rng rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    std::array<double, kNumRoles> t{};
    for (double& v : t) v = rng.below(4) == 0 ? 0.0 : rng.uniform(0, 10);
    const double e = equity_from_tallies(t);
    CHECK(e <= 0.0);
    CHECK(e == doctest::Approx(-(testing::popstd3(t[2], t[3], t[4]) + std::abs(t[0] + t[1] - t[2] - t[3] - t[4]))));
  }
  // Balanced residents with a matching professional total.
  for (int trial = 0; trial < 200; ++trial) {
    const double r = static_cast<double>(rng.below(100));
    const double p = static_cast<double>(rng.below(static_cast<std::uint64_t>(3 * r) + 1));
    CHECK(equity_from_tallies(tallies(p, 3 * r - p, r, r, r)) == 0.0);
    CHECK(equity_from_tallies(tallies(p, 3 * r - p + 1, r, r, r)) < 0.0);
    CHECK(equity_from_tallies(tallies(p, 3 * r - p, r + 1, r, r - 1)) < 0.0);
  }
}

TEST_CASE("density and diversity bounds and additivity on random districts") {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::pair<LandUse, double>> ps;
    const auto n = 1 + rng.below(25);
    for (std::uint64_t i = 0; i < n; ++i) ps.push_back({land_use_from_ordinal(rng.below(5)), rng.uniform(1, 500)});
    auto g = district(ps);
    LandUseSet a, b;
    for (LandUse u : kAllLandUses) {
      const auto pick = rng.below(3);
      if (pick == 1) a.insert(u);
      if (pick == 2) b.insert(u);
    }
    LandUseSet both = a;
    for (LandUse u : kAllLandUses) {
      if (b.contains(u)) both.insert(u);
    }
    const double da = density_score(g, a), db = density_score(g, b);
    CHECK(da >= 0.0);
    CHECK(da <= 1.0 + 1e-15);
    CHECK(density_score(g, both) == doctest::Approx(da + db).epsilon(1e-12));
    const double h = diversity_score(g);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(5.0) + 1e-12);
  }
}

TEST_CASE("diversity is maximal at equal shares") {
  // Hill-climb: any small transfer of area away from the equal split lowers
  // the index, and climbing from a random split approaches ln 5.
  Rng rng(4);
  auto make = [](const std::array<double, 5>& areas) {
    std::vector<std::pair<LandUse, double>> ps;
    for (std::size_t u = 0; u < 5; ++u) ps.push_back({land_use_from_ordinal(u), areas[u]});
    return district(ps);
  };
  const double top = diversity_score(make({1, 1, 1, 1, 1}));
  for (int trial = 0; trial < 100; ++trial) {
    std::array<double, 5> areas{1, 1, 1, 1, 1};
    const auto from = rng.below(5), to = (from + 1 + rng.below(4)) % 5;
    const double delta = rng.uniform(1e-3, 0.5);
    areas[from] -= delta;
    areas[to] += delta;
    CHECK(diversity_score(make(areas)) < top);
  }
  std::array<double, 5> areas{};
  for (double& a : areas) a = rng.uniform(0.1, 5.0);
  double current = diversity_score(make(areas));
  for (int step = 0; step < 4000; ++step) {
    auto next = areas;
    const auto u = rng.below(5);
    next[u] = std::max(0.01, next[u] + rng.uniform(-0.05, 0.05));
    const double h = diversity_score(make(next));
    if (h >= current) {
      areas = next;
      current = h;
    }
  }
  CHECK(current == doctest::Approx(std::log(5.0)).epsilon(1e-4));
}

TEST_CASE("combined reward examples and linearity") {
  CHECK(combined_reward({1, 0.5, 2, -3}, {1, 1, 1, 1}) == 0.5);
  CHECK(combined_reward({1, 0.5, 2, -3}, {0, 0, 0, 0}) == 0.0);
  CHECK(combined_reward({9, 9, 1.7, 9}, {0, 0, 1, 0}) == 1.7);
  Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    RewardWeights w{rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(0, 3)};
    RewardComponents c{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const double base = combined_reward(c, w);
    const double k = rng.uniform(-4, 4), d = rng.uniform(-4, 4);
    for (int comp = 0; comp < 4; ++comp) {
      RewardComponents scaled = c, shifted = c;
      double* s = comp == 0 ? &scaled.self : comp == 1 ? &scaled.local : comp == 2 ? &scaled.global : &scaled.equity;
      double* t = comp == 0 ? &shifted.self : comp == 1 ? &shifted.local : comp == 2 ? &shifted.global : &shifted.equity;
      const double weight = comp == 0 ? w.self : comp == 1 ? w.local : comp == 2 ? w.global : w.equity;
      *s *= k;
      *t += d;
      CHECK(combined_reward(shifted, w) == doctest::Approx(base + weight * d).epsilon(1e-12));
      CHECK(combined_reward(scaled, w) == doctest::Approx(base + weight * (k - 1) * (comp == 0   ? c.self
                                                                                    : comp == 1 ? c.local
                                                                                    : comp == 2 ? c.global
                                                                                                : c.equity))
                                              .epsilon(1e-12));
    }
  }
}

TEST_CASE("land use set text form") {
  CHECK(LandUseSet({LandUse::G, LandUse::C}).to_string() == "g,c");
  CHECK(LandUseSet::parse("c, g") == LandUseSet({LandUse::G, LandUse::C}));
  CHECK(LandUseSet::parse("").empty());
  CHECK(code_of([] { LandUseSet::parse("g,x"); }) == ErrorCode::Validation);
}

}  // TEST_SUITE
