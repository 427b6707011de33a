#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace parcelplan {

// Residential, office, green space, commercial, facilities. The ordinal is
// the action index voted by agents and the column index of the benefit matrix.
enum class LandUse : int { R = 0, O = 1, G = 2, C = 3, F = 4 };

inline constexpr std::size_t kNumLandUses = 5;

inline constexpr std::array<LandUse, kNumLandUses> kAllLandUses = {
    LandUse::R, LandUse::O, LandUse::G, LandUse::C, LandUse::F};

constexpr std::size_t ordinal(LandUse use) { return static_cast<std::size_t>(use); }

LandUse land_use_from_ordinal(std::size_t index);

char land_use_code(LandUse use);

std::optional<LandUse> parse_land_use(std::string_view code);

// Bit set over the five land uses, used for planning targets.
class LandUseSet {
 public:
  constexpr LandUseSet() = default;
  constexpr LandUseSet(std::initializer_list<LandUse> uses) {
    for (LandUse u : uses) insert(u);
  }

  constexpr void insert(LandUse use) { bits_ |= 1u << ordinal(use); }
  constexpr bool contains(LandUse use) const { return (bits_ >> ordinal(use)) & 1u; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool operator==(const LandUseSet&) const = default;

  // "g,c" style; empty string for the empty set.
  std::string to_string() const;
  static LandUseSet parse(std::string_view text);

  static constexpr LandUseSet all() {
    return {LandUse::R, LandUse::O, LandUse::G, LandUse::C, LandUse::F};
  }

 private:
  unsigned bits_ = 0;
};

}  // namespace parcelplan
