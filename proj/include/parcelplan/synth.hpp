#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "parcelplan/land_use.hpp"
#include "parcelplan/spatial_graph.hpp"

namespace parcelplan {

struct SyntheticSpec {
  int width = 6;
  int height = 6;
  double cell_m = 150.0;
  // Parcel area is cell_m^2 times a uniform draw from [area_min, area_max].
  double area_min = 0.6;
  double area_max = 1.0;
  std::array<double, kNumLandUses> mix{0.35, 0.30, 0.10, 0.10, 0.15};  // r, o, g, c, f
  double readjustable_fraction = 0.25;
  std::uint64_t seed = 0;

  // Throws ErrorCode::Validation.
  void validate() const;
};

// Grid parcels in row-major order with ids 1..width*height. Exactly
// floor(fraction * count) parcels carry a readjustment flag.
std::vector<Parcel> synthesize_parcels(const SyntheticSpec& spec);

std::string synthesize_csv(const SyntheticSpec& spec);

}  // namespace parcelplan
