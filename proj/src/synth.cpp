#include "parcelplan/synth.hpp"

#include <cmath>
#include <numeric>

#include "parcelplan/error.hpp"
#include "parcelplan/rng.hpp"

namespace parcelplan {

void SyntheticSpec::validate() const {
  if (width < 2 || height < 2) fail(ErrorCode::Validation, "synthetic grid dimensions must be at least 2x2");
  if (!(cell_m > 0.0) || !std::isfinite(cell_m)) fail(ErrorCode::Validation, "cell size must be positive");
  if (!(area_min > 0.0) || !(area_max >= area_min) || !std::isfinite(area_max)) {
    fail(ErrorCode::Validation, "area range must satisfy 0 < area_min <= area_max");
  }
  double total = 0.0;
  for (double w : mix) {
    if (!(w >= 0.0) || w > 1.0) fail(ErrorCode::Validation, "land-use mix weights must lie in [0,1]");
    total += w;
  }
  if (!(total > 0.0)) fail(ErrorCode::Validation, "land-use mix must have a positive weight");
  if (!(readjustable_fraction >= 0.0 && readjustable_fraction <= 1.0)) {
    fail(ErrorCode::Validation, "readjustable fraction must lie in [0,1]");
  }
}

std::vector<Parcel> synthesize_parcels(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n = static_cast<std::size_t>(spec.width) * static_cast<std::size_t>(spec.height);
  std::vector<Parcel> parcels;
  parcels.reserve(n);
  for (int row = 0; row < spec.height; ++row) {
    for (int col = 0; col < spec.width; ++col) {
      Parcel p;
      p.id = static_cast<ParcelId>(parcels.size() + 1);
      p.x = (col + 0.5) * spec.cell_m;
      p.y = (row + 0.5) * spec.cell_m;
      p.area = spec.cell_m * spec.cell_m * rng.uniform(spec.area_min, spec.area_max);
      p.land_use = land_use_from_ordinal(rng.categorical(spec.mix));
      parcels.push_back(p);
    }
  }

  const auto flagged = static_cast<std::size_t>(std::floor(spec.readjustable_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order.begin(), order.end());
  for (std::size_t i = 0; i < flagged; ++i) {
    Parcel& p = parcels[order[i]];
    if (p.land_use == LandUse::G) {
      p.open_space = true;
    } else if (rng.below(2) == 0) {
      p.vacant = true;
    } else {
      p.obsolete = true;
    }
  }
  return parcels;
}

std::string synthesize_csv(const SyntheticSpec& spec) { return format_parcels_csv(synthesize_parcels(spec)); }

}  // namespace parcelplan
