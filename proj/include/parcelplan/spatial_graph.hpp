#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "parcelplan/land_use.hpp"

namespace parcelplan {

using ParcelId = std::int64_t;

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// Walkability radius of the 15-minute community, in meters.
inline constexpr double kWalkRadiusM = 1250.0;

struct Parcel {
  ParcelId id = 0;
  LandUse land_use = LandUse::R;
  double area = 0.0;  // square meters
  double x = 0.0;     // projected planar meters
  double y = 0.0;
  bool vacant = false;
  bool obsolete = false;
  bool open_space = false;
  bool readjustable = false;
  bool assigned = false;

  bool operator==(const Parcel&) const = default;
};

struct Edge {
  std::size_t node = 0;  // index into SpatialGraph::parcels()
  double distance = 0.0;

  bool operator==(const Edge&) const = default;
};

// Parcels plus symmetric distance-weighted adjacency. Construction validates
// every structural invariant; afterwards only land-use assignment mutates.
class SpatialGraph {
 public:
  SpatialGraph() = default;
  SpatialGraph(std::vector<Parcel> parcels, std::vector<std::vector<Edge>> adjacency);

  std::size_t size() const { return parcels_.size(); }
  bool empty() const { return parcels_.empty(); }

  std::span<const Parcel> parcels() const { return parcels_; }
  const Parcel& parcel(std::size_t index) const { return parcels_.at(index); }
  std::span<const Edge> neighbors(std::size_t index) const { return adjacency_.at(index); }

  // Throws ErrorCode::Lookup for unknown ids.
  std::size_t index_of(ParcelId id) const;
  bool contains(ParcelId id) const { return index_.contains(id); }

  std::size_t edge_count() const;  // undirected
  double total_area() const;

  // Overwrites the land use of a readjustable parcel and marks it assigned.
  void assign_land_use(std::size_t index, LandUse use);
  void set_readjustable(std::size_t index, bool readjustable);
  // Clears the assigned flag on every parcel (land uses are left as-is).
  void clear_assigned();

  bool operator==(const SpatialGraph& other) const {
    return parcels_ == other.parcels_ && adjacency_ == other.adjacency_;
  }

 private:
  std::vector<Parcel> parcels_;
  std::vector<std::vector<Edge>> adjacency_;
  std::unordered_map<ParcelId, std::size_t> index_;
};

// --- ingestion -------------------------------------------------------------

// CSV with header id,land_use,area,x,y,vacant,obsolete,open_space. Errors
// carry the 1-based line number (the header is line 1).
std::vector<Parcel> parse_parcels(std::string_view text);

// Inverse of parse_parcels. Reals are written in shortest round-trip form.
std::string format_parcels_csv(std::span<const Parcel> parcels);

// Returns ids of parcels flagged vacant, obsolete or open space (ascending)
// and marks those parcels readjustable.
std::vector<ParcelId> select_readjustment_parcels(std::vector<Parcel>& parcels);

// --- construction ----------------------------------------------------------

double euclidean_distance(const Parcel& a, const Parcel& b);

// k nearest neighbors by Euclidean distance, symmetrized by union.
// Equidistant candidates are ordered by ascending parcel id.
SpatialGraph build_knn_graph(std::vector<Parcel> parcels, int k);

// Gaussian kernel transform exp(-(d/h)^2); reported as a statistic only.
double kernel_weight(double distance, double bandwidth);

// --- routing ---------------------------------------------------------------

// Shortest-path distances from origin; entries beyond `limit` stay infinite.
std::vector<double> shortest_path_distances(const SpatialGraph& graph, std::size_t origin,
                                            double limit = kUnbounded);

// Indices (ascending) whose shortest-path distance from origin is <= radius.
std::vector<std::size_t> nodes_within(const SpatialGraph& graph, std::size_t origin,
                                      double radius);

SpatialGraph induced_subgraph(const SpatialGraph& graph, std::span<const std::size_t> nodes);

SpatialGraph observation_subgraph(const SpatialGraph& graph, ParcelId origin_id,
                                  double radius_m);

// --- bundle / emission -----------------------------------------------------

// "source,target,distance" rows, one per directed edge.
std::string format_adjacency_csv(const SpatialGraph& graph);
SpatialGraph parse_adjacency_csv(std::string_view text, std::vector<Parcel> parcels);

struct GraphSummary {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t min_degree = 0;
  std::size_t max_degree = 0;
  std::size_t readjustable = 0;
  double mean_distance = 0.0;
  double mean_kernel_weight = 0.0;
};

// Bandwidth <= 0 uses the mean edge distance.
GraphSummary summarize(const SpatialGraph& graph, double kernel_bandwidth = 0.0);

// FeatureCollection of Point features, one per parcel of `before`, with
// properties id, land_use (before), area, assigned_land_use (after, or null
// for parcels that were not readjusted).
std::string plan_geojson(const SpatialGraph& before, const SpatialGraph& after);

}  // namespace parcelplan
