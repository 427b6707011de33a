#include "parcelplan/spatial_graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "parcelplan/error.hpp"
#include "parcelplan/text.hpp"

namespace parcelplan {

namespace {

constexpr std::string_view kParcelHeader = "id,land_use,area,x,y,vacant,obsolete,open_space";
constexpr std::string_view kAdjacencyHeader = "source,target,distance";

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

}  // namespace

SpatialGraph::SpatialGraph(std::vector<Parcel> parcels, std::vector<std::vector<Edge>> adjacency)
    : parcels_(std::move(parcels)), adjacency_(std::move(adjacency)) {
  if (adjacency_.size() != parcels_.size()) {
    fail(ErrorCode::Validation, "adjacency size does not match parcel count");
  }
  index_.reserve(parcels_.size());
  for (std::size_t i = 0; i < parcels_.size(); ++i) {
    const Parcel& p = parcels_[i];
    if (!(p.area > 0.0) || !std::isfinite(p.area)) {
      fail(ErrorCode::Validation, "parcel " + std::to_string(p.id) + " has non-positive area");
    }
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      fail(ErrorCode::Validation, "parcel " + std::to_string(p.id) + " has non-finite coordinates");
    }
    if (p.assigned && !p.readjustable) {
      fail(ErrorCode::Validation, "parcel " + std::to_string(p.id) + " assigned but not readjustable");
    }
    if (!index_.emplace(p.id, i).second) {
      fail(ErrorCode::Validation, "duplicate parcel id " + std::to_string(p.id));
    }
  }
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    auto& edges = adjacency_[i];
    std::sort(edges.begin(), edges.end(),
              [](const Edge& a, const Edge& b) { return a.node < b.node; });
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const Edge& edge = edges[e];
      if (edge.node >= parcels_.size()) fail(ErrorCode::Validation, "edge to unknown node");
      if (edge.node == i) fail(ErrorCode::Validation, "self-edge on parcel " + std::to_string(parcels_[i].id));
      if (e > 0 && edges[e - 1].node == edge.node) {
        fail(ErrorCode::Validation, "duplicate edge on parcel " + std::to_string(parcels_[i].id));
      }
      if (!(edge.distance > 0.0) || !std::isfinite(edge.distance)) {
        fail(ErrorCode::Validation, "edge distance must be positive");
      }
      const double euclid = euclidean_distance(parcels_[i], parcels_[edge.node]);
      if (std::abs(edge.distance - euclid) > 1e-6 * euclid) {
        fail(ErrorCode::Validation, "edge distance disagrees with parcel coordinates");
      }
    }
  }
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    for (const Edge& edge : adjacency_[i]) {
      const auto& back = adjacency_[edge.node];
      auto it = std::lower_bound(back.begin(), back.end(), i,
                                 [](const Edge& e, std::size_t n) { return e.node < n; });
      if (it == back.end() || it->node != i || it->distance != edge.distance) {
        fail(ErrorCode::Validation, "adjacency is not symmetric");
      }
    }
  }
}

std::size_t SpatialGraph::index_of(ParcelId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorCode::Lookup, "unknown parcel id " + std::to_string(id));
  return it->second;
}

std::size_t SpatialGraph::edge_count() const {
  std::size_t directed = 0;
  for (const auto& edges : adjacency_) directed += edges.size();
  return directed / 2;
}

double SpatialGraph::total_area() const {
  double total = 0.0;
  for (const Parcel& p : parcels_) total += p.area;
  return total;
}

void SpatialGraph::assign_land_use(std::size_t index, LandUse use) {
  Parcel& p = parcels_.at(index);
  if (!p.readjustable) {
    fail(ErrorCode::Contract, "parcel " + std::to_string(p.id) + " is not readjustable");
  }
  p.land_use = use;
  p.assigned = true;
}

void SpatialGraph::set_readjustable(std::size_t index, bool readjustable) {
  Parcel& p = parcels_.at(index);
  p.readjustable = readjustable;
  if (!readjustable) p.assigned = false;
}

void SpatialGraph::clear_assigned() {
  for (Parcel& p : parcels_) p.assigned = false;
}

std::vector<Parcel> parse_parcels(std::string_view content) {
  const auto lines = text::split_lines(content);
  std::size_t first = 0;
  while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
  if (first == lines.size()) fail(ErrorCode::Parse, "line 1: missing header");

  std::string_view header = text::trim(lines[first]);
  if (header.size() >= 3 && header.substr(0, 3) == "\xEF\xBB\xBF") header.remove_prefix(3);
  {
    auto cols = text::split(header, ',');
    std::string normalized;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) normalized += ',';
      normalized += text::trim(cols[i]);
    }
    if (normalized != kParcelHeader) {
      fail(ErrorCode::Parse, at_line(first + 1) + "expected header '" + std::string(kParcelHeader) + "'");
    }
  }

  std::vector<Parcel> parcels;
  std::set<ParcelId> seen;
  for (std::size_t li = first + 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (text::trim(lines[li]).empty()) continue;
    auto cells = text::split(lines[li], ',');
    if (cells.size() != 8) {
      fail(ErrorCode::Parse, at_line(line_no) + "expected 8 fields, found " + std::to_string(cells.size()));
    }
    Parcel p;
    long long id = 0;
    if (!text::parse_int(cells[0], id)) fail(ErrorCode::Parse, at_line(line_no) + "malformed id");
    p.id = id;
    auto use = parse_land_use(text::trim(cells[1]));
    if (!use) {
      fail(ErrorCode::Validation,
           at_line(line_no) + "unknown land use '" + std::string(text::trim(cells[1])) + "'");
    }
    p.land_use = *use;
    if (!text::parse_real(cells[2], p.area)) fail(ErrorCode::Parse, at_line(line_no) + "malformed area");
    if (!text::parse_real(cells[3], p.x)) fail(ErrorCode::Parse, at_line(line_no) + "malformed x");
    if (!text::parse_real(cells[4], p.y)) fail(ErrorCode::Parse, at_line(line_no) + "malformed y");
    if (!text::parse_bool(cells[5], p.vacant)) fail(ErrorCode::Parse, at_line(line_no) + "malformed vacant flag");
    if (!text::parse_bool(cells[6], p.obsolete)) fail(ErrorCode::Parse, at_line(line_no) + "malformed obsolete flag");
    if (!text::parse_bool(cells[7], p.open_space)) fail(ErrorCode::Parse, at_line(line_no) + "malformed open_space flag");
    if (!(p.area > 0.0) || !std::isfinite(p.area)) {
      fail(ErrorCode::Validation, at_line(line_no) + "area must be positive");
    }
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      fail(ErrorCode::Validation, at_line(line_no) + "coordinates must be finite");
    }
    if (!seen.insert(p.id).second) {
      fail(ErrorCode::Validation, at_line(line_no) + "duplicate id " + std::to_string(p.id));
    }
    parcels.push_back(p);
  }
  return parcels;
}

std::string format_parcels_csv(std::span<const Parcel> parcels) {
  std::string out(kParcelHeader);
  out += '\n';
  auto flag = [](bool b) { return b ? "true" : "false"; };
  for (const Parcel& p : parcels) {
    out += std::to_string(p.id);
    out += ',';
    out += land_use_code(p.land_use);
    out += ',' + text::format_real(p.area);
    out += ',' + text::format_real(p.x);
    out += ',' + text::format_real(p.y);
    out += ',';
    out += flag(p.vacant);
    out += ',';
    out += flag(p.obsolete);
    out += ',';
    out += flag(p.open_space);
    out += '\n';
  }
  return out;
}

std::vector<ParcelId> select_readjustment_parcels(std::vector<Parcel>& parcels) {
  std::vector<ParcelId> ids;
  for (Parcel& p : parcels) {
    if (p.vacant || p.obsolete || p.open_space) {
      p.readjustable = true;
      ids.push_back(p.id);
    }
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

double euclidean_distance(const Parcel& a, const Parcel& b) { return std::hypot(a.x - b.x, a.y - b.y); }

SpatialGraph build_knn_graph(std::vector<Parcel> parcels, int k) {
  if (k < 1) fail(ErrorCode::Config, "k must be at least 1");
  const std::size_t n = parcels.size();
  if (n < static_cast<std::size_t>(k) + 1) {
    fail(ErrorCode::Config, "KNN with k=" + std::to_string(k) + " needs at least " +
                                std::to_string(k + 1) + " parcels, got " + std::to_string(n));
  }
  for (const Parcel& p : parcels) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      fail(ErrorCode::Validation, "parcel " + std::to_string(p.id) + " has non-finite coordinates");
    }
  }

  std::vector<std::set<std::size_t>> linked(n);
  std::vector<std::tuple<double, ParcelId, std::size_t>> candidates;
  candidates.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    candidates.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = euclidean_distance(parcels[i], parcels[j]);
      if (d == 0.0) {
        fail(ErrorCode::Validation, "parcels " + std::to_string(parcels[i].id) + " and " +
                                        std::to_string(parcels[j].id) + " share coordinates");
      }
      candidates.emplace_back(d, parcels[j].id, j);
    }
    const auto kk = static_cast<std::ptrdiff_t>(k);
    std::partial_sort(candidates.begin(), candidates.begin() + kk, candidates.end());
    for (std::ptrdiff_t c = 0; c < kk; ++c) {
      const std::size_t j = std::get<2>(candidates[static_cast<std::size_t>(c)]);
      linked[i].insert(j);
      linked[j].insert(i);
    }
  }

  std::vector<std::vector<Edge>> adjacency(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : linked[i]) adjacency[i].push_back({j, euclidean_distance(parcels[i], parcels[j])});
  }
  return SpatialGraph(std::move(parcels), std::move(adjacency));
}

double kernel_weight(double distance, double bandwidth) {
  if (!(bandwidth > 0.0)) fail(ErrorCode::Domain, "kernel bandwidth must be positive");
  const double r = distance / bandwidth;
  return std::exp(-r * r);
}

std::vector<double> shortest_path_distances(const SpatialGraph& graph, std::size_t origin, double limit) {
  if (origin >= graph.size()) fail(ErrorCode::Lookup, "origin index out of range");
  std::vector<double> dist(graph.size(), kUnbounded);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[origin] = 0.0;
  queue.emplace(0.0, origin);
  while (!queue.empty()) {
    auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    for (const Edge& e : graph.neighbors(u)) {
      const double nd = d + e.distance;
      if (nd <= limit && nd < dist[e.node]) {
        dist[e.node] = nd;
        queue.emplace(nd, e.node);
      }
    }
  }
  return dist;
}

std::vector<std::size_t> nodes_within(const SpatialGraph& graph, std::size_t origin, double radius) {
  if (radius < 0.0 || std::isnan(radius)) fail(ErrorCode::Domain, "radius must be non-negative");
  const auto dist = shortest_path_distances(graph, origin, radius);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= radius) nodes.push_back(i);
  }
  return nodes;
}

SpatialGraph induced_subgraph(const SpatialGraph& graph, std::span<const std::size_t> nodes) {
  std::vector<std::size_t> remap(graph.size(), SIZE_MAX);
  std::vector<Parcel> parcels;
  parcels.reserve(nodes.size());
  for (std::size_t local = 0; local < nodes.size(); ++local) {
    remap[nodes[local]] = local;
    parcels.push_back(graph.parcel(nodes[local]));
  }
  std::vector<std::vector<Edge>> adjacency(nodes.size());
  for (std::size_t local = 0; local < nodes.size(); ++local) {
    for (const Edge& e : graph.neighbors(nodes[local])) {
      if (remap[e.node] != SIZE_MAX) adjacency[local].push_back({remap[e.node], e.distance});
    }
  }
  return SpatialGraph(std::move(parcels), std::move(adjacency));
}

SpatialGraph observation_subgraph(const SpatialGraph& graph, ParcelId origin_id, double radius_m) {
  const std::size_t origin = graph.index_of(origin_id);
  const auto nodes = nodes_within(graph, origin, radius_m);
  return induced_subgraph(graph, nodes);
}

std::string format_adjacency_csv(const SpatialGraph& graph) {
  std::string out(kAdjacencyHeader);
  out += '\n';
  for (std::size_t i = 0; i < graph.size(); ++i) {
    for (const Edge& e : graph.neighbors(i)) {
      out += std::to_string(graph.parcel(i).id) + ',' + std::to_string(graph.parcel(e.node).id) + ',' +
             text::format_real(e.distance) + '\n';
    }
  }
  return out;
}

SpatialGraph parse_adjacency_csv(std::string_view content, std::vector<Parcel> parcels) {
  std::unordered_map<ParcelId, std::size_t> index;
  for (std::size_t i = 0; i < parcels.size(); ++i) index.emplace(parcels[i].id, i);

  const auto lines = text::split_lines(content);
  if (lines.empty() || text::trim(lines[0]) != kAdjacencyHeader) {
    fail(ErrorCode::Parse, "line 1: expected header '" + std::string(kAdjacencyHeader) + "'");
  }
  std::vector<std::vector<Edge>> adjacency(parcels.size());
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (text::trim(lines[li]).empty()) continue;
    auto cells = text::split(lines[li], ',');
    long long src = 0, dst = 0;
    double d = 0.0;
    if (cells.size() != 3 || !text::parse_int(cells[0], src) || !text::parse_int(cells[1], dst) ||
        !text::parse_real(cells[2], d)) {
      fail(ErrorCode::Parse, at_line(li + 1) + "malformed adjacency row");
    }
    auto s = index.find(src);
    auto t = index.find(dst);
    if (s == index.end() || t == index.end()) {
      fail(ErrorCode::Lookup, at_line(li + 1) + "edge references unknown parcel");
    }
    adjacency[s->second].push_back({t->second, d});
  }
  return SpatialGraph(std::move(parcels), std::move(adjacency));
}

GraphSummary summarize(const SpatialGraph& graph, double kernel_bandwidth) {
  GraphSummary s;
  s.nodes = graph.size();
  s.edges = graph.edge_count();
  s.min_degree = graph.empty() ? 0 : SIZE_MAX;
  double distance_sum = 0.0;
  std::size_t directed = 0;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto deg = graph.neighbors(i).size();
    s.min_degree = std::min(s.min_degree, deg);
    s.max_degree = std::max(s.max_degree, deg);
    if (graph.parcel(i).readjustable) ++s.readjustable;
    for (const Edge& e : graph.neighbors(i)) {
      distance_sum += e.distance;
      ++directed;
    }
  }
  if (directed == 0) return s;
  s.mean_distance = distance_sum / static_cast<double>(directed);
  const double h = kernel_bandwidth > 0.0 ? kernel_bandwidth : s.mean_distance;
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    for (const Edge& e : graph.neighbors(i)) weight_sum += kernel_weight(e.distance, h);
  }
  s.mean_kernel_weight = weight_sum / static_cast<double>(directed);
  return s;
}

std::string plan_geojson(const SpatialGraph& before, const SpatialGraph& after) {
  using nlohmann::json;
  json features = json::array();
  for (const Parcel& p : before.parcels()) {
    json props = {
        {"id", p.id},
        {"land_use", std::string(1, land_use_code(p.land_use))},
        {"area", p.area},
    };
    const Parcel& q = after.parcel(after.index_of(p.id));
    if (q.assigned) {
      props["assigned_land_use"] = std::string(1, land_use_code(q.land_use));
    } else {
      props["assigned_land_use"] = nullptr;
    }
    features.push_back({
        {"type", "Feature"},
        {"geometry", {{"type", "Point"}, {"coordinates", {p.x, p.y}}}},
        {"properties", std::move(props)},
    });
  }
  json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  return doc.dump(2) + "\n";
}

}  // namespace parcelplan
