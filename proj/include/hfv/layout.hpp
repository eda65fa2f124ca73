#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hfv/thermal_graph.hpp"

namespace hfv {

enum class LayoutKind { Layered, Force, Subspace, Circular };

const char* to_string(LayoutKind kind);
std::optional<LayoutKind> parse_layout_kind(const std::string& text);

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

/// Positions in abstract canvas units, one per graph node, in graph order.
struct LayoutResult {
  LayoutKind kind = LayoutKind::Circular;
  std::vector<std::pair<std::string, Point>> positions;

  const Point* find(const std::string& name) const;
  bool operator==(const LayoutResult&) const = default;
};

/// Nodes sorted by name at angle 2*pi*k/S on the unit circle, k = 0 at (1, 0).
LayoutResult layout_circular(const SubmodelGraph& graph);

struct LayeredDetail {
  std::vector<std::pair<std::string, int>> layers;
  /// Edges kept after cycle breaking, as (from, to) name pairs.
  std::vector<std::pair<std::string, std::string>> kept_edges;
  std::vector<std::pair<std::string, std::string>> removed_edges;
};

/// Longest-path layering after greedy cycle breaking, one barycenter sweep
/// down then up. y is the layer index; x is the centred rank in the layer.
LayoutResult layout_layered(const SubmodelGraph& graph, LayeredDetail* detail = nullptr);

/// Fruchterman-Reingold with edge attraction weighted by heat flow.
LayoutResult layout_force(const SubmodelGraph& graph, std::uint64_t seed = 0, int iterations = 500);

/// Initial positions used by layout_force for `seed`.
std::vector<Point> force_initial_positions(std::size_t count, std::uint64_t seed);

/// Laplacian eigenmap; each connected component is embedded separately and
/// placed left to right.
LayoutResult layout_subspace(const SubmodelGraph& graph, std::optional<int> dims = std::nullopt);

LayoutResult layout_graph(const SubmodelGraph& graph, LayoutKind kind, std::uint64_t seed = 0);

}  // namespace hfv
