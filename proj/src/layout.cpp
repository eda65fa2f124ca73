#include "hfv/layout.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "hfv/error.hpp"

namespace hfv {

namespace {

struct DirectedEdge {
  std::size_t from;
  std::size_t to;
  double q;
  ConductorKind kind;
};

std::map<std::string, std::size_t> name_slots(const SubmodelGraph& graph) {
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) slot[graph.nodes[i].name] = i;
  return slot;
}

std::vector<DirectedEdge> directed_edges(const SubmodelGraph& graph) {
  const auto slot = name_slots(graph);
  std::vector<DirectedEdge> edges;
  for (const auto& e : graph.edges) {
    auto a = slot.find(e.from);
    auto b = slot.find(e.to);
    if (a == slot.end() || b == slot.end()) {
      fail(ErrorKind::Validation, "dangling_edge", "edge " + e.from + "->" + e.to + " names a missing node");
    }
    if (a->second != b->second) edges.push_back({a->second, b->second, e.q_watts, e.kind});
  }
  return edges;
}

// Returns the edge ids on one directed cycle, or an empty list.
std::vector<std::size_t> find_cycle(std::size_t n, const std::vector<DirectedEdge>& edges,
                                    const std::vector<bool>& alive, const std::vector<std::size_t>& visit_order) {
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t id = 0; id < edges.size(); ++id) {
    if (alive[id]) out[edges[id].from].push_back(id);
  }
  enum class Mark { White, Grey, Black };
  std::vector<Mark> mark(n, Mark::White);
  std::vector<std::size_t> via(n, SIZE_MAX);  // edge that reached the node

  for (std::size_t root : visit_order) {
    if (mark[root] != Mark::White) continue;
    // Iterative DFS; frame = (node, next out-edge position).
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    mark[root] = Mark::Grey;
    while (!stack.empty()) {
      auto& [u, pos] = stack.back();
      if (pos == out[u].size()) {
        mark[u] = Mark::Black;
        stack.pop_back();
        continue;
      }
      const std::size_t id = out[u][pos++];
      const std::size_t v = edges[id].to;
      if (mark[v] == Mark::Grey) {
        std::vector<std::size_t> cycle{id};
        for (std::size_t w = u; w != v; w = edges[via[w]].from) cycle.push_back(via[w]);
        return cycle;
      }
      if (mark[v] == Mark::White) {
        mark[v] = Mark::Grey;
        via[v] = id;
        stack.emplace_back(v, 0);
      }
    }
  }
  return {};
}

}  // namespace

const char* to_string(LayoutKind kind) {
  switch (kind) {
    case LayoutKind::Layered:
      return "layered";
    case LayoutKind::Force:
      return "force";
    case LayoutKind::Subspace:
      return "subspace";
    case LayoutKind::Circular:
      return "circular";
  }
  return "circular";
}

std::optional<LayoutKind> parse_layout_kind(const std::string& text) {
  for (auto k : {LayoutKind::Layered, LayoutKind::Force, LayoutKind::Subspace, LayoutKind::Circular}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

const Point* LayoutResult::find(const std::string& name) const {
  for (const auto& [n, p] : positions) {
    if (n == name) return &p;
  }
  return nullptr;
}

LayoutResult layout_circular(const SubmodelGraph& graph) {
  LayoutResult result;
  result.kind = LayoutKind::Circular;
  std::vector<std::string> names;
  for (const auto& n : graph.nodes) names.push_back(n.name);
  std::sort(names.begin(), names.end());
  const double count = static_cast<double>(names.size());
  std::map<std::string, Point> placed;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / count;
    placed[names[k]] = {std::cos(angle), std::sin(angle)};
  }
  for (const auto& n : graph.nodes) result.positions.emplace_back(n.name, placed[n.name]);
  return result;
}

LayoutResult layout_layered(const SubmodelGraph& graph, LayeredDetail* detail) {
  const std::size_t n = graph.nodes.size();
  const auto edges = directed_edges(graph);

  std::vector<std::size_t> by_name(n);
  std::iota(by_name.begin(), by_name.end(), 0);
  std::sort(by_name.begin(), by_name.end(),
            [&](std::size_t a, std::size_t b) { return graph.nodes[a].name < graph.nodes[b].name; });

  auto edge_key = [&](std::size_t id) {
    const auto& e = edges[id];
    return std::make_tuple(e.q, graph.nodes[e.from].name, graph.nodes[e.to].name, static_cast<int>(e.kind));
  };

  // Greedy cycle breaking: drop the weakest edge of each detected cycle.
  std::vector<bool> alive(edges.size(), true);
  for (;;) {
    auto cycle = find_cycle(n, edges, alive, by_name);
    if (cycle.empty()) break;
    auto weakest = *std::min_element(cycle.begin(), cycle.end(),
                                     [&](std::size_t a, std::size_t b) { return edge_key(a) < edge_key(b); });
    alive[weakest] = false;
  }

  // Longest-path layering over a topological order (Kahn, name tie-break).
  std::vector<int> indegree(n, 0);
  std::vector<std::vector<std::size_t>> succ(n);
  std::vector<std::vector<std::size_t>> pred(n);
  for (std::size_t id = 0; id < edges.size(); ++id) {
    if (!alive[id]) continue;
    succ[edges[id].from].push_back(edges[id].to);
    pred[edges[id].to].push_back(edges[id].from);
    indegree[edges[id].to] += 1;
  }
  auto name_less = [&](std::size_t a, std::size_t b) { return graph.nodes[a].name < graph.nodes[b].name; };
  std::vector<std::size_t> ready;
  for (std::size_t v : by_name) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  std::vector<int> layer(n, 0);
  std::size_t processed = 0;
  while (!ready.empty()) {
    auto it = std::min_element(ready.begin(), ready.end(), name_less);
    const std::size_t u = *it;
    ready.erase(it);
    ++processed;
    for (std::size_t v : succ[u]) {
      layer[v] = std::max(layer[v], layer[u] + 1);
      if (--indegree[v] == 0) ready.push_back(v);
    }
  }
  if (processed != n) fail(ErrorKind::Structural, "cyclic_layering", "cycle breaking left a cycle");

  const int depth = n == 0 ? 0 : *std::max_element(layer.begin(), layer.end()) + 1;
  std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(depth));
  for (std::size_t v : by_name) rows[static_cast<std::size_t>(layer[v])].push_back(v);

  std::vector<double> x(n, 0.0);
  auto assign_x = [&](const std::vector<std::size_t>& row) {
    const double mid = (static_cast<double>(row.size()) - 1.0) / 2.0;
    for (std::size_t r = 0; r < row.size(); ++r) x[row[r]] = static_cast<double>(r) - mid;
  };
  for (const auto& row : rows) assign_x(row);

  auto reorder = [&](std::vector<std::size_t>& row, const std::vector<std::vector<std::size_t>>& neighbours) {
    std::vector<std::pair<double, std::size_t>> keyed;
    for (std::size_t v : row) {
      double bary = x[v];
      if (!neighbours[v].empty()) {
        double sum = 0.0;
        for (std::size_t u : neighbours[v]) sum += x[u];
        bary = sum / static_cast<double>(neighbours[v].size());
      }
      keyed.emplace_back(bary, v);
    }
    std::stable_sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return name_less(a.second, b.second);
    });
    for (std::size_t r = 0; r < row.size(); ++r) row[r] = keyed[r].second;
    assign_x(row);
  };
  for (int l = 1; l < depth; ++l) reorder(rows[static_cast<std::size_t>(l)], pred);
  for (int l = depth - 2; l >= 0; --l) reorder(rows[static_cast<std::size_t>(l)], succ);

  LayoutResult result;
  result.kind = LayoutKind::Layered;
  for (std::size_t v = 0; v < n; ++v) {
    result.positions.emplace_back(graph.nodes[v].name, Point{x[v], static_cast<double>(layer[v])});
  }
  if (detail != nullptr) {
    detail->layers.clear();
    detail->kept_edges.clear();
    detail->removed_edges.clear();
    for (std::size_t v = 0; v < n; ++v) detail->layers.emplace_back(graph.nodes[v].name, layer[v]);
    for (std::size_t id = 0; id < edges.size(); ++id) {
      auto pair = std::make_pair(graph.nodes[edges[id].from].name, graph.nodes[edges[id].to].name);
      (alive[id] ? detail->kept_edges : detail->removed_edges).push_back(std::move(pair));
    }
  }
  return result;
}

std::vector<Point> force_initial_positions(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double side = 2.0 * std::sqrt(static_cast<double>(std::max<std::size_t>(count, 1)));
  auto coord = [&] { return (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * side; };
  std::vector<Point> pts(count);
  for (auto& p : pts) {
    p.x = coord();
    p.y = coord();
  }
  return pts;
}

LayoutResult layout_force(const SubmodelGraph& graph, std::uint64_t seed, int iterations) {
  if (iterations < 1) fail(ErrorKind::Validation, "bad_iterations", "force layout needs at least one iteration");
  const std::size_t n = graph.nodes.size();
  const auto edges = directed_edges(graph);
  std::vector<Point> pos = force_initial_positions(n, seed);

  constexpr double kIdeal = 1.0;
  double q_min = 0.0;
  double q_max = 0.0;
  if (!edges.empty()) {
    auto [lo, hi] = std::minmax_element(edges.begin(), edges.end(),
                                        [](const DirectedEdge& a, const DirectedEdge& b) { return a.q < b.q; });
    q_min = lo->q;
    q_max = hi->q;
  }
  auto weight = [&](double q) { return q_max > q_min ? 0.5 + 1.5 * (q - q_min) / (q_max - q_min) : 1.0; };

  const double start_temp = 0.1 * 2.0 * std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1)));
  std::vector<Point> disp(n);
  for (int it = 0; it < iterations; ++it) {
    const double temp = start_temp * (1.0 - static_cast<double>(it) / static_cast<double>(iterations));
    std::fill(disp.begin(), disp.end(), Point{});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double dx = pos[i].x - pos[j].x;
        double dy = pos[i].y - pos[j].y;
        double d = std::hypot(dx, dy);
        if (d < 1e-9) {
          // Coincident nodes: push apart along a fixed, index-dependent direction.
          const double a = static_cast<double>(i * 7 + j * 13);
          dx = std::cos(a) * 1e-3;
          dy = std::sin(a) * 1e-3;
          d = 1e-3;
        }
        const double f = kIdeal * kIdeal / d;
        disp[i].x += dx / d * f;
        disp[i].y += dy / d * f;
        disp[j].x -= dx / d * f;
        disp[j].y -= dy / d * f;
      }
    }
    for (const auto& e : edges) {
      const double dx = pos[e.from].x - pos[e.to].x;
      const double dy = pos[e.from].y - pos[e.to].y;
      const double d = std::hypot(dx, dy);
      if (d < 1e-12) continue;
      const double f = weight(e.q) * d * d / kIdeal;
      disp[e.from].x -= dx / d * f;
      disp[e.from].y -= dy / d * f;
      disp[e.to].x += dx / d * f;
      disp[e.to].y += dy / d * f;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double len = std::hypot(disp[i].x, disp[i].y);
      if (len < 1e-12 || !std::isfinite(len)) continue;
      const double step = std::min(len, temp);
      pos[i].x += disp[i].x / len * step;
      pos[i].y += disp[i].y / len * step;
    }
  }

  LayoutResult result;
  result.kind = LayoutKind::Force;
  for (std::size_t i = 0; i < n; ++i) result.positions.emplace_back(graph.nodes[i].name, pos[i]);
  return result;
}

LayoutResult layout_subspace(const SubmodelGraph& graph, std::optional<int> dims) {
  const std::size_t n = graph.nodes.size();
  if (n <= 2) {
    LayoutResult r = layout_circular(graph);
    r.kind = LayoutKind::Subspace;
    return r;
  }
  const auto edges = directed_edges(graph);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : edges) {
    const auto a = static_cast<Eigen::Index>(e.from);
    const auto b = static_cast<Eigen::Index>(e.to);
    weights(a, b) += e.q;
    weights(b, a) += e.q;
  }

  // Connected components, each listed in graph order.
  std::vector<std::size_t> comp(n, SIZE_MAX);
  std::vector<std::vector<std::size_t>> components;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] != SIZE_MAX) continue;
    components.emplace_back();
    std::vector<std::size_t> todo{s};
    comp[s] = components.size() - 1;
    while (!todo.empty()) {
      std::size_t u = todo.back();
      todo.pop_back();
      components.back().push_back(u);
      for (std::size_t v = 0; v < n; ++v) {
        if (comp[v] == SIZE_MAX && weights(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0.0) {
          comp[v] = comp[s];
          todo.push_back(v);
        }
      }
    }
    std::sort(components.back().begin(), components.back().end());
  }

  std::vector<Point> pos(n);
  double cursor = 0.0;
  constexpr double kGap = 1.0;
  for (const auto& members : components) {
    const std::size_t c = members.size();
    std::vector<Point> local(c);
    if (c == 2) {
      local[0] = {-1.0, 0.0};
      local[1] = {1.0, 0.0};
    } else if (c >= 3) {
      const auto m = static_cast<Eigen::Index>(c);
      Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(m, m);
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
          if (i == j) continue;
          const double w = weights(static_cast<Eigen::Index>(members[i]), static_cast<Eigen::Index>(members[j]));
          lap(i, j) = -w;
          lap(i, i) += w;
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
      const int want = std::clamp(dims.value_or(std::min<int>(static_cast<int>(c) - 1, 8)), 1,
                                  static_cast<int>(c) - 1);
      // Columns 1..want span the subspace of the smallest nonzero eigenvalues;
      // the plane uses its first two coordinates.
      auto axis = [&](int col) {
        Eigen::VectorXd v = solver.eigenvectors().col(col);
        Eigen::Index pivot = 0;
        for (Eigen::Index i = 1; i < m; ++i) {
          if (std::abs(v(i)) > std::abs(v(pivot)) + 1e-12) pivot = i;
        }
        if (v(pivot) < 0.0) v = -v;
        const double scale = v.cwiseAbs().maxCoeff();
        if (scale > 1e-12) v /= scale;
        return v;
      };
      const Eigen::VectorXd ex = axis(1);
      const Eigen::VectorXd ey = want >= 2 ? axis(2) : Eigen::VectorXd::Zero(m);
      for (Eigen::Index i = 0; i < m; ++i) local[static_cast<std::size_t>(i)] = {ex(i), ey(i)};
    }
    double min_x = local[0].x;
    double max_x = local[0].x;
    for (const auto& p : local) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
    }
    for (std::size_t i = 0; i < c; ++i) pos[members[i]] = {local[i].x - min_x + cursor, local[i].y};
    cursor += (max_x - min_x) + kGap;
  }

  LayoutResult result;
  result.kind = LayoutKind::Subspace;
  for (std::size_t i = 0; i < n; ++i) result.positions.emplace_back(graph.nodes[i].name, pos[i]);
  return result;
}

LayoutResult layout_graph(const SubmodelGraph& graph, LayoutKind kind, std::uint64_t seed) {
  switch (kind) {
    case LayoutKind::Layered:
      return layout_layered(graph);
    case LayoutKind::Force:
      return layout_force(graph, seed);
    case LayoutKind::Subspace:
      return layout_subspace(graph);
    case LayoutKind::Circular:
      return layout_circular(graph);
  }
  return layout_circular(graph);
}

}  // namespace hfv
