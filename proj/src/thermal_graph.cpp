#include "hfv/thermal_graph.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "hfv/error.hpp"

namespace hfv {

namespace {

double fourth_power(double t) {
  const double t2 = t * t;
  return t2 * t2;
}

double conductor_flow(const ConductorRecord& c, double ta, double tb) {
  if (c.kind == ConductorKind::Linear) return c.conductance * (ta - tb);
  return kStefanBoltzmann * c.conductance * (fourth_power(ta) - fourth_power(tb));
}

// Partition of submodel blocks into display rectangles.
struct Partition {
  std::vector<std::size_t> group_of_block;
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> members;
};

Partition singleton_partition(const SubmodelIndex& index) {
  Partition p;
  for (std::size_t i = 0; i < index.size(); ++i) {
    p.group_of_block.push_back(i);
    p.names.push_back(index.entries()[i].name);
    p.members.push_back({index.entries()[i].name});
  }
  return p;
}

Partition grouped_partition(const SubmodelIndex& index, const GroupMap& groups) {
  constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
  std::vector<std::string> owner(index.size());
  for (const auto& [group, members] : groups) {
    if (group.empty()) fail(ErrorKind::Validation, "bad_group", "group name is empty");
    if (members.empty()) fail(ErrorKind::Validation, "empty_group", "group '" + group + "' has no members");
    for (const auto& m : members) {
      const std::size_t pos = index.position(m);
      if (!owner[pos].empty()) {
        fail(ErrorKind::Validation, "overlapping_groups",
             "submodel '" + m + "' is in both '" + owner[pos] + "' and '" + group + "'");
      }
      owner[pos] = group;
    }
  }
  for (const auto& [group, members] : groups) {
    if (index.contains(group) && owner[index.position(group)] != group) {
      fail(ErrorKind::Validation, "group_name_conflict",
           "group name '" + group + "' collides with a submodel outside the group");
    }
  }

  Partition p;
  p.group_of_block.assign(index.size(), kUnassigned);
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const std::string& sub = index.entries()[i].name;
    if (owner[i].empty()) {
      p.group_of_block[i] = p.names.size();
      p.names.push_back(sub);
      p.members.push_back({sub});
      continue;
    }
    auto [it, fresh] = slot.try_emplace(owner[i], p.names.size());
    if (fresh) {
      p.names.push_back(owner[i]);
      p.members.emplace_back();
    }
    p.group_of_block[i] = it->second;
    p.members[it->second].push_back(sub);
  }
  return p;
}

SubmodelGraph aggregate(const SubmodelIndex& index, const Partition& part, std::span<const HeatFlow> flows,
                        std::span<const double> temps_k, std::int64_t timestep) {
  if (static_cast<std::int64_t>(temps_k.size()) < index.num_nodes()) {
    fail(ErrorKind::Lookup, "missing_temperature", "temperature row is shorter than the indexed node count");
  }
  const std::size_t groups = part.names.size();
  SubmodelGraph g;
  g.timestep = timestep;
  g.nodes.resize(groups);

  std::vector<double> temp_sum(groups, 0.0);
  for (std::size_t b = 0; b < index.size(); ++b) {
    const auto& e = index.entries()[b];
    const std::size_t grp = part.group_of_block[b];
    for (std::int64_t n = e.nodes.begin; n < e.nodes.end; ++n) temp_sum[grp] += temps_k[n];
    g.nodes[grp].node_count += e.nodes.size();
  }

  struct Accum {
    double lo_to_hi = 0.0;
    double g_total = 0.0;
    std::int64_t count = 0;
  };
  std::map<std::tuple<std::size_t, std::size_t, ConductorKind>, Accum> pairs;
  std::vector<double> net(groups, 0.0);

  for (const auto& f : flows) {
    const std::int64_t ba = index.owner_of(f.conductor.node_a);
    const std::int64_t bb = index.owner_of(f.conductor.node_b);
    if (ba < 0 || bb < 0) {
      fail(ErrorKind::Structural, "node_out_of_range",
           "heat flow references node " + std::to_string(ba < 0 ? f.conductor.node_a : f.conductor.node_b) +
               " outside every submodel range");
    }
    const std::size_t ga = part.group_of_block[static_cast<std::size_t>(ba)];
    const std::size_t gb = part.group_of_block[static_cast<std::size_t>(bb)];
    if (ga == gb) continue;
    net[ga] -= f.q_watts;
    net[gb] += f.q_watts;
    const bool forward = ga < gb;
    auto& acc = pairs[{std::min(ga, gb), std::max(ga, gb), f.conductor.kind}];
    acc.lo_to_hi += forward ? f.q_watts : -f.q_watts;
    acc.g_total += f.conductor.conductance;
    acc.count += 1;
  }

  for (std::size_t i = 0; i < groups; ++i) {
    auto& node = g.nodes[i];
    node.name = part.names[i];
    node.member_submodels = part.members[i];
    node.avg_temp_k = node.node_count > 0 ? temp_sum[i] / static_cast<double>(node.node_count) : 0.0;
    node.net_load_w = net[i];
    node.load_class = classify_load(net[i]);
  }

  for (const auto& [key, acc] : pairs) {
    if (acc.lo_to_hi == 0.0) continue;
    const auto& [lo, hi, kind] = key;
    SubmodelEdge edge;
    const bool forward = acc.lo_to_hi > 0.0;
    edge.from = part.names[forward ? lo : hi];
    edge.to = part.names[forward ? hi : lo];
    edge.kind = kind;
    edge.q_watts = std::abs(acc.lo_to_hi);
    if (kind == ConductorKind::Linear) edge.g_total = acc.g_total;
    edge.conductor_count = acc.count;
    g.edges.push_back(std::move(edge));
  }
  return g;
}

}  // namespace

const char* to_string(LoadClass c) {
  switch (c) {
    case LoadClass::Neutral:
      return "neutral";
    case LoadClass::ExcessOutgoing:
      return "excess_outgoing";
    case LoadClass::ExcessIncoming:
      return "excess_incoming";
  }
  return "neutral";
}

const char* to_string(TemperatureUnit u) { return u == TemperatureUnit::Celsius ? "C" : "K"; }

const SubmodelNodeView* SubmodelGraph::find(const std::string& name) const {
  auto it = std::find_if(nodes.begin(), nodes.end(), [&](const SubmodelNodeView& n) { return n.name == name; });
  return it == nodes.end() ? nullptr : &*it;
}

std::vector<HeatFlow> compute_node_flows(std::span<const ConductorRecord> conductors,
                                         std::span<const double> temps_k) {
  std::vector<HeatFlow> flows;
  flows.reserve(conductors.size());
  const auto n = static_cast<std::int64_t>(temps_k.size());
  for (const auto& c : conductors) {
    if (c.node_a < 0 || c.node_b < 0 || c.node_a >= n || c.node_b >= n) {
      fail(ErrorKind::Lookup, "missing_temperature",
           "no temperature for conductor endpoint " + std::to_string(c.node_a >= n || c.node_a < 0 ? c.node_a : c.node_b));
    }
    const double ta = temps_k[static_cast<std::size_t>(c.node_a)];
    const double tb = temps_k[static_cast<std::size_t>(c.node_b)];
    if (!(ta > 0.0) || !(tb > 0.0)) {
      fail(ErrorKind::Validation, "nonpositive_temperature", "conductor endpoint temperature must be > 0 K");
    }
    flows.push_back({c, conductor_flow(c, ta, tb)});
  }
  return flows;
}

LoadClass classify_load(double net_load_w) {
  if (net_load_w <= -1.0) return LoadClass::ExcessOutgoing;
  if (net_load_w >= 1.0) return LoadClass::ExcessIncoming;
  return LoadClass::Neutral;
}

SubmodelGraph aggregate_to_submodels(const SubmodelIndex& index, std::span<const HeatFlow> flows,
                                     std::span<const double> temps_k, std::int64_t timestep) {
  return aggregate(index, singleton_partition(index), flows, temps_k, timestep);
}

SubmodelGraph apply_grouping(const SubmodelIndex& index, std::span<const HeatFlow> flows,
                             std::span<const double> temps_k, const GroupMap& groups, std::int64_t timestep) {
  return aggregate(index, grouped_partition(index, groups), flows, temps_k, timestep);
}

SubmodelGraph apply_selection(const SubmodelGraph& graph, const std::set<std::string>& include) {
  for (const auto& name : include) {
    if (graph.find(name) == nullptr) {
      fail(ErrorKind::Lookup, "unknown_submodel", "cannot select unknown submodel '" + name + "'");
    }
  }
  SubmodelGraph out;
  out.timestep = graph.timestep;
  out.units = graph.units;
  for (const auto& n : graph.nodes) {
    if (include.count(n.name) != 0) out.nodes.push_back(n);
  }
  for (const auto& e : graph.edges) {
    if (include.count(e.from) != 0 && include.count(e.to) != 0) out.edges.push_back(e);
  }
  return out;
}

SubmodelGraph apply_radiant_threshold(const SubmodelGraph& graph, double tau_w) {
  if (!(tau_w >= 0.0)) fail(ErrorKind::Validation, "bad_threshold", "radiant threshold must be >= 0");
  SubmodelGraph out = graph;
  std::erase_if(out.edges, [&](const SubmodelEdge& e) {
    return e.kind == ConductorKind::Radiative && e.q_watts < tau_w;
  });
  return out;
}

std::vector<Series> submodel_temperature_series(const SubmodelIndex& index, const TemperatureMatrix& temps,
                                                const std::vector<std::string>& names) {
  if (temps.first_node != 0 || temps.num_nodes < index.num_nodes()) {
    fail(ErrorKind::Validation, "partial_matrix", "temperature series need every node of the dataset");
  }
  std::vector<Series> out;
  for (const auto& name : names) {
    const IndexRange r = index.entries()[index.position(name)].nodes;
    Series s;
    s.label = name;
    s.x = temps.timestamps;
    s.y.reserve(temps.timestamps.size());
    for (std::int64_t t = 0; t < temps.num_timesteps(); ++t) {
      const auto row = temps.row(t);
      double sum = 0.0;
      for (std::int64_t n = r.begin; n < r.end; ++n) sum += row[static_cast<std::size_t>(n)];
      s.y.push_back(r.empty() ? 0.0 : sum / static_cast<double>(r.size()));
    }
    out.push_back(std::move(s));
  }
  return out;
}

PairFlowSeries pair_flow_series(const SubmodelIndex& index, std::span<const ConductorRecord> conductors,
                                const TemperatureMatrix& temps, const std::string& from, const std::string& to) {
  const auto pf = static_cast<std::int64_t>(index.position(from));
  const auto pt = static_cast<std::int64_t>(index.position(to));
  if (pf == pt) fail(ErrorKind::Validation, "self_pair", "flow series needs two distinct submodels");
  if (temps.first_node != 0 || temps.num_nodes < index.num_nodes()) {
    fail(ErrorKind::Validation, "partial_matrix", "flow series need every node of the dataset");
  }

  // Crossing conductors with the sign that turns their q into from -> to.
  std::vector<std::pair<ConductorRecord, double>> crossing;
  for (const auto& c : conductors) {
    const std::int64_t oa = index.owner_of(c.node_a);
    const std::int64_t ob = index.owner_of(c.node_b);
    if (oa == pf && ob == pt) crossing.emplace_back(c, 1.0);
    if (oa == pt && ob == pf) crossing.emplace_back(c, -1.0);
  }

  PairFlowSeries out;
  out.from = from;
  out.to = to;
  out.timestamps = temps.timestamps;
  for (std::int64_t t = 0; t < temps.num_timesteps(); ++t) {
    const auto row = temps.row(t);
    double lin = 0.0;
    double rad = 0.0;
    for (const auto& [c, sign] : crossing) {
      const double q = sign * conductor_flow(c, row[static_cast<std::size_t>(c.node_a)],
                                             row[static_cast<std::size_t>(c.node_b)]);
      (c.kind == ConductorKind::Linear ? lin : rad) += q;
    }
    out.linear_w.push_back(lin);
    out.radiative_w.push_back(rad);
  }
  return out;
}

}  // namespace hfv
