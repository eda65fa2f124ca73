#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hfv/csr_model.hpp"
#include "hfv/csr_parser.hpp"

namespace hfv {

/// W m^-2 K^-4 (CODATA 2018).
inline constexpr double kStefanBoltzmann = 5.670374419e-8;
inline constexpr double kCelsiusOffset = 273.15;

enum class LoadClass { Neutral, ExcessOutgoing, ExcessIncoming };
enum class TemperatureUnit { Kelvin, Celsius };

const char* to_string(LoadClass c);
const char* to_string(TemperatureUnit u);

/// Display selection only; stored values are always Kelvin and watts.
struct DisplayUnits {
  TemperatureUnit temperature = TemperatureUnit::Kelvin;

  double temperature_from_kelvin(double kelvin) const {
    return temperature == TemperatureUnit::Celsius ? kelvin - kCelsiusOffset : kelvin;
  }
  const char* temperature_suffix() const { return temperature == TemperatureUnit::Celsius ? "°C" : "K"; }
  const char* power_suffix() const { return "W"; }

  bool operator==(const DisplayUnits&) const = default;
};

/// Positive q flows from node_a to node_b.
struct HeatFlow {
  ConductorRecord conductor;
  double q_watts = 0.0;
};

struct SubmodelNodeView {
  std::string name;
  double avg_temp_k = 0.0;
  /// Incoming minus outgoing over boundary conductors, watts.
  double net_load_w = 0.0;
  LoadClass load_class = LoadClass::Neutral;
  std::vector<std::string> member_submodels;
  std::int64_t node_count = 0;

  bool operator==(const SubmodelNodeView&) const = default;
};

/// Net flow between one pair of rectangles for one conductor kind, oriented
/// so that q_watts > 0 along from -> to.
struct SubmodelEdge {
  std::string from;
  std::string to;
  ConductorKind kind = ConductorKind::Linear;
  double q_watts = 0.0;
  /// Sum of member conductances; set for linear edges only.
  std::optional<double> g_total;
  std::int64_t conductor_count = 0;

  bool operator==(const SubmodelEdge&) const = default;
};

struct SubmodelGraph {
  std::vector<SubmodelNodeView> nodes;
  std::vector<SubmodelEdge> edges;
  std::int64_t timestep = 0;
  DisplayUnits units;

  const SubmodelNodeView* find(const std::string& name) const;
  bool operator==(const SubmodelGraph&) const = default;
};

/// Group name -> member submodel names.
using GroupMap = std::map<std::string, std::vector<std::string>>;

std::vector<HeatFlow> compute_node_flows(std::span<const ConductorRecord> conductors,
                                         std::span<const double> temps_k);

LoadClass classify_load(double net_load_w);

SubmodelGraph aggregate_to_submodels(const SubmodelIndex& index, std::span<const HeatFlow> flows,
                                     std::span<const double> temps_k, std::int64_t timestep = 0);

/// Ungrouped submodels pass through as singletons, in block order. Groups
/// appear where their first member sits in block order.
SubmodelGraph apply_grouping(const SubmodelIndex& index, std::span<const HeatFlow> flows,
                             std::span<const double> temps_k, const GroupMap& groups, std::int64_t timestep = 0);

/// View filter: node annotations keep their whole-model values.
SubmodelGraph apply_selection(const SubmodelGraph& graph, const std::set<std::string>& include);

/// Drops radiative edges below `tau_w`; linear edges always stay.
SubmodelGraph apply_radiant_threshold(const SubmodelGraph& graph, double tau_w);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Mean node temperature (K) per timestep for each named submodel.
std::vector<Series> submodel_temperature_series(const SubmodelIndex& index, const TemperatureMatrix& temps,
                                                const std::vector<std::string>& names);

struct PairFlowSeries {
  std::string from;
  std::string to;
  std::vector<double> timestamps;
  std::vector<double> linear_w;
  std::vector<double> radiative_w;
};

/// Signed aggregate flow from `from` into `to` at every timestep, per kind.
PairFlowSeries pair_flow_series(const SubmodelIndex& index, std::span<const ConductorRecord> conductors,
                                const TemperatureMatrix& temps, const std::string& from, const std::string& to);

}  // namespace hfv
