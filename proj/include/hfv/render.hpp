#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hfv/layout.hpp"
#include "hfv/thermal_graph.hpp"

namespace hfv {

inline constexpr const char* kDiagramSchema = "hfv-diagram/1";

struct EdgeStyle {
  /// 0 is the blue end, 1 the red end.
  double color_scalar = 0.5;
  /// Stroke width in px, within [1, 4].
  double stroke_width = 2.5;
};

EdgeStyle edge_style(double q, double q_min, double q_max);

/// Centres are abstract layout units; width and height are pixels.
struct DiagramBox {
  std::string name;
  Point center;
  double width = 0.0;
  double height = 0.0;
  LoadClass fill_class = LoadClass::Neutral;
  std::vector<std::string> label_lines;
  double avg_temp_k = 0.0;
  double net_load_w = 0.0;

  bool operator==(const DiagramBox&) const = default;
};

struct DiagramArrow {
  std::string from;
  std::string to;
  ConductorKind kind = ConductorKind::Linear;
  double q_watts = 0.0;
  std::string q_label;
  std::optional<std::string> g_label;
  double color = 0.5;
  double weight = 2.5;
  bool dashed = false;

  bool operator==(const DiagramArrow&) const = default;
};

struct DiagramSpec {
  std::vector<DiagramBox> boxes;
  std::vector<DiagramArrow> arrows;
  DisplayUnits units;
  std::int64_t timestep = 0;
  double timestamp = 0.0;
  LayoutKind layout_kind = LayoutKind::Circular;
  /// Largest radiative q before thresholding, for the UI slider range.
  double max_radiative_q = 0.0;

  bool operator==(const DiagramSpec&) const = default;
};

/// Three significant figures, no exponent: 20 -> "20.0", 0.5 -> "0.500".
std::string format_sig3(double value);

DiagramSpec build_diagram(const SubmodelGraph& graph, const LayoutResult& layout, const DisplayUnits& units);

nlohmann::json to_json(const DiagramSpec& spec);
DiagramSpec diagram_from_json(const nlohmann::json& j);

struct Canvas {
  int width = 1200;
  int height = 800;
};

std::string render_svg(const DiagramSpec& diagram, Canvas canvas = {});

enum class SeriesKind { Temperature, Flow };

/// Temperature series are Kelvin in, display units out.
nlohmann::json build_series_payload(const std::vector<Series>& series, SeriesKind kind, const DisplayUnits& units);
nlohmann::json build_flow_payload(const std::vector<PairFlowSeries>& series);

}  // namespace hfv
