#include "hfv/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "hfv/error.hpp"

namespace hfv {

namespace {

using nlohmann::json;

constexpr double kCharWidthPx = 7.0;
constexpr double kLineHeightPx = 16.0;
constexpr double kBoxPaddingPx = 10.0;
constexpr double kMarginFraction = 0.05;
constexpr double kParallelOffsetPx = 6.0;

std::string printf_string(const char* fmt, double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, precision, v);
  return buf;
}

std::string px(double v) { return printf_string("%.*f", v, 2); }

std::size_t display_length(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string hex_color(int r, int g, int b) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", r, g, b);
  return buf;
}

std::string edge_color(double scalar) {
  // #1F4FCC (blue) -> #CC1F1F (red)
  const double s = std::clamp(scalar, 0.0, 1.0);
  auto mix = [&](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * s)); };
  return hex_color(mix(0x1F, 0xCC), mix(0x4F, 0x1F), mix(0xCC, 0x1F));
}

const char* fill_color(LoadClass c) {
  switch (c) {
    case LoadClass::Neutral:
      return "#D3D3D3";
    case LoadClass::ExcessOutgoing:
      return "#606060";
    case LoadClass::ExcessIncoming:
      return "#CC3333";
  }
  return "#D3D3D3";
}

const char* text_color(LoadClass c) { return c == LoadClass::Neutral ? "#000000" : "#FFFFFF"; }

LoadClass load_class_from(const std::string& s) {
  if (s == "excess_outgoing") return LoadClass::ExcessOutgoing;
  if (s == "excess_incoming") return LoadClass::ExcessIncoming;
  if (s == "neutral") return LoadClass::Neutral;
  fail(ErrorKind::Validation, "bad_diagram", "unknown fill class '" + s + "'");
}

ConductorKind kind_from(const std::string& s) {
  if (s == "linear") return ConductorKind::Linear;
  if (s == "radiative") return ConductorKind::Radiative;
  fail(ErrorKind::Validation, "bad_diagram", "unknown arrow kind '" + s + "'");
}

std::string arrow_text(const DiagramArrow& a) { return a.g_label ? a.q_label + " " + *a.g_label : a.q_label; }

}  // namespace

EdgeStyle edge_style(double q, double q_min, double q_max) {
  EdgeStyle s;
  s.color_scalar = q_max > q_min ? std::clamp((q - q_min) / (q_max - q_min), 0.0, 1.0) : 0.5;
  s.stroke_width = 1.0 + 3.0 * s.color_scalar;
  return s;
}

std::string format_sig3(double value) {
  if (value == 0.0 || !std::isfinite(value)) return value == 0.0 ? "0.00" : (std::isnan(value) ? "nan" : "inf");
  // Round to three significant figures first so 9.996 becomes 10.0, not 10.00.
  char sci[32];
  std::snprintf(sci, sizeof sci, "%.2e", value);
  const double rounded = std::strtod(sci, nullptr);
  const int exponent = static_cast<int>(std::floor(std::log10(std::abs(rounded))));
  const int decimals = std::max(0, 2 - exponent);
  return printf_string("%.*f", rounded, decimals);
}

DiagramSpec build_diagram(const SubmodelGraph& graph, const LayoutResult& layout, const DisplayUnits& units) {
  if (layout.positions.size() != graph.nodes.size()) {
    fail(ErrorKind::Validation, "layout_mismatch", "layout covers " + std::to_string(layout.positions.size()) +
                                                       " nodes, graph has " + std::to_string(graph.nodes.size()));
  }
  DiagramSpec d;
  d.units = units;
  d.timestep = graph.timestep;
  d.layout_kind = layout.kind;

  for (const auto& node : graph.nodes) {
    const Point* p = layout.find(node.name);
    if (p == nullptr) fail(ErrorKind::Validation, "layout_mismatch", "layout has no position for '" + node.name + "'");
    DiagramBox box;
    box.name = node.name;
    box.center = *p;
    box.fill_class = node.load_class;
    box.avg_temp_k = node.avg_temp_k;
    box.net_load_w = node.net_load_w;
    const std::string temp = node.node_count > 0
                                 ? printf_string("%.*f", units.temperature_from_kelvin(node.avg_temp_k), 1) + " " +
                                       units.temperature_suffix()
                                 : std::string("n/a");
    box.label_lines = {node.name, temp, format_sig3(node.net_load_w) + " " + units.power_suffix()};
    std::size_t longest = 0;
    for (const auto& line : box.label_lines) longest = std::max(longest, display_length(line));
    box.width = static_cast<double>(longest) * kCharWidthPx + 2.0 * kBoxPaddingPx;
    box.height = static_cast<double>(box.label_lines.size()) * kLineHeightPx + kBoxPaddingPx;
    d.boxes.push_back(std::move(box));
  }

  double q_min = std::numeric_limits<double>::infinity();
  double q_max = -std::numeric_limits<double>::infinity();
  for (const auto& e : graph.edges) {
    q_min = std::min(q_min, e.q_watts);
    q_max = std::max(q_max, e.q_watts);
  }
  for (const auto& e : graph.edges) {
    if (graph.find(e.from) == nullptr || graph.find(e.to) == nullptr) {
      fail(ErrorKind::Validation, "dangling_edge", "edge " + e.from + "->" + e.to + " names a missing node");
    }
    DiagramArrow a;
    a.from = e.from;
    a.to = e.to;
    a.kind = e.kind;
    a.q_watts = e.q_watts;
    a.q_label = format_sig3(e.q_watts) + " " + units.power_suffix();
    if (e.kind == ConductorKind::Linear) a.g_label = "[" + format_sig3(e.g_total.value_or(0.0)) + " W/K]";
    const EdgeStyle style = edge_style(e.q_watts, q_min, q_max);
    a.color = style.color_scalar;
    a.weight = style.stroke_width;
    a.dashed = e.kind == ConductorKind::Radiative;
    d.arrows.push_back(std::move(a));
    if (e.kind == ConductorKind::Radiative) d.max_radiative_q = std::max(d.max_radiative_q, e.q_watts);
  }
  return d;
}

json to_json(const DiagramSpec& d) {
  json j;
  j["schema"] = kDiagramSchema;
  j["timestep"] = d.timestep;
  j["timestamp"] = d.timestamp;
  j["layout_kind"] = to_string(d.layout_kind);
  j["units"] = {{"temperature", to_string(d.units.temperature)}, {"power", "W"}};
  j["max_radiative_q"] = d.max_radiative_q;
  j["boxes"] = json::array();
  for (const auto& b : d.boxes) {
    j["boxes"].push_back({{"name", b.name},
                          {"center", {{"x", b.center.x}, {"y", b.center.y}}},
                          {"width", b.width},
                          {"height", b.height},
                          {"fill_class", to_string(b.fill_class)},
                          {"label_lines", b.label_lines},
                          {"avg_temp_k", b.avg_temp_k},
                          {"net_load_w", b.net_load_w}});
  }
  j["arrows"] = json::array();
  for (const auto& a : d.arrows) {
    json ja = {{"from", a.from},       {"to", a.to},         {"kind", to_string(a.kind)},
               {"q_watts", a.q_watts}, {"q_label", a.q_label}, {"color", a.color},
               {"weight", a.weight},   {"dashed", a.dashed}};
    ja["g_label"] = a.g_label ? json(*a.g_label) : json(nullptr);
    j["arrows"].push_back(std::move(ja));
  }
  return j;
}

DiagramSpec diagram_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != kDiagramSchema) {
      fail(ErrorKind::Validation, "bad_diagram", "unsupported diagram schema");
    }
    DiagramSpec d;
    d.timestep = j.at("timestep").get<std::int64_t>();
    d.timestamp = j.at("timestamp").get<double>();
    auto kind = parse_layout_kind(j.at("layout_kind").get<std::string>());
    if (!kind) fail(ErrorKind::Validation, "bad_diagram", "unknown layout kind");
    d.layout_kind = *kind;
    d.units.temperature =
        j.at("units").at("temperature").get<std::string>() == "C" ? TemperatureUnit::Celsius : TemperatureUnit::Kelvin;
    d.max_radiative_q = j.at("max_radiative_q").get<double>();
    for (const auto& jb : j.at("boxes")) {
      DiagramBox b;
      b.name = jb.at("name").get<std::string>();
      b.center = {jb.at("center").at("x").get<double>(), jb.at("center").at("y").get<double>()};
      b.width = jb.at("width").get<double>();
      b.height = jb.at("height").get<double>();
      b.fill_class = load_class_from(jb.at("fill_class").get<std::string>());
      b.label_lines = jb.at("label_lines").get<std::vector<std::string>>();
      b.avg_temp_k = jb.at("avg_temp_k").get<double>();
      b.net_load_w = jb.at("net_load_w").get<double>();
      d.boxes.push_back(std::move(b));
    }
    for (const auto& ja : j.at("arrows")) {
      DiagramArrow a;
      a.from = ja.at("from").get<std::string>();
      a.to = ja.at("to").get<std::string>();
      a.kind = kind_from(ja.at("kind").get<std::string>());
      a.q_watts = ja.at("q_watts").get<double>();
      a.q_label = ja.at("q_label").get<std::string>();
      if (!ja.at("g_label").is_null()) a.g_label = ja.at("g_label").get<std::string>();
      a.color = ja.at("color").get<double>();
      a.weight = ja.at("weight").get<double>();
      a.dashed = ja.at("dashed").get<bool>();
      d.arrows.push_back(std::move(a));
    }
    return d;
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, "bad_diagram", std::string("malformed diagram JSON: ") + e.what());
  }
}

std::string render_svg(const DiagramSpec& d, Canvas canvas) {
  if (canvas.width <= 0 || canvas.height <= 0) fail(ErrorKind::Validation, "bad_canvas", "canvas must be positive");
  const double cw = canvas.width;
  const double ch = canvas.height;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << canvas.width << "\" height=\""
      << canvas.height << "\" viewBox=\"0 0 " << canvas.width << ' ' << canvas.height << "\">\n";
  if (d.boxes.empty()) {
    svg << "</svg>\n";
    return svg.str();
  }

  double min_x = d.boxes[0].center.x;
  double max_x = min_x;
  double min_y = d.boxes[0].center.y;
  double max_y = min_y;
  double box_w = 0.0;
  double box_h = 0.0;
  for (const auto& b : d.boxes) {
    min_x = std::min(min_x, b.center.x);
    max_x = std::max(max_x, b.center.x);
    min_y = std::min(min_y, b.center.y);
    max_y = std::max(max_y, b.center.y);
    box_w = std::max(box_w, b.width);
    box_h = std::max(box_h, b.height);
  }
  // Inner area keeps a 5% margin plus room for half a box on each side.
  auto usable = [](double total, double box) {
    const double inner = total * (1.0 - 2.0 * kMarginFraction) - box;
    return inner > 0.0 ? inner : total * (1.0 - 2.0 * kMarginFraction);
  };
  const double span_x = max_x - min_x;
  const double span_y = max_y - min_y;
  double scale = std::numeric_limits<double>::infinity();
  if (span_x > 0.0) scale = std::min(scale, usable(cw, box_w) / span_x);
  if (span_y > 0.0) scale = std::min(scale, usable(ch, box_h) / span_y);
  if (!std::isfinite(scale)) scale = 0.0;
  const double mid_x = (min_x + max_x) / 2.0;
  const double mid_y = (min_y + max_y) / 2.0;
  std::map<std::string, std::pair<Point, const DiagramBox*>> placed;
  for (const auto& b : d.boxes) {
    placed[b.name] = {Point{cw / 2.0 + (b.center.x - mid_x) * scale, ch / 2.0 + (b.center.y - mid_y) * scale}, &b};
  }

  if (!d.arrows.empty()) {
    svg << "<defs>\n";
    for (std::size_t i = 0; i < d.arrows.size(); ++i) {
      svg << "<marker id=\"ah" << i
          << "\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"5\" markerHeight=\"5\" "
             "markerUnits=\"strokeWidth\" orient=\"auto\"><polygon points=\"0,0 10,5 0,10\" fill=\""
          << edge_color(d.arrows[i].color) << "\"/></marker>\n";
    }
    svg << "</defs>\n<g class=\"arrows\" fill=\"none\">\n";
    for (std::size_t i = 0; i < d.arrows.size(); ++i) {
      const auto& a = d.arrows[i];
      auto from = placed.find(a.from);
      auto to = placed.find(a.to);
      if (from == placed.end() || to == placed.end()) {
        fail(ErrorKind::Validation, "dangling_edge", "arrow " + a.from + "->" + a.to + " references a missing box");
      }
      Point p1 = from->second.first;
      Point p2 = to->second.first;
      // Offset linear and radiative arrows of one pair to opposite sides.
      const bool canonical = a.from < a.to;
      double ux = (canonical ? p2.x - p1.x : p1.x - p2.x);
      double uy = (canonical ? p2.y - p1.y : p1.y - p2.y);
      const double len = std::hypot(ux, uy);
      if (len > 1e-9) {
        const double side = (a.kind == ConductorKind::Linear ? -1.0 : 1.0) * kParallelOffsetPx / len;
        p1.x += -uy * side;
        p1.y += ux * side;
        p2.x += -uy * side;
        p2.y += ux * side;
      }
      const double vx = p2.x - p1.x;
      const double vy = p2.y - p1.y;
      auto exit_fraction = [&](const DiagramBox& b) {
        double f = std::numeric_limits<double>::infinity();
        if (std::abs(vx) > 1e-12) f = std::min(f, b.width / 2.0 / std::abs(vx));
        if (std::abs(vy) > 1e-12) f = std::min(f, b.height / 2.0 / std::abs(vy));
        return f;
      };
      const double f1 = exit_fraction(*from->second.second);
      const double f2 = exit_fraction(*to->second.second);
      Point s = p1;
      Point e = p2;
      if (f1 + f2 < 1.0) {
        s = {p1.x + f1 * vx, p1.y + f1 * vy};
        e = {p2.x - f2 * vx, p2.y - f2 * vy};
      }
      const std::string color = edge_color(a.color);
      svg << "<path class=\"arrow " << to_string(a.kind) << "\" d=\"M " << px(s.x) << ' ' << px(s.y) << " L "
          << px(e.x) << ' ' << px(e.y) << "\" stroke=\"" << color << "\" stroke-width=\"" << px(a.weight) << '"';
      if (a.dashed) svg << " stroke-dasharray=\"6 4\"";
      svg << " marker-end=\"url(#ah" << i << ")\"/>\n";
      svg << "<text x=\"" << px((s.x + e.x) / 2.0) << "\" y=\"" << px((s.y + e.y) / 2.0 - 4.0)
          << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" fill=\"" << color << "\">"
          << xml_escape(arrow_text(a)) << "</text>\n";
    }
    svg << "</g>\n";
  }

  svg << "<g class=\"boxes\">\n";
  for (const auto& b : d.boxes) {
    const Point c = placed[b.name].first;
    svg << "<rect x=\"" << px(c.x - b.width / 2.0) << "\" y=\"" << px(c.y - b.height / 2.0) << "\" width=\""
        << px(b.width) << "\" height=\"" << px(b.height) << "\" fill=\"" << fill_color(b.fill_class)
        << "\" stroke=\"#202020\" stroke-width=\"1\"/>\n";
    svg << "<text font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" fill=\""
        << text_color(b.fill_class) << "\">";
    for (std::size_t k = 0; k < b.label_lines.size(); ++k) {
      const double y = c.y - b.height / 2.0 + kBoxPaddingPx / 2.0 + kLineHeightPx * (static_cast<double>(k) + 0.75);
      svg << "<tspan x=\"" << px(c.x) << "\" y=\"" << px(y) << "\">" << xml_escape(b.label_lines[k]) << "</tspan>";
    }
    svg << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

json build_series_payload(const std::vector<Series>& series, SeriesKind kind, const DisplayUnits& units) {
  if (series.empty()) fail(ErrorKind::Validation, "empty_request", "no series requested");
  json j;
  j["kind"] = kind == SeriesKind::Temperature ? "temperature" : "flow";
  j["x"] = series.front().x;
  j["x_unit"] = "s";
  j["y_unit"] = kind == SeriesKind::Temperature ? units.temperature_suffix() : units.power_suffix();
  j["labels"] = json::array();
  j["series"] = json::array();
  for (const auto& s : series) {
    std::vector<double> y = s.y;
    if (kind == SeriesKind::Temperature) {
      for (double& v : y) v = units.temperature_from_kelvin(v);
    }
    j["labels"].push_back(s.label);
    j["series"].push_back({{"label", s.label}, {"y", y}});
  }
  return j;
}

json build_flow_payload(const std::vector<PairFlowSeries>& series) {
  if (series.empty()) fail(ErrorKind::Validation, "empty_request", "no flow pair requested");
  json j;
  j["kind"] = "flow";
  j["x"] = series.front().timestamps;
  j["x_unit"] = "s";
  j["y_unit"] = "W";
  j["labels"] = json::array();
  j["series"] = json::array();
  for (const auto& s : series) {
    const std::string label = s.from + "→" + s.to;
    std::vector<double> total(s.linear_w.size());
    for (std::size_t i = 0; i < total.size(); ++i) total[i] = s.linear_w[i] + s.radiative_w[i];
    j["labels"].push_back(label);
    j["series"].push_back({{"label", label}, {"y", total}, {"linear", s.linear_w}, {"radiative", s.radiative_w}});
  }
  return j;
}

}  // namespace hfv
