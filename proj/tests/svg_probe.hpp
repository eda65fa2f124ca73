#pragma once

// Parses an SVG document with an XML parser and counts the shapes the
// diagram tests care about.

#include <sstream>
#include <string>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

namespace hfv::testing {

struct SvgCounts {
  bool parsed = false;
  bool root_is_svg = false;
  int rects = 0;
  int paths = 0;
  int dashed_paths = 0;
  int paths_with_marker = 0;
  int polygons = 0;
  int texts = 0;
  int total_elements = 0;
};

namespace detail {

inline void walk(const boost::property_tree::ptree& node, SvgCounts& c) {
  for (const auto& [tag, child] : node) {
    if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
    ++c.total_elements;
    const auto dash = child.get_optional<std::string>("<xmlattr>.stroke-dasharray");
    if (tag == "rect") ++c.rects;
    if (tag == "path") {
      ++c.paths;
      if (dash) ++c.dashed_paths;
      if (child.get_optional<std::string>("<xmlattr>.marker-end")) ++c.paths_with_marker;
    }
    if (tag == "polygon") ++c.polygons;
    if (tag == "text") ++c.texts;
    walk(child, c);
  }
}

}  // namespace detail

inline SvgCounts probe_svg(const std::string& svg) {
  SvgCounts c;
  boost::property_tree::ptree tree;
  std::istringstream in(svg);
  try {
    boost::property_tree::read_xml(in, tree);
  } catch (const boost::property_tree::xml_parser_error&) {
    return c;
  }
  c.parsed = true;
  const auto root = tree.get_child_optional("svg");
  c.root_is_svg = root.has_value() && root->get<std::string>("<xmlattr>.xmlns", "") == "http://www.w3.org/2000/svg";
  if (root) detail::walk(*root, c);
  return c;
}

}  // namespace hfv::testing
