#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hfv/csr_parser.hpp"
#include "hfv/layout.hpp"
#include "hfv/project_cache.hpp"
#include "hfv/render.hpp"
#include "hfv/thermal_graph.hpp"

namespace httplib {
class Server;
}

namespace hfv {

/// One diagram request: the three tuning filters plus layout and units.
/// Pipeline order is fixed: grouping, then selection (by post-grouping
/// names), then the radiant threshold.
struct DiagramRequest {
  std::int64_t timestep = 0;
  std::optional<std::vector<std::string>> include;
  GroupMap groups;
  double radiant_threshold = 0.0;
  LayoutKind layout = LayoutKind::Layered;
  std::uint64_t seed = 0;
  DisplayUnits units;
  Canvas canvas;
};

/// Throws Error with codes such as "bad_request", "bad_threshold",
/// "bad_layout", "bad_units" or "overlapping_groups".
DiagramRequest parse_diagram_request(const nlohmann::json& body);
nlohmann::json to_json(const DiagramRequest& req);

/// Runs the diagram pipeline over an immutable in-memory view of one dataset.
/// Safe for concurrent use; the dataset directory is never written.
class Service {
 public:
  explicit Service(fs::path dataset_dir, std::optional<fs::path> project_dir = std::nullopt);

  const fs::path& dataset_dir() const { return dataset_dir_; }
  const Sizes& sizes() const { return sizes_; }
  const SubmodelIndex& index() const { return index_; }

  nlohmann::json summary() const;
  SubmodelGraph graph(const DiagramRequest& req);
  DiagramSpec diagram(const DiagramRequest& req);
  std::string export_svg(const DiagramRequest& req);
  nlohmann::json transient_temperature(const std::vector<std::string>& names, const DisplayUnits& units);
  nlohmann::json transient_flow(const std::string& from, const std::string& to);

  /// Temperature row for `t`: cache hit, else dataset read (then cached).
  std::vector<double> row_at(std::int64_t t);

 private:
  const TemperatureMatrix& full_matrix();

  fs::path dataset_dir_;
  Sizes sizes_;
  SubmodelIndex index_;
  std::vector<ConductorRecord> conductors_;
  std::vector<double> timestamps_;

  std::mutex mutex_;
  std::optional<ProjectHandle> project_;
  std::map<std::int64_t, std::vector<double>> rows_;
  std::optional<TemperatureMatrix> full_;
};

/// HTTP status and JSON body for a failed request.
std::pair<int, nlohmann::json> error_response(const std::exception& e);

void register_routes(httplib::Server& server, Service& service);

/// Splits "a,b,c"; empty input gives an empty list.
std::vector<std::string> split_names(const std::string& csv);

}  // namespace hfv
