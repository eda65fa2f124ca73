#include "hfv/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <set>

#include "hfv/error.hpp"

namespace hfv {

using nlohmann::json;

namespace {

[[noreturn]] void bad_request(const std::string& code, const std::string& message) {
  fail(ErrorKind::Validation, code, message);
}

DisplayUnits parse_units(const json& j) {
  DisplayUnits u;
  std::string temp = "K";
  std::string power = "W";
  if (j.is_string()) {
    temp = j.get<std::string>();
  } else if (j.is_object()) {
    if (j.contains("temperature")) temp = j.at("temperature").get<std::string>();
    if (j.contains("power")) power = j.at("power").get<std::string>();
  } else if (!j.is_null()) {
    bad_request("bad_units", "units must be a string or an object");
  }
  if (temp == "K") {
    u.temperature = TemperatureUnit::Kelvin;
  } else if (temp == "C") {
    u.temperature = TemperatureUnit::Celsius;
  } else {
    bad_request("bad_units", "temperature unit must be K or C, got '" + temp + "'");
  }
  if (power != "W") bad_request("bad_units", "power unit must be W, got '" + power + "'");
  return u;
}

}  // namespace

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::size_t stop = comma == std::string::npos ? csv.size() : comma;
    if (stop > start) out.push_back(csv.substr(start, stop - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

DiagramRequest parse_diagram_request(const json& body) {
  if (!body.is_object()) bad_request("bad_request", "request body must be a JSON object");
  DiagramRequest req;
  try {
    if (body.contains("timestep")) {
      if (!body["timestep"].is_number_integer()) bad_request("bad_timestep", "timestep must be an integer");
      req.timestep = body["timestep"].get<std::int64_t>();
    }
    if (body.contains("include") && !body["include"].is_null()) {
      req.include = body["include"].get<std::vector<std::string>>();
    }
    if (body.contains("groups") && !body["groups"].is_null()) {
      req.groups = body["groups"].get<GroupMap>();
      std::map<std::string, std::string> owner;
      for (const auto& [group, members] : req.groups) {
        for (const auto& m : members) {
          auto [it, fresh] = owner.emplace(m, group);
          if (!fresh) {
            bad_request("overlapping_groups", "submodel '" + m + "' is in both '" + it->second + "' and '" + group + "'");
          }
        }
      }
    }
    if (body.contains("radiant_threshold")) {
      if (!body["radiant_threshold"].is_number()) bad_request("bad_threshold", "radiant_threshold must be a number");
      req.radiant_threshold = body["radiant_threshold"].get<double>();
      if (!(req.radiant_threshold >= 0.0)) bad_request("bad_threshold", "radiant_threshold must be >= 0");
    }
    if (body.contains("layout")) {
      auto kind = parse_layout_kind(body["layout"].get<std::string>());
      if (!kind) bad_request("bad_layout", "layout must be layered, force, subspace or circular");
      req.layout = *kind;
    }
    if (body.contains("seed") && !body["seed"].is_null()) {
      if (!body["seed"].is_number_unsigned()) bad_request("bad_request", "seed must be a non-negative integer");
      req.seed = body["seed"].get<std::uint64_t>();
    }
    if (body.contains("units")) req.units = parse_units(body["units"]);
    if (body.contains("canvas")) {
      req.canvas.width = body["canvas"].value("width", req.canvas.width);
      req.canvas.height = body["canvas"].value("height", req.canvas.height);
      if (req.canvas.width <= 0 || req.canvas.height <= 0) bad_request("bad_canvas", "canvas must be positive");
    }
  } catch (const json::exception& e) {
    bad_request("bad_request", std::string("malformed diagram request: ") + e.what());
  }
  return req;
}

json to_json(const DiagramRequest& req) {
  json j = {{"timestep", req.timestep},
            {"radiant_threshold", req.radiant_threshold},
            {"layout", to_string(req.layout)},
            {"seed", req.seed},
            {"units", {{"temperature", to_string(req.units.temperature)}, {"power", "W"}}},
            {"groups", req.groups},
            {"canvas", {{"width", req.canvas.width}, {"height", req.canvas.height}}}};
  j["include"] = req.include ? json(*req.include) : json(nullptr);
  return j;
}

Service::Service(fs::path dataset_dir, std::optional<fs::path> project_dir) : dataset_dir_(std::move(dataset_dir)) {
  const ValidationReport report = validate_dataset(dataset_dir_);
  if (!report.ok()) {
    std::string msg = "dataset " + dataset_dir_.string() + " failed validation:";
    for (const auto& v : report.violations) msg += "\n  " + v.code + ": " + v.message;
    fail(ErrorKind::Validation, "invalid_dataset", msg);
  }
  sizes_ = read_sizes(dataset_dir_);
  index_ = parse_node_tree_fast(dataset_dir_);
  conductors_ = load_conductors(dataset_dir_);
  timestamps_ = load_temperatures(dataset_dir_, {0, sizes_.num_timesteps}, {0, 0}).timestamps;
  if (project_dir) project_ = init_project(*project_dir, dataset_dir_);
}

json Service::summary() const {
  json names = json::array();
  json counts = json::array();
  for (const auto& e : index_.entries()) {
    names.push_back(e.name);
    counts.push_back(e.nodes.size());
  }
  return {{"sizes",
           {{"num_submodels", sizes_.num_submodels},
            {"num_nodes", sizes_.num_nodes},
            {"num_linear", sizes_.num_linear},
            {"num_radiative", sizes_.num_radiative},
            {"num_timesteps", sizes_.num_timesteps}}},
          {"submodels", names},
          {"node_counts", counts},
          {"timestamps", timestamps_},
          {"dataset", dataset_dir_.filename().string()}};
}

std::vector<double> Service::row_at(std::int64_t t) {
  if (t < 0 || t >= sizes_.num_timesteps) {
    fail(ErrorKind::Bounds, "bad_timestep",
         "timestep " + std::to_string(t) + " outside [0, " + std::to_string(sizes_.num_timesteps) + ")");
  }
  std::lock_guard<std::mutex> lock(mutex_);
  if (auto it = rows_.find(t); it != rows_.end()) return it->second;
  std::vector<double> row;
  if (project_) {
    if (auto hit = load_cached(*project_, t)) row = std::move(*hit);
  }
  if (row.empty() && sizes_.num_nodes > 0) {
    row = load_temperatures(dataset_dir_, {t, t + 1}, {0, sizes_.num_nodes}).values;
    if (project_) cache_timestep(*project_, t, row);
  }
  rows_.emplace(t, row);
  return row;
}

const TemperatureMatrix& Service::full_matrix() {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!full_) full_ = load_temperatures(dataset_dir_);
  return *full_;
}

SubmodelGraph Service::graph(const DiagramRequest& req) {
  const std::vector<double> row = row_at(req.timestep);
  const auto flows = compute_node_flows(conductors_, row);
  SubmodelGraph g = req.groups.empty() ? aggregate_to_submodels(index_, flows, row, req.timestep)
                                       : apply_grouping(index_, flows, row, req.groups, req.timestep);
  g.units = req.units;
  if (req.include) g = apply_selection(g, std::set<std::string>(req.include->begin(), req.include->end()));
  return g;
}

DiagramSpec Service::diagram(const DiagramRequest& req) {
  const SubmodelGraph unfiltered = graph(req);
  const SubmodelGraph shown = apply_radiant_threshold(unfiltered, req.radiant_threshold);
  const LayoutResult layout = layout_graph(shown, req.layout, req.seed);
  DiagramSpec d = build_diagram(shown, layout, req.units);
  d.timestamp = timestamps_[static_cast<std::size_t>(req.timestep)];
  d.max_radiative_q = 0.0;
  for (const auto& e : unfiltered.edges) {
    if (e.kind == ConductorKind::Radiative) d.max_radiative_q = std::max(d.max_radiative_q, e.q_watts);
  }
  return d;
}

std::string Service::export_svg(const DiagramRequest& req) { return render_svg(diagram(req), req.canvas); }

json Service::transient_temperature(const std::vector<std::string>& names, const DisplayUnits& units) {
  if (names.empty()) fail(ErrorKind::Validation, "empty_request", "name at least one submodel");
  for (const auto& n : names) index_.position(n);
  return build_series_payload(submodel_temperature_series(index_, full_matrix(), names), SeriesKind::Temperature,
                              units);
}

json Service::transient_flow(const std::string& from, const std::string& to) {
  if (from.empty() || to.empty()) fail(ErrorKind::Validation, "bad_request", "both 'from' and 'to' are required");
  index_.position(from);
  index_.position(to);
  if (from == to) fail(ErrorKind::Validation, "self_pair", "flow series needs two distinct submodels");
  return build_flow_payload({pair_flow_series(index_, conductors_, full_matrix(), from, to)});
}

std::pair<int, json> error_response(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    int status = 500;
    switch (err->kind()) {
      case ErrorKind::Validation:
      case ErrorKind::Lookup:
      case ErrorKind::Bounds:
        status = 400;
        break;
      default:
        break;
    }
    return {status, {{"error", {{"code", err->code()}, {"message", err->what()}}}}};
  }
  if (dynamic_cast<const json::parse_error*>(&e) != nullptr) {
    return {400, {{"error", {{"code", "malformed_json"}, {"message", e.what()}}}}};
  }
  return {500, {{"error", {{"code", "internal"}, {"message", e.what()}}}}};
}

void register_routes(httplib::Server& server, Service& service) {
  auto guarded = [](auto&& handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const std::exception& e) {
        auto [status, body] = error_response(e);
        res.status = status;
        res.set_content(body.dump(), "application/json");
      }
    };
  };
  auto parse_body = [](const httplib::Request& req) {
    json body = json::parse(req.body.empty() ? std::string("{}") : req.body);
    return parse_diagram_request(body);
  };

  server.Get("/api/summary", guarded([&service](const httplib::Request&, httplib::Response& res) {
               res.set_content(service.summary().dump(), "application/json");
             }));
  server.Post("/api/diagram", guarded([&service, parse_body](const httplib::Request& req, httplib::Response& res) {
                res.set_content(to_json(service.diagram(parse_body(req))).dump(), "application/json");
              }));
  server.Post("/api/export", guarded([&service, parse_body](const httplib::Request& req, httplib::Response& res) {
                res.set_content(service.export_svg(parse_body(req)), "image/svg+xml");
              }));
  server.Get("/api/transient/temperature",
             guarded([&service](const httplib::Request& req, httplib::Response& res) {
               DisplayUnits units;
               if (req.has_param("units")) units = parse_units(json(req.get_param_value("units")));
               const auto names = split_names(req.get_param_value("names"));
               res.set_content(service.transient_temperature(names, units).dump(), "application/json");
             }));
  server.Get("/api/transient/flow", guarded([&service](const httplib::Request& req, httplib::Response& res) {
               res.set_content(
                   service.transient_flow(req.get_param_value("from"), req.get_param_value("to")).dump(),
                   "application/json");
             }));
}

}  // namespace hfv
