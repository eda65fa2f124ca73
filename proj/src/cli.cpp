#include "hfv/cli.hpp"

#include <httplib.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "hfv/csr_model.hpp"
#include "hfv/csr_parser.hpp"
#include "hfv/error.hpp"
#include "hfv/project_cache.hpp"
#include "hfv/render.hpp"
#include "hfv/service.hpp"

namespace hfv {

namespace {

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) fail(ErrorKind::Io, "write_failed", "cannot write " + file.string());
}

GroupMap parse_group_flags(const std::vector<std::string>& flags) {
  GroupMap groups;
  for (const auto& flag : flags) {
    const auto eq = flag.find('=');
    if (eq == std::string::npos || eq == 0) {
      fail(ErrorKind::Validation, "bad_group", "--group expects NAME=A,B,... (got '" + flag + "')");
    }
    auto& members = groups[flag.substr(0, eq)];
    for (auto& m : split_names(flag.substr(eq + 1))) members.push_back(std::move(m));
  }
  return groups;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heat flow visualizer: synthetic datasets, fast parsing, diagrams, benchmarks and a JSON service",
               "hfv"};
  app.require_subcommand(1);

  // gen
  SyntheticSpec gen_spec;
  std::int64_t nodes_per = 4;
  fs::path gen_out;
  auto* gen = app.add_subcommand("gen", "Write a deterministic synthetic dataset");
  gen->add_option("--submodels", gen_spec.num_submodels, "Number of submodels")->check(CLI::PositiveNumber);
  gen->add_option("--nodes-per", nodes_per, "Nodes per submodel")->check(CLI::NonNegativeNumber);
  gen->add_option("--timesteps", gen_spec.num_timesteps, "Number of timesteps")->check(CLI::NonNegativeNumber);
  gen->add_option("--linear-density", gen_spec.linear_density, "Linear conductors per node");
  gen->add_option("--radiative-density", gen_spec.radiative_density, "Radiative conductors per node");
  gen->add_option("--tmin", gen_spec.temp_min_k, "Lowest temperature, K");
  gen->add_option("--tmax", gen_spec.temp_max_k, "Highest temperature, K");
  gen->add_option("--seed", gen_spec.seed, "Generator seed");
  gen->add_option("--out", gen_out, "Dataset directory")->required();

  // inspect
  fs::path inspect_dir;
  bool inspect_validate = false;
  auto* inspect = app.add_subcommand("inspect", "Print sizes and the submodel table");
  inspect->add_option("dataset", inspect_dir, "Dataset directory")->required();
  inspect->add_flag("--validate", inspect_validate, "Also run the full structural validation");

  // diagram
  fs::path diagram_dir;
  fs::path diagram_out;
  fs::path diagram_project;
  std::string diagram_layout = "layered";
  std::string diagram_units = "K";
  std::string diagram_format;
  std::string diagram_include;
  std::vector<std::string> diagram_groups;
  DiagramRequest dreq;
  auto* diagram = app.add_subcommand("diagram", "Render one heat flow diagram to SVG or JSON");
  diagram->add_option("dataset", diagram_dir, "Dataset directory")->required();
  diagram->add_option("--timestep", dreq.timestep, "Timestep index");
  diagram->add_option("--layout", diagram_layout, "layered | force | subspace | circular");
  diagram->add_option("--include", diagram_include, "Comma-separated submodels (post-grouping names) to show");
  diagram->add_option("--group", diagram_groups, "NAME=A,B,... merges submodels into one rectangle (repeatable)");
  diagram->add_option("--threshold", dreq.radiant_threshold, "Hide radiative edges below this many watts");
  diagram->add_option("--seed", dreq.seed, "Force layout seed");
  diagram->add_option("--units", diagram_units, "Temperature display unit: K or C");
  diagram->add_option("--format", diagram_format, "svg or json (default: from --out extension)");
  diagram->add_option("--width", dreq.canvas.width, "SVG width in px")->check(CLI::PositiveNumber);
  diagram->add_option("--height", dreq.canvas.height, "SVG height in px")->check(CLI::PositiveNumber);
  diagram->add_option("--project", diagram_project, "Project cache directory");
  diagram->add_option("--out", diagram_out, "Output file")->required();

  // bench
  std::vector<fs::path> bench_dirs;
  int bench_runs = 5;
  fs::path bench_out;
  auto* bench = app.add_subcommand("bench", "Time the head-only loader against the per-submodel baseline");
  bench->add_option("datasets", bench_dirs, "Dataset directories")->required();
  bench->add_option("--runs", bench_runs, "Runs averaged per dataset")->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_out, "Report file (stdout when omitted)");

  // serve
  fs::path serve_dir;
  fs::path serve_project;
  fs::path serve_static;
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the JSON API for the browser UI");
  serve->add_option("dataset", serve_dir, "Dataset directory")->required();
  serve->add_option("--port", serve_port, "Listen port (HFV_PORT overrides)");
  serve->add_option("--host", serve_host, "Listen address");
  serve->add_option("--project", serve_project, "Project cache directory");
  serve->add_option("--static", serve_static, "Directory of static UI files to mount at /");

  // cache clear
  fs::path clear_dir;
  auto* cache = app.add_subcommand("cache", "Project cache maintenance");
  cache->require_subcommand(1);
  auto* clear = cache->add_subcommand("clear", "Delete a project's cache files");
  clear->add_option("project", clear_dir, "Project directory")->required();

  std::vector<std::string> argv_store{"hfv"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "hfv: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (*gen) {
      gen_spec.nodes_per_submodel = {nodes_per};
      const ThermalDataset d = generate_synthetic(gen_spec);
      write_dataset(d, gen_out);
      const Sizes s = d.sizes();
      out << "wrote " << gen_out.string() << ": " << s.num_submodels << " submodels, " << s.num_nodes << " nodes, "
          << s.num_linear << " linear + " << s.num_radiative << " radiative conductors, " << s.num_timesteps
          << " timesteps\n";
    } else if (*inspect) {
      const Sizes s = read_sizes(inspect_dir);
      out << "submodels  " << s.num_submodels << "\nnodes      " << s.num_nodes << "\nlinear     " << s.num_linear
          << "\nradiative  " << s.num_radiative << "\ntimesteps  " << s.num_timesteps << "\n\n";
      const SubmodelIndex index = parse_node_tree_fast(inspect_dir);
      out << std::left << std::setw(24) << "SUBMODEL" << std::right << std::setw(12) << "FIRST" << std::setw(12)
          << "END" << std::setw(12) << "NODES" << "\n";
      for (const auto& e : index.entries()) {
        out << std::left << std::setw(24) << e.name << std::right << std::setw(12) << e.nodes.begin << std::setw(12)
            << e.nodes.end << std::setw(12) << e.nodes.size() << "\n";
      }
      if (inspect_validate) {
        const ValidationReport report = validate_dataset(inspect_dir);
        if (report.ok()) {
          out << "\nvalidation: ok\n";
        } else {
          out << "\nvalidation: " << report.violations.size() << " violation(s)\n";
          for (const auto& v : report.violations) out << "  " << v.code << ": " << v.message << "\n";
          return 1;
        }
      }
    } else if (*diagram) {
      auto kind = parse_layout_kind(diagram_layout);
      if (!kind) fail(ErrorKind::Validation, "bad_layout", "unknown layout '" + diagram_layout + "'");
      dreq.layout = *kind;
      if (diagram_units == "C") {
        dreq.units.temperature = TemperatureUnit::Celsius;
      } else if (diagram_units != "K") {
        fail(ErrorKind::Validation, "bad_units", "--units must be K or C");
      }
      if (!diagram_include.empty()) dreq.include = split_names(diagram_include);
      dreq.groups = parse_group_flags(diagram_groups);
      std::string format = diagram_format;
      if (format.empty()) format = diagram_out.extension() == ".json" ? "json" : "svg";
      if (format != "svg" && format != "json") fail(ErrorKind::Validation, "bad_format", "--format must be svg or json");

      std::optional<fs::path> project;
      if (!diagram_project.empty()) project = diagram_project;
      Service service(diagram_dir, project);
      if (format == "svg") {
        write_text(diagram_out, service.export_svg(dreq));
      } else {
        write_text(diagram_out, to_json(service.diagram(dreq)).dump(2) + "\n");
      }
      out << "wrote " << diagram_out.string() << "\n";
    } else if (*bench) {
      BenchReport report;
      report.runs = bench_runs;
      for (const auto& dir : bench_dirs) {
        for (const auto& rec : bench_compare(dir, bench_runs).records) report.records.push_back(rec);
      }
      const std::string text = to_json_string(report) + "\n";
      if (bench_out.empty()) {
        out << text;
      } else {
        write_text(bench_out, text);
        out << "wrote " << bench_out.string() << "\n";
      }
    } else if (*serve) {
      if (const char* env = std::getenv("HFV_PORT"); env != nullptr && *env != '\0') {
        try {
          serve_port = std::stoi(env);
        } catch (const std::exception&) {
          fail(ErrorKind::Validation, "bad_port", std::string("HFV_PORT is not a port number: ") + env);
        }
      }
      std::optional<fs::path> project;
      if (!serve_project.empty()) project = serve_project;
      Service service(serve_dir, project);
      httplib::Server server;
      register_routes(server, service);
      if (!serve_static.empty() && !server.set_mount_point("/", serve_static.string())) {
        fail(ErrorKind::Io, "missing_file", "static directory " + serve_static.string() + " does not exist");
      }
      out << "serving " << serve_dir.string() << " on http://" << serve_host << ":" << serve_port << "\n"
          << std::flush;
      if (!server.listen(serve_host, serve_port)) {
        fail(ErrorKind::Io, "listen_failed", "cannot listen on " + serve_host + ":" + std::to_string(serve_port));
      }
    } else if (*clear) {
      clear_project(clear_dir);
      out << "cleared " << clear_dir.string() << "\n";
    }
  } catch (const Error& e) {
    std::string first_line = e.what();
    first_line = first_line.substr(0, first_line.find('\n'));
    err << "hfv: error: " << first_line << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "hfv: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace hfv
