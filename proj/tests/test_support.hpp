#pragma once

// Shared fixtures for the unit and acceptance suites: scratch directories,
// random dataset specs and random submodel graphs.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "hfv/csr_model.hpp"
#include "hfv/thermal_graph.hpp"

namespace hfv::testing {

namespace fs = std::filesystem;

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("hfv_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  fs::path path_;
};

inline std::vector<char> slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const fs::path& file, const std::vector<char>& bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void put_i64_at(std::vector<char>& bytes, std::size_t offset, std::int64_t v) {
  for (int i = 0; i < 8; ++i) bytes[offset + i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF);
}

inline std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random spec within the acceptance envelope: 1-50 submodels,
/// <= 5000 nodes, <= 100 timesteps.
inline SyntheticSpec random_spec(std::mt19937_64& rng, std::int64_t max_nodes = 5000, std::int64_t max_timesteps = 100) {
  SyntheticSpec s;
  s.num_submodels = uniform_int(rng, 1, 50);
  s.nodes_per_submodel.clear();
  const std::int64_t budget = uniform_int(rng, 0, max_nodes);
  std::int64_t used = 0;
  for (std::int64_t i = 0; i < s.num_submodels; ++i) {
    const std::int64_t room = budget - used;
    const std::int64_t share = room <= 0 ? 0 : uniform_int(rng, 0, std::max<std::int64_t>(1, 2 * room / (s.num_submodels - i)));
    const std::int64_t count = std::min(share, std::max<std::int64_t>(room, 0));
    s.nodes_per_submodel.push_back(count);
    used += count;
  }
  s.num_timesteps = uniform_int(rng, 0, max_timesteps);
  s.linear_density = uniform_real(rng, 0.0, 2.0);
  s.radiative_density = uniform_real(rng, 0.0, 1.0);
  s.temp_min_k = uniform_real(rng, 20.0, 300.0);
  s.temp_max_k = s.temp_min_k + uniform_real(rng, 0.0, 200.0);
  s.seed = rng();
  return s;
}

/// Random submodel-level graph with netted, positive edges.
inline SubmodelGraph random_graph(std::mt19937_64& rng, int max_nodes = 12) {
  SubmodelGraph g;
  const int n = static_cast<int>(uniform_int(rng, 1, max_nodes));
  for (int i = 0; i < n; ++i) {
    SubmodelNodeView v;
    v.name = "N" + std::to_string(i);
    v.avg_temp_k = uniform_real(rng, 100.0, 400.0);
    v.net_load_w = uniform_real(rng, -50.0, 50.0);
    v.load_class = classify_load(v.net_load_w);
    v.member_submodels = {v.name};
    v.node_count = uniform_int(rng, 1, 10);
    g.nodes.push_back(v);
  }
  const double p = uniform_real(rng, 0.0, 0.7);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (auto kind : {ConductorKind::Linear, ConductorKind::Radiative}) {
        if (uniform_real(rng, 0.0, 1.0) >= p) continue;
        SubmodelEdge e;
        const bool forward = uniform_int(rng, 0, 1) == 1;
        e.from = g.nodes[forward ? i : j].name;
        e.to = g.nodes[forward ? j : i].name;
        e.kind = kind;
        e.q_watts = std::exp(uniform_real(rng, std::log(0.01), std::log(100.0)));
        if (kind == ConductorKind::Linear) e.g_total = uniform_real(rng, 0.1, 10.0);
        e.conductor_count = uniform_int(rng, 1, 5);
        g.edges.push_back(e);
      }
    }
  }
  return g;
}

}  // namespace hfv::testing
