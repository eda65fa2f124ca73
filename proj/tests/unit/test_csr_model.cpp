#include <doctest.h>

#include <cstring>
#include <functional>

#include "hfv/csr_model.hpp"
#include "hfv/csr_parser.hpp"
#include "hfv/error.hpp"
#include "test_support.hpp"

using namespace hfv;
using hfv::testing::ScratchDir;
using hfv::testing::slurp;
using hfv::testing::spit;

namespace {

std::int64_t le_i64(const std::vector<char>& bytes, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[at + i]);
  return static_cast<std::int64_t>(v);
}

ThermalDataset parse_full(const fs::path& dir) {
  ThermalDataset d;
  const SubmodelIndex index = parse_node_tree_full(dir);
  for (const auto& e : index.entries()) d.submodels.push_back({e.name, e.nodes.size()});
  d.conductors = load_conductors(dir);
  d.temperatures = load_temperatures(dir);
  return d;
}

// Hand-assembled NODTRE block: name, count, reserved, then the given body.
void append_block(std::vector<char>& out, const std::string& name, const std::vector<std::int64_t>& body,
                  std::int64_t count_override = -1) {
  auto put = [&](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  put(name.size(), 4);
  out.insert(out.end(), name.begin(), name.end());
  put(static_cast<std::uint64_t>(count_override >= 0 ? count_override : static_cast<std::int64_t>(body.size())), 8);
  put(0, 8);
  for (auto v : body) put(static_cast<std::uint64_t>(v), 8);
}

}  // namespace

TEST_SUITE("csr_model") {
  TEST_CASE("single submodel dataset writes SIZES with little-endian counts") {
    ScratchDir dir;
    ThermalDataset d;
    d.submodels = {{"A", 1}};
    d.temperatures.num_nodes = 1;
    d.temperatures.timestamps = {0.0};
    d.temperatures.values = {300.0};
    write_dataset(d, dir.path());

    const auto sizes = slurp(dir / "SIZES");
    REQUIRE(sizes.size() == 40);
    CHECK(le_i64(sizes, 0) == 1);
    CHECK(le_i64(sizes, 8) == 1);
    CHECK(le_i64(sizes, 32) == 1);
    for (const char* f : {"SIZES", "NODTRE", "TEMPS", "CONDUCTORS"}) CHECK(fs::exists(dir / f));
  }

  TEST_CASE("empty dataset is valid and TEMPS is empty") {
    ScratchDir dir;
    ThermalDataset d;
    d.submodels = {{"EMPTY", 0}};
    write_dataset(d, dir.path());
    CHECK(fs::file_size(dir / "TEMPS") == 0);
    CHECK(fs::file_size(dir / "CONDUCTORS") == 0);
    CHECK(validate_dataset(dir.path()).ok());
    CHECK(parse_full(dir.path()) == d);
  }

  TEST_CASE("synthetic dataset round-trips through the full parser") {
    ScratchDir dir;
    SyntheticSpec spec;
    spec.num_submodels = 3;
    spec.nodes_per_submodel = {4};
    spec.num_timesteps = 2;
    spec.seed = 42;
    const ThermalDataset d = generate_synthetic(spec);
    write_dataset(d, dir.path());
    CHECK(parse_full(dir.path()) == d);
    CHECK(validate_dataset(dir.path()).ok());
  }

  TEST_CASE("round-trip holds over random specs") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 20; ++i) {
      ScratchDir dir;
      const ThermalDataset d = generate_synthetic(hfv::testing::random_spec(rng, 400, 6));
      write_dataset(d, dir.path());
      CHECK(parse_full(dir.path()) == d);
    }
  }

  TEST_CASE("generator is deterministic for a fixed seed") {
    SyntheticSpec spec;
    spec.num_submodels = 5;
    spec.nodes_per_submodel = {7};
    spec.num_timesteps = 3;
    spec.seed = 7;
    CHECK(generate_synthetic(spec) == generate_synthetic(spec));

    ScratchDir a;
    ScratchDir b;
    write_dataset(generate_synthetic(spec), a.path());
    write_dataset(generate_synthetic(spec), b.path());
    for (const char* f : {"SIZES", "NODTRE", "TEMPS", "CONDUCTORS"}) CHECK(slurp(a / f) == slurp(b / f));

    SyntheticSpec other = spec;
    other.seed = 8;
    CHECK_FALSE(generate_synthetic(spec) == generate_synthetic(other));
  }

  TEST_CASE("node indices are contiguous per submodel in block order") {
    ScratchDir dir;
    SyntheticSpec spec;
    spec.num_submodels = 2;
    spec.nodes_per_submodel = {3};
    spec.num_timesteps = 1;
    write_dataset(generate_synthetic(spec), dir.path());

    // Decode the bodies by hand: block = u32 len, name, i64 count, i64 meta, body.
    const auto raw = slurp(dir / "NODTRE");
    std::vector<std::vector<std::int64_t>> bodies;
    std::size_t at = 0;
    while (at < raw.size()) {
      std::uint32_t len = 0;
      std::memcpy(&len, raw.data() + at, 4);
      at += 4 + len;
      const std::int64_t count = le_i64(raw, at);
      at += 16;
      std::vector<std::int64_t> body;
      for (std::int64_t k = 0; k < count; ++k, at += 8) body.push_back(le_i64(raw, at));
      bodies.push_back(body);
    }
    REQUIRE(bodies.size() == 2);
    CHECK(bodies[0] == std::vector<std::int64_t>{0, 1, 2});
    CHECK(bodies[1] == std::vector<std::int64_t>{3, 4, 5});
  }

  TEST_CASE("zero densities produce no conductors") {
    SyntheticSpec spec;
    spec.num_submodels = 4;
    spec.nodes_per_submodel = {5};
    spec.linear_density = 0.0;
    spec.radiative_density = 0.0;
    CHECK(generate_synthetic(spec).conductors.empty());
  }

  TEST_CASE("generator connects every populated submodel when densities are positive") {
    SyntheticSpec spec;
    spec.num_submodels = 12;
    spec.nodes_per_submodel = {2};
    spec.linear_density = 0.01;  // rounds to zero conductors before the spanning chain
    spec.radiative_density = 0.0;
    const ThermalDataset d = generate_synthetic(spec);
    // Union-find over submodel ids via node / 2.
    std::vector<int> parent(12);
    for (int i = 0; i < 12; ++i) parent[i] = i;
    std::function<int(int)> root = [&](int x) { return parent[x] == x ? x : parent[x] = root(parent[x]); };
    for (const auto& c : d.conductors) parent[root(static_cast<int>(c.node_a / 2))] = root(static_cast<int>(c.node_b / 2));
    for (int i = 1; i < 12; ++i) CHECK(root(i) == root(0));
  }

  TEST_CASE("generator rejects zero submodels") {
    SyntheticSpec spec;
    spec.num_submodels = 0;
    CHECK_THROWS_AS(generate_synthetic(spec), Error);
  }

  TEST_CASE("writer validates before touching the disk") {
    ScratchDir dir;
    ThermalDataset d;
    d.submodels = {{"A", 2}};
    d.temperatures.num_nodes = 2;
    d.temperatures.timestamps = {0.0};
    d.temperatures.values = {300.0, 301.0};
    d.conductors = {{ConductorKind::Linear, 1, 1, 1.0}};
    const fs::path target = dir / "out";
    try {
      write_dataset(d, target);
      FAIL("expected a validation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Validation);
    }
    CHECK_FALSE(fs::exists(target));
  }

  TEST_CASE("validation flags a non-sequential body by block") {
    ScratchDir dir;
    ThermalDataset d;
    d.submodels = {{"A", 3}};
    d.temperatures.num_nodes = 3;
    write_dataset(d, dir.path());
    std::vector<char> nodtre;
    append_block(nodtre, "A", {0, 2, 1});
    spit(dir / "NODTRE", nodtre);

    const ValidationReport r = validate_dataset(dir.path());
    REQUIRE(r.has("non_sequential_body"));
    CHECK(r.violations.front().message.find("block 0") != std::string::npos);
    CHECK(r.violations.front().message.find("'A'") != std::string::npos);
  }

  TEST_CASE("validation flags SIZES node count mismatch") {
    ScratchDir dir;
    SyntheticSpec spec;
    spec.num_submodels = 2;
    spec.nodes_per_submodel = {3};
    write_dataset(generate_synthetic(spec), dir.path());
    auto sizes = slurp(dir / "SIZES");
    hfv::testing::put_i64_at(sizes, 8, 7);
    spit(dir / "SIZES", sizes);
    CHECK(validate_dataset(dir.path()).has("count_mismatch"));
  }

  TEST_CASE("validation reports missing and truncated files without throwing") {
    ScratchDir dir;
    CHECK(validate_dataset(dir.path()).has("missing_file"));

    SyntheticSpec spec;
    write_dataset(generate_synthetic(spec), dir.path());
    auto sizes = slurp(dir / "SIZES");
    sizes.resize(20);
    spit(dir / "SIZES", sizes);
    CHECK(validate_dataset(dir.path()).has("structural"));
  }
}
