#include <doctest.h>

#include <nlohmann/json.hpp>

#include "hfv/binary_io.hpp"
#include "hfv/csr_model.hpp"
#include "hfv/csr_parser.hpp"
#include "hfv/error.hpp"
#include "test_support.hpp"

using namespace hfv;
using hfv::testing::ScratchDir;
using hfv::testing::slurp;
using hfv::testing::spit;

namespace {

void append_block(std::vector<char>& out, const std::string& name, const std::vector<std::int64_t>& body) {
  io::put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.insert(out.end(), name.begin(), name.end());
  io::put_i64(out, static_cast<std::int64_t>(body.size()));
  io::put_i64(out, 0);
  for (auto v : body) io::put_i64(out, v);
}

ThermalDataset two_by_three() {
  SyntheticSpec spec;
  spec.num_submodels = 2;
  spec.nodes_per_submodel = {3};
  spec.num_timesteps = 2;
  spec.seed = 3;
  return generate_synthetic(spec);
}

template <typename F>
Error catch_error(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected hfv::Error");
  return Error(ErrorKind::Io, "none", "none");
}

}  // namespace

TEST_SUITE("csr_parser") {
  TEST_CASE("read_sizes returns the generator counts and reads 40 bytes") {
    ScratchDir dir;
    SyntheticSpec spec;
    spec.num_submodels = 5;
    spec.nodes_per_submodel = {4};
    spec.num_timesteps = 3;
    const ThermalDataset d = generate_synthetic(spec);
    write_dataset(d, dir.path());

    io::ReadTally tally;
    const Sizes s = read_sizes(dir.path());
    CHECK(tally.bytes_for(dir / "SIZES") == 40);
    CHECK(s.num_submodels == 5);
    CHECK(s.num_nodes == 20);
    CHECK(s.num_timesteps == 3);
    CHECK(s == d.sizes());
  }

  TEST_CASE("read_sizes on an empty file is a truncation error") {
    ScratchDir dir;
    spit(dir / "SIZES", {});
    CHECK(catch_error([&] { read_sizes(dir.path()); }).kind() == ErrorKind::Truncation);
  }

  TEST_CASE("fast parse infers ranges from heads") {
    ScratchDir dir;
    std::vector<char> nodtre;
    append_block(nodtre, "A", {0, 1, 2});
    append_block(nodtre, "B", {3, 4});
    spit(dir / "NODTRE", nodtre);

    const SubmodelIndex fast = parse_node_tree_fast(dir.path());
    REQUIRE(fast.size() == 2);
    CHECK(fast.entries()[0] == SubmodelEntry{"A", {0, 3}});
    CHECK(fast.entries()[1] == SubmodelEntry{"B", {3, 5}});
    CHECK(fast == parse_node_tree_full(dir.path()));
    CHECK(fast.position("B") == 1);
    CHECK(fast.owner_of(4) == 1);
    CHECK(fast.owner_of(5) == -1);
    CHECK(catch_error([&] { fast.position("Z"); }).code() == "unknown_submodel");
  }

  TEST_CASE("zero-count block yields an empty range") {
    ScratchDir dir;
    std::vector<char> nodtre;
    append_block(nodtre, "X", {});
    spit(dir / "NODTRE", nodtre);
    const SubmodelIndex fast = parse_node_tree_fast(dir.path());
    REQUIRE(fast.size() == 1);
    CHECK(fast.entries()[0].nodes == IndexRange{0, 0});
  }

  TEST_CASE("fast parse of 1000 blocks of a million nodes reads only heads") {
    // Sparse file: heads are written, bodies are holes the parser must seek over.
    ScratchDir dir;
    const std::int64_t per_block = 1'000'000;
    std::uint64_t head_bytes = 0;
    {
      std::ofstream out(dir / "NODTRE", std::ios::binary);
      std::uint64_t offset = 0;
      for (int k = 0; k < 1000; ++k) {
        std::vector<char> head;
        const std::string name = "SM" + std::to_string(k);
        io::put_u32(head, static_cast<std::uint32_t>(name.size()));
        head.insert(head.end(), name.begin(), name.end());
        io::put_i64(head, per_block);
        io::put_i64(head, 0);
        out.seekp(static_cast<std::streamoff>(offset));
        out.write(head.data(), static_cast<std::streamsize>(head.size()));
        head_bytes += head.size();
        offset += head.size() + 8 * per_block;
      }
      out.close();
      fs::resize_file(dir / "NODTRE", offset);
    }
    const std::uint64_t file_size = fs::file_size(dir / "NODTRE");

    io::ReadTally tally;
    const SubmodelIndex index = parse_node_tree_fast(dir.path());
    CHECK(index.size() == 1000);
    CHECK(index.num_nodes() == 1000 * per_block);
    CHECK(index.entries()[999].nodes == IndexRange{999 * per_block, 1000 * per_block});
    CHECK(tally.bytes_for(dir / "NODTRE") == head_bytes);
    CHECK(static_cast<double>(tally.total()) < 1e-4 * static_cast<double>(file_size));
  }

  TEST_CASE("fast parse reads exactly the head bytes") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
      ScratchDir dir;
      const ThermalDataset d = generate_synthetic(hfv::testing::random_spec(rng, 2000, 3));
      write_dataset(d, dir.path());
      std::uint64_t expected = 0;
      for (const auto& sm : d.submodels) expected += 20 + sm.name.size();
      io::ReadTally tally;
      parse_node_tree_fast(dir.path());
      CHECK(tally.bytes_for(dir / "NODTRE") == expected);
      CHECK(tally.total() == expected);
    }
  }

  TEST_CASE("truncated head names the block ordinal") {
    ScratchDir dir;
    std::vector<char> nodtre;
    append_block(nodtre, "A", {0});
    append_block(nodtre, "B", {1});
    nodtre.resize(nodtre.size() - 8 - 4);  // cut into block 1's reserved field
    spit(dir / "NODTRE", nodtre);
    const Error e = catch_error([&] { parse_node_tree_fast(dir.path()); });
    CHECK(e.kind() == ErrorKind::Truncation);
    CHECK(std::string(e.what()).find("block 1") != std::string::npos);
  }

  TEST_CASE("fast parse refuses to seek past the end of the file") {
    ScratchDir dir;
    std::vector<char> nodtre;
    append_block(nodtre, "A", {0, 1, 2});
    nodtre.resize(nodtre.size() - 8);
    spit(dir / "NODTRE", nodtre);
    CHECK(catch_error([&] { parse_node_tree_fast(dir.path()); }).kind() == ErrorKind::Structural);
  }

  TEST_CASE("full parse reports the first non-sequential position") {
    ScratchDir dir;
    std::vector<char> nodtre;
    append_block(nodtre, "A", {0, 2, 1});
    spit(dir / "NODTRE", nodtre);
    const Error e = catch_error([&] { parse_node_tree_full(dir.path()); });
    CHECK(e.kind() == ErrorKind::Structural);
    CHECK(e.code() == "non_sequential_body");
    const std::string msg = e.what();
    CHECK(msg.find("block 0") != std::string::npos);
    CHECK(msg.find("position 1") != std::string::npos);
    // The fast path trusts the heads.
    CHECK(parse_node_tree_fast(dir.path()).entries()[0].nodes == IndexRange{0, 3});
  }

  TEST_CASE("fast equals full over random datasets") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 30; ++i) {
      ScratchDir dir;
      write_dataset(generate_synthetic(hfv::testing::random_spec(rng, 1000, 4)), dir.path());
      CHECK(parse_node_tree_fast(dir.path()) == parse_node_tree_full(dir.path()));
    }
  }

  TEST_CASE("load_temperatures returns the written values") {
    ScratchDir dir;
    ThermalDataset d;
    d.submodels = {{"A", 1}, {"B", 1}};
    d.temperatures.num_nodes = 2;
    d.temperatures.timestamps = {0.0, 10.0};
    d.temperatures.values = {280.0, 290.0, 300.0, 310.0};
    write_dataset(d, dir.path());
    const TemperatureMatrix m = load_temperatures(dir.path());
    CHECK(m == d.temperatures);
    CHECK(m.at(1, 0) == 300.0);
  }

  TEST_CASE("load_temperatures slices by node range") {
    ScratchDir dir;
    const ThermalDataset d = two_by_three();
    write_dataset(d, dir.path());
    const SubmodelIndex index = parse_node_tree_fast(dir.path());
    const IndexRange b = index.entries()[index.position("SM001")].nodes;
    CHECK(b == IndexRange{3, 6});
    const TemperatureMatrix m = load_temperatures(dir.path(), {0, 1}, b);
    CHECK(m.num_nodes == 3);
    CHECK(m.first_node == 3);
    REQUIRE(m.values.size() == 3);
    for (int k = 0; k < 3; ++k) CHECK(m.values[k] == d.temperatures.at(0, 3 + k));
  }

  TEST_CASE("empty timestep range gives an empty matrix") {
    ScratchDir dir;
    write_dataset(two_by_three(), dir.path());
    const TemperatureMatrix m = load_temperatures(dir.path(), {1, 1}, {0, 6});
    CHECK(m.num_timesteps() == 0);
    CHECK(m.values.empty());
  }

  TEST_CASE("load_temperatures bounds-checks before reading") {
    ScratchDir dir;
    write_dataset(two_by_three(), dir.path());
    io::ReadTally tally;
    CHECK(catch_error([&] { load_temperatures(dir.path(), {0, 3}, {0, 6}); }).code() == "bad_timestep");
    CHECK(catch_error([&] { load_temperatures(dir.path(), {0, 1}, {4, 7}); }).kind() == ErrorKind::Bounds);
    CHECK(tally.bytes_for(dir / "TEMPS") == 0);
  }

  TEST_CASE("full-row request reads only the requested rows") {
    ScratchDir dir;
    SyntheticSpec spec;
    spec.num_submodels = 2;
    spec.nodes_per_submodel = {50};
    spec.num_timesteps = 10;
    write_dataset(generate_synthetic(spec), dir.path());
    io::ReadTally tally;
    load_temperatures(dir.path(), {4, 6}, {0, 100});
    CHECK(tally.bytes_for(dir / "TEMPS") == 2 * 100 * 8 + 2 * 8);
  }

  TEST_CASE("conductors round-trip and corrupt files are rejected") {
    ScratchDir dir;
    SyntheticSpec spec;
    spec.num_submodels = 3;
    spec.nodes_per_submodel = {4};
    spec.seed = 42;
    const ThermalDataset d = generate_synthetic(spec);
    write_dataset(d, dir.path());
    CHECK(load_conductors(dir.path()) == d.conductors);

    SUBCASE("self conductor") {
      auto raw = slurp(dir / "CONDUCTORS");
      hfv::testing::put_i64_at(raw, 16, d.conductors[0].node_a);
      spit(dir / "CONDUCTORS", raw);
      const Error e = catch_error([&] { load_conductors(dir.path()); });
      CHECK(e.kind() == ErrorKind::Structural);
      CHECK(e.code() == "self_conductor");
    }
    SUBCASE("record count disagrees with SIZES") {
      auto raw = slurp(dir / "CONDUCTORS");
      raw.resize(raw.size() - 32);
      spit(dir / "CONDUCTORS", raw);
      CHECK(catch_error([&] { load_conductors(dir.path()); }).kind() == ErrorKind::Structural);
    }
  }

  TEST_CASE("zero conductors load as an empty list") {
    ScratchDir dir;
    SyntheticSpec spec;
    spec.num_submodels = 2;
    spec.linear_density = 0.0;
    spec.radiative_density = 0.0;
    write_dataset(generate_synthetic(spec), dir.path());
    CHECK(load_conductors(dir.path()).empty());
  }

  TEST_CASE("baseline matches the fast path bitwise and rescans NODTRE per submodel") {
    ScratchDir dir;
    SyntheticSpec spec;
    spec.num_submodels = 6;
    spec.nodes_per_submodel = {1, 0, 7, 3, 2, 5};
    spec.num_timesteps = 4;
    spec.seed = 17;
    write_dataset(generate_synthetic(spec), dir.path());
    const SubmodelIndex index = parse_node_tree_fast(dir.path());
    std::vector<std::string> names;
    for (const auto& e : index.entries()) names.push_back(e.name);

    const auto fast = load_submodel_temperatures(dir.path());
    io::ReadTally tally;
    const auto base = baseline_load_like_opentd(dir.path(), names);
    CHECK(base == fast);
    const std::uint64_t nodtre = fs::file_size(dir / "NODTRE");
    CHECK(tally.bytes_for(dir / "NODTRE") == names.size() * nodtre);
    CHECK(tally.bytes_for(dir / "TEMPS") == names.size() * fs::file_size(dir / "TEMPS"));

    io::ReadTally one;
    baseline_load_like_opentd(dir.path(), {"SM003"});
    CHECK(one.bytes_for(dir / "NODTRE") >= nodtre);
    CHECK(catch_error([&] { baseline_load_like_opentd(dir.path(), {"NOPE"}); }).code() == "unknown_submodel");
  }

  TEST_CASE("bench defaults to five runs and the fast path reads less") {
    ScratchDir dir;
    SyntheticSpec spec;
    spec.num_submodels = 4;
    spec.nodes_per_submodel = {25};
    spec.num_timesteps = 5;
    write_dataset(generate_synthetic(spec), dir.path());
    const BenchReport r = bench_compare(dir.path());
    CHECK(r.runs == 5);
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].n == 500);
    CHECK(r.records[0].bytes_read_fast < r.records[0].bytes_read_baseline);
    CHECK(r.records[0].fast_seconds > 0.0);

    const auto j = nlohmann::json::parse(to_json_string(r));
    CHECK(j["runs"] == 5);
    CHECK(j["records"][0]["n"] == 500);
    CHECK(j["records"][0].contains("baseline_seconds"));
    CHECK(j["records"][0].contains("bytes_read_fast"));
  }

  TEST_CASE("loglog slope recovers a power law") {
    CHECK(loglog_slope({1, 10, 100}, {2, 20, 200}) == doctest::Approx(1.0));
    CHECK(loglog_slope({1, 10, 100}, {1, 100, 10000}) == doctest::Approx(2.0));
  }
}
