#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "polydiff/cli.hpp"
#include "polydiff/config.hpp"
#include "polydiff/io.hpp"
#include "polydiff/random_fields.hpp"

using namespace polydiff;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* tag) {
  const auto stamp =
      std::chrono::steady_clock::now().time_since_epoch().count();
  auto p = fs::temp_directory_path() /
           (std::string("polydiff_test_") + tag + "_" + std::to_string(stamp));
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("doubles are rendered with exact round trips") {
  for (double x : {0.1, -1.0 / 3.0, 1e-300, 2.2250738585072014e-308, 0.0,
                   -42.5, 6.02214076e23, 1.0000000000000002}) {
    const std::string s = format_double(x);
    const double back = std::strtod(s.c_str(), nullptr);
    CHECK(std::memcmp(&back, &x, sizeof(double)) == 0);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("csv writer emits a fixed layout and rejects ragged rows") {
  auto dir = fresh_dir("csv");
  const auto path = dir / "table.csv";
  write_csv(path, {"t", "chi"}, {{0.0, 1.5}, {0.5, 0.25}});
  CHECK(slurp(path) == "t,chi\n0,1.5\n0.5,0.25\n");
  CHECK_THROWS_AS(write_csv(path, {"a", "b"}, {{1.0}}), Error);
  fs::remove_all(dir);
}

TEST_CASE("snapshot files round-trip bit for bit") {
  auto dir = fresh_dir("snap");
  auto g = GridSpec::rectangle(2.0, 1.0, 6, 4);
  auto ops = DiscreteOperators::build(g);
  Rng rng(12);
  Snapshot snap;
  snap.grid = g;
  snap.time = 3.75;
  snap.fields.push_back({"u", random_eigen_field(ops, rng, 5, 0.5, 1.0).values()});
  snap.fields.push_back({"sigma", random_eigen_field(ops, rng, 5, 0.5, 1.0).values()});

  const auto path = dir / "state.pdif";
  write_snapshot(path, snap);
  CHECK(fs::exists(dir / "state.txt"));  // layout sidecar

  auto back = read_snapshot(path);
  CHECK(back.grid == g);
  CHECK(back.time == snap.time);
  REQUIRE(back.fields.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(back.fields[i].name == snap.fields[i].name);
    REQUIRE(back.fields[i].values.size() == snap.fields[i].values.size());
    CHECK(std::memcmp(back.fields[i].values.data(),
                      snap.fields[i].values.data(),
                      sizeof(double) * 24) == 0);
  }
  // Corrupted magic is rejected.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_AS(read_snapshot(path), Error);
  fs::remove_all(dir);
}

TEST_CASE("empty config parses to the documented defaults") {
  auto c = parse_config("{}", "test");
  CHECK(c.dimension == 1);
  CHECK(c.counts[0] == 128);
  CHECK(c.mu == 0.5);
  CHECK(c.boundary_preset == "bump");
  CHECK(!c.dt.has_value());
  CHECK(!c.R_cut.has_value());
  CHECK(c.scheme == "imex-cn");
  CHECK(c.seed == 42);
  CHECK(c.shifts == std::vector<double>{0.0, 5.0, 10.0, 20.0, 40.0});
  // Realization resolves the optionals by the standard rules.
  auto p = make_params(c);
  CHECK(p.R_cut > 0.0);
  auto s = make_solver(c);
  CHECK(s.dt > 0.0);
  CHECK(s.scheme == Scheme::ImexCN);
}

TEST_CASE("config errors carry the key path and origin") {
  CHECK_THROWS_AS(parse_config("{", "broken.json"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"solver": {"dtt": 0.1}})", "f.json"),
      doctest::Contains("solver.dtt"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(R"({"grid": {"dimension": 3}})", "f.json"),
                       doctest::Contains("dimension"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"solver": {"dt": "fast"}})", "f.json"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"diagnostics": {"shifts": []}})", "f.json"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"initial": {"kind": "noise"}})", "f.json"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"model": {"beta_G": 2.0, "beta_R": 1.0}})", "f.json"),
      ConfigError);
}

TEST_CASE("resolved config echo is itself a loadable config") {
  auto c = parse_config(R"({"solver": {"t_end": 2.0}})", "test");
  const std::string echo = resolved_config_json(c);
  auto c2 = parse_config(echo, "echo");
  CHECK(c2.t_end == 2.0);
  REQUIRE(c2.dt.has_value());
  CHECK(*c2.dt == make_solver(c).dt);
  REQUIRE(c2.R_cut.has_value());
  CHECK(*c2.R_cut == make_params(c).R_cut);
  // Echoing the echo is a fixed point.
  CHECK(resolved_config_json(c2) == echo);
}

TEST_CASE("cli runs a small simulation end to end") {
  auto dir = fresh_dir("cli");
  const auto cfg_path = dir / "run.json";
  {
    std::ofstream os(cfg_path);
    os << R"({
      "grid": {"counts": [16, 1]},
      "solver": {"dt": 0.01, "t_end": 0.5, "sample_stride": 10},
      "output": {"directory": ")"
       << (dir / "out").string() << R"("}
    })";
  }
  const auto out = dir / "out";
  std::vector<const char*> argv{"polydiff", "simulate", "--config",
                                cfg_path.c_str()};
  CHECK(cli_main(static_cast<int>(argv.size()), argv.data()) == 0);
  CHECK(fs::exists(out / "resolved_config.json"));
  CHECK(fs::exists(out / "energy.csv"));
  CHECK(fs::exists(out / "final_state.pdif"));
  // The energy table has a header plus six samples (t = 0 .. 0.5).
  const auto lines = slurp(out / "energy.csv");
  CHECK(std::count(lines.begin(), lines.end(), '\n') == 7);
  fs::remove_all(dir);
}

TEST_CASE("cli rejects a missing config file and unknown subcommands") {
  std::vector<const char*> bad{"polydiff", "simulate", "--config",
                               "/nonexistent/nope.json"};
  CHECK(cli_main(static_cast<int>(bad.size()), bad.data()) == 1);
  std::vector<const char*> unk{"polydiff", "explode"};
  CHECK(cli_main(static_cast<int>(unk.size()), unk.data()) != 0);
}
