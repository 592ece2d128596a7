#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "vortexlab/cli.hpp"
#include "vortexlab/config.hpp"
#include "vortexlab/errors.hpp"
#include "vortexlab/io.hpp"

using namespace vortexlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// fresh directory per call under the system temp dir
fs::path scratch(const std::string& tag) {
  static std::atomic<int> counter{0};
  const fs::path p = fs::temp_directory_path() / ("vortexlab-test-" + std::to_string(::getpid()) + "-" + tag + "-" +
                                                  std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  io::write_file(p, j.dump());
  return p;
}

int run(const std::string& sub, const fs::path& out, const std::optional<fs::path>& config = {}) {
  cli::Options o;
  o.subcommand = sub;
  o.out = out;
  o.config = config;
  o.quiet = true;
  return cli::run(o);
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  CHECK(io::format_number(0.1) == "0.1");
  CHECK(io::format_number(3.0) == "3");
  CHECK(io::format_number(-0.0) == "0");
  CHECK(io::format_number(1e-300) == "1e-300");
  for (double x : {1.0 / 3.0, -2.718281828459045, 6.02214076e23})
    CHECK(std::stod(io::format_number(x)) == x);
}

TEST_CASE("csv layout") {
  io::Csv csv({"t", "d"});
  csv.row({0.5, 2.0}).row({-1.25, 1e-3});
  CHECK(csv.str() == "t,d\n0.5,2\n-1.25,0.001\n");
  CHECK(csv.rows() == 2);
  CHECK_THROWS_AS(csv.row({1.0}), IoError);

  io::Csv empty({"t", "count", "parity"});
  CHECK(empty.str() == "t,count,parity\n");
}

TEST_CASE("fnv1a reference values") {
  CHECK(io::hex64(io::fnv1a("")) == "cbf29ce484222325");
  CHECK(io::hex64(io::fnv1a("a")) == "af63dc4c8601ec8c");
  CHECK(io::hex64(io::fnv1a("foobar")) == "85944171f73967e8");
}

TEST_CASE("snapshot encoding") {
  const BoxSpec box = BoxSpec::cube(4.0, 16, true);
  const auto u = ComplexField::sample(box, [](const Vec3& x) { return cplx{x[0] * 0.5, -x[2]}; });
  const std::string bytes = io::encode_snapshot(u, 0.25);
  REQUIRE(bytes.size() == 8 + 12 + 24 + 8 + 8 * box.size());
  CHECK(bytes.substr(0, 8) == "VXLSNAP1");
  // little-endian uint32 16
  CHECK(static_cast<unsigned char>(bytes[8]) == 16);
  CHECK(bytes[9] == 0);

  // grid values are multiples of 1/4 here, so float32 storage is exact
  const auto back = io::decode_snapshot(bytes, {{"box", io::box_json(box)}});
  CHECK(back.t == 0.25);
  CHECK(max_abs_difference(back.field, u) == 0.0);

  CHECK_THROWS_AS(io::decode_snapshot("NOTASNAP" + bytes.substr(8)), IoError);
  CHECK_THROWS_AS(io::decode_snapshot(bytes.substr(0, bytes.size() - 3)), IoError);

  const fs::path dir = scratch("snap");
  io::write_snapshot(dir / "s", u, 0.25, {{"note", "x"}});
  const auto read = io::read_snapshot(dir / "s.bin");
  CHECK(read.field.box().periodic);
  CHECK(max_abs_difference(read.field, u) == 0.0);
  CHECK_THROWS_AS(io::read_snapshot(dir / "missing.bin"), IoError);
}

TEST_CASE("config validation") {
  CHECK(config::parse("{}").is_object());
  CHECK(config::parse(R"({"seed": 3, "gp_evolve": {"dt": 0.01}})")["seed"] == 3);

  auto message = [](const std::string& text) {
    try {
      config::parse(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(R"({"gp_evolve": {"dtt": 0.1}})").find("unknown key 'dtt'") != std::string::npos);
  CHECK(message(R"({"nonsense": 1})").find("unknown key 'nonsense'") != std::string::npos);
  CHECK(message(R"({"gp_evolve": {"dt": "fast"}})").find("/gp_evolve/dt") != std::string::npos);
  CHECK(message(R"({"gp_evolve": {"dt": -1}})").find("minimum") != std::string::npos);
  CHECK(message(R"({"scenario_run": {"preset": "trefoil"}})").find("enum") != std::string::npos);
  CHECK(message(R"({"vortex_analyze": {}})").find("required") != std::string::npos);
  CHECK(message("{\"seed\": ").find("parse error") != std::string::npos);

  // the compiled-in schema is the published file
  std::ifstream in(fs::path(VORTEXLAB_SOURCE_DIR) / "schemas" / "config.schema.json");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == config::schema_text());
}

TEST_CASE("gp-evolve of the constant state") {
  const fs::path dir = scratch("gp");
  const auto cfg = write_config(dir, {{"gp_evolve", {{"points", 16}, {"box_length", 8.0}, {"dt", 0.01}, {"t_end", 0.05},
                                                     {"snapshot_times", {0.0, 0.02, 0.05}}}}});
  REQUIRE(run("gp-evolve", dir / "out", cfg) == cli::kSuccess);
  const std::string csv = io::read_file(dir / "out" / "observables.csv");
  CHECK(csv == "t,mass,gl_energy\n0,512,0\n0.02,512,0\n0.05,512,0\n");
  const auto manifest = json::parse(io::read_file(dir / "out" / "manifest.json"));
  CHECK(manifest["files"].size() == 2 + 2 * 3);
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest["versions"].contains("fftw"));
  for (const auto& f : manifest["files"]) {
    const std::string content = io::read_file(dir / "out" / f["path"].get<std::string>());
    CHECK(f["fnv1a"] == io::hex64(io::fnv1a(content)));
  }
  const auto snap = io::read_snapshot(dir / "out" / "snapshots" / "snap_0002.bin");
  CHECK(snap.t == 0.05);
  CHECK(snap.field.max_abs() == 1.0);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  CHECK(run("gp-evolve", dir / "a", write_config(dir, {{"gp_evolve", {{"dtt", 1}}}})) == cli::kConfigError);
  CHECK_FALSE(fs::exists(dir / "a"));
  CHECK(run("gp-evolve", dir / "b", dir / "no-such-config.json") == cli::kIoError);
  CHECK(run("no-such-command", dir / "c") == cli::kConfigError);
  // t_end not on the dt grid is a config problem found by the solver
  CHECK(run("gp-evolve", dir / "d", write_config(dir, {{"gp_evolve", {{"dt", 0.3}, {"t_end", 1.0}, {"points", 16}}}})) ==
        cli::kConfigError);

  // output directory below a regular file
  io::write_file(dir / "plain", "x");
  CHECK(run("torus-embed", dir / "plain" / "sub") == cli::kIoError);

  // a source inside the domain is not a local solution there
  const auto bad = write_config(dir, {{"helmholtz_runge",
                                       {{"taus", {1.0}}, {"source_point", {0.01, 0.02, 0.03}}, {"domain_nodes", 8},
                                        {"source_nodes", 4}, {"degree", 0}}}});
  CHECK(run("helmholtz-runge", dir / "e", bad) == cli::kNumericalFailure);
  const auto diag = json::parse(io::read_file(dir / "e" / "diagnostic.json"));
  CHECK(diag["subcommand"] == "helmholtz-runge");
  CHECK(diag.contains("achieved"));
  CHECK(fs::exists(dir / "e" / "manifest.json"));
}

TEST_CASE("selftest passes") {
  const fs::path dir = scratch("self");
  REQUIRE(run("selftest", dir) == cli::kSuccess);
  const auto j = json::parse(io::read_file(dir / "selftest.json"));
  CHECK(j["failed"] == 0);
  CHECK(j["passed"].get<int>() == static_cast<int>(j["checks"].size()));
}

TEST_CASE("scenario-run is deterministic and analysable from snapshots") {
  const fs::path dir = scratch("scenario");
  const auto cfg = write_config(dir, {{"scenario_run", {{"preset", "moving-ring"}, {"points", 32}, {"dt", 0.025},
                                                        {"write_snapshots", true}}}});
  REQUIRE(run("scenario-run", dir / "one", cfg) == cli::kSuccess);
  REQUIRE(run("scenario-run", dir / "two", cfg) == cli::kSuccess);
  const auto m1 = json::parse(io::read_file(dir / "one" / "manifest.json"));
  const auto m2 = json::parse(io::read_file(dir / "two" / "manifest.json"));
  CHECK(m1["files"] == m2["files"]);
  CHECK(m1["config_hash"] == m2["config_hash"]);
  for (const char* f : {"curves.csv", "timeline.csv", "separation.csv", "events.json", "scenario.json"})
    CHECK(io::read_file(dir / "one" / f) == io::read_file(dir / "two" / f));

  const std::string timeline = io::read_file(dir / "one" / "timeline.csv");
  CHECK(timeline.rfind("t,count,parity\n", 0) == 0);
  CHECK(timeline.find(",0,0\n") == std::string::npos);  // the ring is always there
  CHECK(json::parse(io::read_file(dir / "one" / "events.json")).empty());
  CHECK(io::read_file(dir / "one" / "separation.csv") == "t,d\n");

  json snaps = json::array();
  for (int i = 0; i <= 8; ++i) snaps.push_back("one/snapshots/snap_000" + std::to_string(i) + ".bin");
  const auto va = dir / "va.json";
  io::write_file(va, json{{"vortex_analyze", {{"snapshots", snaps}}}}.dump());
  REQUIRE(run("vortex-analyze", dir / "three", va) == cli::kSuccess);
  const auto analysis = json::parse(io::read_file(dir / "three" / "analysis.json"));
  CHECK(analysis["snapshots"].size() == 9);
  for (const auto& s : analysis["snapshots"]) CHECK(s["count"] == 1);
}
