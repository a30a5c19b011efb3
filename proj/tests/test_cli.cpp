#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "cli.hpp"
#include "ringtrap/error.hpp"

using namespace ringtrap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run_tool(std::initializer_list<std::string> args) {
  std::vector<std::string> storage{"ringtrap"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  std::ostringstream out, err;
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ringtrap_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("negative values after flags") {
  RunConfig cfg;
  std::ostringstream out;
  const char* argv[] = {"ringtrap", "spectrum", "--m", "-1,0,1", "--nu", "-pi/12", "--xi0=-2", "--b", "1"};
  REQUIRE(cli::parse_arguments(9, argv, cfg, out));
  CHECK(cfg.command == "spectrum");
  CHECK(cfg.m == std::vector<int>{-1, 0, 1});
  CHECK(cfg.nu == -M_PI / 12);
  CHECK(cfg.xi0 == -2.0);
  CHECK(cfg.b == 1.0);
}

TEST_CASE("flags override the config file") {
  TempDir dir;
  {
    std::ofstream f(dir / "run.cfg");
    f << "command = potential\nnu = 0.25\nb = 3\nm = 0,2\n";
  }
  RunConfig cfg;
  std::ostringstream out;
  const std::string path = dir / "run.cfg";
  const char* argv[] = {"ringtrap", "--config", path.c_str(), "--b", "0.1"};
  REQUIRE(cli::parse_arguments(5, argv, cfg, out));
  CHECK(cfg.command == "potential");
  CHECK(cfg.nu == 0.25);
  CHECK(cfg.b == 0.1);
  CHECK(cfg.m == std::vector<int>{0, 2});

  const char* argv2[] = {"ringtrap", "crossings", "--config", path.c_str()};
  REQUIRE(cli::parse_arguments(4, argv2, cfg, out));
  CHECK(cfg.command == "crossings");
}

TEST_CASE("spectral outputs are byte-identical and echo their config") {
  TempDir dir;
  const auto a = run_tool({"spectrum", "--b", "1", "--nu-grid", "0:2:0.25", "--m", "-1,0,1,2", "--out", dir / "a.csv"});
  const auto b = run_tool({"spectrum", "--b", "1", "--nu-grid", "0:2:0.25", "--m", "-1,0,1,2", "--out", dir / "a2.csv"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const std::string ta = slurp(dir / "a.csv"), tb = slurp(dir / "a2.csv");
  CHECK(ta.substr(ta.find("# config: format")) == tb.substr(tb.find("# config: format")));
  CHECK(ta.substr(0, ta.find("# config: out")) == tb.substr(0, tb.find("# config: out")));

  RunConfig expected;
  expected.command = "spectrum";
  expected.b = 1.0;
  expected.nu_grid = {0.0, 2.0, 0.25};
  expected.m = {-1, 0, 1, 2};
  expected.out = dir / "a.csv";
  CHECK(config_from_header(ta) == expected);
  CHECK(ta.find("nu,E_m-1_n0,E_m0_n0,E_m1_n0,E_m2_n0\n") != std::string::npos);

  // Rerunning from the echoed header reproduces the file exactly.
  const RunConfig again = config_from_header(ta);
  fs::remove(dir / "a.csv");
  std::ostringstream log;
  cli::run(again, log);
  CHECK(slurp(dir / "a.csv") == ta);
}

TEST_CASE("every command echoes a parseable config") {
  TempDir dir;
  const std::pair<std::vector<std::string>, std::string> runs[] = {
      {{"potential", "--nu", "0.5", "--b", "0.1", "--m", "0,1", "--points", "20"}, "potential.csv"},
      {{"crossings", "--b", "1", "--nu-grid", "0:2:0.1", "--format", "json"}, "crossings.json"},
      {{"groundstate", "--b", "5", "--nu", "1", "--format", "json"}, "groundstate.json"},
      {{"current", "--b", "5", "--nu", "1", "--m", "1", "--points", "30"}, "current.csv"},
      {{"velocity-sweep", "--b", "1", "--nu-grid", "0:1.5:0.5", "--m", "0,1"}, "velocity-sweep.csv"},
      {{"evolve", "--N", "32", "--L", "6", "--xi0", "1", "--dtau", "0.01", "--tau-end", "0.1", "--snapshots", "0.05"},
       "evolve.csv"},
      {{"imag-time", "--N", "32", "--L", "6", "--b", "0", "--nu", "0"}, "imag-time.csv"},
      {{"ramp-compare", "--N", "32", "--L", "6", "--xi0", "1", "--dtau", "0.01", "--tau-end", "0.2", "--tau-ramp",
        "0.1"},
       "ramp-compare.csv"},
  };
  ::setenv(kOutDirEnv, dir.path.c_str(), 1);
  for (const auto& [args, file] : runs) {
    CAPTURE(file);
    std::vector<const char*> argv{"ringtrap"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    CHECK(err.str().empty());
    REQUIRE(code == 0);
    RunConfig flags;
    std::ostringstream ignored;
    cli::parse_arguments(static_cast<int>(argv.size()), argv.data(), flags, ignored);
    CHECK(config_from_header(slurp(dir / file)) == flags);
  }
  ::unsetenv(kOutDirEnv);

  CHECK(fs::exists(dir / "current_field.csv"));
  CHECK(fs::exists(dir / "evolve_snapshots.csv"));
  std::ifstream snap(dir / "evolve_snap002.txt");
  const GridState s = read_grid_dump(snap);
  CHECK(s.tau == doctest::Approx(0.1));
  CHECK(std::abs(grid_norm(s.spec, s.amplitudes) - 1.0) < 1e-10);
}

TEST_CASE("exit codes and error json") {
  TempDir dir;
  const auto bad_value = run_tool({"spectrum", "--N", "100"});
  CHECK(bad_value.code == kExitConfig);
  CHECK(bad_value.err.find("\"error\":\"config\"") != std::string::npos);
  CHECK(run_tool({"nonsense"}).code == kExitConfig);
  CHECK(run_tool({"spectrum", "--unknown-flag", "1"}).code == kExitConfig);
  CHECK(run_tool({"spectrum", "--config", dir / "missing.cfg"}).code == kExitIo);
  CHECK(run_tool({"spectrum", "--format", "grid-dump", "--out", dir / "x.txt"}).code == kExitConfig);

  const auto io = run_tool({"potential", "--out", dir / "no/such/dir/p.csv"});
  CHECK(io.code == kExitIo);
  CHECK(io.err.find("\"exit_code\":4") != std::string::npos);

  // A squeezed packet on a small box reaches the edge: numerical failure.
  const auto num = run_tool({"evolve", "--N", "32", "--L", "2.5", "--xi0", "0", "--packet-width", "4", "--b", "0",
                             "--dtau", "0.01", "--tau-end", "1", "--out", dir / "e.csv"});
  CHECK(num.code == kExitNumerical);
  CHECK(num.err.find("\"error\":\"numerical\"") != std::string::npos);

  const auto help = run_tool({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("ramp-compare") != std::string::npos);
}
