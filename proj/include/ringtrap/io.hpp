#pragma once

// Run configuration, its flat key = value serialization, and the artifact
// writers (CSV, JSON, text grid dumps).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ringtrap/grid.hpp"
#include "ringtrap/propagator.hpp"
#include "ringtrap/radial.hpp"

namespace ringtrap {

enum class OutputFormat { Csv, Json, GridDump };

const char* to_string(OutputFormat f);
OutputFormat format_from_string(const std::string& s);

struct NuGrid {
  double lo = 0.0;
  double hi = 5.0;
  double step = 0.05;

  std::vector<double> values() const;
  bool operator==(const NuGrid&) const = default;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"potential", "spectrum",       "crossings",
                                              "groundstate", "current",      "velocity-sweep",
                                              "evolve",    "imag-time",      "ramp-compare"};
  return names;
}

struct RunConfig {
  std::string command = "spectrum";
  double nu = 0.0;
  double b = 0.0;
  std::vector<int> m{0};
  MRange m_range{};
  int K = kDefaultBasisSize;
  int levels = 1;
  int N = 256;
  double L = 8.0;
  double dtau = 1e-3;
  double tau_end = 1.0;
  NuGrid nu_grid{};
  RampKind ramp = RampKind::Smooth;
  double tau_ramp = 2.0;
  double xi0 = 4.0;
  double packet_width = 0.5;
  double snapshots = 0.0;  // snapshot interval in tau, 0 for none
  int observe_every = 10;
  Frame frame = Frame::Lab;
  CoulombModel coulomb = CoulombModel::CellAverage;
  double rho_max = 6.0;
  int points = 600;
  std::uint64_t seed = 20260101;
  std::string out;  // empty: <command>.<ext> in the default output directory
  OutputFormat format = OutputFormat::Csv;

  bool operator==(const RunConfig& o) const;
};

/// Keys accepted in config files and headers, in echo order.
const std::vector<std::string>& config_keys();

/// Applies one setting; values may use the forms accepted on the command
/// line ("pi/12", "-1,0,2", "0:5:0.01"). Throws ConfigError.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Range checks across all knobs. Throws ConfigError.
void validate(const RunConfig& cfg);

/// Ordered (key, value) pairs that apply_setting parses back exactly.
std::vector<std::pair<std::string, std::string>> config_settings(const RunConfig& cfg);

/// Flat key = value text; '#' starts a comment.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig load_config_file(const std::string& path, RunConfig base = {});

/// Rebuilds the configuration from the "# key = value" header of an artifact.
RunConfig config_from_header(const std::string& artifact_text);

/// Numbers, "pi", and products / quotients of them, e.g. "pi/12", "2*pi".
double parse_expression(const std::string& text);

/// Shortest decimal string that reads back to the same double.
std::string format_double(double x);

/// Parses "lo:hi" for m ranges and "lo:hi:step" for nu grids.
MRange parse_m_range(const std::string& s);
NuGrid parse_nu_grid(const std::string& s);
std::vector<int> parse_int_list(const std::string& s);

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> notes;  // extra header lines
};

/// Header lines shared by all artifacts: version, notes, config echo.
std::string artifact_header(const RunConfig& cfg, const std::vector<std::string>& notes);

void write_csv(std::ostream& os, const RunConfig& cfg, const Table& t);
void write_table_json(std::ostream& os, const RunConfig& cfg, const Table& t);

struct GridDumpMeta {
  double nu = 0.0;
  double b = 0.0;
  CoulombModel coulomb = CoulombModel::CellAverage;
};

void write_grid_dump(std::ostream& os, const RunConfig& cfg, const GridState& s, const GridDumpMeta& meta);
GridState read_grid_dump(std::istream& is);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

/// Machine-readable error line for stderr.
std::string error_json(const std::string& kind, const std::string& message, int exit_code);

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "RINGTRAP_OUT_DIR";

}  // namespace ringtrap
