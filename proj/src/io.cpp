#include "ringtrap/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "ringtrap/error.hpp"

namespace ringtrap {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("not a number: '" + raw + "'");
  }
  return v;
}

long long parse_integer(const std::string& raw) {
  const std::string s = trim(raw);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("not an integer: '" + raw + "'");
  }
  return v;
}

int parse_int(const std::string& s) {
  const long long v = parse_integer(s);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError("integer out of range: '" + s + "'");
  }
  return static_cast<int>(v);
}

std::string cell_text(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return format_double(*d);
  if (const long long* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

}  // namespace

const char* to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::Csv: return "csv";
    case OutputFormat::Json: return "json";
    case OutputFormat::GridDump: return "grid-dump";
  }
  return "?";
}

OutputFormat format_from_string(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  if (s == "grid-dump") return OutputFormat::GridDump;
  throw ConfigError("unknown format '" + s + "' (expected csv|json|grid-dump)");
}

std::vector<double> NuGrid::values() const {
  const long n = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> v;
  v.reserve(n);
  for (long i = 0; i < n; ++i) v.push_back(lo + i * step);
  return v;
}

bool RunConfig::operator==(const RunConfig& o) const {
  return config_settings(*this) == config_settings(o);
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw Error("double formatting failed");
  return std::string(buf, ptr);
}

double parse_expression(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) throw ConfigError("empty numeric expression");
  double value = 1.0;
  char op = '*';
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t next = s.find_first_of("*/", pos);
    // A leading sign or exponent sign is part of the factor; '*' and '/' never are.
    const std::string factor = trim(s.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (factor.empty()) throw ConfigError("malformed expression '" + text + "'");
    double f;
    if (factor == "pi") f = constants::pi;
    else if (factor == "-pi") f = -constants::pi;
    else f = parse_number(factor);
    value = op == '*' ? value * f : value / f;
    if (next == std::string::npos) break;
    op = s[next];
    pos = next + 1;
  }
  if (!std::isfinite(value)) throw ConfigError("expression '" + text + "' is not finite");
  return value;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& part : split(s, ',')) out.push_back(parse_int(part));
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

MRange parse_m_range(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() != 2) throw ConfigError("m range must be lo:hi, got '" + s + "'");
  MRange r{parse_int(parts[0]), parse_int(parts[1])};
  if (r.lo > r.hi) throw ConfigError("m range lo > hi");
  return r;
}

NuGrid parse_nu_grid(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() != 3) throw ConfigError("nu grid must be lo:hi:step, got '" + s + "'");
  NuGrid g{parse_expression(parts[0]), parse_expression(parts[1]), parse_expression(parts[2])};
  if (!(g.step > 0.0) || g.hi < g.lo) throw ConfigError("nu grid needs step > 0 and hi >= lo");
  if ((g.hi - g.lo) / g.step > 1e7) throw ConfigError("nu grid has too many points");
  return g;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "command", "nu",     "b",         "m",        "m-range",       "K",      "levels",
      "N",       "L",      "dtau",      "tau-end",  "nu-grid",       "ramp",   "tau-ramp",
      "xi0",     "packet-width", "snapshots", "observe-every", "frame", "coulomb", "rho-max",
      "points",  "seed",   "out",       "format"};
  return keys;
}

void apply_setting(RunConfig& c, const std::string& key_raw, const std::string& value_raw) {
  const std::string key = trim(key_raw);
  const std::string v = trim(value_raw);
  try {
    if (key == "command") {
      const auto& names = command_names();
      if (std::find(names.begin(), names.end(), v) == names.end()) throw ConfigError("unknown command '" + v + "'");
      c.command = v;
    } else if (key == "nu") c.nu = parse_expression(v);
    else if (key == "b") c.b = parse_expression(v);
    else if (key == "m") c.m = parse_int_list(v);
    else if (key == "m-range") c.m_range = parse_m_range(v);
    else if (key == "K") c.K = parse_int(v);
    else if (key == "levels") c.levels = parse_int(v);
    else if (key == "N") c.N = parse_int(v);
    else if (key == "L") c.L = parse_expression(v);
    else if (key == "dtau") c.dtau = parse_expression(v);
    else if (key == "tau-end") c.tau_end = parse_expression(v);
    else if (key == "nu-grid") c.nu_grid = parse_nu_grid(v);
    else if (key == "ramp") c.ramp = ramp_from_string(v);
    else if (key == "tau-ramp") c.tau_ramp = parse_expression(v);
    else if (key == "xi0") c.xi0 = parse_expression(v);
    else if (key == "packet-width") c.packet_width = parse_expression(v);
    else if (key == "snapshots") c.snapshots = parse_expression(v);
    else if (key == "observe-every") c.observe_every = parse_int(v);
    else if (key == "frame") c.frame = frame_from_string(v);
    else if (key == "coulomb") c.coulomb = coulomb_from_string(v);
    else if (key == "rho-max") c.rho_max = parse_expression(v);
    else if (key == "points") c.points = parse_int(v);
    else if (key == "seed") {
      const long long s = parse_integer(v);
      if (s < 0) throw ConfigError("seed must be >= 0");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "out") c.out = v;
    else if (key == "format") c.format = format_from_string(v);
    else throw ConfigError("unknown configuration key '" + key + "'");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind("unknown configuration key", 0) == 0) throw;
    throw ConfigError(key + ": " + msg);
  }
}

void validate(const RunConfig& c) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  need(std::isfinite(c.nu), "nu must be finite");
  need(std::isfinite(c.b) && c.b >= 0.0, "b must be >= 0");
  need(!c.m.empty(), "m list must not be empty");
  for (int m : c.m) need(std::abs(m) <= 50, "|m| must be <= 50");
  need(c.K >= 1 && c.K <= 100, "K must be in [1, 100]");
  need(c.levels >= 1 && c.levels <= c.K, "levels must be in [1, K]");
  need(c.N >= 8 && c.N <= 4096 && (c.N & (c.N - 1)) == 0, "N must be a power of two in [8, 4096]");
  need(c.L > 0.0 && std::isfinite(c.L), "L must be > 0");
  need(c.dtau > 0.0 && std::isfinite(c.dtau), "dtau must be > 0");
  need(c.tau_end >= 0.0 && std::isfinite(c.tau_end), "tau-end must be >= 0");
  need(c.tau_ramp >= 0.0, "tau-ramp must be >= 0");
  need(c.packet_width > 0.0, "packet-width must be > 0");
  need(c.snapshots >= 0.0, "snapshots interval must be >= 0");
  need(c.observe_every >= 1, "observe-every must be >= 1");
  need(c.rho_max > 0.0, "rho-max must be > 0");
  need(c.points >= 2 && c.points <= 1000000, "points must be in [2, 1e6]");
}

std::vector<std::pair<std::string, std::string>> config_settings(const RunConfig& c) {
  std::string ms;
  for (std::size_t i = 0; i < c.m.size(); ++i) ms += (i ? "," : "") + std::to_string(c.m[i]);
  const auto g = [](double x) { return format_double(x); };
  return {
      {"command", c.command},
      {"nu", g(c.nu)},
      {"b", g(c.b)},
      {"m", ms},
      {"m-range", std::to_string(c.m_range.lo) + ":" + std::to_string(c.m_range.hi)},
      {"K", std::to_string(c.K)},
      {"levels", std::to_string(c.levels)},
      {"N", std::to_string(c.N)},
      {"L", g(c.L)},
      {"dtau", g(c.dtau)},
      {"tau-end", g(c.tau_end)},
      {"nu-grid", g(c.nu_grid.lo) + ":" + g(c.nu_grid.hi) + ":" + g(c.nu_grid.step)},
      {"ramp", to_string(c.ramp)},
      {"tau-ramp", g(c.tau_ramp)},
      {"xi0", g(c.xi0)},
      {"packet-width", g(c.packet_width)},
      {"snapshots", g(c.snapshots)},
      {"observe-every", std::to_string(c.observe_every)},
      {"frame", to_string(c.frame)},
      {"coulomb", to_string(c.coulomb)},
      {"rho-max", g(c.rho_max)},
      {"points", std::to_string(c.points)},
      {"seed", std::to_string(c.seed)},
      {"out", c.out},
      {"format", to_string(c.format)},
  };
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

RunConfig config_from_header(const std::string& artifact_text) {
  // CSV and grid dumps carry "# config: key = value"; JSON carries a "config" object.
  RunConfig cfg;
  const std::string t = trim(artifact_text);
  if (!t.empty() && t.front() == '{') {
    const auto j = nlohmann::json::parse(t);
    for (const auto& [k, v] : j.at("config").items()) apply_setting(cfg, k, v.get<std::string>());
    return cfg;
  }
  std::istringstream is(artifact_text);
  std::string line;
  const std::string tag = "# config: ";
  while (std::getline(is, line)) {
    if (line.rfind(tag, 0) != 0) {
      if (!line.empty() && line[0] != '#') break;
      continue;
    }
    const std::string kv = line.substr(tag.size());
    const auto eq = kv.find(" = ");
    if (eq == std::string::npos) throw ConfigError("malformed config header line: " + line);
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 3));
  }
  return cfg;
}

std::string artifact_header(const RunConfig& cfg, const std::vector<std::string>& notes) {
  std::ostringstream os;
  os << "# ringtrap " << RINGTRAP_VERSION << "\n";
  for (const auto& n : notes) os << "# " << n << "\n";
  for (const auto& [k, v] : config_settings(cfg)) os << "# config: " << k << " = " << v << "\n";
  return os.str();
}

void write_csv(std::ostream& os, const RunConfig& cfg, const Table& t) {
  os << artifact_header(cfg, t.notes);
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
    os << "\n";
  }
}

namespace {

nlohmann::ordered_json config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : config_settings(cfg)) j[k] = v;
  return j;
}

}  // namespace

void write_table_json(std::ostream& os, const RunConfig& cfg, const Table& t) {
  nlohmann::ordered_json j;
  j["version"] = RINGTRAP_VERSION;
  j["notes"] = t.notes;
  j["config"] = config_json(cfg);
  j["columns"] = t.columns;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    auto r = nlohmann::ordered_json::array();
    for (const auto& c : row) {
      std::visit([&](const auto& v) { r.push_back(v); }, c);
    }
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  os << j.dump(2) << "\n";
}

void write_grid_dump(std::ostream& os, const RunConfig& cfg, const GridState& s, const GridDumpMeta& meta) {
  const std::vector<std::string> notes{
      "grid-dump: row-major complex amplitudes, one 're im' pair per line, index i*N + j (i along xi)",
      "N = " + std::to_string(s.spec.N),
      "L = " + format_double(s.spec.L),
      "offset = " + std::string(s.spec.offset ? "1" : "0"),
      "tau = " + format_double(s.tau),
      "frame = " + std::string(to_string(s.frame)),
      "theta = " + format_double(s.theta),
      "nu = " + format_double(meta.nu),
      "b = " + format_double(meta.b),
      "coulomb = " + std::string(to_string(meta.coulomb)),
      "epsilon = " + format_double(coulomb_epsilon(s.spec, meta.coulomb)),
  };
  os << artifact_header(cfg, notes);
  for (const Complex& c : s.amplitudes) os << format_double(c.real()) << ' ' << format_double(c.imag()) << '\n';
}

GridState read_grid_dump(std::istream& is) {
  GridState s;
  std::string line;
  int N = 0;
  double L = 0.0;
  bool offset = true;
  std::streampos data_start = is.tellg();
  while (std::getline(is, line)) {
    if (line.empty() || line[0] != '#') break;
    data_start = is.tellg();
    const std::string body = trim(line.substr(1));
    const auto eq = body.find(" = ");
    if (eq == std::string::npos || body.rfind("config:", 0) == 0) continue;
    const std::string k = body.substr(0, eq), v = body.substr(eq + 3);
    if (k == "N") N = parse_int(v);
    else if (k == "L") L = parse_number(v);
    else if (k == "offset") offset = v == "1";
    else if (k == "tau") s.tau = parse_number(v);
    else if (k == "theta") s.theta = parse_number(v);
    else if (k == "frame") s.frame = frame_from_string(v);
  }
  s.spec = GridSpec::make(N, L, offset);
  s.amplitudes.reserve(s.spec.size());
  is.clear();
  is.seekg(data_start);
  double re, im;
  while (is >> re >> im) s.amplitudes.emplace_back(re, im);
  if (s.amplitudes.size() != s.spec.size()) throw IoError("grid dump has the wrong number of samples");
  return s;
}

std::string error_json(const std::string& kind, const std::string& message, int exit_code) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  j["exit_code"] = exit_code;
  return j.dump();
}

}  // namespace ringtrap
