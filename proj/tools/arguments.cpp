#include <CLI11.hpp>
#include <algorithm>
#include <map>
#include <ostream>

#include "cli.hpp"
#include "ringtrap/error.hpp"

namespace ringtrap::cli {

namespace {

struct FlagHelp {
  const char* key;
  const char* text;
};

// One flag per config key; the flag name is the key.
const FlagHelp kFlags[] = {
    {"nu", "cyclotron to trap frequency ratio; accepts expressions such as pi/12"},
    {"b", "Coulomb strength, >= 0"},
    {"m", "comma-separated angular momenta, e.g. -1,0,1"},
    {"m-range", "sector range lo:hi scanned for ground states"},
    {"K", "radial basis size"},
    {"levels", "levels per sector in spectrum output"},
    {"N", "grid points per axis (power of two)"},
    {"L", "grid half-width"},
    {"dtau", "time step"},
    {"tau-end", "propagation end time"},
    {"nu-grid", "field sweep lo:hi:step"},
    {"ramp", "field switch-on profile: step|linear|smooth"},
    {"tau-ramp", "ramp duration"},
    {"xi0", "initial packet displacement along xi"},
    {"packet-width", "packet parameter a in exp(-a r^2)"},
    {"snapshots", "snapshot interval in tau, 0 for none"},
    {"observe-every", "steps between observable records"},
    {"frame", "snapshot frame: lab|rotating"},
    {"coulomb", "grid Coulomb regularization: cell-average|soft-core"},
    {"rho-max", "outer radius of radial tables"},
    {"points", "samples in radial tables"},
    {"seed", "seed for randomized checks"},
    {"out", "output file (default: <command>.<ext> in $RINGTRAP_OUT_DIR or .)"},
    {"format", "csv|json|grid-dump"},
};

// Joins "--flag value" into "--flag=value" so values such as "-1,0" or
// "-0.5" are never mistaken for options.
std::vector<std::string> join_values(int argc, const char* const* argv) {
  std::vector<std::string> out;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    const bool takes_value = a.rfind("--", 0) == 0 && a.find('=') == std::string::npos && a != "--help";
    if (takes_value && i + 1 < argc) {
      out.push_back(a + "=" + argv[++i]);
    } else {
      out.push_back(std::move(a));
    }
  }
  return out;
}

}  // namespace

bool parse_arguments(int argc, const char* const* argv, RunConfig& cfg, std::ostream& out) {
  std::string commands;
  for (const auto& c : command_names()) commands += (commands.empty() ? "" : "|") + c;

  CLI::App app("Relative motion of two charges in a 2D trap with a magnetic field", "ringtrap");
  std::string command, config_path;
  std::map<std::string, std::string> values;
  app.add_option("command", command, commands);
  app.add_option("--config", config_path, "flat key = value file; flags override it");
  std::map<std::string, CLI::Option*> options;
  for (const auto& f : kFlags) options[f.key] = app.add_option("--" + std::string(f.key), values[f.key], f.text);

  auto args = join_values(argc, argv);
  std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return false;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  cfg = config_path.empty() ? RunConfig{} : load_config_file(config_path);
  if (!command.empty()) apply_setting(cfg, "command", command);
  for (const auto& f : kFlags) {
    if (options[f.key]->count() > 0) apply_setting(cfg, f.key, values[f.key]);
  }
  validate(cfg);
  return true;
}

}  // namespace ringtrap::cli
