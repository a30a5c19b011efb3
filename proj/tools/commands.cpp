#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cli.hpp"
#include "ringtrap/error.hpp"
#include "ringtrap/observables.hpp"
#include "ringtrap/propagator.hpp"
#include "ringtrap/radial.hpp"

namespace ringtrap::cli {

namespace fs = std::filesystem;

namespace {

// Evaluates fn(0 .. n-1) on a small pool; results keep index order.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F fn) {
  std::vector<T> out(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

const char* extension(OutputFormat f) {
  switch (f) {
    case OutputFormat::Csv: return ".csv";
    case OutputFormat::Json: return ".json";
    case OutputFormat::GridDump: return ".txt";
  }
  return "";
}

class Outputs {
 public:
  explicit Outputs(const RunConfig& cfg) : cfg_(cfg) {
    if (!cfg.out.empty()) {
      primary_ = cfg.out;
    } else {
      const char* env = std::getenv(kOutDirEnv);
      const fs::path dir = env && *env ? fs::path(env) : fs::path(".");
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
      primary_ = dir / (cfg.command + extension(cfg.format));
    }
  }

  /// Sibling file <stem>_<suffix><ext> of the primary artifact.
  fs::path sibling(const std::string& suffix, const std::string& ext) const {
    return primary_.parent_path() / (primary_.stem().string() + "_" + suffix + ext);
  }

  const fs::path& primary() const { return primary_; }

  void table(const fs::path& path, const Table& t, OutputFormat format) {
    std::ofstream os = open(path);
    if (format == OutputFormat::Json) write_table_json(os, cfg_, t);
    else write_csv(os, cfg_, t);
    finish(os, path);
  }

  void table(const Table& t) {
    if (cfg_.format == OutputFormat::GridDump) {
      throw ConfigError("format grid-dump only applies to evolve; use csv or json for " + cfg_.command);
    }
    table(primary_, t, cfg_.format);
  }

  void grid(const fs::path& path, const GridState& s, const GridDumpMeta& meta) {
    std::ofstream os = open(path);
    write_grid_dump(os, cfg_, s, meta);
    finish(os, path);
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  static std::ofstream open(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    return os;
  }
  void finish(std::ofstream& os, const fs::path& path) {
    os.flush();
    if (!os) throw IoError("write to '" + path.string() + "' failed");
    written_.push_back(path.string());
  }

  const RunConfig& cfg_;
  fs::path primary_;
  std::vector<std::string> written_;
};

std::vector<double> radial_grid(const RunConfig& cfg) {
  std::vector<double> rho(cfg.points);
  for (int i = 0; i < cfg.points; ++i) rho[i] = cfg.rho_max * (i + 1) / cfg.points;
  return rho;
}

std::string m_label(const std::string& prefix, int m) { return prefix + "_m" + std::to_string(m); }

std::string join_notes(const std::string& key, double v) { return key + " = " + format_double(v); }

void cmd_potential(const RunConfig& cfg, Outputs& out) {
  const TrapParams tp = TrapParams::make(cfg.nu, cfg.b);
  Table t;
  t.notes.push_back("V(rho) = -m nu + (1 + nu^2/4) rho^2 + (m^2 - 1/4)/rho^2 + 2 b/rho, energies in hbar w_t");
  t.columns.push_back("rho");
  for (int m : cfg.m) t.columns.push_back(m_label("V", m));
  for (double r : radial_grid(cfg)) {
    std::vector<Cell> row{r};
    for (int m : cfg.m) row.emplace_back(effective_potential(tp, tp.canonical_m(m), r));
    t.rows.push_back(std::move(row));
  }
  for (int m : cfg.m) {
    try {
      t.notes.push_back(join_notes("minimum rho" + std::string(m_label("", m)),
                                   effective_potential_minimum(tp, tp.canonical_m(m))));
    } catch (const NumericalError&) {
      t.notes.push_back("minimum rho" + m_label("", m) + " = none");
    }
  }
  out.table(t);
}

void cmd_spectrum(const RunConfig& cfg, Outputs& out) {
  const std::vector<double> nus = cfg.nu_grid.values();
  const auto per_nu = parallel_map<std::vector<std::vector<double>>>(nus.size(), [&](std::size_t i) {
    const TrapParams tp = TrapParams::make(nus[i], cfg.b);
    std::vector<std::vector<double>> levels;
    for (int m : cfg.m) {
      const auto sol = solve_sector(tp, tp.canonical_m(m), cfg.K);
      levels.emplace_back(sol.energies.begin(), sol.energies.begin() + cfg.levels);
    }
    return levels;
  });
  Table t;
  t.notes.push_back("energies E / (hbar w_t) of level n in sector m");
  t.columns.push_back("nu");
  for (int m : cfg.m) {
    for (int n = 0; n < cfg.levels; ++n) t.columns.push_back("E_m" + std::to_string(m) + "_n" + std::to_string(n));
  }
  for (std::size_t i = 0; i < nus.size(); ++i) {
    std::vector<Cell> row{nus[i]};
    for (const auto& sector : per_nu[i]) {
      for (double e : sector) row.emplace_back(e);
    }
    t.rows.push_back(std::move(row));
  }
  out.table(t);
}

void cmd_crossings(const RunConfig& cfg, Outputs& out) {
  const auto crossings =
      find_ground_crossings(cfg.b, cfg.nu_grid.lo, cfg.nu_grid.hi, cfg.nu_grid.step, cfg.m_range, cfg.K);
  Table t;
  t.notes.push_back("ground-state crossings; m1 is the ground state below nu_star, m2 above");
  t.columns = {"b", "m1", "m2", "nu_star", "energy"};
  for (const auto& c : crossings) {
    t.rows.push_back({c.b, static_cast<long long>(c.m1), static_cast<long long>(c.m2), c.nu_star, c.energy});
  }
  out.table(t);
}

void cmd_groundstate(const RunConfig& cfg, Outputs& out) {
  const TrapParams tp = TrapParams::make(cfg.nu, cfg.b);
  const auto rec = ground_state_scan(tp, cfg.m_range, cfg.K);
  Table t;
  t.notes.push_back("m_star = " + std::to_string(rec.m_star));
  t.notes.push_back(join_notes("ground energy", rec.energy));
  t.columns = {"m", "energy", "mean_rho", "velocity", "ground"};
  for (const auto& [m, e] : rec.sector_energies) {
    const auto wf = RadialWavefunction::from_solution(solve_sector(tp, m, cfg.K));
    t.rows.push_back({static_cast<long long>(m), e, radial_moment(wf, 1.0), velocity_expectation(wf, tp),
                      static_cast<long long>(m == rec.m_star)});
  }
  out.table(t);
}

void cmd_current(const RunConfig& cfg, Outputs& out) {
  const TrapParams tp = TrapParams::make(cfg.nu, cfg.b);
  const auto rho = radial_grid(cfg);
  Table t;
  t.notes.push_back("J(rho) = (m/rho - nu rho/2) chi^2 / rho of the lowest state in each sector");
  t.columns.push_back("rho");
  std::vector<CurrentField> fields;
  std::vector<DensityProfile> profiles;
  std::vector<RadialWavefunction> wfs;
  for (int m : cfg.m) {
    wfs.push_back(RadialWavefunction::from_solution(solve_sector(tp, tp.canonical_m(m), cfg.K)));
    fields.push_back(current_density(wfs.back(), tp, rho));
    profiles.push_back(density_profile(wfs.back(), rho));
    t.columns.push_back(m_label("J", m));
    t.columns.push_back(m_label("density", m));
    t.notes.push_back(join_notes("velocity" + m_label("", m), velocity_expectation(wfs.back(), tp)));
    t.notes.push_back(join_notes("peak rho" + m_label("", m), profiles.back().peak_rho));
  }
  for (std::size_t i = 0; i < rho.size(); ++i) {
    std::vector<Cell> row{rho[i]};
    for (std::size_t k = 0; k < fields.size(); ++k) {
      row.emplace_back(fields[k].j_phi[i]);
      row.emplace_back(profiles[k].density[i]);
    }
    t.rows.push_back(std::move(row));
  }
  out.table(t);

  // Cartesian arrows for the first sector on a 41 x 41 grid.
  constexpr int kArrows = 41;
  Table v;
  v.notes.push_back("current vector field of sector m = " + std::to_string(cfg.m.front()) + ", " +
                    std::to_string(kArrows) + " x " + std::to_string(kArrows) + " samples");
  v.columns = {"x", "y", "jx", "jy"};
  for (const auto& s : current_vector_field(wfs.front(), tp, cfg.rho_max, kArrows)) {
    v.rows.push_back({s.x, s.y, s.jx, s.jy});
  }
  out.table(out.sibling("field", extension(cfg.format)), v, cfg.format);
}

void cmd_velocity_sweep(const RunConfig& cfg, Outputs& out) {
  const std::vector<double> nus = cfg.nu_grid.values();
  const auto rows = ground_velocity_sweep(cfg.b, nus, cfg.K, cfg.m_range);
  const auto sectors = parallel_map<std::vector<double>>(nus.size(), [&](std::size_t i) {
    const TrapParams tp = TrapParams::make(nus[i], cfg.b);
    std::vector<double> v;
    for (int m : cfg.m) v.push_back(sector_velocity(tp, tp.canonical_m(m), cfg.K));
    return v;
  });
  Table t;
  t.notes.push_back("ground-state velocity <v_phi> in sqrt(hbar w_t / mu); v_m<m> is the lowest state of sector m");
  for (const auto& j : velocity_jumps(rows)) {
    t.notes.push_back("jump m " + std::to_string(j.m_before) + " -> " + std::to_string(j.m_after) + " between nu = " +
                      format_double(rows[j.index].nu) + " and " + format_double(rows[j.index + 1].nu) +
                      ", dv = " + format_double(j.jump));
  }
  t.columns = {"nu", "m_star", "energy", "velocity"};
  for (int m : cfg.m) t.columns.push_back(m_label("v", m));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<Cell> row{rows[i].nu, static_cast<long long>(rows[i].m_star), rows[i].energy, rows[i].velocity};
    for (double v : sectors[i]) row.emplace_back(v);
    t.rows.push_back(std::move(row));
  }
  out.table(t);
}

const std::vector<std::string> kRecordColumns{"tau", "nu", "norm", "energy", "lz", "vx", "vy", "autocorr", "cx", "cy"};

std::vector<Cell> record_cells(const ObservableRecord& r) {
  return {r.tau, r.nu, r.norm, r.energy, r.lz, r.vx, r.vy, r.autocorr, r.cx, r.cy};
}

void cmd_evolve(const RunConfig& cfg, Outputs& out) {
  const TrapParams tp = TrapParams::make(cfg.nu, cfg.b);
  const GridSpec spec = GridSpec::make(cfg.N, cfg.L);
  EvolveOptions opts;
  opts.dtau = cfg.dtau;
  opts.tau_end = cfg.tau_end;
  opts.observe_every = cfg.observe_every;
  opts.snapshot_frame = cfg.frame;
  opts.coulomb = cfg.coulomb;
  if (cfg.snapshots > 0.0) {
    for (long j = 0; j * cfg.snapshots <= cfg.tau_end * (1 + 1e-12); ++j) opts.snapshot_times.push_back(j * cfg.snapshots);
  }
  const auto res = evolve(gaussian_packet(spec, cfg.xi0, cfg.packet_width), tp, opts);

  Table t;
  t.notes.push_back("packet exp(-a ((xi - xi0)^2 + eta^2)) at constant nu; moments in the lab frame");
  for (const auto& w : res.warnings) t.notes.push_back("warning: " + w);
  t.columns = kRecordColumns;
  for (const auto& r : res.records) t.rows.push_back(record_cells(r));

  const bool dump_primary = cfg.format == OutputFormat::GridDump;
  const GridDumpMeta meta{cfg.nu, cfg.b, cfg.coulomb};
  Table snaps;
  snaps.columns = {"index", "tau", "circular_variance", "angular_maxima", "file"};
  for (std::size_t j = 0; j < res.snapshots.size(); ++j) {
    const auto& s = res.snapshots[j];
    char idx[16];
    std::snprintf(idx, sizeof idx, "%03zu", j);
    const auto path = out.sibling(std::string("snap") + idx, ".txt");
    out.grid(path, s.state, GridDumpMeta{s.nu, cfg.b, cfg.coulomb});
    snaps.rows.push_back({static_cast<long long>(j), s.state.tau, circular_variance(spec, s.state.amplitudes),
                          static_cast<long long>(count_local_maxima(angular_histogram(spec, s.state.amplitudes))),
                          path.filename().string()});
  }
  if (dump_primary) {
    out.grid(out.primary(), to_lab(res.final_state), meta);
    out.table(out.sibling("observables", ".csv"), t, OutputFormat::Csv);
  } else {
    out.table(t);
  }
  if (!snaps.rows.empty()) {
    snaps.notes.push_back("angular marginal in 72 bins; maxima at >= 5% of the largest bin");
    out.table(out.sibling("snapshots", ".csv"), snaps, OutputFormat::Csv);
  }
}

void cmd_imag_time(const RunConfig& cfg, Outputs& out) {
  const TrapParams tp = TrapParams::make(cfg.nu, cfg.b);
  const GridSpec spec = GridSpec::make(cfg.N, cfg.L);
  ImagTimeOptions opts;
  opts.coulomb = cfg.coulomb;
  Table t;
  t.notes.push_back("imaginary-time ground state of each m sector against the radial eigensolver");
  t.columns = {"m", "energy", "reference", "difference", "lz", "steps", "rejected_blocks"};
  int best_m = cfg.m.front();
  double best_e = std::numeric_limits<double>::infinity();
  for (int m : cfg.m) {
    const auto r = imaginary_time_ground(spec, tp, m, opts);
    const double ref = solve_sector(tp, tp.canonical_m(m), cfg.K).ground_energy();
    t.rows.push_back({static_cast<long long>(m), r.energy, ref, r.energy - ref, r.lz,
                      static_cast<long long>(r.steps), static_cast<long long>(r.rejected_blocks)});
    if (r.energy < best_e) best_e = r.energy, best_m = m;
  }
  t.notes.push_back("lowest listed sector m = " + std::to_string(best_m));
  out.table(t);
}

void cmd_ramp_compare(const RunConfig& cfg, Outputs& out) {
  const TrapParams tp = TrapParams::make(cfg.nu, cfg.b);
  if (cfg.nu < 0.0) throw ConfigError("ramp-compare needs nu >= 0");
  const RampKind other = cfg.ramp == RampKind::Step ? RampKind::Smooth : cfg.ramp;
  const GridSpec spec = GridSpec::make(cfg.N, cfg.L);
  const GridState packet = gaussian_packet(spec, cfg.xi0, cfg.packet_width);
  const RampKind kinds[2] = {RampKind::Step, other};
  auto run_one = [&](RampKind k) {
    EvolveOptions opts;
    opts.dtau = cfg.dtau;
    opts.tau_end = cfg.tau_end;
    opts.observe_every = cfg.observe_every;
    opts.coulomb = cfg.coulomb;
    opts.ramp = RampProtocol::make(k, tp.nu, k == RampKind::Step ? 0.0 : cfg.tau_ramp);
    return evolve(packet, TrapParams::make(0.0, cfg.b), opts);
  };
  auto second = std::async(std::launch::async, run_one, kinds[1]);
  const EvolveResult results[2] = {run_one(kinds[0]), second.get()};

  Table t;
  t.notes.push_back(std::string("protocols: step and ") + to_string(other) + ", both ending at nu = " +
                    format_double(cfg.nu));
  const double ramp_end[2] = {0.0, cfg.tau_ramp};
  for (int p = 0; p < 2; ++p) {
    for (const auto& w : results[p].warnings) t.notes.push_back(std::string("warning ") + to_string(kinds[p]) + ": " + w);
    for (const auto& rep : post_ramp_jumps(results[p].records, ramp_end[p])) {
      t.notes.push_back(std::string("jumps ") + to_string(kinds[p]) + " " + rep.series + ": max " +
                        format_double(rep.max_jump) + ", std " + format_double(rep.std_dev) +
                        (rep.ok() ? ", ok" : ", FLAGGED"));
    }
  }
  t.columns = {"tau"};
  for (RampKind k : kinds) {
    for (std::size_t c = 1; c < kRecordColumns.size(); ++c) t.columns.push_back(kRecordColumns[c] + "_" + to_string(k));
  }
  for (std::size_t i = 0; i < results[0].records.size(); ++i) {
    std::vector<Cell> row{results[0].records[i].tau};
    for (const auto& res : results) {
      const auto cells = record_cells(res.records[i]);
      row.insert(row.end(), cells.begin() + 1, cells.end());
    }
    t.rows.push_back(std::move(row));
  }
  out.table(t);
}

}  // namespace

std::vector<std::string> run(const RunConfig& cfg, std::ostream& log) {
  validate(cfg);
  Outputs out(cfg);
  const std::string& c = cfg.command;
  if (c == "potential") cmd_potential(cfg, out);
  else if (c == "spectrum") cmd_spectrum(cfg, out);
  else if (c == "crossings") cmd_crossings(cfg, out);
  else if (c == "groundstate") cmd_groundstate(cfg, out);
  else if (c == "current") cmd_current(cfg, out);
  else if (c == "velocity-sweep") cmd_velocity_sweep(cfg, out);
  else if (c == "evolve") cmd_evolve(cfg, out);
  else if (c == "imag-time") cmd_imag_time(cfg, out);
  else if (c == "ramp-compare") cmd_ramp_compare(cfg, out);
  else throw ConfigError("unknown command '" + c + "'");
  for (const auto& p : out.written()) log << p << "\n";
  return out.written();
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    RunConfig cfg;
    if (!parse_arguments(argc, argv, cfg, out)) return kExitOk;
    run(cfg, out);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << error_json("config", e.what(), kExitConfig) << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << error_json("io", e.what(), kExitIo) << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    err << error_json("numerical", e.what(), kExitNumerical) << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << error_json("internal", e.what(), 1) << "\n";
    return 1;
  }
}

}  // namespace ringtrap::cli
