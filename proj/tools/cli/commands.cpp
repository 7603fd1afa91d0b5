#include "commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "config.hpp"
#include "dfsmem/detection.hpp"
#include "dfsmem/dfs_protocol.hpp"
#include "dfsmem/error.hpp"
#include "dfsmem/fitting.hpp"
#include "dfsmem/gate_opt.hpp"
#include "dfsmem/master_eq.hpp"
#include "dfsmem/storage.hpp"
#include "manifest.hpp"
#include "plot.hpp"

namespace dfsmem::cli {

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write output file '{}'", path));
  return out;
}

std::string digest_of(const std::string& canonical) { return fmt::format("{:016x}", fnv1a(canonical)); }

void finish(Manifest& m, const std::string& primary) {
  m.finished = utc_timestamp();
  m.write(manifest_path(primary));
}

const Schema& storage_schema() {
  static const Schema schema{
      {"storage", {"state", "times_s", "echo_fractions", "repetitions", "seed", "encoding"}},
      {"noise",
       {"gamma_leak_per_s", "gamma_dephase_per_s", "dephasing_mode", "cross_manifold_leak", "calibrate_leak_fraction",
        "calibrate_leak_time_s"}},
      {"gradient", {"B_gauss", "deltaB_gauss", "clock_coeff_hz_per_gauss2", "zeeman_coeff_hz_per_gauss"}},
      {"detection", {"confusion"}},
  };
  return schema;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(fmt::format("field {}: '{}' is not a boolean", key, text));
}

DephasingMode parse_dephasing(const std::string& text) {
  if (text == "independent") return DephasingMode::Independent;
  if (text == "collective") return DephasingMode::Collective;
  throw ConfigError(fmt::format("field noise.dephasing_mode: '{}' is not independent or collective", text));
}

ConfusionMatrix load_confusion(const std::string& source) {
  if (source == "default") return default_confusion();
  if (source == "perfect") return perfect_confusion();
  std::ifstream in(source);
  if (!in) throw ConfigError(fmt::format("field detection.confusion: cannot open '{}'", source));
  return ConfusionMatrix::parse(in);
}

StorageScenario storage_from_config(const Config& c) {
  StorageScenario s;
  try {
    s.state = parse_logical(c.get_string("storage.state"));
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("field storage.state: {}", e.what()));
  }
  s.times = c.get_list("storage.times_s");
  s.echo_fractions = c.get_list("storage.echo_fractions", std::vector<double>{0.25, 0.75});
  s.repetitions = c.get_int("storage.repetitions", 1000);
  if (s.repetitions < 1) throw ConfigError("field storage.repetitions: must be >= 1");
  s.seed = c.get_seed("storage.seed", 0);
  s.encoding = parse_encoding(c.get_string("storage.encoding", std::string("clock")));

  const bool calibrate = c.has("noise.calibrate_leak_fraction") || c.has("noise.calibrate_leak_time_s");
  if (calibrate) {
    if (c.has("noise.gamma_leak_per_s")) {
      throw ConfigError("fields noise.gamma_leak_per_s and noise.calibrate_leak_* are mutually exclusive");
    }
    const double frac = c.get_double("noise.calibrate_leak_fraction");
    const double t = c.get_double("noise.calibrate_leak_time_s");
    if (!(frac > 0.0 && frac < 1.0)) throw ConfigError("field noise.calibrate_leak_fraction: must lie in (0, 1)");
    if (!(t > 0.0)) throw ConfigError("field noise.calibrate_leak_time_s: must be > 0");
    s.noise.gamma_leak = fit_gamma_to_leakage(frac, t);
  } else {
    s.noise.gamma_leak = c.get_nonnegative("noise.gamma_leak_per_s", 0.0);
  }
  s.noise.gamma_dephase = c.get_nonnegative("noise.gamma_dephase_per_s", 0.0);
  s.noise.dephasing_mode = parse_dephasing(c.get_string("noise.dephasing_mode", std::string("independent")));
  s.noise.cross_manifold_leak =
      parse_bool("noise.cross_manifold_leak", c.get_string("noise.cross_manifold_leak", std::string("false")));

  s.gradient.B = c.get_nonnegative("gradient.B_gauss", s.gradient.B);
  s.gradient.deltaB = c.get_double("gradient.deltaB_gauss", 0.0);
  s.gradient.clock_coeff = c.get_double("gradient.clock_coeff_hz_per_gauss2", s.gradient.clock_coeff);
  s.gradient.zeeman_coeff = c.get_double("gradient.zeeman_coeff_hz_per_gauss", s.gradient.zeeman_coeff);

  s.confusion = load_confusion(c.get_string("detection.confusion", std::string("default")));
  s.validate();
  return s;
}

int cmd_simulate_storage(const std::string& config_path, const std::vector<std::string>& overrides,
                         const std::string& out_path, const std::string& plot_path) {
  Manifest m;
  m.command = "simulate-storage";
  m.started = utc_timestamp();
  Config c = Config::load(config_path, storage_schema());
  for (const auto& o : overrides) c.apply_override(o);
  const auto scenario = storage_from_config(c);
  m.config_digest = digest_of(c.canonical());
  m.seed = scenario.seed;

  const auto points = simulate_storage(scenario);
  {
    auto out = open_output(out_path);
    write_storage_csv(out, points);
  }
  m.outputs.push_back(out_path);
  if (!plot_path.empty()) {
    Series raw{"raw", {}, {}}, kept{"leak discarded", {}, {}};
    for (const auto& p : points) {
      raw.x.push_back(p.T);
      raw.y.push_back(p.raw_fidelity());
      kept.x.push_back(p.T);
      kept.y.push_back(p.discarded_fidelity());
    }
    write_svg(plot_path, fmt::format("storage of {}", logical_name(scenario.state)), "T (s)", "fidelity",
              {raw, kept});
    m.outputs.push_back(plot_path);
  }
  finish(m, out_path);
  return kExitOk;
}

struct FitArgs {
  std::string data;
  std::string model = "exponential";
  int n_bootstrap = 1000;
  std::uint64_t seed = 0;
  double level = 0.68;
  int threads = 0;
  double tau_min = 0.0;
  double tau_max = 0.0;
  std::string report;
  std::string band;
  int band_points = 101;
  std::string plot;
  bool leak_discarded = false;
};

// Accepts the fitting schema or the storage schema (raw or leak-discarded counts).
DecayDataset load_decay_data(const std::string& path, bool leak_discarded) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open data file '{}'", path));
  std::string header;
  std::getline(in, header);
  while (!header.empty() && (header.back() == '\r' || header.back() == ' ')) header.pop_back();
  if (header != "T_seconds,repetitions,successes,leak_discarded_successes,leak_count") {
    if (leak_discarded) throw ConfigError("--leak-discarded needs a storage dataset CSV");
    in.clear();
    in.seekg(0);
    return DecayDataset::read_csv(in);
  }
  std::stringstream csv;
  csv << "T_seconds,repetitions,successes\n";
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::stringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    if (cells.size() != 5) throw ConfigError(fmt::format("CSV line {}: expected 5 fields, got {}", lineno, cells.size()));
    if (leak_discarded) {
      std::int64_t reps = 0, leaks = 0;
      try {
        reps = std::stoll(cells[1]);
        leaks = std::stoll(cells[4]);
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("CSV line {}: malformed counts", lineno));
      }
      if (reps - leaks < 1) continue;
      csv << fmt::format("{},{},{}\n", cells[0], reps - leaks, cells[3]);
    } else {
      csv << fmt::format("{},{},{}\n", cells[0], cells[1], cells[2]);
    }
  }
  return DecayDataset::read_csv(csv);
}

std::string fmt_real(double v) { return std::isfinite(v) ? fmt::format("{:.10g}", v) : std::string("nan"); }

int cmd_fit_lifetime(const FitArgs& a) {
  Manifest m;
  m.command = "fit-lifetime";
  m.started = utc_timestamp();
  m.seed = a.seed;
  if (a.n_bootstrap < 0) throw ConfigError("--bootstrap must be >= 0");
  if (!(a.level > 0.0 && a.level < 1.0)) throw ConfigError("--level must lie in (0, 1)");
  if (a.band_points < 2) throw ConfigError("--band-points must be >= 2");
  const auto family = parse_family(a.model);

  const auto data = load_decay_data(a.data, a.leak_discarded);
  std::ostringstream data_text;
  data.write_csv(data_text);
  m.config_digest = digest_of(fmt::format("model={}\ndiscarded={}\nbootstrap={}\nseed={}\nlevel={}\ntau_min={}\ntau_max={}\n{}",
                                          family_name(family), a.leak_discarded, a.n_bootstrap, a.seed, a.level, a.tau_min, a.tau_max,
                                          data_text.str()));

  SearchConfig search;
  search.tau_min = a.tau_min;
  search.tau_max = a.tau_max;
  auto fit = fit_mle(family, data, search);
  fit.seed = a.seed;
  double lo = std::nan(""), hi = std::nan("");
  std::size_t retained = 0;
  if (!fit.unidentifiable && a.n_bootstrap > 0) {
    fit.bootstrap = bootstrap(fit, data, a.n_bootstrap, a.seed, search, a.threads);
    for (const auto& s : fit.bootstrap) fit.n_excluded += s.excluded ? 1 : 0;
    retained = fit.bootstrap.size() - fit.n_excluded;
    if (retained >= 100) std::tie(lo, hi) = tau_interval(fit.bootstrap, a.level);
  }
  const bool flagged = fit.unidentifiable || (a.n_bootstrap > 0 && retained < 100);

  std::string report = fmt::format(
      "model = {}\nA_hat = {}\ntau_hat = {}\ntau_lo = {}\ntau_hi = {}\nlevel = {}\nn_bootstrap = {}\nn_excluded = {}\n"
      "seed = {}\nloglik = {}\nunidentifiable = {}\n",
      family_name(family), fmt_real(fit.A_hat), fmt_real(fit.tau_hat), fmt_real(lo), fmt_real(hi), a.level,
      a.n_bootstrap, fit.n_excluded, a.seed, fmt_real(fit.loglik), fit.unidentifiable ? "true" : "false");
  std::cout << report;
  const std::string primary = a.report.empty() ? a.data + ".fit" : a.report;
  {
    auto out = open_output(primary);
    out << report;
  }
  m.outputs.push_back(primary);

  if (!a.band.empty() || !a.plot.empty()) {
    if (retained < 100) throw NumericalError("a band needs at least 100 retained bootstrap samples");
    Series fitted{"fit", {}, {}, false}, lower{"band low", {}, {}, false}, upper{"band high", {}, {}, false};
    std::string csv = "T_seconds,F_lo,F_hi\n";
    const double t_max = data.max_time();
    for (int i = 0; i < a.band_points; ++i) {
      const double T = t_max * i / (a.band_points - 1);
      const auto [f_lo, f_hi] = curve_band(fit.bootstrap, family, T, a.level);
      csv += fmt::format("{},{},{}\n", T, f_lo, f_hi);
      fitted.x.push_back(T);
      fitted.y.push_back(decay_fidelity(family, fit.A_hat, fit.tau_hat, T));
      lower.x.push_back(T);
      lower.y.push_back(f_lo);
      upper.x.push_back(T);
      upper.y.push_back(f_hi);
    }
    if (!a.band.empty()) {
      auto out = open_output(a.band);
      out << csv;
      m.outputs.push_back(a.band);
    }
    if (!a.plot.empty()) {
      Series measured{"data", {}, {}};
      measured.markers = true;
      for (const auto& r : data.records()) {
        measured.x.push_back(r.T);
        measured.y.push_back(r.fidelity());
      }
      write_svg(a.plot, fmt::format("{} fit", family_name(family)), "T (s)", "fidelity",
                {measured, fitted, lower, upper});
      m.outputs.push_back(a.plot);
    }
  }
  finish(m, primary);
  if (flagged) {
    std::cerr << "fit-lifetime: tau is not identifiable from this dataset\n";
    return kExitNumerical;
  }
  return kExitOk;
}

struct CalibrateArgs {
  double period = 0.0;
  std::string encoding = "zeeman";
  double B = GradientModel{}.B;
  std::string out;
};

int cmd_calibrate_gradient(const CalibrateArgs& a) {
  Manifest m;
  m.command = "calibrate-gradient";
  m.started = utc_timestamp();
  if (!(a.period > 0.0) || !std::isfinite(a.period)) throw ConfigError("--period-s must be > 0");
  GradientModel model;
  model.B = a.B;
  model.validate();
  const auto encoding = parse_encoding(a.encoding);
  model.deltaB = calibrate_delta_b(a.period, model, encoding);
  const double df_clock = frequency_difference(model, Encoding::Clock);
  const double phase = 2 * std::numbers::pi * df_clock * 1000.0;
  const std::string report = fmt::format(
      "period_s = {}\nencoding = {}\nB_gauss = {}\ndeltaB_gauss = {:.6e}\nclock_delta_f_hz = {:.6e}\n"
      "dfs_phase_per_1000s_rad = {:.6f}\n",
      a.period, encoding_name(encoding), model.B, model.deltaB, df_clock, phase);
  std::cout << report;
  if (!a.out.empty()) {
    m.config_digest = digest_of(fmt::format("period={}\nencoding={}\nB={}\n", a.period, a.encoding, a.B));
    {
      auto out = open_output(a.out);
      out << report;
    }
    m.outputs.push_back(a.out);
    finish(m, a.out);
  }
  return kExitOk;
}

struct GateArgs {
  int segments = 12;
  double duration = 150e-6;
  double ramp = 2e-6;
  std::uint64_t seed = 0;
  int restarts = 8;
  double target = 1e-6;
  int threads = 0;
  std::vector<double> modes_mhz;
  double mu_mhz = 0.0;
  std::string evaluate;
  std::vector<double> phases_pi;
  bool half = false;
  bool flat_drive = false;
  std::string out;
};

ModeSet modes_from(const GateArgs& a) {
  ModeSet modes = ModeSet::three_ion_transverse();
  const double scale = 2 * std::numbers::pi * 1e6;
  if (!a.modes_mhz.empty()) {
    modes.mode_freqs.clear();
    for (double f : a.modes_mhz) modes.mode_freqs.push_back(scale * f);
  }
  if (a.mu_mhz > 0.0) modes.mu = scale * a.mu_mhz;
  modes.validate();
  return modes;
}

std::string residual_report(const PhaseSequence& seq, const DriveProfile& drive, const ModeSet& modes) {
  std::string text;
  const auto res = mode_residuals(seq, drive, modes);
  for (std::size_t j = 0; j < res.size(); ++j) {
    text += fmt::format("mode_{}_mhz = {:.6f}\nmode_{}_residual = {:.6e}\n", j, modes.mode_freqs[j] / (2e6 * std::numbers::pi),
                        j, res[j]);
  }
  PhaseSequence flat = seq;
  std::fill(flat.phases.begin(), flat.phases.end(), 0.0);
  flat.antisymmetric = false;
  text += fmt::format("total_residual = {:.6e}\nflat_baseline_residual = {:.6e}\n", closure_residual(seq, drive, modes),
                      closure_residual(flat, drive, modes));
  return text;
}

int cmd_optimize_gate(const GateArgs& a) {
  Manifest m;
  m.command = "optimize-gate";
  m.started = utc_timestamp();
  m.seed = a.seed;
  const auto modes = modes_from(a);
  DriveProfile drive;
  drive.ramped = !a.flat_drive;
  std::string canon;
  for (double w : modes.mode_freqs) canon += fmt::format("mode={:.17g}\n", w);
  canon += fmt::format("mu={:.17g}\nramped={}\n", modes.mu, drive.ramped);

  if (!a.evaluate.empty() || !a.phases_pi.empty()) {
    if (!a.evaluate.empty() && !a.phases_pi.empty()) throw ConfigError("--evaluate and --phases-pi are exclusive");
    PhaseSequence seq;
    if (!a.evaluate.empty()) {
      std::ifstream in(a.evaluate);
      if (!in) throw ConfigError(fmt::format("cannot open sequence file '{}'", a.evaluate));
      seq = PhaseSequence::read(in);
    } else {
      std::vector<double> rad;
      for (double p : a.phases_pi) rad.push_back(p * std::numbers::pi);
      if (a.half) {
        seq = PhaseSequence::from_half(rad, a.duration, a.ramp);
      } else {
        seq.phases = rad;
        seq.total_duration = a.duration;
        seq.ramp_time = a.ramp;
      }
      seq.validate();
    }
    std::ostringstream seq_text;
    seq.write(seq_text);
    const std::string report = "mode = evaluate\n" + residual_report(seq, drive, modes);
    std::cout << report;
    if (!a.out.empty()) {
      m.config_digest = digest_of(canon + seq_text.str());
      {
        auto out = open_output(a.out);
        out << report;
      }
      m.outputs.push_back(a.out);
      finish(m, a.out);
    }
    return kExitOk;
  }

  OptimizeOptions opt;
  opt.n_segments = a.segments;
  opt.duration = a.duration;
  opt.ramp = a.ramp;
  opt.seed = a.seed;
  opt.restarts = a.restarts;
  opt.target = a.target;
  opt.threads = a.threads;
  opt.drive = drive;
  if (!(a.target > 0.0)) throw ConfigError("--target must be > 0");
  const auto result = optimize_sequence(modes, opt);
  const std::string report =
      fmt::format("mode = optimize\nseed = {}\nrestarts = {}\nbest_restart = {}\ntarget = {:.3e}\nattained = {}\n", a.seed,
                  a.restarts, result.best_restart, a.target, result.attained ? "true" : "false") +
      residual_report(result.sequence, drive, modes);
  std::cout << report;
  if (!a.out.empty()) {
    m.config_digest = digest_of(canon + fmt::format("segments={}\nduration={}\nramp={}\nrestarts={}\ntarget={}\n",
                                                    a.segments, a.duration, a.ramp, a.restarts, a.target));
    {
      auto out = open_output(a.out);
      result.sequence.write(out);
    }
    const std::string report_path = a.out + ".report";
    {
      auto out = open_output(report_path);
      out << report;
    }
    m.outputs = {a.out, report_path};
    finish(m, a.out);
  }
  if (!result.attained) {
    std::cerr << fmt::format("optimize-gate: best residual {:.3e} is above the target {:.3e}\n", result.residual, a.target);
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_interpret(const std::string& path, const std::string& out_path) {
  Manifest m;
  m.command = "interpret-detections";
  m.started = utc_timestamp();
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open pattern file '{}'", path));
  OutcomeCounts counts;
  std::string line, canon;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    DetectionPattern p;
    try {
      p = DetectionPattern::parse(std::string_view(line).substr(b, e - b + 1));
    } catch (const ConfigError& err) {
      throw ConfigError(fmt::format("{}:{}: {}", path, lineno, err.what()));
    }
    canon += p.to_string() + '\n';
    counts.add(interpret(p));
  }
  const std::string csv = fmt::format(
      "outcome,count\nleak_to_s_or_hop,{}\nzero_f,{}\none_f,{}\nzeeman_leak,{}\ndiscard,{}\n", counts.leak_to_s_or_hop,
      counts.zero_f, counts.one_f, counts.zeeman_leak, counts.discard);
  std::cout << csv;
  if (!out_path.empty()) {
    m.config_digest = digest_of(canon);
    {
      auto out = open_output(out_path);
      out << csv;
    }
    m.outputs.push_back(out_path);
    finish(m, out_path);
  }
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Decoherence-free-subspace memory toolkit", "dfsmem"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DFSMEM_VERSION);

  std::string config_path, out_path, plot_path;
  std::vector<std::string> overrides;
  auto* sim = app.add_subcommand("simulate-storage", "Simulate a storage experiment and write a dataset CSV");
  sim->add_option("config", config_path, "Scenario file")->required();
  sim->add_option("-o,--output", out_path, "Dataset CSV")->required();
  sim->add_option("--set", overrides, "Override a field, section.key=value");
  sim->add_option("--plot", plot_path, "Also write an SVG plot");

  FitArgs fit;
  auto* fitc = app.add_subcommand("fit-lifetime", "Maximum-likelihood decay fit with parametric bootstrap");
  fitc->add_option("data", fit.data, "CSV with T_seconds,repetitions,successes")->required();
  fitc->add_option("--model", fit.model, "exponential or gaussian")->capture_default_str();
  fitc->add_option("--bootstrap", fit.n_bootstrap, "Bootstrap samples")->capture_default_str();
  fitc->add_option("--seed", fit.seed, "Master seed")->capture_default_str();
  fitc->add_option("--level", fit.level, "Central interval level")->capture_default_str();
  fitc->add_option("--threads", fit.threads, "Worker threads, 0 = all cores")->capture_default_str();
  fitc->add_flag("--leak-discarded", fit.leak_discarded, "Fit the leak-discarded counts of a storage CSV");
  fitc->add_option("--tau-min-s", fit.tau_min, "Lower tau bound (default max(T)/100)");
  fitc->add_option("--tau-max-s", fit.tau_max, "Upper tau bound (default 100 max(T))");
  fitc->add_option("-o,--report", fit.report, "Report file (default <data>.fit)");
  fitc->add_option("--band", fit.band, "Write the pointwise band CSV");
  fitc->add_option("--band-points", fit.band_points, "Band grid points")->capture_default_str();
  fitc->add_option("--plot", fit.plot, "Also write an SVG plot");

  CalibrateArgs cal;
  auto* calc = app.add_subcommand("calibrate-gradient", "Field difference from an observed oscillation period");
  calc->add_option("--period-s", cal.period, "Observed period")->required();
  calc->add_option("--encoding", cal.encoding, "clock or zeeman")->capture_default_str();
  calc->add_option("--B-gauss", cal.B, "Bias field")->capture_default_str();
  calc->add_option("-o,--output", cal.out, "Report file");

  GateArgs gate;
  auto* gatec = app.add_subcommand("optimize-gate", "Optimize or evaluate a segmented phase sequence");
  gatec->add_option("--segments", gate.segments)->capture_default_str();
  gatec->add_option("--duration-s", gate.duration)->capture_default_str();
  gatec->add_option("--ramp-s", gate.ramp)->capture_default_str();
  gatec->add_option("--seed", gate.seed)->capture_default_str();
  gatec->add_option("--restarts", gate.restarts)->capture_default_str();
  gatec->add_option("--target", gate.target, "Closure residual target")->capture_default_str();
  gatec->add_option("--threads", gate.threads, "Worker threads, 0 = all cores")->capture_default_str();
  gatec->add_option("--modes-mhz", gate.modes_mhz, "Mode frequencies (default three transverse modes)")->delimiter(',');
  gatec->add_option("--mu-mhz", gate.mu_mhz, "Beat-note frequency");
  gatec->add_option("--evaluate", gate.evaluate, "Score a sequence file instead of optimizing");
  gatec->add_option("--phases-pi", gate.phases_pi, "Score these phases (units of pi)")->delimiter(',');
  gatec->add_flag("--half", gate.half, "--phases-pi gives the first half of an antisymmetric sequence");
  gatec->add_flag("--flat-drive", gate.flat_drive, "Drop the sin^2 ramps");
  gatec->add_option("-o,--output", gate.out, "Sequence file (report goes to <output>.report)");

  std::string patterns, counts_out;
  auto* interp = app.add_subcommand("interpret-detections", "Count outcomes of a batch of detection patterns");
  interp->add_option("patterns", patterns, "One B/D pattern per ion per line")->required();
  interp->add_option("-o,--output", counts_out, "Counts CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate_storage(config_path, overrides, out_path, plot_path);
    if (fitc->parsed()) return cmd_fit_lifetime(fit);
    if (calc->parsed()) return cmd_calibrate_gradient(cal);
    if (gatec->parsed()) return cmd_optimize_gate(gate);
    if (interp->parsed()) return cmd_interpret(patterns, counts_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitConfig;
}

}  // namespace dfsmem::cli
