#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dfsmem/detection.hpp"
#include "dfsmem/dfs_protocol.hpp"
#include "dfsmem/error.hpp"
#include "dfsmem/fitting.hpp"
#include "dfsmem/gate_opt.hpp"
#include "dfsmem/levels.hpp"
#include "dfsmem/master_eq.hpp"
#include "dfsmem/storage.hpp"

namespace py = pybind11;
using namespace dfsmem;

namespace {

DecayDataset make_dataset(const std::vector<double>& T, const std::vector<std::int64_t>& reps,
                          const std::vector<std::int64_t>& successes) {
  if (T.size() != reps.size() || T.size() != successes.size()) {
    throw ConfigError("times, repetitions and successes must have equal length");
  }
  DecayDataset data;
  for (std::size_t i = 0; i < T.size(); ++i) data.add(T[i], reps[i], successes[i]);
  return data;
}

std::vector<std::string> level_labels(const LevelSpace& space) {
  std::vector<std::string> out;
  for (const auto& l : space) out.push_back(l.label());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the dfsmem toolkit";

  auto config_error = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  (void)config_error;

  m.def("f_manifold_levels", [] { return level_labels(enumerate_f_manifold()); });
  m.def("leak_channel_count", [](bool cross) { return leak_channels(cross).size(); }, py::arg("cross_manifold") = false);

  m.def("single_ion_leakage", &single_ion_leakage, py::arg("gamma"), py::arg("T"));
  m.def("fit_gamma_to_leakage", &fit_gamma_to_leakage, py::arg("target_leak"), py::arg("T"));

  m.def("interpret_pattern", [](const std::string& p) { return std::string(outcome_name(interpret(DetectionPattern::parse(p)))); },
        py::arg("pattern"));
  m.def("default_confusion", [] {
    py::dict out;
    const auto cm = default_confusion();
    for (const auto& [level, row] : cm.rows()) {
      out[py::str(level.label())] = py::make_tuple(row.p_zero, row.p_one, row.p_zeeman);
    }
    return out;
  });

  py::class_<FitResult>(m, "FitResult")
      .def_property_readonly("model", [](const FitResult& r) { return std::string(family_name(r.model)); })
      .def_readonly("A_hat", &FitResult::A_hat)
      .def_readonly("tau_hat", &FitResult::tau_hat)
      .def_readonly("loglik", &FitResult::loglik)
      .def_readonly("unidentifiable", &FitResult::unidentifiable);

  m.def(
      "decay_fidelity",
      [](const std::string& model, double A, double tau, double T) { return decay_fidelity(parse_family(model), A, tau, T); },
      py::arg("model"), py::arg("A"), py::arg("tau"), py::arg("T"));
  m.def(
      "fit_mle",
      [](const std::vector<double>& T, const std::vector<std::int64_t>& reps, const std::vector<std::int64_t>& k,
         const std::string& model) {
        const auto data = make_dataset(T, reps, k);
        py::gil_scoped_release release;
        return fit_mle(parse_family(model), data);
      },
      py::arg("T"), py::arg("repetitions"), py::arg("successes"), py::arg("model") = "exponential");
  m.def(
      "bootstrap_tau_interval",
      [](const std::vector<double>& T, const std::vector<std::int64_t>& reps, const std::vector<std::int64_t>& k,
         const std::string& model, int n_samples, std::uint64_t seed, double level) {
        const auto data = make_dataset(T, reps, k);
        py::gil_scoped_release release;
        const auto fit = fit_mle(parse_family(model), data);
        const auto samples = bootstrap(fit, data, n_samples, seed);
        return tau_interval(samples, level);
      },
      py::arg("T"), py::arg("repetitions"), py::arg("successes"), py::arg("model") = "exponential",
      py::arg("n_samples") = 1000, py::arg("seed") = 0, py::arg("level") = 0.68);

  m.def("solve_entangler_phase", [] {
    const auto s = solve_entangler_phase();
    return py::make_tuple(s.chi, s.infidelity);
  });
  m.def(
      "prepare_logical", [](const std::string& label) -> Eigen::VectorXcd { return prepare_logical(parse_logical(label)).amplitudes; },
      py::arg("label"));
  m.def(
      "frequency_difference",
      [](double deltaB, const std::string& encoding, double B) {
        GradientModel g;
        g.B = B;
        g.deltaB = deltaB;
        return frequency_difference(g, parse_encoding(encoding));
      },
      py::arg("deltaB"), py::arg("encoding") = "clock", py::arg("B") = GradientModel{}.B);
  m.def(
      "calibrate_delta_b",
      [](double period, const std::string& encoding, double B) {
        GradientModel g;
        g.B = B;
        return calibrate_delta_b(period, g, parse_encoding(encoding));
      },
      py::arg("period"), py::arg("encoding") = "zeeman", py::arg("B") = GradientModel{}.B);
  m.def(
      "echo_phase",
      [](double delta_f, const std::vector<double>& pulse_times, double T) {
        EchoSchedule s{pulse_times, T};
        const auto r = echo_phase(delta_f, s);
        return py::make_tuple(r.net_phase, r.logical_flip);
      },
      py::arg("delta_f"), py::arg("pulse_times"), py::arg("T"));
  m.def(
      "quasistatic_coherence",
      [](const std::string& label, double sigma_hz, double T, std::int64_t n_shots, std::uint64_t seed) {
        py::gil_scoped_release release;
        return simulate_quasistatic_dephasing(parse_logical(label), sigma_hz, T, n_shots, seed);
      },
      py::arg("label"), py::arg("sigma_hz"), py::arg("T"), py::arg("n_shots"), py::arg("seed") = 0);

  m.def(
      "simulate_storage",
      [](const std::string& state, const std::vector<double>& times, double gamma_leak, double gamma_dephase,
         bool collective, std::int64_t repetitions, std::uint64_t seed, bool perfect_detection,
         const std::vector<double>& echo_fractions, double deltaB) {
        StorageScenario s;
        s.state = parse_logical(state);
        s.times = times;
        s.noise.gamma_leak = gamma_leak;
        s.noise.gamma_dephase = gamma_dephase;
        s.noise.dephasing_mode = collective ? DephasingMode::Collective : DephasingMode::Independent;
        s.repetitions = repetitions;
        s.seed = seed;
        s.echo_fractions = echo_fractions;
        s.gradient.deltaB = deltaB;
        if (perfect_detection) s.confusion = perfect_confusion();
        std::vector<StoragePoint> points;
        {
          py::gil_scoped_release release;
          points = simulate_storage(s);
        }
        py::list out;
        for (const auto& p : points) {
          out.append(py::make_tuple(p.T, p.repetitions, p.successes, p.leak_discarded_successes, p.leak_count));
        }
        return out;
      },
      py::arg("state"), py::arg("times"), py::arg("gamma_leak") = 0.0, py::arg("gamma_dephase") = 0.0,
      py::arg("collective") = false, py::arg("repetitions") = 1000, py::arg("seed") = 0,
      py::arg("perfect_detection") = false, py::arg("echo_fractions") = std::vector<double>{0.25, 0.75},
      py::arg("deltaB") = 0.0);
  m.def(
      "storage_survival",
      [](const std::string& state, double gamma_leak, double T) {
        StorageScenario s;
        s.state = parse_logical(state);
        s.times = {T};
        s.noise.gamma_leak = gamma_leak;
        py::gil_scoped_release release;
        const auto r = evolve_storage(s, T);
        return std::make_pair(r.fidelity, r.survival);
      },
      py::arg("state"), py::arg("gamma_leak"), py::arg("T"));

  m.def(
      "closure_residual",
      [](const std::vector<double>& phases, double duration, double ramp, const std::vector<double>& mode_freqs,
         double mu) {
        PhaseSequence seq{phases, duration, ramp, false};
        seq.validate();
        ModeSet modes = ModeSet::three_ion_transverse();
        if (!mode_freqs.empty()) modes.mode_freqs = mode_freqs;
        if (mu > 0.0) modes.mu = mu;
        return mode_residuals(seq, DriveProfile{}, modes);
      },
      py::arg("phases"), py::arg("duration") = 150e-6, py::arg("ramp") = 2e-6,
      py::arg("mode_freqs") = std::vector<double>{}, py::arg("mu") = 0.0);
  m.def(
      "optimize_sequence",
      [](int n_segments, double duration, double ramp, std::uint64_t seed, int restarts, double target, int threads) {
        OptimizeOptions o;
        o.n_segments = n_segments;
        o.duration = duration;
        o.ramp = ramp;
        o.seed = seed;
        o.restarts = restarts;
        o.target = target;
        o.threads = threads;
        OptimizeResult r;
        {
          py::gil_scoped_release release;
          r = optimize_sequence(ModeSet::three_ion_transverse(), o);
        }
        return py::make_tuple(r.sequence.phases, r.residual, r.attained);
      },
      py::arg("n_segments") = 12, py::arg("duration") = 150e-6, py::arg("ramp") = 2e-6, py::arg("seed") = 0,
      py::arg("restarts") = 8, py::arg("target") = 1e-6, py::arg("threads") = 0);
}
