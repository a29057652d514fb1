#pragma once

// The six pipeline commands behind the command-line tool. Each reads an
// ExperimentConfig, writes its outputs into the configured directory and
// finishes with manifest.yaml.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <yaml-cpp/yaml.h>

#include "vsp/coherence.hpp"
#include "vsp/config.hpp"
#include "vsp/fitting.hpp"
#include "vsp/io.hpp"
#include "vsp/pumping.hpp"
#include "vsp/spectroscopy.hpp"

namespace vsp::app {

inline constexpr const char* version = "1.0.0";

struct Result {
  std::vector<std::filesystem::path> files;  // written outputs, manifest last
};

namespace detail {

/// Everything a species-bound command needs, resolved from the config.
struct Setup {
  Species species;
  ThermalEnsemble ensemble;
  std::shared_ptr<const VelocityGrid> grid;
  PulseSequence sequence;
  EvolveControls controls;
  PopulationState thermal;
};

inline Setup setup(const ExperimentConfig& c, unsigned threads) {
  if (c.species_file.empty()) throw ConfigError("this command needs a 'species' file");
  Setup s;
  s.species = load_species(c.species_file.string());
  s.ensemble = build_ensemble(c, s.species);
  s.grid = build_grid(c, s.species);
  s.sequence = build_sequence(c, s.species);
  s.controls = c.controls;
  if (threads > 0) s.controls.threads = threads;
  s.thermal = thermal_state(s.ensemble, s.species, s.grid);
  if (c.drift_enabled) {
    s.controls.drift_rate = c.drift_rate ? *c.drift_rate
                                         : drift_estimates(c.geometry, s.ensemble, s.species, 1.0).drift_rate;
    s.controls.thermal_reference = std::make_shared<const PopulationState>(s.thermal);
  }
  return s;
}

/// Index of the last pump-back in the expanded sequence, or -1.
inline long last_pump_back(const std::vector<const LaserStage*>& stages) {
  for (long i = static_cast<long>(stages.size()) - 1; i >= 0; --i)
    if (stages[static_cast<std::size_t>(i)]->role == StageRole::pump_back) return i;
  return -1;
}

/// The probed state: right after the last pump-back, or the final state when
/// the sequence has none. Also returns the full trajectory.
inline PopulationState probed_state(const Setup& s, Trajectory* trajectory = nullptr) {
  if (s.sequence.preamble.empty() && s.sequence.stages.empty()) return s.thermal;
  Trajectory traj = run_sequence(s.thermal, s.sequence, s.species, s.controls);
  const long k = last_pump_back(s.sequence.expanded());
  PopulationState out = k >= 0 ? traj.snapshots[static_cast<std::size_t>(k)] : traj.snapshots.back();
  if (trajectory) *trajectory = std::move(traj);
  return out;
}

/// Fitting and sweeping vary the last pump-back; everything before it is the
/// fixed preparation.
inline SpectrumModelContext model_context(const Setup& s, const std::vector<const Transition*>& lines, int probe_sign) {
  const auto stages = s.sequence.expanded();
  const long k = last_pump_back(stages);
  if (k < 0) throw ConfigError("the sequence needs a pump-back stage");
  PulseSequence prep;
  for (long i = 0; i < k; ++i) prep.preamble.push_back(*stages[static_cast<std::size_t>(i)]);
  prep.repeat = 0;
  auto ctx = SpectrumModelContext::prepare(s.species, s.ensemble, s.grid, prep, *stages[static_cast<std::size_t>(k)],
                                           s.controls);
  ctx.lines = lines;
  ctx.probe_sign = probe_sign;
  return ctx;
}

inline std::string slug(const std::string& name) {
  std::string out;
  for (char ch : name) {
    if (std::isalnum(static_cast<unsigned char>(ch)))
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

inline YAML::Node ladder_node(const LadderConfig& l) {
  YAML::Node n;
  n["name"] = l.name;
  n["signal_nm"] = io::quantize(l.signal_wavelength * 1e9, 9);
  n["control_nm"] = io::quantize(l.control_wavelength * 1e9, 9);
  n["k_r_per_m"] = wavevector_mismatch(l);
  n["storage_lifetime_ns"] = is_unbounded(l.storage_lifetime) ? io::time_ns(l.storage_lifetime)
                                                              : YAML::Node(io::quantize(l.storage_lifetime * 1e9, 9));
  return n;
}

class Manifest {
public:
  Manifest(std::string command, const ExperimentConfig& c, unsigned threads)
      : command_(std::move(command)), config_(c), threads_(threads), start_(std::chrono::steady_clock::now()) {
    if (!c.species_file.empty()) input(c.species_file);
  }

  void input(const std::filesystem::path& p) {
    if (std::find(inputs_.begin(), inputs_.end(), p) == inputs_.end()) inputs_.push_back(p);
  }

  Result finish(std::vector<std::filesystem::path> files) {
    const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    YAML::Node doc;
    doc["schema"] = "vsp-manifest/1";
    doc["command"] = command_;
    doc["config"] = config_.source.string();
    doc["config_hash"] = "fnv1a64:" + io::hex(io::fnv1a(io::read_text(config_.source)));
    for (const auto& p : inputs_) {
      YAML::Node n;
      n["path"] = p.string();
      n["hash"] = "fnv1a64:" + io::hex(io::fnv1a(io::read_text(p)));
      doc["inputs"].push_back(n);
    }
    YAML::Node v;
    v["vsp"] = version;
    v["compiler"] = __VERSION__;
    v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    doc["versions"] = v;
    doc["threads"] = resolve_threads(threads_);
    doc["runtime_s"] = runtime;
    for (const auto& f : files) doc["outputs"].push_back(f.filename().string());
    const auto path = config_.output_dir / "manifest.yaml";
    io::write_yaml(path, doc);
    files.push_back(path);
    return {std::move(files)};
  }

private:
  std::string command_;
  const ExperimentConfig& config_;
  unsigned threads_;
  std::vector<std::filesystem::path> inputs_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Simulated OD spectrum at the probe time plus the unpumped baseline.
inline Result spectrum(const ExperimentConfig& c, unsigned threads = 0) {
  detail::Manifest manifest("spectrum", c, threads);
  const auto s = detail::setup(c, threads);
  const ProbeGrid probe = build_probe(c, s.species);
  const auto lines = build_probe_lines(c, s.species);
  const unsigned t = s.controls.threads;

  Trajectory traj;
  const PopulationState state = detail::probed_state(s, c.write_trajectory ? &traj : nullptr);
  Spectrum spec = optical_depth(state, s.ensemble, s.species, probe, c.probe.sign, lines, t);
  spec.sequence_hash = "fnv1a64:" + io::hex(io::fnv1a(io::describe(s.sequence)));
  const Spectrum base = optical_depth(s.thermal, s.ensemble, s.species, probe, c.probe.sign, lines, t);

  std::vector<std::filesystem::path> files{c.output_dir / "spectrum.csv", c.output_dir / "baseline.csv"};
  io::write_spectrum_csv(files[0], spec);
  io::write_spectrum_csv(files[1], base);
  if (c.write_trajectory) {
    files.push_back(c.output_dir / "trajectory.csv");
    io::write_trajectory_csv(files.back(), s.thermal, traj);
  }

  YAML::Node sum;
  sum["schema"] = "vsp-spectrum-summary/1";
  sum["species"] = s.species.name;
  sum["temperature_K"] = s.ensemble.temperature;
  sum["density_per_m3"] = s.ensemble.density;
  sum["probe_time_us"] = state.time * 1e6;
  sum["peak_od"] = spec.peak_od();
  sum["feature_fwhm_MHz"] = peak_fwhm(spec.detuning_mhz(), spec.od);
  sum["baseline_peak_od"] = base.peak_od();
  sum["memory_ground_fraction"] = s.ensemble.density > 0.0 ? state.integrated(ground_slot) / s.ensemble.density : 0.0;
  const auto stages = s.sequence.expanded();
  if (const long k = detail::last_pump_back(stages); k >= 0) {
    const auto d = drift_estimates(c.geometry, s.ensemble, s.species, stages[static_cast<std::size_t>(k)]->duration);
    sum["drift"]["three_sigma_distance_mm"] = d.three_sigma_distance * 1e3;
    sum["drift"]["rate_per_s"] = d.drift_rate;
  }
  files.push_back(c.output_dir / "summary.yaml");
  io::write_yaml(files.back(), sum);
  return manifest.finish(std::move(files));
}

/// Coherence decay of the memory-ground velocity distribution per ladder.
inline Result dephasing(const ExperimentConfig& c, unsigned threads = 0) {
  detail::Manifest manifest("dephasing", c, threads);
  const auto s = detail::setup(c, threads);
  const auto ladders = build_ladders(c, s.species);
  if (ladders.empty()) throw ConfigError("the dephasing command needs at least one ladder");

  const bool pumped = c.dephasing.distribution == "pumped";
  const auto thermal = VelocityDistribution::of_level(s.thermal, ground_slot);
  std::optional<VelocityDistribution> selected;
  if (pumped) {
    const PopulationState state = detail::probed_state(s);
    double weight = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i)
      weight += state.grid->weight(i) * std::max(0.0, state.classes[i][ground_slot]);
    if (!(weight > 1e-9 * s.ensemble.density))
      throw NumericError("the memory ground level is empty at the probe time; nothing to dephase");
    selected = VelocityDistribution::of_level(state, ground_slot);
  }
  const VelocityDistribution& f = pumped ? *selected : thermal;

  std::vector<std::filesystem::path> files;
  YAML::Node sum;
  sum["schema"] = "vsp-dephasing-summary/1";
  sum["species"] = s.species.name;
  sum["temperature_K"] = s.ensemble.temperature;
  sum["distribution"] = c.dephasing.distribution;
  sum["velocity_rms_m_s"] = f.rms_spread();
  for (const auto& l : ladders) {
    const CoherenceDecay d = coherence_decay(f, l, c.dephasing.t_max, c.dephasing.points);
    files.push_back(c.output_dir / ("decay_" + detail::slug(l.name) + ".csv"));
    io::write_decay_csv(files.back(), d);
    YAML::Node n = detail::ladder_node(l);
    n["dephasing_time_ns"] = io::time_ns(d.dephasing_time);
    n["dephasing_rate_per_s"] = d.dephasing_rate;
    n["memory_lifetime_ns"] = io::time_ns(d.memory_lifetime);
    const double thermal_lifetime = memory_lifetime(thermal, l);
    n["thermal_memory_lifetime_ns"] = io::time_ns(thermal_lifetime);
    if (!is_unbounded(d.memory_lifetime) && !is_unbounded(thermal_lifetime))
      n["enhancement"] = d.memory_lifetime / thermal_lifetime;
    else
      n["enhancement"] = YAML::Node();
    n["decay_file"] = files.back().filename().string();
    sum["ladders"].push_back(n);
  }
  files.push_back(c.output_dir / "summary.yaml");
  io::write_yaml(files.back(), sum);
  return manifest.finish(std::move(files));
}

/// Lifetime table: memory 1/e time without and with velocity selection, and
/// their ratio, for every configured species/ladder row.
inline Result predict(const ExperimentConfig& c, unsigned threads = 0) {
  detail::Manifest manifest("predict", c, threads);
  if (!c.predict) throw ConfigError("the predict command needs a 'predict' section");
  const PredictSpec& p = *c.predict;
  EvolveControls controls = c.controls;
  if (threads > 0) controls.threads = threads;

  struct Prepared {
    Species species;
    std::optional<VelocityDistribution> thermal, selected;
  };
  std::map<std::string, Prepared> cache;
  auto prepared = [&](const std::filesystem::path& file) -> Prepared& {
    const auto key = file.string();
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    Prepared out;
    out.species = load_species(key);
    ThermalEnsemble e;
    e.temperature = p.temperature;
    e.cell_length = c.cell_length;
    e.density = c.density ? *c.density : vapour_number_density(out.species, p.temperature);
    const auto grid = std::make_shared<const VelocityGrid>(VelocityGrid::thermal(
        thermal_velocity_sigma(p.temperature, out.species.mass), c.grid.points, c.grid.half_span_sigma));
    const PopulationState s0 = thermal_state(e, out.species, grid);
    PulseSequence seq;
    seq.preamble.push_back(build_stage(p.pump, out.species, c.geometry));
    seq.preamble.push_back(build_stage(p.pump_back, out.species, c.geometry));
    seq.repeat = 0;
    const PopulationState s = run_to_end(s0, seq, out.species, controls);
    out.thermal = VelocityDistribution::of_level(s0, ground_slot);
    double weight = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) weight += s.grid->weight(i) * std::max(0.0, s.classes[i][ground_slot]);
    if (!(weight > 1e-9 * e.density))
      throw NumericError("species " + out.species.name + ": no population in the memory ground level after the pump-back");
    out.selected = VelocityDistribution::of_level(s, ground_slot);
    return cache.emplace(key, std::move(out)).first->second;
  };

  const auto path = c.output_dir / "table.csv";
  auto out = io::open_output(path);
  out << "# temperature_K: " << io::format(p.temperature) << '\n';
  out << "species,ladder,k_r_per_m,storage_lifetime_ns,dephasing_thermal_ns,dephasing_vsp_ns,lifetime_no_vsp_ns,"
         "lifetime_vsp_ns,beta\n";
  auto ns = [](double t) { return is_unbounded(t) ? std::string("inf") : io::format(t * 1e9); };
  for (const auto& row : p.rows) {
    Prepared& pr = prepared(row.species);
    LadderConfig l = LadderConfig::from(pr.species.ladder(row.ladder), pr.species, p.temperature);
    if (row.storage_lifetime) l.storage_lifetime = *row.storage_lifetime;
    const double k_r = wavevector_mismatch(l);
    const double without = memory_lifetime(*pr.thermal, l), with = memory_lifetime(*pr.selected, l);
    const double beta = is_unbounded(without) || is_unbounded(with) ? std::numeric_limits<double>::quiet_NaN()
                                                                    : with / without;
    out << pr.species.name << ',' << l.name << ',' << io::format(k_r) << ','
        << (is_unbounded(l.storage_lifetime) ? "inf" : io::format(io::quantize(l.storage_lifetime * 1e9, 9))) << ','
        << ns(dephasing_time(*pr.thermal, k_r)) << ',' << ns(dephasing_time(*pr.selected, k_r)) << ',' << ns(without)
        << ',' << ns(with) << ',' << io::format(beta) << '\n';
  }
  out.close();
  for (const auto& row : p.rows) manifest.input(row.species);
  return manifest.finish({path});
}

/// Recovers pump-back power, linewidth and velocity class from a measured
/// spectrum by varying the sequence's last pump-back.
inline Result fit(const ExperimentConfig& c, unsigned threads = 0) {
  detail::Manifest manifest("fit", c, threads);
  if (!c.fit) throw ConfigError("the fit command needs a 'fit' section");
  const auto s = detail::setup(c, threads);
  const Spectrum measured = io::read_spectrum_csv(c.fit->measured, s.species);
  manifest.input(c.fit->measured);
  const auto ctx = detail::model_context(s, build_probe_lines(c, s.species), measured.probe_sign);
  const SpectrumFitResult r = fit_spectrum(measured, ctx, c.fit->initial, c.fit->options);

  std::vector<std::filesystem::path> files{c.output_dir / "fit_report.yaml", c.output_dir / "fitted_spectrum.csv"};
  io::write_yaml(files[0], io::fit_report(r, c.fit->initial));
  ProbeGrid grid;
  grid.omega = measured.omega;
  grid.reference_omega = measured.reference_omega;
  grid.reference_label = measured.reference_label;
  Spectrum model = ctx.spectrum(grid, r.params.power, r.params.linewidth, r.params.velocity);
  io::write_spectrum_csv(files[1], model);
  return manifest.finish(std::move(files));
}

/// Two-exponential fit of a transmission relaxation series.
inline Result fit_relaxation(const ExperimentConfig& c, unsigned threads = 0) {
  detail::Manifest manifest("fit-relaxation", c, threads);
  if (!c.relaxation_series) throw ConfigError("the fit-relaxation command needs a 'relaxation' section");
  const RelaxationSeries series = io::read_relaxation_csv(*c.relaxation_series);
  manifest.input(*c.relaxation_series);
  const RelaxationFit f = vsp::fit_relaxation(series);
  std::vector<std::filesystem::path> files{c.output_dir / "relaxation_report.yaml", c.output_dir / "relaxation_fit.csv"};
  io::write_yaml(files[0], io::relaxation_report(f));
  std::vector<double> model;
  model.reserve(series.time.size());
  for (double t : series.time) model.push_back(f.evaluate(t));
  io::write_relaxation_csv(files[1], series, &model);
  return manifest.finish(std::move(files));
}

/// Pump-back power x duration grid: peak OD and coherence times per point.
inline Result sweep(const ExperimentConfig& c, unsigned threads = 0) {
  detail::Manifest manifest("sweep", c, threads);
  const auto s = detail::setup(c, threads);
  const auto ladders = build_ladders(c, s.species);
  if (ladders.empty()) throw ConfigError("the sweep command needs a ladder");
  const ProbeGrid probe = build_probe(c, s.species);
  const auto ctx = detail::model_context(s, build_probe_lines(c, s.species), c.probe.sign);
  const LaserStage& pb = ctx.pump_back;
  const double linewidth = c.sweep.linewidth.value_or(pb.linewidth);
  const double velocity =
      c.sweep.velocity_class.value_or(selected_velocity(pb, s.species.transition(pb.transition)));
  const auto points = vsp::sweep(ctx, probe, c.sweep.powers, c.sweep.durations, linewidth, velocity, ladders.front(),
                                 s.controls.threads);

  const auto path = c.output_dir / "sweep.csv";
  auto out = io::open_output(path);
  out << "# ladder: " << ladders.front().name << '\n';
  out << "# linewidth_MHz: " << io::format(constants::rad_s_to_mhz(linewidth)) << '\n';
  out << "# velocity_class_m_s: " << io::format(io::quantize(velocity, 6)) << '\n';
  out << "power_mW,duration_us,peak_od,dephasing_time_ns,memory_lifetime_ns\n";
  auto ns = [](double t) { return is_unbounded(t) ? std::string("inf") : io::format(t * 1e9); };
  for (const auto& p : points)
    out << io::format(io::quantize(p.power * 1e3, 9)) << ',' << io::format(io::quantize(p.duration * 1e6, 9)) << ','
        << io::format(p.peak_od) << ',' << ns(p.dephasing_time) << ',' << ns(p.memory_lifetime) << '\n';
  out.close();
  return manifest.finish({path});
}

}  // namespace vsp::app
