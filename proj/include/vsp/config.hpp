#pragma once

// Experiment configuration (schema vsp-config/1). Units are part of every
// key name; unknown keys are rejected with their source line. Relative paths
// resolve against the directory holding the config file.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "vsp/atomic_data.hpp"
#include "vsp/coherence.hpp"
#include "vsp/errors.hpp"
#include "vsp/fitting.hpp"
#include "vsp/pumping.hpp"
#include "vsp/species_io.hpp"
#include "vsp/yaml_util.hpp"

namespace vsp {

struct StageSpec {
  StageRole role = StageRole::dark;
  std::string transition;  // empty: the species default for the role
  double power = 0.0;      // W
  double linewidth = constants::mhz_to_rad_s(6.0);
  std::optional<double> velocity_class;  // m/s
  std::optional<double> detuning;        // rad/s from the transition's rest resonance
  double duration = 0.0;                 // s
  std::optional<double> beam_radius;     // m; default: geometry pump-back radius
  int propagation_sign = +1;
  LaserProfile profile = LaserProfile::lorentzian;
  int line = 0;
};

struct ProbeSpec {
  double start_mhz = -600.0, stop_mhz = 800.0;
  std::size_t points = 1000;
  int sign = -1;
  std::vector<std::string> lines;  // empty: species default
  std::string reference;           // empty: species probe reference
};

struct GridSpec {
  std::size_t points = 2001;
  double half_span_sigma = 6.0;
};

struct DephasingSpec {
  std::string distribution = "pumped";  // "pumped" or "thermal"
  double t_max = 200e-9;
  std::size_t points = 401;
};

struct FitSpec {
  std::filesystem::path measured;
  SpectrumFitParams initial;
  SpectrumFitOptions options;
};

struct SweepSpec {
  std::vector<double> powers{0.86e-3, 4.1e-3, 10.5e-3};
  std::vector<double> durations{0.2e-6, 1.2e-6, 2e-6};
  std::optional<double> linewidth;
  std::optional<double> velocity_class;
};

struct PredictRow {
  std::filesystem::path species;
  std::string ladder;
  std::optional<double> storage_lifetime;  // overrides the ladder's
};

struct PredictSpec {
  double temperature = 363.15;
  StageSpec pump, pump_back;
  std::vector<PredictRow> rows;
};

struct ExperimentConfig {
  std::filesystem::path source;      // the config file
  std::filesystem::path species_file;
  std::filesystem::path output_dir = "out";
  double temperature = 296.15;       // K
  std::optional<double> density;     // atoms/m^3; empty: vapour-pressure model
  double cell_length = 0.025;        // m
  BeamGeometry geometry;
  GridSpec grid;
  std::vector<StageSpec> preamble, stages;
  int repeat = 1;
  ProbeSpec probe;
  std::vector<std::string> ladders;  // names in the species file
  std::vector<LadderData> inline_ladders;
  bool drift_enabled = false;
  std::optional<double> drift_rate;  // 1/s; empty: geometry estimate
  EvolveControls controls;
  bool write_trajectory = false;
  DephasingSpec dephasing;
  std::optional<FitSpec> fit;
  std::optional<std::filesystem::path> relaxation_series;
  SweepSpec sweep;
  std::optional<PredictSpec> predict;
};

namespace config_detail {

using yaml::line_of;

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

/// Exactly one of several unit-tagged keys.
inline std::optional<double> one_of(const YAML::Node& map, std::initializer_list<std::pair<const char*, double>> keys,
                                    std::string_view context) {
  std::optional<double> value;
  const char* found = nullptr;
  for (const auto& [key, scale] : keys) {
    const YAML::Node n = map[key];
    if (!n) continue;
    if (found)
      throw ConfigError(std::string(context) + ": give only one of '" + found + "' and '" + key + "'", line_of(n));
    found = key;
    value = yaml::as<double>(n, key) * scale;
  }
  return value;
}

inline double temperature_of(const YAML::Node& map, std::string_view context) {
  const YAML::Node c = map["temperature_C"], k = map["temperature_K"];
  if (c && k) throw ConfigError(std::string(context) + ": give only one of temperature_C and temperature_K", line_of(k));
  if (c) return yaml::as<double>(c, "temperature_C") + constants::zero_celsius;
  if (k) return yaml::as<double>(k, "temperature_K");
  throw ConfigError(std::string(context) + ": missing temperature_C or temperature_K", line_of(map));
}

inline StageRole parse_role(const YAML::Node& n) {
  const auto s = yaml::as<std::string>(n, "role");
  if (s == "pump") return StageRole::pump;
  if (s == "pump-back" || s == "pump_back") return StageRole::pump_back;
  if (s == "reset") return StageRole::reset;
  if (s == "dark" || s == "probe") return StageRole::dark;
  throw ConfigError("unknown stage role '" + s + "'", line_of(n));
}

inline StageSpec parse_stage(const YAML::Node& n, std::string_view context, StageRole default_role = StageRole::dark) {
  yaml::check_keys(n,
                   {"role", "transition", "power_mW", "linewidth_MHz", "velocity_class_m_s", "detuning_MHz",
                    "duration_us", "beam_radius_mm", "propagation", "profile"},
                   context);
  StageSpec s;
  s.line = line_of(n);
  s.role = n["role"] ? parse_role(n["role"]) : default_role;
  s.transition = yaml::get_or<std::string>(n, "transition", "");
  s.power = yaml::get_or<double>(n, "power_mW", 0.0) * 1e-3;
  if (n["linewidth_MHz"]) s.linewidth = constants::mhz_to_rad_s(yaml::as<double>(n["linewidth_MHz"], "linewidth_MHz"));
  s.velocity_class = yaml::get_optional<double>(n, "velocity_class_m_s");
  if (auto d = yaml::get_optional<double>(n, "detuning_MHz")) s.detuning = constants::mhz_to_rad_s(*d);
  if (s.velocity_class && s.detuning)
    throw ConfigError("give either velocity_class_m_s or detuning_MHz, not both", line_of(n["detuning_MHz"]));
  s.duration = yaml::require<double>(n, "duration_us", context) * 1e-6;
  if (auto r = yaml::get_optional<double>(n, "beam_radius_mm")) s.beam_radius = *r * 1e-3;
  s.propagation_sign = yaml::get_or<int>(n, "propagation", +1);
  if (s.propagation_sign != 1 && s.propagation_sign != -1)
    throw ConfigError("propagation must be +1 or -1", line_of(n["propagation"]));
  const auto profile = yaml::get_or<std::string>(n, "profile", "lorentzian");
  if (profile == "lorentzian")
    s.profile = LaserProfile::lorentzian;
  else if (profile == "gaussian")
    s.profile = LaserProfile::gaussian;
  else
    throw ConfigError("profile must be lorentzian or gaussian", line_of(n["profile"]));
  if (s.duration < 0.0) throw ConfigError("duration_us must be >= 0", line_of(n["duration_us"]));
  if (s.power < 0.0) throw ConfigError("power_mW must be >= 0", line_of(n["power_mW"]));
  if (s.power > 0.0 && !(s.linewidth > 0.0)) throw ConfigError("linewidth_MHz must be > 0", line_of(n));
  if (s.role == StageRole::dark && s.power > 0.0) throw ConfigError("dark stages carry no power", line_of(n));
  return s;
}

inline std::vector<StageSpec> parse_stages(const YAML::Node& list, std::string_view context) {
  std::vector<StageSpec> out;
  if (!list) return out;
  if (!list.IsSequence()) throw ConfigError(std::string(context) + " must be a list", line_of(list));
  for (const auto& n : list) out.push_back(parse_stage(n, context));
  return out;
}

inline std::vector<double> scaled_list(const YAML::Node& n, double scale, std::string_view what) {
  if (!n.IsSequence() || n.size() == 0) throw ConfigError(std::string(what) + " must be a non-empty list", line_of(n));
  std::vector<double> out;
  for (const auto& x : n) out.push_back(yaml::as<double>(x, what) * scale);
  return out;
}

}  // namespace config_detail

inline ExperimentConfig parse_config(const YAML::Node& root, const std::filesystem::path& source) {
  using namespace config_detail;
  yaml::check_keys(root,
                   {"schema", "species", "output_dir", "ensemble", "geometry", "velocity_grid", "sequence", "probe",
                    "ladders", "drift", "integrator", "write_trajectory", "dephasing", "fit", "relaxation", "sweep",
                    "predict", "threads"},
                   "config");
  const auto schema = yaml::get_or<std::string>(root, "schema", "vsp-config/1");
  if (schema != "vsp-config/1") throw ConfigError("unsupported schema '" + schema + "'", line_of(root["schema"]));

  ExperimentConfig c;
  c.source = source;
  const auto base = source.has_parent_path() ? source.parent_path() : std::filesystem::path(".");
  if (root["species"]) {
    c.species_file = resolve(base, yaml::as<std::string>(root["species"], "species"));
    if (!std::filesystem::exists(c.species_file))
      throw ConfigError("species file '" + c.species_file.string() + "' does not exist", line_of(root["species"]));
  }
  c.output_dir = resolve(base, yaml::get_or<std::string>(root, "output_dir", "out"));

  if (const auto e = root["ensemble"]) {
    yaml::check_keys(e, {"temperature_C", "temperature_K", "density_per_m3", "cell_length_mm"}, "ensemble");
    c.temperature = temperature_of(e, "ensemble");
    if (const auto d = e["density_per_m3"]) {
      const auto text = yaml::as<std::string>(d, "density_per_m3");
      if (text != "auto") {
        c.density = yaml::as<double>(d, "density_per_m3");
        if (!(*c.density >= 0.0)) throw ConfigError("density_per_m3 must be >= 0", line_of(d));
      }
    }
    c.cell_length = yaml::get_or<double>(e, "cell_length_mm", 25.0) * 1e-3;
    if (!(c.temperature > 0.0)) throw ConfigError("temperature must be positive", line_of(e));
    if (!(c.cell_length > 0.0)) throw ConfigError("cell_length_mm must be positive", line_of(e));
  }
  if (const auto g = root["geometry"]) {
    yaml::check_keys(g, {"pump_back_radius_mm", "probe_radius_mm"}, "geometry");
    c.geometry.pump_back_radius = yaml::get_or<double>(g, "pump_back_radius_mm", 1.5) * 1e-3;
    c.geometry.probe_radius = yaml::get_or<double>(g, "probe_radius_mm", 0.3) * 1e-3;
    try {
      c.geometry.validate();
    } catch (const std::domain_error& ex) {
      throw ConfigError(ex.what(), line_of(g));
    }
  }
  if (const auto g = root["velocity_grid"]) {
    yaml::check_keys(g, {"points", "half_span_sigma"}, "velocity_grid");
    c.grid.points = yaml::get_or<std::size_t>(g, "points", 2001);
    c.grid.half_span_sigma = yaml::get_or<double>(g, "half_span_sigma", 6.0);
    if (c.grid.points < 3 || !(c.grid.half_span_sigma > 0.0))
      throw ConfigError("velocity_grid needs points >= 3 and half_span_sigma > 0", line_of(g));
  }
  if (const auto s = root["sequence"]) {
    yaml::check_keys(s, {"preamble", "stages", "repeat"}, "sequence");
    c.preamble = parse_stages(s["preamble"], "sequence stage");
    c.stages = parse_stages(s["stages"], "sequence stage");
    c.repeat = yaml::get_or<int>(s, "repeat", 1);
    if (c.repeat < 0) throw ConfigError("repeat must be >= 0", line_of(s["repeat"]));
  }
  if (const auto p = root["probe"]) {
    yaml::check_keys(p, {"start_MHz", "stop_MHz", "points", "sign", "lines", "reference"}, "probe");
    c.probe.start_mhz = yaml::get_or<double>(p, "start_MHz", -600.0);
    c.probe.stop_mhz = yaml::get_or<double>(p, "stop_MHz", 800.0);
    c.probe.points = yaml::get_or<std::size_t>(p, "points", 1000);
    c.probe.sign = yaml::get_or<int>(p, "sign", -1);
    if (c.probe.sign != 1 && c.probe.sign != -1) throw ConfigError("probe sign must be +1 or -1", line_of(p["sign"]));
    if (c.probe.points < 2 || !(c.probe.stop_mhz > c.probe.start_mhz))
      throw ConfigError("probe grid needs points >= 2 and stop_MHz > start_MHz", line_of(p));
    if (const auto l = p["lines"])
      for (const auto& x : l) c.probe.lines.push_back(yaml::as<std::string>(x, "probe line"));
    c.probe.reference = yaml::get_or<std::string>(p, "reference", "");
  }
  if (const auto l = root["ladders"]) {
    if (!l.IsSequence()) throw ConfigError("ladders must be a list", line_of(l));
    for (const auto& x : l) {
      if (x.IsScalar()) {
        c.ladders.push_back(yaml::as<std::string>(x, "ladder"));
        continue;
      }
      yaml::check_keys(x, {"name", "signal_nm", "control_nm", "storage_lifetime_ns"}, "ladder");
      LadderData d;
      d.name = yaml::require<std::string>(x, "name", "ladder");
      d.signal_wavelength = yaml::require<double>(x, "signal_nm", "ladder") * 1e-9;
      d.control_wavelength = yaml::require<double>(x, "control_nm", "ladder") * 1e-9;
      const auto tau = yaml::require<std::string>(x, "storage_lifetime_ns", "ladder");
      d.storage_lifetime = tau == "inf" || tau == ".inf" ? unbounded_time
                                                          : yaml::as<double>(x["storage_lifetime_ns"], "storage_lifetime_ns") * 1e-9;
      if (!(d.signal_wavelength > 0.0) || !(d.control_wavelength > 0.0) || !(d.storage_lifetime > 0.0))
        throw ConfigError("ladder wavelengths and lifetime must be positive", line_of(x));
      c.inline_ladders.push_back(d);
    }
  }
  if (const auto d = root["drift"]) {
    yaml::check_keys(d, {"enabled", "rate_per_s"}, "drift");
    c.drift_enabled = yaml::get_or<bool>(d, "enabled", false);
    if (const auto r = d["rate_per_s"]) {
      if (yaml::as<std::string>(r, "rate_per_s") != "auto") c.drift_rate = yaml::as<double>(r, "rate_per_s");
    }
  }
  if (const auto i = root["integrator"]) {
    yaml::check_keys(i, {"rtol", "atol_rel", "max_step_fraction", "quiescent_fraction"}, "integrator");
    c.controls.rtol = yaml::get_or<double>(i, "rtol", c.controls.rtol);
    c.controls.atol_rel = yaml::get_or<double>(i, "atol_rel", c.controls.atol_rel);
    c.controls.max_step_fraction = yaml::get_or<double>(i, "max_step_fraction", c.controls.max_step_fraction);
    c.controls.quiescent_fraction = yaml::get_or<double>(i, "quiescent_fraction", c.controls.quiescent_fraction);
    if (!(c.controls.rtol > 0.0) || !(c.controls.atol_rel > 0.0) || !(c.controls.max_step_fraction > 0.0) ||
        c.controls.quiescent_fraction < 0.0)
      throw ConfigError("integrator tolerances must be positive", line_of(i));
  }
  c.write_trajectory = yaml::get_or<bool>(root, "write_trajectory", false);
  if (const auto t = root["threads"]) c.controls.threads = yaml::as<unsigned>(t, "threads");
  if (const auto d = root["dephasing"]) {
    yaml::check_keys(d, {"distribution", "t_max_ns", "points"}, "dephasing");
    c.dephasing.distribution = yaml::get_or<std::string>(d, "distribution", "pumped");
    if (c.dephasing.distribution != "pumped" && c.dephasing.distribution != "thermal")
      throw ConfigError("dephasing distribution must be pumped or thermal", line_of(d["distribution"]));
    c.dephasing.t_max = yaml::get_or<double>(d, "t_max_ns", 200.0) * 1e-9;
    c.dephasing.points = yaml::get_or<std::size_t>(d, "points", 401);
    if (!(c.dephasing.t_max > 0.0) || c.dephasing.points < 2)
      throw ConfigError("dephasing needs t_max_ns > 0 and points >= 2", line_of(d));
  }
  if (const auto f = root["fit"]) {
    yaml::check_keys(f, {"measured", "initial", "bounds", "max_evaluations"}, "fit");
    FitSpec spec;
    spec.measured = resolve(base, yaml::require<std::string>(f, "measured", "fit"));
    if (!std::filesystem::exists(spec.measured))
      throw ConfigError("measured spectrum '" + spec.measured.string() + "' does not exist", line_of(f["measured"]));
    if (const auto i = f["initial"]) {
      yaml::check_keys(i, {"power_mW", "linewidth_MHz", "velocity_class_m_s"}, "fit.initial");
      spec.initial.power = yaml::get_or<double>(i, "power_mW", spec.initial.power * 1e3) * 1e-3;
      spec.initial.linewidth = constants::mhz_to_rad_s(
          yaml::get_or<double>(i, "linewidth_MHz", constants::rad_s_to_mhz(spec.initial.linewidth)));
      spec.initial.velocity = yaml::get_or<double>(i, "velocity_class_m_s", spec.initial.velocity);
    }
    if (const auto b = f["bounds"]) {
      yaml::check_keys(b, {"power_mW", "linewidth_MHz", "velocity_class_m_s"}, "fit.bounds");
      auto pair = [&](const char* key, Interval& iv, double scale) {
        if (const auto n = b[key]) {
          if (!n.IsSequence() || n.size() != 2) throw ConfigError(std::string(key) + " bounds must be [lo, hi]", line_of(n));
          iv = {yaml::as<double>(n[0], key) * scale, yaml::as<double>(n[1], key) * scale};
        }
      };
      pair("power_mW", spec.initial.power_bounds, 1e-3);
      pair("linewidth_MHz", spec.initial.linewidth_bounds, constants::mhz_to_rad_s(1.0));
      pair("velocity_class_m_s", spec.initial.velocity_bounds, 1.0);
    }
    spec.options.max_evaluations = yaml::get_or<int>(f, "max_evaluations", 500);
    if (spec.options.max_evaluations < 10) throw ConfigError("max_evaluations must be >= 10", line_of(f["max_evaluations"]));
    spec.initial.validate();
    c.fit = spec;
  }
  if (const auto r = root["relaxation"]) {
    yaml::check_keys(r, {"series"}, "relaxation");
    c.relaxation_series = resolve(base, yaml::require<std::string>(r, "series", "relaxation"));
    if (!std::filesystem::exists(*c.relaxation_series))
      throw ConfigError("relaxation series '" + c.relaxation_series->string() + "' does not exist", line_of(r["series"]));
  }
  if (const auto s = root["sweep"]) {
    yaml::check_keys(s, {"powers_mW", "durations_us", "linewidth_MHz", "velocity_class_m_s"}, "sweep");
    if (s["powers_mW"]) c.sweep.powers = scaled_list(s["powers_mW"], 1e-3, "powers_mW");
    if (s["durations_us"]) c.sweep.durations = scaled_list(s["durations_us"], 1e-6, "durations_us");
    if (auto lw = yaml::get_optional<double>(s, "linewidth_MHz")) c.sweep.linewidth = constants::mhz_to_rad_s(*lw);
    c.sweep.velocity_class = yaml::get_optional<double>(s, "velocity_class_m_s");
    for (double p : c.sweep.powers)
      if (p < 0.0) throw ConfigError("sweep powers must be >= 0", line_of(s["powers_mW"]));
    for (double d : c.sweep.durations)
      if (d < 0.0) throw ConfigError("sweep durations must be >= 0", line_of(s["durations_us"]));
  }
  if (const auto p = root["predict"]) {
    yaml::check_keys(p, {"temperature_C", "temperature_K", "pump", "pump_back", "rows"}, "predict");
    PredictSpec spec;
    if (p["temperature_C"] || p["temperature_K"]) spec.temperature = temperature_of(p, "predict");
    spec.pump = parse_stage(yaml::require<YAML::Node>(p, "pump", "predict"), "predict.pump", StageRole::pump);
    spec.pump_back =
        parse_stage(yaml::require<YAML::Node>(p, "pump_back", "predict"), "predict.pump_back", StageRole::pump_back);
    const auto rows = yaml::require<YAML::Node>(p, "rows", "predict");
    if (!rows.IsSequence() || rows.size() == 0) throw ConfigError("predict.rows must be a non-empty list", line_of(rows));
    for (const auto& r : rows) {
      yaml::check_keys(r, {"species", "ladder", "storage_lifetime_ns"}, "predict row");
      PredictRow row;
      row.species = resolve(base, yaml::require<std::string>(r, "species", "predict row"));
      if (!std::filesystem::exists(row.species))
        throw ConfigError("species file '" + row.species.string() + "' does not exist", line_of(r["species"]));
      row.ladder = yaml::require<std::string>(r, "ladder", "predict row");
      if (auto t = yaml::get_optional<double>(r, "storage_lifetime_ns")) {
        if (!(*t > 0.0)) throw ConfigError("storage_lifetime_ns must be positive", line_of(r["storage_lifetime_ns"]));
        row.storage_lifetime = *t * 1e-9;
      }
      spec.rows.push_back(row);
    }
    c.predict = spec;
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  return parse_config(yaml::load_file(path.string()), path);
}

// ---------------------------------------------------------------------------
// Resolution against a species

/// Builds a laser stage from its spec: the transition defaults by role, the
/// centre comes from the velocity class or detuning (default: zero class).
inline LaserStage build_stage(const StageSpec& s, const Species& species, const BeamGeometry& geometry) {
  LaserStage st;
  st.role = s.role;
  st.duration = s.duration;
  if (s.role == StageRole::dark) {
    st.power = 0.0;
    return st;
  }
  std::string label = s.transition;
  if (label.empty()) label = s.role == StageRole::pump_back ? species.pump_back_transition : species.pump_transition;
  const Transition* t = species.find_transition(label);
  if (!t) throw ConfigError("species " + species.name + " has no transition '" + label + "'", s.line);
  st.transition = t->label;
  st.power = s.power;
  st.linewidth = s.linewidth;
  st.beam_radius = s.beam_radius.value_or(geometry.pump_back_radius);
  st.propagation_sign = s.propagation_sign;
  st.profile = s.profile;
  st.center_omega = s.detuning ? t->omega0 + *s.detuning
                               : doppler_shifted_resonance(t->omega0, s.velocity_class.value_or(0.0), s.propagation_sign);
  try {
    st.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), s.line);
  }
  return st;
}

inline PulseSequence build_sequence(const ExperimentConfig& c, const Species& species) {
  PulseSequence seq;
  for (const auto& s : c.preamble) seq.preamble.push_back(build_stage(s, species, c.geometry));
  for (const auto& s : c.stages) seq.stages.push_back(build_stage(s, species, c.geometry));
  seq.repeat = c.repeat;
  return seq;
}

inline ThermalEnsemble build_ensemble(const ExperimentConfig& c, const Species& species) {
  ThermalEnsemble e;
  e.temperature = c.temperature;
  e.cell_length = c.cell_length;
  e.density = c.density ? *c.density : vapour_number_density(species, c.temperature);
  return e;
}

inline std::shared_ptr<const VelocityGrid> build_grid(const ExperimentConfig& c, const Species& species) {
  const double sigma = thermal_velocity_sigma(c.temperature, species.mass);
  return std::make_shared<const VelocityGrid>(VelocityGrid::thermal(sigma, c.grid.points, c.grid.half_span_sigma));
}

inline ProbeGrid build_probe(const ExperimentConfig& c, const Species& species) {
  const std::string ref = c.probe.reference.empty() ? species.probe_reference : c.probe.reference;
  const Transition* t = species.find_transition(ref);
  if (!t) throw ConfigError("species " + species.name + " has no probe reference '" + ref + "'");
  return ProbeGrid::linear(*t, c.probe.start_mhz, c.probe.stop_mhz, c.probe.points);
}

inline std::vector<const Transition*> build_probe_lines(const ExperimentConfig& c, const Species& species) {
  if (c.probe.lines.empty()) return default_probe_lines(species);
  std::vector<const Transition*> out;
  for (const auto& l : c.probe.lines) {
    const Transition* t = species.find_transition(l);
    if (!t) throw ConfigError("species " + species.name + " has no probe line '" + l + "'");
    out.push_back(t);
  }
  return out;
}

inline std::vector<LadderConfig> build_ladders(const ExperimentConfig& c, const Species& species) {
  std::vector<LadderConfig> out;
  for (const auto& name : c.ladders) out.push_back(LadderConfig::from(species.ladder(name), species, c.temperature));
  for (const auto& d : c.inline_ladders) out.push_back(LadderConfig::from(d, species, c.temperature));
  return out;
}

}  // namespace vsp
