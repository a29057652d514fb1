#pragma once

// Velocity-class-resolved optical pumping rate equations.
//
// Each velocity class carries four densities: the auxiliary ground level
// (|aux>, F=3 in Cs), the memory ground level (|g>, F=4 in Cs) and two
// excited levels e1 (driven by pump/reset stages) and e2 (driven by the
// pump-back). A stage drives one ground->excited transition; both excited
// levels always decay spontaneously into both ground levels. Classes are
// uncoupled, so each one is a 4x4 linear system with piecewise-constant
// coefficients.

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsp/atomic_data.hpp"
#include "vsp/errors.hpp"
#include "vsp/ode.hpp"
#include "vsp/parallel.hpp"

namespace vsp {

// ---------------------------------------------------------------------------
// Velocity grid

class VelocityGrid {
public:
  VelocityGrid(std::vector<double> velocities, std::vector<double> weights)
      : v_(std::move(velocities)), w_(std::move(weights)) {
    if (v_.empty() || v_.size() != w_.size()) throw std::invalid_argument("velocity grid: size mismatch");
    for (std::size_t i = 0; i < v_.size(); ++i) {
      if (!(w_[i] > 0.0)) throw std::invalid_argument("velocity grid: weights must be positive");
      if (i > 0 && !(v_[i] > v_[i - 1])) throw std::invalid_argument("velocity grid: must be strictly increasing");
    }
  }

  /// `points` equally spaced samples over [-half_span, half_span] with
  /// trapezoidal weights.
  static VelocityGrid uniform(double half_span, std::size_t points) {
    if (points < 2 || !(half_span > 0.0)) throw std::invalid_argument("velocity grid: need >= 2 points and span > 0");
    std::vector<double> v(points), w(points);
    const double dv = 2.0 * half_span / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
      v[i] = -half_span + dv * static_cast<double>(i);
      w[i] = (i == 0 || i + 1 == points) ? 0.5 * dv : dv;
    }
    v[points / 2] = (points % 2 == 1) ? 0.0 : v[points / 2];
    return VelocityGrid(std::move(v), std::move(w));
  }

  /// Default grid for an ensemble: 2001 points over +-6 sigma_v.
  static VelocityGrid thermal(double sigma_v, std::size_t points = 2001, double half_span_sigma = 6.0) {
    return uniform(half_span_sigma * sigma_v, points);
  }

  std::size_t size() const { return v_.size(); }
  double velocity(std::size_t i) const { return v_[i]; }
  double weight(std::size_t i) const { return w_[i]; }
  std::span<const double> velocities() const { return v_; }
  std::span<const double> weights() const { return w_; }

  double integrate(std::span<const double> values) const {
    if (values.size() != v_.size()) throw std::invalid_argument("velocity grid: value count mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i) s += w_[i] * values[i];
    return s;
  }

private:
  std::vector<double> v_;
  std::vector<double> w_;
};

// ---------------------------------------------------------------------------
// Populations

enum Slot : std::size_t { aux_slot = 0, ground_slot = 1, excited1_slot = 2, excited2_slot = 3 };

/// Densities (atoms/m^3 per m/s) of one velocity class, indexed by Slot.
using ClassPopulation = std::array<double, 4>;

inline double total(const ClassPopulation& n) { return n[0] + n[1] + n[2] + n[3]; }

struct PopulationState {
  std::shared_ptr<const VelocityGrid> grid;
  std::vector<ClassPopulation> classes;
  double time = 0.0;  // s

  std::size_t size() const { return classes.size(); }

  std::vector<double> level(Slot s) const {
    std::vector<double> out(classes.size());
    for (std::size_t i = 0; i < classes.size(); ++i) out[i] = classes[i][s];
    return out;
  }

  /// Number density (atoms/m^3) of one level summed over velocity.
  double integrated(Slot s) const { return grid->integrate(level(s)); }

  std::vector<double> class_totals() const {
    std::vector<double> out(classes.size());
    for (std::size_t i = 0; i < classes.size(); ++i) out[i] = total(classes[i]);
    return out;
  }
};

/// Elementwise sum of two states on the same grid.
inline PopulationState operator+(const PopulationState& a, const PopulationState& b) {
  if (a.size() != b.size()) throw std::invalid_argument("population states on different grids");
  PopulationState out = a;
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t k = 0; k < 4; ++k) out.classes[i][k] += b.classes[i][k];
  return out;
}

/// Thermal equilibrium: ground levels share the density in the ratio of their
/// degeneracies, each Maxwell-Boltzmann distributed; excited levels empty.
inline PopulationState thermal_state(const ThermalEnsemble& ensemble, const Species& species,
                                     std::shared_ptr<const VelocityGrid> grid) {
  ensemble.validate();
  const double g_aux = species.degeneracy(species.auxiliary_ref());
  const double g_gnd = species.degeneracy(species.memory_ground_ref());
  PopulationState s;
  s.grid = std::move(grid);
  s.classes.resize(s.grid->size());
  for (std::size_t i = 0; i < s.classes.size(); ++i) {
    const double n = ensemble.density * maxwell_boltzmann_pdf(s.grid->velocity(i), ensemble, species);
    s.classes[i] = {n * g_aux / (g_aux + g_gnd), n * g_gnd / (g_aux + g_gnd), 0.0, 0.0};
  }
  return s;
}

// ---------------------------------------------------------------------------
// Laser stages

enum class StageRole { pump, pump_back, reset, dark };
enum class LaserProfile { lorentzian, gaussian };

inline const char* to_string(StageRole r) {
  switch (r) {
    case StageRole::pump: return "pump";
    case StageRole::pump_back: return "pump-back";
    case StageRole::reset: return "reset";
    case StageRole::dark: return "dark";
  }
  return "?";
}

struct LaserStage {
  StageRole role = StageRole::dark;
  std::string transition;          // species transition label; empty for dark stages
  double center_omega = 0.0;       // rad/s (lab frame)
  double linewidth = constants::mhz_to_rad_s(6.0);  // FWHM, rad/s
  double power = 0.0;              // W
  double beam_radius = 1.5e-3;     // m
  double duration = 0.0;           // s
  int propagation_sign = +1;       // +1 along +z, -1 counter-propagating
  LaserProfile profile = LaserProfile::lorentzian;

  void validate() const {
    if (!(duration >= 0.0) || !std::isfinite(duration)) throw std::invalid_argument("stage duration must be finite and >= 0");
    if (!(power >= 0.0)) throw std::invalid_argument("stage power must be >= 0");
    if (power > 0.0 && !(linewidth > 0.0)) throw std::invalid_argument("stage linewidth must be > 0 when lit");
    if (power > 0.0 && transition.empty()) throw std::invalid_argument("lit stage needs a target transition");
    if (propagation_sign != 1 && propagation_sign != -1) throw std::invalid_argument("propagation sign must be +1 or -1");
  }

  bool lit() const { return power > 0.0; }

  /// Total intensity P / (pi r^2), W/m^2.
  double intensity() const {
    if (!(beam_radius > 0.0)) throw std::domain_error("beam radius must be positive");
    return power / (constants::pi * beam_radius * beam_radius);
  }
};

/// Stage tuned to be resonant with atoms moving at `velocity_class`.
inline LaserStage make_stage(StageRole role, const Transition& transition, double power, double linewidth,
                             double velocity_class, double duration, double beam_radius, int propagation_sign = +1) {
  LaserStage s;
  s.role = role;
  s.transition = transition.label;
  s.center_omega = doppler_shifted_resonance(transition.omega0, velocity_class, propagation_sign);
  s.linewidth = linewidth;
  s.power = power;
  s.beam_radius = beam_radius;
  s.duration = duration;
  s.propagation_sign = propagation_sign;
  s.validate();
  return s;
}

inline LaserStage dark_stage(double duration) {
  LaserStage s;
  s.duration = duration;
  return s;
}

/// Velocity class resonant with the stage's centre frequency.
inline double selected_velocity(const LaserStage& stage, const Transition& transition) {
  return constants::speed_of_light * (stage.center_omega / transition.omega0 - 1.0) /
         static_cast<double>(stage.propagation_sign);
}

/// Laser spectral intensity I(w), W/m^2 per rad/s; integrates to intensity().
inline double spectral_intensity(const LaserStage& stage, double omega) {
  const double i_tot = stage.intensity();
  if (i_tot == 0.0) return 0.0;
  return stage.profile == LaserProfile::lorentzian ? i_tot * lorentzian_lineshape(omega, stage.center_omega, stage.linewidth)
                                                   : i_tot * gaussian_lineshape(omega, stage.center_omega, stage.linewidth);
}

/// Stimulated rate (1/s) for atoms of class vz on `transition`:
/// (B/c) * int I(w) g_L(w - w0(1 + s vz/c)) dw, in closed form. Lorentzian
/// laser: Lorentzian of summed widths; Gaussian laser: Voigt profile.
inline double overlap_rate(const LaserStage& stage, const Transition& transition, double vz) {
  if (!stage.lit()) return 0.0;
  const double resonance = doppler_shifted_resonance(transition.omega0, vz, stage.propagation_sign);
  const double shape = stage.profile == LaserProfile::lorentzian
                           ? lorentzian_lineshape(stage.center_omega, resonance, stage.linewidth + transition.linewidth)
                           : voigt_lineshape(stage.center_omega, resonance, stage.linewidth, transition.linewidth);
  return transition.einstein_b / constants::speed_of_light * stage.intensity() * shape;
}

struct PulseSequence {
  std::vector<LaserStage> preamble;  // run once
  std::vector<LaserStage> stages;    // run `repeat` times after the preamble
  int repeat = 1;

  void validate() const {
    if (preamble.empty() && stages.empty()) throw std::invalid_argument("pulse sequence is empty");
    if (repeat < 0) throw std::invalid_argument("repeat count must be >= 0");
    for (const auto& s : preamble) s.validate();
    for (const auto& s : stages) s.validate();
  }

  std::vector<const LaserStage*> expanded() const {
    std::vector<const LaserStage*> out;
    for (const auto& s : preamble) out.push_back(&s);
    for (int r = 0; r < repeat; ++r)
      for (const auto& s : stages) out.push_back(&s);
    return out;
  }

  double total_duration() const {
    double t = 0.0;
    for (const auto* s : expanded()) t += s->duration;
    return t;
  }
};

// ---------------------------------------------------------------------------
// Rate model

/// Ground/excited slot pair addressed by a stage, with its stimulated rate.
struct Drive {
  double rate = 0.0;  // 1/s
  Slot ground = aux_slot;
  Slot excited = excited1_slot;
  double degeneracy_ratio = 1.0;  // g_F / g_e
};

class RateModel {
public:
  RateModel(const Species& species, LevelRef excited1, LevelRef excited2) : species_(&species) {
    levels_ = {excited1, excited2};
    for (std::size_t j = 0; j < 2; ++j) {
      if (levels_[j].manifold <= 0) throw ConfigError("excited slot must reference an excited level");
      a_aux_[j] = species.einstein_a(levels_[j], species.auxiliary_ref());
      a_ground_[j] = species.einstein_a(levels_[j], species.memory_ground_ref());
      a_total_[j] = a_aux_[j] + a_ground_[j];
    }
  }

  /// Excited slots from the sequence: e1 is the upper level of the first
  /// pump/reset stage, e2 that of the first pump-back stage; species defaults
  /// fill in whatever the sequence does not use.
  static RateModel for_sequence(const Species& species, const PulseSequence& sequence) {
    std::optional<LevelRef> e1, e2;
    for (const auto* s : sequence.expanded()) {
      if (!s->lit()) continue;
      const LevelRef up = species.transition(s->transition).upper;
      if (s->role == StageRole::pump_back) {
        if (!e2) e2 = up;
      } else if (!e1) {
        e1 = up;
      }
    }
    if (!e1) e1 = species.pump_transition.empty() ? e2 : std::optional(species.transition(species.pump_transition).upper);
    if (!e2)
      e2 = species.pump_back_transition.empty() ? e1
                                                : std::optional(species.transition(species.pump_back_transition).upper);
    if (!e1 || !e2) throw ConfigError("cannot determine excited levels for the rate model");
    RateModel model(species, *e1, *e2);
    for (const auto* s : sequence.expanded())
      if (s->lit()) (void)model.drive_template(*s);
    return model;
  }

  static RateModel for_stage(const Species& species, const LaserStage& stage) {
    PulseSequence seq;
    seq.preamble.push_back(stage);
    return for_sequence(species, seq);
  }

  const Species& species() const { return *species_; }
  LevelRef excited_level(std::size_t j) const { return levels_.at(j); }
  double decay_to_aux(std::size_t j) const { return a_aux_.at(j); }
  double decay_to_ground(std::size_t j) const { return a_ground_.at(j); }
  double decay_total(std::size_t j) const { return a_total_.at(j); }

  /// Slots and degeneracy ratio for a lit stage (rate left at zero).
  Drive drive_template(const LaserStage& stage) const {
    Drive d;
    if (!stage.lit()) return d;
    const Transition& t = species_->transition(stage.transition);
    if (t.lower == species_->auxiliary_ref())
      d.ground = aux_slot;
    else if (t.lower == species_->memory_ground_ref())
      d.ground = ground_slot;
    else
      throw ConfigError("stage transition " + t.label + " does not start from a ground level");
    if (t.upper == levels_[0])
      d.excited = excited1_slot;
    else if (t.upper == levels_[1])
      d.excited = excited2_slot;
    else
      throw ConfigError("stage transition " + t.label + " targets an excited level outside the rate model");
    d.degeneracy_ratio = static_cast<double>(species_->degeneracy(t.lower)) / species_->degeneracy(t.upper);
    return d;
  }

  Drive drive(const LaserStage& stage, double vz) const {
    Drive d = drive_template(stage);
    if (stage.lit()) d.rate = overlap_rate(stage, species_->transition(stage.transition), vz);
    return d;
  }

  /// Time derivatives of one class. `thermal` and `drift_rate` add the
  /// optional relaxation term -drift_rate * (n - n_thermal).
  void derivatives(const ClassPopulation& n, const Drive& d, ClassPopulation& dn,
                   const ClassPopulation* thermal = nullptr, double drift_rate = 0.0) const {
    const double ne1 = n[excited1_slot];
    const double ne2 = n[excited2_slot];
    dn[aux_slot] = a_aux_[0] * ne1 + a_aux_[1] * ne2;
    dn[ground_slot] = a_ground_[0] * ne1 + a_ground_[1] * ne2;
    dn[excited1_slot] = -a_total_[0] * ne1;
    dn[excited2_slot] = -a_total_[1] * ne2;
    if (d.rate != 0.0) {
      const double x = d.rate * (n[d.ground] - d.degeneracy_ratio * n[d.excited]);
      dn[d.ground] -= x;
      dn[d.excited] += x;
    }
    if (thermal && drift_rate != 0.0)
      for (std::size_t k = 0; k < 4; ++k) dn[k] -= drift_rate * (n[k] - (*thermal)[k]);
  }

private:
  const Species* species_;
  std::array<LevelRef, 2> levels_{};
  std::array<double, 2> a_aux_{}, a_ground_{}, a_total_{};
};

/// Per-class time derivatives of a whole state under one stage.
inline std::vector<ClassPopulation> derivatives(const PopulationState& state, const LaserStage& stage,
                                                const RateModel& model) {
  std::vector<ClassPopulation> out(state.size());
  for (std::size_t i = 0; i < state.size(); ++i)
    model.derivatives(state.classes[i], model.drive(stage, state.grid->velocity(i)), out[i]);
  return out;
}

inline std::vector<ClassPopulation> derivatives(const PopulationState& state, const LaserStage& stage,
                                                const Species& species) {
  return derivatives(state, stage, RateModel::for_stage(species, stage));
}

// ---------------------------------------------------------------------------
// Time evolution

struct EvolveControls {
  double rtol = 1e-8;
  double atol_rel = 1e-12;          // absolute tolerance as a fraction of the class total
  double max_step_fraction = 0.1;   // max step = fraction * stage duration
  // A class whose driven ground level and excited levels together hold less
  // than this fraction of its total is left as is for the rest of the stage;
  // nothing larger than that can still move. Explicit steps at the stability
  // limit leave stiff components hovering near atol instead of decaying, so
  // the cutoff sits at the absolute tolerance. 0 disables it.
  double quiescent_fraction = 1e-12;
  double drift_rate = 0.0;          // optional relaxation towards `thermal_reference`, 1/s
  std::shared_ptr<const PopulationState> thermal_reference;
  unsigned threads = 0;
};

struct EvolveStats {
  long accepted = 0;
  long rejected = 0;
};

/// Integrates one class over one stage. Throws NumericError naming the class.
inline ode::Stats evolve_class(ClassPopulation& n, const Drive& drive, const RateModel& model, double duration,
                               const EvolveControls& controls, std::size_t class_index,
                               const ClassPopulation* thermal = nullptr) {
  const double drift = thermal ? controls.drift_rate : 0.0;
  const double tot = total(n);
  if (duration == 0.0 || tot == 0.0) return {};
  const double quiet = drift == 0.0 ? controls.quiescent_fraction * std::abs(tot) : -1.0;
  auto active = [&](const ClassPopulation& y) {
    const double driven = drive.rate != 0.0 ? std::abs(y[drive.ground]) : 0.0;
    return driven + std::abs(y[excited1_slot]) + std::abs(y[excited2_slot]);
  };
  if (drift == 0.0 && active(n) <= quiet) return {};
  ode::Controls ctl;
  ctl.rtol = controls.rtol;
  ctl.atol = controls.atol_rel * std::abs(tot);
  ctl.max_step = controls.max_step_fraction * duration;
  auto rhs = [&](double, const ClassPopulation& y, ClassPopulation& dy) { model.derivatives(y, drive, dy, thermal, drift); };
  // Decaying excited populations would otherwise crawl through subnormal
  // numbers, which costs two orders of magnitude per operation.
  const double floor = 1e-30 * std::abs(tot);
  auto monitor = [&](ClassPopulation& y) {
    for (double& x : y)
      if (std::abs(x) < floor) x = 0.0;
    return active(y) <= quiet;
  };
  const ode::Stats st = ode::integrate_dopri5<4>(rhs, n, 0.0, duration, ctl, monitor);
  if (st.status != ode::Status::ok) {
    const char* why = st.status == ode::Status::step_underflow   ? "step size underflow"
                      : st.status == ode::Status::too_many_steps ? "step budget exhausted"
                                                                 : "non-finite state";
    throw NumericError(std::string("integrator failure (") + why + ") in velocity class " +
                       std::to_string(class_index));
  }
  return st;
}

inline PopulationState evolve_stage(const PopulationState& state, const LaserStage& stage, const RateModel& model,
                                    const EvolveControls& controls = {}, EvolveStats* stats = nullptr) {
  stage.validate();
  PopulationState out = state;
  out.time = state.time + stage.duration;
  if (stage.duration == 0.0) return out;
  const std::size_t n = state.size();
  std::vector<ode::Stats> per_class(n);
  const PopulationState* thermal = controls.thermal_reference.get();
  if (thermal && thermal->size() != n) throw std::invalid_argument("thermal reference grid mismatch");
  parallel_for(n, controls.threads, [&](std::size_t i) {
    const Drive d = model.drive(stage, state.grid->velocity(i));
    per_class[i] = evolve_class(out.classes[i], d, model, stage.duration, controls, i,
                                thermal ? &thermal->classes[i] : nullptr);
  });
  if (stats)
    for (const auto& s : per_class) {
      stats->accepted += s.accepted;
      stats->rejected += s.rejected;
    }
  return out;
}

inline PopulationState evolve_stage(const PopulationState& state, const LaserStage& stage, const Species& species,
                                    const EvolveControls& controls = {}) {
  return evolve_stage(state, stage, RateModel::for_stage(species, stage), controls);
}

struct Trajectory {
  std::vector<PopulationState> snapshots;  // one after every stage
  std::vector<StageRole> roles;
};

inline Trajectory run_sequence(const PopulationState& initial, const PulseSequence& sequence, const Species& species,
                               const EvolveControls& controls = {}, EvolveStats* stats = nullptr) {
  sequence.validate();
  const RateModel model = RateModel::for_sequence(species, sequence);
  Trajectory traj;
  const auto stages = sequence.expanded();
  traj.snapshots.reserve(stages.size());
  const PopulationState* current = &initial;
  for (const auto* stage : stages) {
    traj.snapshots.push_back(evolve_stage(*current, *stage, model, controls, stats));
    traj.roles.push_back(stage->role);
    current = &traj.snapshots.back();
  }
  return traj;
}

/// Final state after the whole sequence.
inline PopulationState run_to_end(const PopulationState& initial, const PulseSequence& sequence, const Species& species,
                                  const EvolveControls& controls = {}) {
  sequence.validate();
  const RateModel model = RateModel::for_sequence(species, sequence);
  PopulationState s = initial;
  for (const auto* stage : sequence.expanded()) s = evolve_stage(s, *stage, model, controls);
  return s;
}

}  // namespace vsp
