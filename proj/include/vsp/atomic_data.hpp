#pragma once

// Species and transition data for alkali D lines, thermal velocity statistics,
// line shapes, Doppler shifts and beam-geometry drift estimates.

#include <algorithm>
#include <cmath>
#include <compare>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vsp/constants.hpp"
#include "vsp/errors.hpp"

namespace vsp {

struct HyperfineLevel {
  std::string label;          // e.g. "F=4" or "F'=5"
  double F = 0.0;
  int degeneracy = 1;         // 2F+1
  double energy_offset = 0.0; // rad/s relative to the manifold centroid
};

/// A fine-structure manifold with its hyperfine levels. Index 0 of
/// Species::manifolds is always the ground manifold.
struct Manifold {
  std::string name;             // "6S1/2", "6P3/2", ...
  std::string line;             // "D1"/"D2" for excited manifolds, empty for ground
  double J = 0.5;
  double centroid_omega = 0.0;  // rad/s above the ground-manifold centroid
  double linewidth = 0.0;       // natural FWHM (= total decay rate), rad/s
  std::vector<HyperfineLevel> levels;
};

struct LevelRef {
  int manifold = 0;
  int level = 0;
  auto operator<=>(const LevelRef&) const = default;
};

struct Transition {
  std::string label;        // "D2 F=4->F'=5"
  LevelRef lower;
  LevelRef upper;
  double omega0 = 0.0;      // rad/s
  double einstein_a = 0.0;  // spontaneous rate upper -> lower, 1/s
  // Stimulated absorption coefficient lower -> upper for spectral energy
  // density per unit angular frequency, m^3/(J s^2). Rate = (B/c) * int I(w) g(w) dw.
  double einstein_b = 0.0;
  double linewidth = 0.0;   // natural FWHM of the upper level, rad/s
};

/// Einstein A from B at frequency w for lower/upper degeneracies g_l, g_u.
inline double einstein_a_from_b(double b, double omega, int g_lower, int g_upper) {
  using namespace constants;
  return hbar * omega * omega * omega / (pi * pi * speed_of_light * speed_of_light * speed_of_light) *
         static_cast<double>(g_lower) / static_cast<double>(g_upper) * b;
}

inline double einstein_b_from_a(double a, double omega, int g_lower, int g_upper) {
  using namespace constants;
  return a * pi * pi * speed_of_light * speed_of_light * speed_of_light /
         (hbar * omega * omega * omega) * static_cast<double>(g_upper) / static_cast<double>(g_lower);
}

/// Ladder-memory optical data bundled with a species.
struct LadderData {
  std::string name;
  double signal_wavelength = 0.0;   // m
  double control_wavelength = 0.0;  // m
  double storage_lifetime = 0.0;    // s
};

/// log10(P/torr) = a - b/T, with separate solid and liquid branches.
struct VapourPressureModel {
  double melting_point = 0.0;
  double solid_a = 0.0, solid_b = 0.0;
  double liquid_a = 0.0, liquid_b = 0.0;

  double pressure_pa(double temperature) const {
    const bool solid = temperature < melting_point;
    const double a = solid ? solid_a : liquid_a;
    const double b = solid ? solid_b : liquid_b;
    return std::pow(10.0, a - b / temperature) * constants::torr;
  }
};

struct Species {
  std::string name;
  double mass = 0.0;          // kg
  double nuclear_spin = 0.0;
  std::vector<Manifold> manifolds;
  int memory_ground = 1;      // index into ground levels (|g>)
  int auxiliary = 0;          // index into ground levels (|aux>)
  std::vector<Transition> transitions;
  std::string pump_transition;
  std::string pump_back_transition;
  std::string probe_line;
  std::string probe_reference;
  std::optional<VapourPressureModel> vapour_pressure;
  std::vector<LadderData> ladders;
  std::vector<std::string> provenance;

  const Manifold& ground() const { return manifolds.front(); }

  const HyperfineLevel& level(LevelRef ref) const {
    return manifolds.at(static_cast<std::size_t>(ref.manifold)).levels.at(static_cast<std::size_t>(ref.level));
  }

  int degeneracy(LevelRef ref) const { return level(ref).degeneracy; }

  LevelRef memory_ground_ref() const { return {0, memory_ground}; }
  LevelRef auxiliary_ref() const { return {0, auxiliary}; }

  const Transition* find_transition(std::string_view label) const {
    auto it = std::find_if(transitions.begin(), transitions.end(),
                           [&](const Transition& t) { return t.label == label; });
    return it == transitions.end() ? nullptr : &*it;
  }

  const Transition& transition(std::string_view label) const {
    if (const Transition* t = find_transition(label)) return *t;
    throw ConfigError("species " + name + " has no transition '" + std::string(label) + "'");
  }

  const Transition* find_transition(LevelRef lower, LevelRef upper) const {
    auto it = std::find_if(transitions.begin(), transitions.end(),
                           [&](const Transition& t) { return t.lower == lower && t.upper == upper; });
    return it == transitions.end() ? nullptr : &*it;
  }

  /// Spontaneous rate upper -> lower, zero when the pair is dipole-forbidden.
  double einstein_a(LevelRef upper, LevelRef lower) const {
    const Transition* t = find_transition(lower, upper);
    return t ? t->einstein_a : 0.0;
  }

  /// All transitions of one line (e.g. "D2") starting from a ground level.
  std::vector<const Transition*> transitions_from(LevelRef lower, std::string_view line) const {
    std::vector<const Transition*> out;
    for (const auto& t : transitions)
      if (t.lower == lower && manifolds.at(static_cast<std::size_t>(t.upper.manifold)).line == line)
        out.push_back(&t);
    return out;
  }

  const LadderData& ladder(std::string_view ladder_name) const {
    auto it = std::find_if(ladders.begin(), ladders.end(),
                           [&](const LadderData& l) { return l.name == ladder_name; });
    if (it == ladders.end())
      throw ConfigError("species " + name + " has no ladder '" + std::string(ladder_name) + "'");
    return *it;
  }
};

struct ThermalEnsemble {
  double temperature = 296.15;  // K
  double density = 0.0;         // atoms / m^3
  double cell_length = 0.025;   // m

  void validate() const {
    if (!(temperature > 0.0)) throw std::domain_error("ensemble temperature must be positive");
    if (!(density >= 0.0)) throw std::domain_error("ensemble density must be non-negative");
    if (!(cell_length > 0.0)) throw std::domain_error("cell length must be positive");
  }
};

struct BeamGeometry {
  double pump_back_radius = 1.5e-3;  // m
  double probe_radius = 0.3e-3;      // m

  void validate() const {
    if (!(probe_radius > 0.0) || !(pump_back_radius > probe_radius))
      throw std::domain_error("beam geometry requires pump-back radius > probe radius > 0");
  }
};

/// One-dimensional thermal velocity spread sqrt(kT/m).
inline double thermal_velocity_sigma(double temperature, double mass) {
  if (!(temperature > 0.0)) throw std::domain_error("temperature must be positive");
  return std::sqrt(constants::boltzmann * temperature / mass);
}

inline double maxwell_boltzmann_pdf(double vz, const ThermalEnsemble& ensemble, const Species& species) {
  const double sigma = thermal_velocity_sigma(ensemble.temperature, species.mass);
  const double u = vz / sigma;
  return std::exp(-0.5 * u * u) / (sigma * std::sqrt(constants::two_pi));
}

/// Unit-area Lorentzian with FWHM `fwhm`, evaluated at `omega`.
inline double lorentzian_lineshape(double omega, double center, double fwhm) {
  if (!(fwhm > 0.0)) throw std::domain_error("Lorentzian width must be positive");
  const double d = omega - center;
  const double hw = 0.5 * fwhm;
  return (fwhm / constants::two_pi) / (d * d + hw * hw);
}

/// Unit-area Gaussian with FWHM `fwhm`.
inline double gaussian_lineshape(double omega, double center, double fwhm) {
  if (!(fwhm > 0.0)) throw std::domain_error("Gaussian width must be positive");
  const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const double u = (omega - center) / sigma;
  return std::exp(-0.5 * u * u) / (sigma * std::sqrt(constants::two_pi));
}

/// Faddeeva function w(x + iy), y >= 0, Humlicek (1982) W4 rational
/// approximation; relative accuracy about 1e-4.
inline std::complex<double> faddeeva_humlicek(double x, double y) {
  const std::complex<double> t(y, -x);
  const double s = std::abs(x) + y;
  if (s >= 15.0) return t * 0.5641896 / (0.5 + t * t);
  if (s >= 5.5) {
    const auto u = t * t;
    return t * (1.410474 + u * 0.5641896) / (0.75 + u * (3.0 + u));
  }
  if (y >= 0.195 * std::abs(x) - 0.176)
    return (16.4955 + t * (20.20933 + t * (11.96482 + t * (3.778987 + t * 0.5642236)))) /
           (16.4955 + t * (38.82363 + t * (39.27121 + t * (21.69274 + t * (6.699398 + t)))));
  const auto u = t * t;
  return std::exp(u) -
         t * (36183.31 - u * (3321.9905 - u * (1540.787 - u * (219.0313 - u * (35.76683 - u * (1.320522 - u * 0.56419)))))) /
             (32066.6 - u * (24322.84 - u * (9022.228 - u * (2186.181 - u * (364.2191 - u * (61.57037 - u * (1.841439 - u)))))));
}

/// Unit-area Voigt profile: Gaussian of FWHM `gaussian_fwhm` convolved with a
/// Lorentzian of FWHM `lorentz_fwhm`.
inline double voigt_lineshape(double omega, double center, double gaussian_fwhm, double lorentz_fwhm) {
  if (!(gaussian_fwhm > 0.0) || !(lorentz_fwhm > 0.0)) throw std::domain_error("Voigt widths must be positive");
  const double sigma = gaussian_fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const double scale = sigma * std::numbers::sqrt2;
  const auto w = faddeeva_humlicek((omega - center) / scale, 0.5 * lorentz_fwhm / scale);
  return w.real() / (sigma * std::sqrt(constants::two_pi));
}

/// Resonance seen by an atom moving at vz for a beam travelling along
/// +z (sign +1) or -z (sign -1).
inline double doppler_shifted_resonance(double omega0, double vz, int propagation_sign) {
  return omega0 * (1.0 + static_cast<double>(propagation_sign) * vz / constants::speed_of_light);
}

struct DriftEstimates {
  double three_sigma_distance = 0.0;  // m
  double drift_rate = 0.0;            // 1/s
};

/// Spatial exchange between the probe region and the pump-back annulus.
/// The drift rate is approximate: mean 2-D thermal speed sqrt(pi kT / 2m)
/// divided by the annulus width (pump-back radius - probe radius).
inline DriftEstimates drift_estimates(const BeamGeometry& geometry, const ThermalEnsemble& ensemble,
                                      const Species& species, double dwell) {
  if (!(dwell > 0.0)) throw std::domain_error("dwell time must be positive");
  geometry.validate();
  const double sigma = thermal_velocity_sigma(ensemble.temperature, species.mass);
  const double mean_speed_2d =
      std::sqrt(constants::pi * constants::boltzmann * ensemble.temperature / (2.0 * species.mass));
  return {3.0 * sigma * dwell, mean_speed_2d / (geometry.pump_back_radius - geometry.probe_radius)};
}

/// Saturated vapour number density at temperature T (ideal gas).
inline double vapour_number_density(const Species& species, double temperature) {
  if (!species.vapour_pressure) throw ConfigError("species " + species.name + " has no vapour-pressure model");
  if (!(temperature > 0.0)) throw std::domain_error("temperature must be positive");
  return species.vapour_pressure->pressure_pa(temperature) / (constants::boltzmann * temperature);
}

}  // namespace vsp
