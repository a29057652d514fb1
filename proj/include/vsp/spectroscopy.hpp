#pragma once

// Weak-probe absorption: per-class cross sections and optical-depth spectra
// of an arbitrary population state.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vsp/atomic_data.hpp"
#include "vsp/errors.hpp"
#include "vsp/parallel.hpp"
#include "vsp/pumping.hpp"

namespace vsp {

struct Spectrum {
  std::vector<double> omega;           // probe angular frequency, rad/s, strictly increasing
  std::vector<double> od;              // optical depth -ln T
  std::vector<double> od_uncertainty;  // optional, empty when absent
  double reference_omega = 0.0;        // detunings are quoted relative to this
  std::string reference_label;
  double temperature = 0.0;
  int probe_sign = -1;
  std::string sequence_hash;

  std::size_t size() const { return omega.size(); }

  std::vector<double> detuning_mhz() const {
    std::vector<double> out(omega.size());
    for (std::size_t i = 0; i < omega.size(); ++i) out[i] = constants::rad_s_to_mhz(omega[i] - reference_omega);
    return out;
  }

  std::vector<double> transmission() const {
    std::vector<double> out(od.size());
    for (std::size_t i = 0; i < od.size(); ++i) out[i] = std::exp(-od[i]);
    return out;
  }

  double peak_od() const { return od.empty() ? 0.0 : *std::max_element(od.begin(), od.end()); }

  void validate() const {
    if (omega.size() != od.size()) throw std::invalid_argument("spectrum: grid/value size mismatch");
    if (!od_uncertainty.empty() && od_uncertainty.size() != od.size())
      throw std::invalid_argument("spectrum: uncertainty size mismatch");
    for (std::size_t i = 1; i < omega.size(); ++i)
      if (!(omega[i] > omega[i - 1])) throw std::invalid_argument("spectrum: grid must be strictly increasing");
  }
};

struct ProbeGrid {
  std::vector<double> omega;
  double reference_omega = 0.0;
  std::string reference_label;

  static ProbeGrid from_detunings(const Transition& reference, std::span<const double> detuning_mhz) {
    ProbeGrid g;
    g.reference_omega = reference.omega0;
    g.reference_label = reference.label;
    g.omega.reserve(detuning_mhz.size());
    for (double d : detuning_mhz) g.omega.push_back(reference.omega0 + constants::mhz_to_rad_s(d));
    for (std::size_t i = 1; i < g.omega.size(); ++i)
      if (!(g.omega[i] > g.omega[i - 1])) throw ConfigError("probe grid must be strictly increasing");
    if (g.omega.empty()) throw ConfigError("probe grid is empty");
    return g;
  }

  /// Default span -600 ... +800 MHz, 1000 points.
  static ProbeGrid linear(const Transition& reference, double start_mhz = -600.0, double stop_mhz = 800.0,
                          std::size_t points = 1000) {
    if (points < 2 || !(stop_mhz > start_mhz)) throw ConfigError("probe grid needs >= 2 points and stop > start");
    std::vector<double> d(points);
    for (std::size_t i = 0; i < points; ++i)
      d[i] = start_mhz + (stop_mhz - start_mhz) * static_cast<double>(i) / static_cast<double>(points - 1);
    return from_detunings(reference, d);
  }
};

/// Absorption cross section (m^2) of one hyperfine pair for a probe at
/// `omega` seen by atoms moving at vz: B (hbar w / c) g_L(w - w0(1 + s vz/c)).
inline double cross_section(const Transition& transition, double omega, double vz, int probe_sign) {
  return transition.einstein_b * constants::hbar * omega / constants::speed_of_light *
         lorentzian_lineshape(omega, doppler_shifted_resonance(transition.omega0, vz, probe_sign), transition.linewidth);
}

/// Lines probed by default: every transition of the species' probe line
/// leaving the memory ground level (Cs: D2 F=4 -> F'=3,4,5).
inline std::vector<const Transition*> default_probe_lines(const Species& species) {
  return species.transitions_from(species.memory_ground_ref(), species.probe_line);
}

/// Optical depth L * sum_(F,F') sum_i w_i n_F(v_i) sigma_FF'(w, v_i) on the
/// probe grid. Negative densities from integrator undershoot count as zero.
inline Spectrum optical_depth(const PopulationState& state, const ThermalEnsemble& ensemble, const Species& species,
                              const ProbeGrid& grid, int probe_sign, std::span<const Transition* const> lines,
                              unsigned threads = 1) {
  ensemble.validate();
  if (probe_sign != 1 && probe_sign != -1) throw ConfigError("probe sign must be +1 or -1");
  if (grid.omega.empty()) throw ConfigError("probe grid is empty");
  const double sigma_v = thermal_velocity_sigma(ensemble.temperature, species.mass);
  for (const Transition* t : lines) {
    if (t->lower != species.memory_ground_ref() && t->lower != species.auxiliary_ref())
      throw ConfigError("probe line " + t->label + " does not start from a ground level");
    const double margin = 10.0 * sigma_v / constants::speed_of_light * t->omega0;
    if (t->omega0 < grid.omega.front() - margin || t->omega0 > grid.omega.back() + margin)
      throw ConfigError("probe grid does not cover transition " + t->label);
  }

  const std::size_t nv = state.size();
  struct LineData {
    const Transition* t;
    std::vector<double> weighted;  // w_i * n_F(v_i)
    std::vector<double> resonance; // w0 (1 + s v_i / c)
  };
  std::vector<LineData> data;
  for (const Transition* t : lines) {
    LineData d{t, std::vector<double>(nv), std::vector<double>(nv)};
    const Slot slot = t->lower == species.memory_ground_ref() ? ground_slot : aux_slot;
    for (std::size_t i = 0; i < nv; ++i) {
      d.weighted[i] = state.grid->weight(i) * std::max(0.0, state.classes[i][slot]);
      d.resonance[i] = doppler_shifted_resonance(t->omega0, state.grid->velocity(i), probe_sign);
    }
    data.push_back(std::move(d));
  }

  Spectrum s;
  s.omega = grid.omega;
  s.od.assign(grid.omega.size(), 0.0);
  s.reference_omega = grid.reference_omega;
  s.reference_label = grid.reference_label;
  s.temperature = ensemble.temperature;
  s.probe_sign = probe_sign;
  parallel_for(grid.omega.size(), threads, [&](std::size_t k) {
    const double w = grid.omega[k];
    double od = 0.0;
    for (const auto& d : data) {
      const double gamma = d.t->linewidth;
      const double hw2 = 0.25 * gamma * gamma;
      double acc = 0.0;
      for (std::size_t i = 0; i < nv; ++i) {
        const double det = w - d.resonance[i];
        acc += d.weighted[i] / (det * det + hw2);
      }
      od += acc * d.t->einstein_b * constants::hbar * w / constants::speed_of_light * gamma / constants::two_pi;
    }
    s.od[k] = ensemble.cell_length * od;
  });
  return s;
}

inline Spectrum optical_depth(const PopulationState& state, const ThermalEnsemble& ensemble, const Species& species,
                              const ProbeGrid& grid, int probe_sign = -1) {
  const auto lines = default_probe_lines(species);
  return optical_depth(state, ensemble, species, grid, probe_sign, lines);
}

/// Doppler-broadened spectrum of the thermal state.
inline Spectrum unpumped_spectrum(const ThermalEnsemble& ensemble, const Species& species,
                                  std::shared_ptr<const VelocityGrid> velocity_grid, const ProbeGrid& grid,
                                  int probe_sign, std::span<const Transition* const> lines) {
  return optical_depth(thermal_state(ensemble, species, std::move(velocity_grid)), ensemble, species, grid, probe_sign,
                       lines);
}

inline Spectrum unpumped_spectrum(const ThermalEnsemble& ensemble, const Species& species,
                                  std::shared_ptr<const VelocityGrid> velocity_grid, const ProbeGrid& grid,
                                  int probe_sign = -1) {
  const auto lines = default_probe_lines(species);
  return unpumped_spectrum(ensemble, species, std::move(velocity_grid), grid, probe_sign, lines);
}

/// Full width at half maximum of a sampled peak around its maximum, by linear
/// interpolation of the half-level crossings. Returns 0 when a crossing is not
/// inside the samples.
inline double peak_fwhm(std::span<const double> x, std::span<const double> y, double baseline = 0.0) {
  if (x.size() != y.size() || x.size() < 3) return 0.0;
  const auto imax = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double half = baseline + 0.5 * (y[imax] - baseline);
  std::size_t lo = imax, hi = imax;
  while (lo > 0 && y[lo] > half) --lo;
  while (hi + 1 < y.size() && y[hi] > half) ++hi;
  if (y[lo] > half || y[hi] > half) return 0.0;
  const double xl = x[lo] + (half - y[lo]) * (x[lo + 1] - x[lo]) / (y[lo + 1] - y[lo]);
  const double xr = x[hi - 1] + (half - y[hi - 1]) * (x[hi] - x[hi - 1]) / (y[hi] - y[hi - 1]);
  return xr - xl;
}

}  // namespace vsp
