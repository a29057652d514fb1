#pragma once

// Motion-induced dephasing of a ladder-memory spin wave: the collective-state
// overlap is the Fourier transform of the velocity distribution at k_r t.

#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsp/atomic_data.hpp"
#include "vsp/pumping.hpp"

namespace vsp {

inline constexpr double unbounded_time = std::numeric_limits<double>::infinity();

inline bool is_unbounded(double t) { return std::isinf(t); }

struct LadderConfig {
  std::string name;
  double signal_wavelength = 0.0;   // m
  double control_wavelength = 0.0;  // m
  double storage_lifetime = unbounded_time;  // s
  std::string species;
  double temperature = 296.15;      // K

  void validate() const {
    if (!(signal_wavelength > 0.0) || !(control_wavelength > 0.0) || !(storage_lifetime > 0.0))
      throw std::domain_error("ladder wavelengths and storage lifetime must be positive");
  }

  static LadderConfig from(const LadderData& d, const Species& s, double temperature) {
    return {d.name, d.signal_wavelength, d.control_wavelength, d.storage_lifetime, s.name, temperature};
  }
};

/// |k_S - k_C|, rad/m.
inline double wavevector_mismatch(const LadderConfig& config) {
  config.validate();
  return std::abs(constants::two_pi / config.signal_wavelength - constants::two_pi / config.control_wavelength);
}

/// A velocity distribution normalised to unit area on its grid.
class VelocityDistribution {
public:
  VelocityDistribution(std::shared_ptr<const VelocityGrid> grid, std::vector<double> values)
      : grid_(std::move(grid)), f_(std::move(values)) {
    if (!grid_ || f_.size() != grid_->size()) throw std::invalid_argument("distribution/grid size mismatch");
    const double area = grid_->integrate(f_);
    if (!(area > 0.0)) throw std::domain_error("velocity distribution has no weight");
    for (auto& x : f_) x /= area;
  }

  /// The distribution of one level of a population state, f(vz) ∝ n(vz).
  /// Negative integrator undershoot is clipped to zero first.
  static VelocityDistribution of_level(const PopulationState& state, Slot slot) {
    auto v = state.level(slot);
    for (auto& x : v) x = std::max(0.0, x);
    return VelocityDistribution(state.grid, std::move(v));
  }

  const VelocityGrid& grid() const { return *grid_; }
  std::span<const double> values() const { return f_; }

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < f_.size(); ++i) m += grid_->weight(i) * f_[i] * grid_->velocity(i);
    return m;
  }

  double rms_spread() const {
    const double m = mean();
    double s = 0.0;
    for (std::size_t i = 0; i < f_.size(); ++i) {
      const double d = grid_->velocity(i) - m;
      s += grid_->weight(i) * f_[i] * d * d;
    }
    return std::sqrt(s);
  }

private:
  std::shared_ptr<const VelocityGrid> grid_;
  std::vector<double> f_;
};

/// <psi(0)|psi(t)> = int f(vz) exp(i k_r vz t) dvz by grid quadrature.
/// `f` must already be normalised (tolerance 1e-6).
inline std::complex<double> overlap(const VelocityGrid& grid, std::span<const double> f, double k_r, double t) {
  const double area = grid.integrate(f);
  if (std::abs(area - 1.0) > 1e-6) throw std::domain_error("overlap: velocity distribution is not normalised");
  const double q = k_r * t;
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double wf = grid.weight(i) * f[i];
    const double phase = q * grid.velocity(i);
    re += wf * std::cos(phase);
    im += wf * std::sin(phase);
  }
  return {re, im};
}

inline std::complex<double> overlap(const VelocityDistribution& f, double k_r, double t) {
  return overlap(f.grid(), f.values(), k_r, t);
}

namespace detail {

/// Smallest t > 0 with g(t) <= threshold: scan forward in steps of dt
/// (doubling dt every 2000 steps), then bisect the bracketing interval.
template <class G>
double first_crossing(G&& g, double threshold, double dt, long max_evaluations = 40000) {
  if (!(dt > 0.0) || !std::isfinite(dt)) return unbounded_time;
  double t_prev = 0.0;
  double t = dt;
  for (long k = 1; k <= max_evaluations; ++k) {
    if (g(t) <= threshold) {
      double lo = t_prev, hi = t;
      for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) <= threshold ? hi : lo) = mid;
      }
      return 0.5 * (lo + hi);
    }
    if (k % 2000 == 0) dt *= 2.0;
    t_prev = t;
    t += dt;
  }
  return unbounded_time;
}

inline double scan_step(const VelocityDistribution& f, double k_r, double storage_lifetime) {
  const double spread = f.rms_spread();
  double scale = storage_lifetime;
  if (k_r > 0.0 && spread > 0.0) scale = std::min(scale, 1.0 / (k_r * spread));
  return scale / 100.0;
}

}  // namespace detail

/// 1/e time of |overlap|^2. Unbounded when k_r == 0.
inline double dephasing_time(const VelocityDistribution& f, double k_r) {
  if (k_r < 0.0) throw std::domain_error("k_r must be non-negative");
  if (k_r == 0.0) return unbounded_time;
  const double inv_e = std::exp(-1.0);
  return detail::first_crossing([&](double t) { return std::norm(overlap(f, k_r, t)); }, inv_e,
                                detail::scan_step(f, k_r, unbounded_time));
}

/// Memory efficiency model |overlap(t)|^2 exp(-t / tau_sp).
inline double memory_efficiency(const VelocityDistribution& f, double k_r, double storage_lifetime, double t) {
  return std::norm(overlap(f, k_r, t)) * std::exp(-t / storage_lifetime);
}

/// 1/e time of the memory efficiency.
inline double memory_lifetime(const VelocityDistribution& f, const LadderConfig& config) {
  const double k_r = wavevector_mismatch(config);
  const double tau = config.storage_lifetime;
  if (k_r == 0.0) return tau;
  const double inv_e = std::exp(-1.0);
  return detail::first_crossing([&](double t) { return memory_efficiency(f, k_r, tau, t); }, inv_e,
                                detail::scan_step(f, k_r, tau));
}

/// Lifetime with velocity selection over lifetime without.
inline double enhancement_factor(const VelocityDistribution& selected, const VelocityDistribution& thermal,
                                 const LadderConfig& config) {
  const double with = memory_lifetime(selected, config);
  const double without = memory_lifetime(thermal, config);
  if (is_unbounded(with) || is_unbounded(without)) throw std::domain_error("enhancement factor needs finite lifetimes");
  return with / without;
}

struct CoherenceDecay {
  std::vector<double> time;        // s
  std::vector<double> overlap_sq;  // |<psi(0)|psi(t)>|^2
  double k_r = 0.0;
  double storage_lifetime = unbounded_time;
  double dephasing_rate = 0.0;     // 1 / tau_D
  double dephasing_time = unbounded_time;
  double memory_lifetime = unbounded_time;
};

/// Samples |overlap|^2 on `points` equally spaced times over [0, t_max] and
/// extracts the characteristic times.
inline CoherenceDecay coherence_decay(const VelocityDistribution& f, const LadderConfig& config, double t_max,
                                      std::size_t points) {
  if (points < 2 || !(t_max > 0.0)) throw std::invalid_argument("coherence decay needs >= 2 points and t_max > 0");
  CoherenceDecay d;
  d.k_r = wavevector_mismatch(config);
  d.storage_lifetime = config.storage_lifetime;
  d.time.resize(points);
  d.overlap_sq.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    d.time[i] = t_max * static_cast<double>(i) / static_cast<double>(points - 1);
    d.overlap_sq[i] = std::min(1.0, std::norm(overlap(f, d.k_r, d.time[i])));
  }
  d.dephasing_time = dephasing_time(f, d.k_r);
  d.dephasing_rate = is_unbounded(d.dephasing_time) ? 0.0 : 1.0 / d.dephasing_time;
  d.memory_lifetime = memory_lifetime(f, config);
  return d;
}

}  // namespace vsp
