#pragma once

// Dormand-Prince 5(4) embedded Runge-Kutta integrator with PI step-size
// control, for small fixed-size systems.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace vsp::ode {

template <std::size_t N>
using State = std::array<double, N>;

struct Controls {
  double rtol = 1e-8;
  double atol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 200'000'000;
};

enum class Status { ok, step_underflow, too_many_steps, non_finite };

struct Stats {
  Status status = Status::ok;
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
  double t_end = 0.0;  // where integration stopped
};

struct NeverStop {
  template <class Y>
  bool operator()(Y&) const { return false; }
};

/// Integrates dy/dt = rhs(t, y) from t0 to t1 in place. `rhs(t, y, dydt)`.
/// `monitor(y)` runs after every accepted step. It may zero components the
/// caller knows to be negligible, and returning true ends the integration
/// early (the remaining evolution is negligible too).
template <std::size_t N, class Rhs, class Monitor = NeverStop>
Stats integrate_dopri5(Rhs&& rhs, State<N>& y, double t0, double t1, const Controls& ctl,
                       Monitor&& monitor = {}) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                   a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  // PI controller constants (Hairer & Wanner, DOPRI5).
  constexpr double beta = 0.04, alpha = 0.2 - 0.75 * beta;
  constexpr double safety = 0.9, fac_min = 0.2, fac_max = 10.0;

  Stats stats;
  stats.t_end = t0;
  const double span = t1 - t0;
  if (!(span > 0.0)) return stats;

  State<N> k1, k2, k3, k4, k5, k6, k7, tmp, ynew;
  rhs(t0, y, k1);
  ++stats.evaluations;

  // max_i |d_i| / sc_i <= 1, evaluated without divisions.
  auto err_norm_against = [&](const State<N>& a, const State<N>& b, const State<N>& d) {
    double num = 0.0, den = 1.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = ctl.atol + ctl.rtol * std::max(std::abs(a[i]), std::abs(b[i]));
      if (std::abs(d[i]) * den > num * sc) {
        num = std::abs(d[i]);
        den = sc;
      }
    }
    return num / den;
  };

  // Initial step guess (Hairer, Norsett & Wanner, II.4).
  double h;
  {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = ctl.atol + ctl.rtol * std::abs(y[i]);
      d0 = std::max(d0, std::abs(y[i]) / sc);
      d1 = std::max(d1, std::abs(k1[i]) / sc);
    }
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
    h0 = std::min({h0, span, ctl.max_step});
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h0 * k1[i];
    rhs(t0 + h0, tmp, k2);
    ++stats.evaluations;
    double d2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = ctl.atol + ctl.rtol * std::abs(y[i]);
      d2 = std::max(d2, std::abs(k2[i] - k1[i]) / sc / h0);
    }
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min({100.0 * h0, h1, span, ctl.max_step});
  }

  double t = t0;
  double log_err_old = std::log(1e-4);
  bool last_rejected = false;
  const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t0), std::abs(t1));

  while (t < t1) {
    if (stats.accepted + stats.rejected >= ctl.max_steps) {
      stats.status = Status::too_many_steps;
      return stats;
    }
    bool final_step = false;
    if (t + h >= t1 || t + 1.01 * h >= t1) {
      h = t1 - t;
      final_step = true;
    }
    if (h <= h_min) {
      stats.status = Status::step_underflow;
      return stats;
    }

    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    rhs(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(t + h, tmp, k6);
    for (std::size_t i = 0; i < N; ++i)
      ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    rhs(t + h, ynew, k7);
    stats.evaluations += 6;

    State<N> delta;
    for (std::size_t i = 0; i < N; ++i)
      delta[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double err = err_norm_against(y, ynew, delta);
    bool finite = std::isfinite(err);
    for (std::size_t i = 0; i < N; ++i) finite = finite && std::isfinite(ynew[i]) && std::isfinite(delta[i]);
    if (!finite) {
      stats.status = Status::non_finite;
      return stats;
    }

    if (err <= 1.0) {
      ++stats.accepted;
      t = final_step ? t1 : t + h;
      y = ynew;
      k1 = k7;  // first-same-as-last
      const double log_err = std::log(std::max(err, 1e-10));
      double fac = safety * std::exp(beta * log_err_old - alpha * log_err);
      fac = std::clamp(fac, fac_min, last_rejected ? 1.0 : fac_max);
      h = std::min(h * fac, ctl.max_step);
      log_err_old = log_err;
      last_rejected = false;
      if (monitor(y) && t < t1) break;
    } else {
      ++stats.rejected;
      h *= std::max(fac_min, safety * std::pow(err, -alpha));
      last_rejected = true;
    }
  }
  stats.t_end = t;
  return stats;
}

}  // namespace vsp::ode
