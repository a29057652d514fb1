#pragma once

// Least-squares recovery of pump-back parameters from measured spectra, the
// double-exponential relaxation fit, and power x duration sweeps.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "vsp/atomic_data.hpp"
#include "vsp/coherence.hpp"
#include "vsp/errors.hpp"
#include "vsp/optimize.hpp"
#include "vsp/parallel.hpp"
#include "vsp/pumping.hpp"
#include "vsp/spectroscopy.hpp"

namespace vsp {

// ---------------------------------------------------------------------------
// Spectrum fit

struct Interval {
  double lo = 0.0, hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct SpectrumFitParams {
  double power = 4.1e-3;                            // W
  double linewidth = constants::mhz_to_rad_s(6.0);  // FWHM, rad/s
  double velocity = -100.0;                         // selected class, m/s
  Interval power_bounds{1e-6, 0.2};
  Interval linewidth_bounds{constants::mhz_to_rad_s(0.1), constants::mhz_to_rad_s(200.0)};
  Interval velocity_bounds{-500.0, 500.0};

  void validate() const {
    if (!(power_bounds.lo > 0.0) || !(power_bounds.hi > power_bounds.lo))
      throw ConfigError("power bounds must satisfy 0 < lo < hi");
    if (!(linewidth_bounds.lo > 0.0) || !(linewidth_bounds.hi > linewidth_bounds.lo))
      throw ConfigError("linewidth bounds must satisfy 0 < lo < hi");
    if (!(velocity_bounds.hi > velocity_bounds.lo)) throw ConfigError("velocity bounds must satisfy lo < hi");
    if (!power_bounds.contains(power)) throw ConfigError("initial power outside its bounds");
    if (!linewidth_bounds.contains(linewidth)) throw ConfigError("initial linewidth outside its bounds");
    if (!velocity_bounds.contains(velocity)) throw ConfigError("initial velocity class outside its bounds");
  }
};

enum class FitStatus { converged, max_iterations, stalled };

inline const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::max_iterations: return "max-iterations";
    case FitStatus::stalled: return "stalled";
  }
  return "?";
}

struct SpectrumFitResult {
  SpectrumFitParams params;
  std::array<double, 3> uncertainty{};  // power (W), linewidth (rad/s), velocity (m/s); NaN when unavailable
  double residual = 0.0;                // weighted residual sum of squares
  std::vector<double> residuals;        // measured - model, per point (unweighted)
  FitStatus status = FitStatus::converged;
  int iterations = 0;
  int evaluations = 0;
  int effective_steps = 0;              // parameter updates that lowered the residual
  std::vector<double> accepted_residuals;  // residual after every accepted step
};

/// Everything about the forward model except the three fit parameters: the
/// state just before the pump-back (cached) and a pump-back template whose
/// power, linewidth and centre are replaced per evaluation.
struct SpectrumModelContext {
  const Species* species = nullptr;
  ThermalEnsemble ensemble;
  PopulationState prepared;
  LaserStage pump_back;
  int probe_sign = -1;
  std::vector<const Transition*> lines;
  EvolveControls controls;
  std::optional<RateModel> model;

  /// Thermal state on `grid` driven through `preparation` (normally the
  /// initial pump). `pump_back` only supplies its transition, duration, beam
  /// radius, propagation sign and profile.
  static SpectrumModelContext prepare(const Species& species, const ThermalEnsemble& ensemble,
                                      std::shared_ptr<const VelocityGrid> grid, const PulseSequence& preparation,
                                      const LaserStage& pump_back, EvolveControls controls = {}) {
    SpectrumModelContext c;
    c.species = &species;
    c.ensemble = ensemble;
    c.controls = controls;
    c.pump_back = pump_back;
    c.pump_back.role = StageRole::pump_back;
    c.lines = default_probe_lines(species);
    PulseSequence all = preparation;
    all.preamble.insert(all.preamble.end(), all.stages.begin(), all.stages.end());
    all.stages.clear();
    all.preamble.push_back(c.pump_back);
    c.model.emplace(RateModel::for_sequence(species, all));
    c.prepared = thermal_state(ensemble, species, std::move(grid));
    for (const auto* s : preparation.expanded()) c.prepared = evolve_stage(c.prepared, *s, *c.model, controls);
    return c;
  }

  LaserStage stage_for(double power, double linewidth, double velocity) const {
    const Transition& t = species->transition(pump_back.transition);
    LaserStage s = make_stage(StageRole::pump_back, t, power, linewidth, velocity, pump_back.duration,
                              pump_back.beam_radius, pump_back.propagation_sign);
    s.profile = pump_back.profile;
    return s;
  }

  /// Population right after the pump-back, when the probe reads it.
  PopulationState after_pump_back(double power, double linewidth, double velocity) const {
    return evolve_stage(prepared, stage_for(power, linewidth, velocity), *model, controls);
  }

  Spectrum spectrum(const ProbeGrid& grid, double power, double linewidth, double velocity) const {
    return optical_depth(after_pump_back(power, linewidth, velocity), ensemble, *species, grid, probe_sign, lines,
                         controls.threads);
  }
};

/// Forward model on a fixed probe grid with a thread-safe memo of evaluated
/// parameter points. Keys are quantised far below the finite-difference step.
class SpectrumModel {
public:
  SpectrumModel(const SpectrumModelContext& context, ProbeGrid grid) : ctx_(&context), grid_(std::move(grid)) {}

  std::vector<double> operator()(double power, double linewidth, double velocity) const {
    const Key key{std::llround(std::log(power) * 1e10), std::llround(std::log(linewidth) * 1e10),
                  std::llround(velocity * 1e8)};
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) {
        ++hits_;
        return it->second;
      }
    }
    std::vector<double> od = ctx_->spectrum(grid_, power, linewidth, velocity).od;
    for (double v : od)
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "non-finite model spectrum at power " << power * 1e3 << " mW, linewidth "
            << constants::rad_s_to_mhz(linewidth) << " MHz, class " << velocity << " m/s";
        throw NumericError(msg.str());
      }
    std::lock_guard lock(mutex_);
    ++misses_;
    return cache_.emplace(key, std::move(od)).first->second;
  }

  const ProbeGrid& grid() const { return grid_; }
  long cache_hits() const { return hits_; }
  long cache_misses() const { return misses_; }

private:
  using Key = std::tuple<long long, long long, long long>;
  const SpectrumModelContext* ctx_;
  ProbeGrid grid_;
  mutable std::mutex mutex_;
  mutable std::map<Key, std::vector<double>> cache_;
  mutable long hits_ = 0, misses_ = 0;
};

struct SpectrumFitOptions {
  int max_evaluations = 500;
  double simplex_share = 0.3;  // fraction of the budget for the simplex stage
  double velocity_scale = 10.0;  // m/s per unit of the internal coordinate
};

namespace detail {

// Internal coordinates: (ln P, ln linewidth, v / velocity_scale).
inline opt::Vector to_internal(const SpectrumFitParams& p, double vs) {
  opt::Vector x(3);
  x << std::log(p.power), std::log(p.linewidth), p.velocity / vs;
  return x;
}

inline SpectrumFitParams from_internal(const opt::Vector& x, SpectrumFitParams p, double vs) {
  p.power = std::clamp(std::exp(x[0]), p.power_bounds.lo, p.power_bounds.hi);
  p.linewidth = std::clamp(std::exp(x[1]), p.linewidth_bounds.lo, p.linewidth_bounds.hi);
  p.velocity = std::clamp(x[2] * vs, p.velocity_bounds.lo, p.velocity_bounds.hi);
  return p;
}

}  // namespace detail

/// Minimises sum w_i (OD_measured - OD_model)^2 over pump-back power,
/// linewidth and selected class: a bounded simplex search followed by
/// damped least squares. Weights are 1/sigma^2 when the measurement carries
/// uncertainties, 1 otherwise. Deterministic for identical inputs.
inline SpectrumFitResult fit_spectrum(const Spectrum& measured, const SpectrumModelContext& context,
                                      const SpectrumFitParams& initial, const SpectrumFitOptions& options = {}) {
  measured.validate();
  initial.validate();
  if (measured.size() < 4) throw IngestionError("measured spectrum needs at least 4 points");
  std::vector<double> sqrt_w(measured.size(), 1.0);
  if (!measured.od_uncertainty.empty())
    for (std::size_t i = 0; i < measured.size(); ++i) {
      const double s = measured.od_uncertainty[i];
      if (!(s > 0.0) || !std::isfinite(s))
        throw IngestionError("OD uncertainty must be positive and finite", static_cast<int>(i) + 1);
      sqrt_w[i] = 1.0 / s;
    }

  ProbeGrid grid;
  grid.omega = measured.omega;
  grid.reference_omega = measured.reference_omega;
  grid.reference_label = measured.reference_label;
  const SpectrumModel model(context, grid);
  const double vs = options.velocity_scale;

  opt::Box box;
  {
    SpectrumFitParams lo = initial, hi = initial;
    lo.power = initial.power_bounds.lo;
    lo.linewidth = initial.linewidth_bounds.lo;
    lo.velocity = initial.velocity_bounds.lo;
    hi.power = initial.power_bounds.hi;
    hi.linewidth = initial.linewidth_bounds.hi;
    hi.velocity = initial.velocity_bounds.hi;
    box = {detail::to_internal(lo, vs), detail::to_internal(hi, vs)};
  }

  auto residuals = [&](const opt::Vector& x) {
    const SpectrumFitParams p = detail::from_internal(x, initial, vs);
    const std::vector<double> od = model(p.power, p.linewidth, p.velocity);
    opt::Vector r(static_cast<Eigen::Index>(od.size()));
    for (std::size_t i = 0; i < od.size(); ++i) r[static_cast<Eigen::Index>(i)] = sqrt_w[i] * (od[i] - measured.od[i]);
    return r;
  };
  auto cost = [&](const opt::Vector& x) { return residuals(x).squaredNorm(); };

  SpectrumFitResult out;
  const opt::Vector x0 = box.clamp(detail::to_internal(initial, vs));
  const double c0 = cost(x0);
  int evaluations = 1;
  out.accepted_residuals.push_back(c0);

  opt::Vector x = x0;
  double best = c0;
  FitStatus status = FitStatus::converged;
  if (c0 > 0.0) {
    opt::NelderMeadOptions nm;
    nm.max_evaluations = std::max(4, static_cast<int>(options.simplex_share * options.max_evaluations));
    nm.initial_step = 0.1;
    nm.xtol = 1e-4;
    const auto s = opt::nelder_mead(cost, x0, box, nm);
    evaluations += s.evaluations;
    if (s.f < best) {
      x = s.x;
      best = s.f;
      out.effective_steps += std::max(1, s.improvements);
      out.accepted_residuals.push_back(best);
    }
    out.iterations += s.iterations;

    opt::LMOptions lm;
    lm.max_evaluations = std::max(0, options.max_evaluations - evaluations);
    lm.fd_step = 1e-6;
    const auto l = opt::levenberg_marquardt(residuals, x, box, lm);
    evaluations += l.evaluations;
    out.iterations += l.iterations;
    out.effective_steps += l.accepted_steps;
    for (std::size_t k = 1; k < l.accepted_costs.size(); ++k) out.accepted_residuals.push_back(l.accepted_costs[k]);
    x = l.x;
    best = l.cost;
    status = l.status == opt::LMStatus::converged   ? FitStatus::converged
             : l.status == opt::LMStatus::stalled ? FitStatus::stalled
                                                   : FitStatus::max_iterations;

    // Uncertainties: covariance in internal coordinates mapped back through
    // the transform's derivatives (P and linewidth are exponentials).
    const opt::Matrix cov = opt::covariance(l.jacobian, l.cost);
    const SpectrumFitParams p = detail::from_internal(x, initial, vs);
    if (cov.size() == 9) {
      out.uncertainty = {p.power * std::sqrt(cov(0, 0)), p.linewidth * std::sqrt(cov(1, 1)), vs * std::sqrt(cov(2, 2))};
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out.uncertainty = {nan, nan, nan};
    }
  } else {
    out.uncertainty = {0.0, 0.0, 0.0};
  }

  out.params = detail::from_internal(x, initial, vs);
  out.residual = best;
  out.evaluations = evaluations;
  out.status = status;
  const std::vector<double> od = model(out.params.power, out.params.linewidth, out.params.velocity);
  out.residuals.resize(od.size());
  for (std::size_t i = 0; i < od.size(); ++i) out.residuals[i] = measured.od[i] - od[i];
  return out;
}

// ---------------------------------------------------------------------------
// Relaxation fit: T(t) = A1 exp(-gs t) - A2 exp(-gf t) + c

struct RelaxationSeries {
  std::vector<double> time;          // s
  std::vector<double> transmission;
};

struct RelaxationFit {
  double a1 = 0.0, a2 = 0.0;
  double gamma_s = std::numeric_limits<double>::quiet_NaN();  // 1/s
  double gamma_f = std::numeric_limits<double>::quiet_NaN();  // 1/s
  double c = 0.0;
  // Order: a1, a2, gamma_s, gamma_f, c. Empty when unavailable.
  Eigen::MatrixXd covariance;
  double residual = 0.0;
  FitStatus status = FitStatus::converged;
  bool degenerate = false;       // constant series: no rates defined
  bool fast_identified = true;   // false when the A2 term is not supported by the data
  std::string note;

  double evaluate(double t) const {
    double v = c;
    if (std::isfinite(gamma_s)) v += a1 * std::exp(-gamma_s * t);
    if (fast_identified && std::isfinite(gamma_f)) v -= a2 * std::exp(-gamma_f * t);
    return v;
  }
};

namespace detail {

struct LinearSolve {
  Eigen::VectorXd coef;
  double rss = std::numeric_limits<double>::infinity();
};

inline LinearSolve solve_linear(const Eigen::MatrixXd& basis, const Eigen::VectorXd& y) {
  LinearSolve s;
  s.coef = basis.colPivHouseholderQr().solve(y);
  s.rss = (basis * s.coef - y).squaredNorm();
  return s;
}

inline std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return g;
}

}  // namespace detail

/// Fits the two-exponential relaxation model. Rates are found by a grid
/// search over (gs, gf) with the linear parameters solved exactly, then
/// refined by least squares in (ln A1, ln A2, ln gs, ln(gf - gs), c), which
/// keeps A1, A2 > 0 and gf > gs by construction.
inline RelaxationFit fit_relaxation(const RelaxationSeries& series) {
  const std::size_t m = series.time.size();
  if (series.transmission.size() != m) throw IngestionError("time/transmission length mismatch");
  if (m < 8) throw IngestionError("relaxation fit needs at least 8 points");
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(series.time[i]) || !std::isfinite(series.transmission[i]))
      throw IngestionError("non-finite value", static_cast<int>(i) + 1);
    if (i > 0 && !(series.time[i] > series.time[i - 1]))
      throw IngestionError("time must be strictly increasing", static_cast<int>(i) + 1);
  }

  const Eigen::Map<const Eigen::VectorXd> t(series.time.data(), static_cast<Eigen::Index>(m));
  const Eigen::Map<const Eigen::VectorXd> y(series.transmission.data(), static_cast<Eigen::Index>(m));
  RelaxationFit fit;

  const double ymax = y.maxCoeff(), ymin = y.minCoeff();
  if (ymax - ymin <= 1e-12 * std::max(1.0, std::abs(y.mean()))) {
    fit.degenerate = true;
    fit.fast_identified = false;
    fit.c = y.mean();
    fit.a1 = fit.a2 = 0.0;
    fit.note = "constant series: rates undefined";
    return fit;
  }

  const double span = t[static_cast<Eigen::Index>(m) - 1] - t[0];
  double min_dt = span;
  for (Eigen::Index i = 1; i < t.size(); ++i) min_dt = std::min(min_dt, t[i] - t[i - 1]);
  const auto rates = detail::log_grid(0.1 / span, 10.0 / min_dt, 90);

  auto column = [&](double g) { return (-g * (t.array() - t[0])).exp().matrix(); };
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m));

  // Single exponential + offset, always fitted for comparison.
  double best1 = std::numeric_limits<double>::infinity(), g1 = rates.front();
  Eigen::VectorXd coef1;
  for (double g : rates) {
    Eigen::MatrixXd B(static_cast<Eigen::Index>(m), 2);
    B << column(g), ones;
    const auto s = detail::solve_linear(B, y);
    if (s.rss < best1) {
      best1 = s.rss;
      g1 = g;
      coef1 = s.coef;
    }
  }

  // Two exponentials of opposite sign.
  double best2 = std::numeric_limits<double>::infinity(), gs0 = 0.0, gf0 = 0.0;
  Eigen::VectorXd coef2;
  for (std::size_t i = 0; i < rates.size(); ++i)
    for (std::size_t j = i + 1; j < rates.size(); ++j) {
      Eigen::MatrixXd B(static_cast<Eigen::Index>(m), 3);
      B << column(rates[i]), -column(rates[j]), ones;
      const auto s = detail::solve_linear(B, y);
      if (s.coef[0] > 0.0 && s.coef[1] > 0.0 && s.rss < best2) {
        best2 = s.rss;
        gs0 = rates[i];
        gf0 = rates[j];
        coef2 = s.coef;
      }
    }

  auto single_result = [&](const char* why) {
    // A exp(-g t) + c refined from the grid optimum in (ln|A|, ln g, c).
    const double sgn = coef1[0] >= 0.0 ? 1.0 : -1.0;
    auto r1 = [&](const opt::Vector& p) {
      const Eigen::VectorXd model = sgn * std::exp(p[0]) * (-std::exp(p[1]) * (t.array() - t[0])).exp().matrix() + p[2] * ones;
      return Eigen::VectorXd(model - y);
    };
    opt::Vector p0(3);
    p0 << std::log(std::max(std::abs(coef1[0]), 1e-300)), std::log(g1), coef1[1];
    const auto l = opt::levenberg_marquardt(r1, p0, opt::Box::unbounded(3));
    RelaxationFit f;
    const double amp = sgn * std::exp(l.x[0]);
    const double g = std::exp(l.x[1]);
    // Shift the amplitude back to t = 0 from the t[0] reference.
    f.a1 = amp * std::exp(g * t[0]);
    f.gamma_s = g;
    f.c = l.x[2];
    f.a2 = 0.0;
    f.gamma_f = std::numeric_limits<double>::quiet_NaN();
    f.fast_identified = false;
    f.residual = l.cost;
    f.status = l.status == opt::LMStatus::converged ? FitStatus::converged
               : l.status == opt::LMStatus::stalled ? FitStatus::stalled
                                                     : FitStatus::max_iterations;
    f.note = why;
    return f;
  };

  if (!std::isfinite(best2)) return single_result("no opposite-sign two-exponential solution: fast component not identified");

  auto r2 = [&](const opt::Vector& p) {
    const double gs = std::exp(p[2]), gf = gs + std::exp(p[3]);
    const auto tt = (t.array() - t[0]);
    const Eigen::VectorXd model =
        (std::exp(p[0]) * (-gs * tt).exp() - std::exp(p[1]) * (-gf * tt).exp() + p[4]).matrix();
    return Eigen::VectorXd(model - y);
  };
  opt::Vector p0(5);
  p0 << std::log(coef2[0]), std::log(coef2[1]), std::log(gs0), std::log(gf0 - gs0), coef2[2];
  opt::LMOptions lmo;
  lmo.max_evaluations = 2000;
  const auto l = opt::levenberg_marquardt(r2, p0, opt::Box::unbounded(5), lmo);

  const double gs = std::exp(l.x[2]), gf = gs + std::exp(l.x[3]);
  const double t0 = t[0];
  fit.a1 = std::exp(l.x[0]) * std::exp(gs * t0);
  fit.a2 = std::exp(l.x[1]) * std::exp(gf * t0);
  fit.gamma_s = gs;
  fit.gamma_f = gf;
  fit.c = l.x[4];
  fit.residual = l.cost;
  fit.status = l.status == opt::LMStatus::converged ? FitStatus::converged
               : l.status == opt::LMStatus::stalled ? FitStatus::stalled
                                                     : FitStatus::max_iterations;

  // Covariance in natural parameters from the analytic Jacobian.
  {
    Eigen::MatrixXd J(static_cast<Eigen::Index>(m), 5);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double es = std::exp(-gs * t[i]), ef = std::exp(-gf * t[i]);
      J(i, 0) = es;
      J(i, 1) = -ef;
      J(i, 2) = -fit.a1 * t[i] * es;
      J(i, 3) = fit.a2 * t[i] * ef;
      J(i, 4) = 1.0;
    }
    fit.covariance = opt::covariance(J, l.cost);
  }

  // The fast term must be supported by the data: significant amplitude and a
  // real improvement over the single exponential.
  const double sigma_a2 = fit.covariance.size() == 25 ? std::sqrt(std::max(0.0, fit.covariance(1, 1)))
                                                      : std::numeric_limits<double>::infinity();
  const bool significant = fit.a2 > 3.0 * sigma_a2;
  const double dof1 = static_cast<double>(m) - 3.0, dof2 = static_cast<double>(m) - 5.0;
  const bool improves = l.cost / dof2 < 0.5 * best1 / dof1;
  if (!significant || !improves) return single_result("fast component not identified: single exponential suffices");
  return fit;
}

/// Transmission series from the relaxation model (noise-free).
inline RelaxationSeries relaxation_series(double a1, double a2, double gamma_s, double gamma_f, double c,
                                          const std::vector<double>& times) {
  RelaxationSeries s;
  s.time = times;
  s.transmission.reserve(times.size());
  for (double t : times) s.transmission.push_back(a1 * std::exp(-gamma_s * t) - a2 * std::exp(-gamma_f * t) + c);
  return s;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepPoint {
  double power = 0.0;     // W
  double duration = 0.0;  // s
  double peak_od = 0.0;
  double dephasing_time = unbounded_time;   // s
  double memory_lifetime = unbounded_time;  // s
};

/// Pump-back power x duration grid from the prepared state. Each point runs
/// the pump-back, the probe spectrum, and the coherence times of f ∝ n_g.
/// Points with no population in the memory ground level report zero OD and
/// unbounded times. Row order: power-major.
inline std::vector<SweepPoint> sweep(const SpectrumModelContext& context, const ProbeGrid& probe,
                                     const std::vector<double>& powers, const std::vector<double>& durations,
                                     double linewidth, double velocity, const LadderConfig& ladder,
                                     unsigned threads = 0) {
  std::vector<SweepPoint> out(powers.size() * durations.size());
  const double k_r = wavevector_mismatch(ladder);
  // Points run in parallel; each point's own work stays on one thread.
  SpectrumModelContext local = context;
  local.controls.threads = 1;
  parallel_for(out.size(), threads, [&](std::size_t k) {
    SweepPoint& p = out[k];
    p.power = powers[k / durations.size()];
    p.duration = durations[k % durations.size()];
    LaserStage stage = local.stage_for(p.power, linewidth, velocity);
    stage.duration = p.duration;
    const PopulationState s = evolve_stage(local.prepared, stage, *local.model, local.controls);
    const Spectrum spec = optical_depth(s, local.ensemble, *local.species, probe, local.probe_sign, local.lines, 1);
    p.peak_od = spec.peak_od();
    std::vector<double> g = s.level(ground_slot);
    double weight = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) weight += s.grid->weight(i) * std::max(0.0, g[i]);
    if (weight > 1e-9 * local.ensemble.density) {
      const auto f = VelocityDistribution::of_level(s, ground_slot);
      p.dephasing_time = dephasing_time(f, k_r);
      p.memory_lifetime = memory_lifetime(f, ladder);
    }
  });
  return out;
}

}  // namespace vsp
