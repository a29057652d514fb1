#pragma once

// Small bounded local optimizers: a Nelder-Mead simplex for the coarse search
// and a damped Gauss-Newton (Levenberg-Marquardt) refinement with a
// forward-difference Jacobian. Both clamp trial points into a box.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace vsp::opt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Box {
  Vector lower, upper;

  Vector clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

  bool contains(const Vector& x) const {
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }

  static Box unbounded(Eigen::Index n) {
    const double inf = std::numeric_limits<double>::infinity();
    return {Vector::Constant(n, -inf), Vector::Constant(n, inf)};
  }
};

struct NelderMeadOptions {
  int max_evaluations = 200;
  double initial_step = 0.1;  // per coordinate, in the caller's (scaled) units
  double xtol = 1e-7;         // simplex diameter
  double ftol = 1e-14;        // spread of vertex values relative to the best
};

struct NelderMeadResult {
  Vector x;
  double f = 0.0;
  int evaluations = 0;
  int iterations = 0;
  int improvements = 0;  // iterations that lowered the best value
  bool converged = false;
};

template <class F>
NelderMeadResult nelder_mead(F&& f, const Vector& x0, const Box& box, const NelderMeadOptions& o = {}) {
  const Eigen::Index n = x0.size();
  NelderMeadResult r;
  auto eval = [&](const Vector& x) {
    ++r.evaluations;
    return f(x);
  };

  std::vector<Vector> p(static_cast<std::size_t>(n + 1), box.clamp(x0));
  std::vector<double> fv(p.size());
  fv[0] = eval(p[0]);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector x = p[0];
    x[i] += o.initial_step;
    if (x[i] > box.upper[i]) x[i] = p[0][i] - o.initial_step;
    p[static_cast<std::size_t>(i + 1)] = box.clamp(x);
    fv[static_cast<std::size_t>(i + 1)] = eval(p[static_cast<std::size_t>(i + 1)]);
  }

  std::vector<std::size_t> idx(p.size());
  double best = *std::min_element(fv.begin(), fv.end());
  while (r.evaluations < o.max_evaluations) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t lo = idx.front(), hi = idx.back(), nh = idx[idx.size() - 2];

    double diam = 0.0;
    for (std::size_t k = 1; k < idx.size(); ++k) diam = std::max(diam, (p[idx[k]] - p[lo]).lpNorm<Eigen::Infinity>());
    if (diam <= o.xtol || fv[hi] - fv[lo] <= o.ftol * (std::abs(fv[lo]) + 1e-300)) {
      r.converged = true;
      break;
    }
    ++r.iterations;

    Vector centroid = Vector::Zero(n);
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) centroid += p[idx[k]];
    centroid /= static_cast<double>(n);

    const Vector xr = box.clamp(centroid + (centroid - p[hi]));
    const double fr = eval(xr);
    if (fr < fv[lo]) {
      const Vector xe = box.clamp(centroid + 2.0 * (centroid - p[hi]));
      const double fe = eval(xe);
      if (fe < fr) {
        p[hi] = xe;
        fv[hi] = fe;
      } else {
        p[hi] = xr;
        fv[hi] = fr;
      }
    } else if (fr < fv[nh]) {
      p[hi] = xr;
      fv[hi] = fr;
    } else {
      const bool outside = fr < fv[hi];
      const Vector xc = box.clamp(outside ? Vector(centroid + 0.5 * (xr - centroid)) : Vector(centroid + 0.5 * (p[hi] - centroid)));
      const double fc = eval(xc);
      if (fc < (outside ? fr : fv[hi])) {
        p[hi] = xc;
        fv[hi] = fc;
      } else {
        for (std::size_t k = 1; k < idx.size() && r.evaluations < o.max_evaluations; ++k) {
          p[idx[k]] = box.clamp(p[lo] + 0.5 * (p[idx[k]] - p[lo]));
          fv[idx[k]] = eval(p[idx[k]]);
        }
      }
    }
    const double now = *std::min_element(fv.begin(), fv.end());
    if (now < best) {
      best = now;
      ++r.improvements;
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  r.x = p[static_cast<std::size_t>(it - fv.begin())];
  r.f = *it;
  return r;
}

enum class LMStatus { converged, max_evaluations, stalled };

inline const char* to_string(LMStatus s) {
  switch (s) {
    case LMStatus::converged: return "converged";
    case LMStatus::max_evaluations: return "max-iterations";
    case LMStatus::stalled: return "stalled";
  }
  return "?";
}

struct LMOptions {
  int max_evaluations = 300;
  double ftol = 1e-12;     // relative cost reduction counted as converged
  double xtol = 1e-10;     // relative step size counted as converged
  double gtol = 1e-14;     // gradient (inf-norm) counted as converged
  double fd_step = 1e-6;   // relative forward-difference step
  double lambda0 = 1e-3;
};

struct LMResult {
  Vector x;
  Vector residuals;
  Matrix jacobian;                    // at x
  double cost = 0.0;                  // sum of squared residuals
  int evaluations = 0;
  int iterations = 0;
  int accepted_steps = 0;
  std::vector<double> accepted_costs; // cost after every accepted step, starting with the initial cost
  LMStatus status = LMStatus::max_evaluations;
};

/// Minimises |r(x)|^2 from x0 within `box`. The cost never increases across
/// accepted steps: trial points that do not lower it are rejected and the
/// damping is raised instead.
template <class R>
LMResult levenberg_marquardt(R&& residual, const Vector& x0, const Box& box, const LMOptions& o = {}) {
  LMResult res;
  const Eigen::Index n = x0.size();
  auto eval = [&](const Vector& x) {
    ++res.evaluations;
    return Vector(residual(x));
  };

  auto jacobian = [&](const Vector& x, const Vector& r0) {
    Matrix J(r0.size(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      double h = o.fd_step * std::max(std::abs(x[j]), 1.0);
      Vector xp = x;
      xp[j] += h;
      if (xp[j] > box.upper[j]) {
        h = -h;
        xp[j] = x[j] + h;
      }
      J.col(j) = (eval(xp) - r0) / h;
    }
    return J;
  };

  res.x = box.clamp(x0);
  res.residuals = eval(res.x);
  res.cost = res.residuals.squaredNorm();
  res.accepted_costs.push_back(res.cost);
  double lambda = o.lambda0;
  bool jacobian_current = false;

  while (true) {
    if (res.cost == 0.0) {
      res.status = LMStatus::converged;
      break;
    }
    if (res.evaluations + n + 1 > o.max_evaluations) {
      res.status = LMStatus::max_evaluations;
      break;
    }
    res.jacobian = jacobian(res.x, res.residuals);
    jacobian_current = true;
    const Matrix JtJ = res.jacobian.transpose() * res.jacobian;
    const Vector g = res.jacobian.transpose() * res.residuals;
    if (g.lpNorm<Eigen::Infinity>() <= o.gtol * std::max(1.0, res.cost)) {
      res.status = LMStatus::converged;
      break;
    }
    ++res.iterations;
    bool accepted = false;
    bool small_step = false;
    while (res.evaluations < o.max_evaluations) {
      Matrix A = JtJ;
      for (Eigen::Index j = 0; j < n; ++j) A(j, j) += lambda * std::max(JtJ(j, j), 1e-12);
      const Vector step = A.ldlt().solve(-g);
      const Vector x_new = box.clamp(res.x + step);
      const Vector dx = x_new - res.x;
      if (dx.norm() <= o.xtol * (res.x.norm() + o.xtol)) {
        small_step = true;
        break;
      }
      const Vector r_new = eval(x_new);
      const double c_new = r_new.allFinite() ? r_new.squaredNorm() : std::numeric_limits<double>::infinity();
      if (c_new < res.cost) {
        const double reduction = (res.cost - c_new) / res.cost;
        res.x = x_new;
        res.residuals = r_new;
        res.cost = c_new;
        res.accepted_costs.push_back(c_new);
        ++res.accepted_steps;
        jacobian_current = false;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (reduction <= o.ftol) small_step = true;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e16) break;
    }
    if (small_step) {
      res.status = LMStatus::converged;
      break;
    }
    if (!accepted) {
      res.status = lambda > 1e16 ? LMStatus::stalled : LMStatus::max_evaluations;
      break;
    }
  }
  // The covariance needs J at the final point; this may overrun the budget by n.
  if (!jacobian_current) res.jacobian = jacobian(res.x, res.residuals);
  return res;
}

/// Parameter covariance s^2 (J^T J)^-1 with s^2 = cost / (m - n). Returns an
/// empty matrix when the problem is not overdetermined or J^T J is singular.
inline Matrix covariance(const Matrix& J, double cost) {
  const Eigen::Index m = J.rows(), n = J.cols();
  if (m <= n) return {};
  const Matrix JtJ = J.transpose() * J;
  Eigen::FullPivLU<Matrix> lu(JtJ);
  if (!lu.isInvertible()) return {};
  return lu.inverse() * (cost / static_cast<double>(m - n));
}

}  // namespace vsp::opt
