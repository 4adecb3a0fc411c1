#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "errors.hpp"

namespace tsense {

struct LmOptions {
  int max_iterations = 400;
  double rel_step = 1e-6;      // finite-difference step, relative to max(|x|, 1)
  double cost_tolerance = 1e-16;
  double step_tolerance = 1e-14;
};

struct LmResult {
  Eigen::VectorXd x;
  double cost = 0.0;  // 0.5 * |r|^2
  int iterations = 0;
  bool converged = false;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Levenberg-Marquardt with Marquardt diagonal scaling and a central
/// difference Jacobian.
inline LmResult levenberg_marquardt(const ResidualFn& f, Eigen::VectorXd x, const LmOptions& opt = {}) {
  const auto n = x.size();
  Eigen::VectorXd r = f(x);
  double cost = 0.5 * r.squaredNorm();
  double mu = 1e-3;
  LmResult out;
  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it + 1;
    Eigen::MatrixXd J(r.size(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = opt.rel_step * std::max(std::abs(x[j]), 1.0);
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
    }
    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    Eigen::VectorXd d = A.diagonal().cwiseMax(1e-30);
    bool improved = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd M = A;
      M.diagonal() += mu * d;
      const Eigen::VectorXd step = M.ldlt().solve(-g);
      const Eigen::VectorXd xn = x + step;
      Eigen::VectorXd rn;
      try {
        rn = f(xn);
      } catch (const DomainError&) {
        mu *= 4.0;
        continue;
      } catch (const ConfigError&) {
        mu *= 4.0;
        continue;
      }
      const double cn = 0.5 * rn.squaredNorm();
      if (std::isfinite(cn) && cn < cost) {
        const double dc = cost - cn;
        const double dx = step.norm() / (x.norm() + 1e-30);
        x = xn;
        r = rn;
        cost = cn;
        mu = std::max(mu / 3.0, 1e-12);
        improved = true;
        if (dc <= opt.cost_tolerance * std::max(cost, 1e-300) || dx < opt.step_tolerance) out.converged = true;
        break;
      }
      mu *= 4.0;
    }
    if (!improved) {
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }
  out.x = x;
  out.cost = cost;
  return out;
}

}  // namespace tsense
