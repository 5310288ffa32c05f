#include "bcm/newton.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "bcm/errors.hpp"

namespace bcm {

namespace {

bool finite(const Evaluation& e) {
  return std::isfinite(e.loglik) && e.grad.allFinite() && e.hess.allFinite();
}

// Solves A x = g for symmetric A, adding Levenberg damping until A is
// positive definite.
Eigen::VectorXd damped_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& g) {
  const int k = static_cast<int>(a.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt.solve(g);
  double scale = 0.0;
  for (int i = 0; i < k; ++i) scale = std::max(scale, std::abs(a(i, i)));
  double mu = 1e-8 * std::max(scale, 1.0);
  for (int attempt = 0; attempt < 40; ++attempt, mu *= 10.0) {
    llt.compute(a + mu * Eigen::MatrixXd::Identity(k, k));
    if (llt.info() == Eigen::Success) return llt.solve(g);
  }
  return g / std::max(scale, 1.0);
}

}  // namespace

NewtonResult maximize(const Objective& objective, Vector4 start, std::array<bool, 4> free,
                      const NewtonOptions& options) {
  NewtonResult out;
  if (free[kPhi]) start[kPhi] = std::max(start[kPhi], kPhiFloor);
  out.theta = start;
  out.eval = objective(out.theta, Order::Hessian);
  if (!finite(out.eval)) throw EvaluationError("objective is not finite at the starting point");

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // phi leaves the active set when it sits on the floor and the step (or,
    // failing that, the score) points further down
    std::array<bool, 4> active = free;
    out.phi_at_floor = false;
    const bool on_floor = free[kPhi] && out.theta[kPhi] <= kPhiFloor * (1.0 + 1e-9);
    Vector4 step;
    double decrement = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      std::array<int, 4> idx{};
      int k = 0;
      for (int i = 0; i < 4; ++i)
        if (active[i]) idx[k++] = i;
      step = Vector4::Zero();
      decrement = 0.0;
      if (k == 0) break;
      Eigen::MatrixXd a(k, k);
      Eigen::VectorXd g(k);
      for (int i = 0; i < k; ++i) {
        g[i] = out.eval.grad[idx[i]];
        for (int j = 0; j < k; ++j) a(i, j) = -out.eval.hess(idx[i], idx[j]);
      }
      const Eigen::VectorXd step_free = damped_solve(a, g);
      for (int i = 0; i < k; ++i) step[idx[i]] = step_free[i];
      decrement = g.dot(step_free);
      if (!(on_floor && active[kPhi] && step[kPhi] < 0.0)) break;
      active[kPhi] = false;
      out.phi_at_floor = true;
    }

    double rel = 0.0;
    for (int i = 0; i < 4; ++i) rel = std::max(rel, std::abs(step[i]) / std::max(1.0, std::abs(out.theta[i])));
    if (rel < options.step_tolerance && std::abs(decrement) < options.decrement_tolerance) {
      out.converged = true;
      return out;
    }

    // Projected path: phi never drops below half its current value.
    auto search = [&](const Vector4& direction) {
      double t = 1.0;
      const double slack = 1e-12 * std::max(1.0, std::abs(out.eval.loglik));
      for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
        Vector4 trial = out.theta + t * direction;
        if (active[kPhi]) trial[kPhi] = std::max({trial[kPhi], 0.5 * out.theta[kPhi], kPhiFloor});
        Evaluation e;
        try {
          e = objective(trial, Order::Hessian);
        } catch (const DomainError&) {
          continue;
        }
        if (!finite(e) || e.loglik < out.eval.loglik - slack) continue;
        out.theta = trial;
        out.eval = e;
        return true;
      }
      return false;
    };

    out.iterations = iter + 1;
    if (search(step)) continue;
    // Newton direction failed: steepest ascent scaled by the curvature
    Vector4 ascent = Vector4::Zero();
    double scale = 1.0;
    for (int i = 0; i < 4; ++i)
      if (active[i]) {
        ascent[i] = out.eval.grad[i];
        scale = std::max(scale, std::abs(out.eval.hess(i, i)));
      }
    if (search(ascent / scale)) continue;
    // no ascent possible; only a stationary point counts as converged
    out.converged = std::abs(decrement) < options.decrement_tolerance;
    return out;
  }
  return out;
}

}  // namespace bcm
