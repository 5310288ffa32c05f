#pragma once

// Damped Newton-Raphson maximization over a subset of (alpha0, alpha1, beta, phi).

#include <array>
#include <functional>

#include "bcm/likelihood.hpp"

namespace bcm {

struct NewtonOptions {
  int max_iterations = 100;
  int max_halvings = 30;
  double step_tolerance = 1e-9;       // max_i |step_i| / max(1, |theta_i|)
  double decrement_tolerance = 1e-8;  // g' A^-1 g with A the negative Hessian
};

struct NewtonResult {
  Vector4 theta = Vector4::Zero();
  Evaluation eval;
  bool converged = false;
  bool phi_at_floor = false;
  int iterations = 0;
};

using Objective = std::function<Evaluation(const Vector4&, Order)>;

// Coordinates with free[i] == false stay at their starting value. phi (index
// kPhi) is kept above kPhiFloor; a step never reduces it by more than half.
// Throws EvaluationError if the objective is not finite at the start.
NewtonResult maximize(const Objective& objective, Vector4 start, std::array<bool, 4> free,
                      const NewtonOptions& options = {});

}  // namespace bcm
