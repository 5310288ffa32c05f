#pragma once

// Shared negative binomial likelihood machinery for the trend model and its
// blinded variants. Data enter only through per-subject sufficient
// statistics (exposure, event count, sum of event study times); the event
// times contribute alpha1 * sum(s_k) and nothing else.
//
// Parameter vectors are ordered (alpha0, alpha1, beta, phi) everywhere.

#include <Eigen/Core>
#include <vector>

#include "bcm/model.hpp"

namespace bcm {

// time_sum is the sum of event study times. Subjects sharing (exposure, events)
// are interchangeable apart from that linear term, so a record may stand for
// `multiplicity` of them with time_sum summed over all.
struct CountRecord {
  double exposure = 0.0;
  int events = 0;
  double time_sum = 0.0;
  int multiplicity = 1;
};

struct GroupedCounts {
  std::vector<CountRecord> treatment;
  std::vector<CountRecord> control;

  std::size_t size() const noexcept { return treatment.size() + control.size(); }
};

using BlindedCounts = std::vector<CountRecord>;

enum ParamIndex : int { kAlpha0 = 0, kAlpha1 = 1, kBeta = 2, kPhi = 3 };

using Vector4 = Eigen::Vector4d;
using Matrix4 = Eigen::Matrix4d;

enum class Order { Value, Gradient, Hessian };

// Log-likelihood with (optionally) observed gradient and Hessian.
struct Evaluation {
  double loglik = 0.0;
  Vector4 grad = Vector4::Zero();
  Matrix4 hess = Matrix4::Zero();
};

inline Vector4 pack(const ModelParams& p) { return {p.alpha0, p.alpha1, p.beta, p.phi}; }
inline ModelParams unpack(const Vector4& v) { return {v[kAlpha0], v[kAlpha1], v[kBeta], v[kPhi]}; }

// Unblinded trend model; subjects carry their group through the container.
Evaluation evaluate_grouped(const ModelParams& params, const GroupedCounts& data, Order order);

// Single NB with cumulative rate Lambda_C(s) exp(log_offset) for every subject.
// beta entries of the result are zero.
Evaluation evaluate_offset(const NuisanceParams& params, double log_offset,
                           const BlindedCounts& data, Order order);

// Two-component NB mixture with component weights (w_T, w_C) and rates
// Lambda_C(s) exp(beta_h1) and Lambda_C(s). beta entries are zero.
Evaluation evaluate_mixture(const NuisanceParams& params, double beta_h1,
                            AllocationWeights weights, const BlindedCounts& data, Order order);

// Expected negative Hessian of one subject's log-likelihood in
// (alpha0, alpha1, beta), plus the expected phi curvature, accumulated with
// the given weight into `fisher`.
void accumulate_expected_fisher(Matrix4& fisher, double weight, const ModelParams& params,
                                Group group, double exposure, bool with_phi);

// E[-d^2 log L / d phi^2] for one NB count with the given mean; no closed
// form exists, so the expectation is summed over the mass function until the
// remaining tail is below 1e-14.
double expected_phi_information(double mean, double phi);

// Inverse of the (beta, beta) element of the inverse of the (alpha0, alpha1, beta)
// block, i.e. 1 / (c' I^-1 c). Throws SingularityError when the block is not
// positive definite.
double information_for_beta(const Matrix4& fisher);

// Same, treating alpha1 as fixed (constant-rate model): uses the (alpha0, beta) block.
double information_for_beta_without_trend(const Matrix4& fisher);

namespace detail {

// Per-phi cumulative sums over k = 0..n-1 used by every NB term:
// log(1 + k phi), k / (1 + k phi), k^2 / (1 + k phi)^2, plus log n!.
class CountTables {
 public:
  void build(double phi, int max_count);
  double log_rising(int n) const { return log_rising_[n]; }
  double score_sum(int n) const { return score_sum_[n]; }
  double curvature_sum(int n) const { return curvature_sum_[n]; }
  double log_factorial(int n) const { return log_factorial_[n]; }

 private:
  std::vector<double> log_rising_, score_sum_, curvature_sum_, log_factorial_;
};

// (log(1+x) - x/(1+x)) / x^2 and (x^2/(1+x)^2 - 2 (log(1+x) - x/(1+x))) / x^3,
// evaluated by series near zero.
double phi_gradient_kernel(double x) noexcept;
double phi_curvature_kernel(double x) noexcept;

}  // namespace detail

}  // namespace bcm
