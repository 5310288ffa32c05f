#include "bcm/likelihood.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "bcm/errors.hpp"

namespace bcm {

namespace detail {

void CountTables::build(double phi, int max_count) {
  const auto size = static_cast<std::size_t>(max_count) + 1;
  log_rising_.resize(size);
  score_sum_.resize(size);
  curvature_sum_.resize(size);
  log_factorial_.resize(size);
  log_rising_[0] = score_sum_[0] = curvature_sum_[0] = log_factorial_[0] = 0.0;
  for (std::size_t n = 1; n < size; ++n) {
    const double k = static_cast<double>(n - 1);
    const double denom = 1.0 + k * phi;
    log_rising_[n] = log_rising_[n - 1] + std::log1p(k * phi);
    score_sum_[n] = score_sum_[n - 1] + k / denom;
    curvature_sum_[n] = curvature_sum_[n - 1] + (k * k) / (denom * denom);
    log_factorial_[n] = log_factorial_[n - 1] + std::log(static_cast<double>(n));
  }
}

double phi_gradient_kernel(double x) noexcept {
  if (std::abs(x) < 0.02) {
    // sum_{n>=2} (-1)^n (n-1)/n x^(n-2)
    double sum = 0.0, p = 1.0;
    for (int n = 2; n < 14; ++n) {
      sum += ((n % 2 == 0) ? 1.0 : -1.0) * (n - 1.0) / n * p;
      p *= x;
    }
    return sum;
  }
  return (std::log1p(x) - x / (1.0 + x)) / (x * x);
}

double phi_curvature_kernel(double x) noexcept {
  if (std::abs(x) < 0.02) {
    // sum_{n>=3} (-1)^n (n-1)(n-2)/n x^(n-3)
    double sum = 0.0, p = 1.0;
    for (int n = 3; n < 15; ++n) {
      sum += ((n % 2 == 0) ? 1.0 : -1.0) * (n - 1.0) * (n - 2.0) / n * p;
      p *= x;
    }
    return sum;
  }
  const double h = std::log1p(x) - x / (1.0 + x);
  const double r = x / (1.0 + x);
  return (r * r - 2.0 * h) / (x * x * x);
}

}  // namespace detail

namespace {

// Cumulative rate per unit scale and its alpha1 derivatives for one exposure.
struct Shape {
  double base;  // S E0(alpha1 S)
  double d1;    // S^2 E1
  double d2;    // S^3 E2
};

Shape shape_at(double alpha1, double exposure, Order order) {
  const double z = alpha1 * exposure;
  if (order == Order::Value) return {exposure * detail::expm1_over(z), 0.0, 0.0};
  const auto b = detail::trend_basis(z);
  const double s2 = exposure * exposure;
  return {exposure * b.e0, s2 * b.e1, s2 * exposure * b.e2};
}

// One subject, one component, derivatives in (alpha0, alpha1, phi), leaving out
// the alpha1 * time_sum term. The derivative with respect to an additive
// log-rate offset equals the alpha0 one.
struct Terms {
  double ll = 0.0;
  double g0 = 0.0, g1 = 0.0, gp = 0.0;
  double h00 = 0.0, h01 = 0.0, h11 = 0.0, h0p = 0.0, h1p = 0.0, hpp = 0.0;
};

Terms subject_terms(double scale, double log_scale, double phi, const CountRecord& rec,
                    const Shape& shape, const detail::CountTables& tables, Order order) {
  Terms t;
  const int n_int = rec.events;
  const double n = n_int;
  const double lam = scale * shape.base;
  const double x = phi * lam;
  const double lp = std::log1p(x);
  const double lp_over_x = x > 1e-8 ? lp / x : 1.0 - x / 2.0 + x * x / 3.0;
  t.ll = log_scale * n + tables.log_rising(n_int) -
         tables.log_factorial(n_int) - n * lp - lam * lp_over_x;
  if (order == Order::Value) return t;

  const double lam1 = scale * shape.d1;
  const double inv1x = 1.0 / (1.0 + x);
  const double d = -(1.0 + phi * n) * inv1x;
  t.g0 = n + d * lam;
  t.g1 = d * lam1;
  t.gp = tables.score_sum(n_int) + lam * lam * detail::phi_gradient_kernel(x) - n * lam * inv1x;
  if (order == Order::Gradient) return t;

  const double lam11 = scale * shape.d2;
  const double dd = phi * (1.0 + phi * n) * inv1x * inv1x;
  t.h00 = dd * lam * lam + d * lam;
  t.h01 = dd * lam * lam1 + d * lam1;
  t.h11 = dd * lam1 * lam1 + d * lam11;
  const double r = (n - lam) * inv1x * inv1x;
  t.h0p = -r * lam;
  t.h1p = -r * lam1;
  t.hpp = -tables.curvature_sum(n_int) + lam * lam * lam * detail::phi_curvature_kernel(x) +
          n * lam * lam * inv1x * inv1x;
  return t;
}

int max_events(const std::vector<CountRecord>& records) {
  int m = 0;
  for (const auto& r : records) m = std::max(m, r.events);
  return m;
}

detail::CountTables& tables_for(double phi, int max_count) {
  thread_local detail::CountTables tables;
  tables.build(phi, max_count);
  return tables;
}

void check_phi(double phi) {
  if (!(phi > 0.0) || !std::isfinite(phi)) throw DomainError("phi must be positive and finite");
}

// Running sums over (alpha0 or offset, alpha1, phi).
struct Accumulator {
  double ll = 0.0, g0 = 0.0, g1 = 0.0, gp = 0.0;
  double h00 = 0.0, h01 = 0.0, h11 = 0.0, h0p = 0.0, h1p = 0.0, hpp = 0.0;

  void add(const Terms& t, const CountRecord& rec, double alpha1) {
    const double m = rec.multiplicity;
    ll += m * t.ll + alpha1 * rec.time_sum;
    g0 += m * t.g0;
    g1 += m * t.g1 + rec.time_sum;
    gp += m * t.gp;
    h00 += m * t.h00;
    h01 += m * t.h01;
    h11 += m * t.h11;
    h0p += m * t.h0p;
    h1p += m * t.h1p;
    hpp += m * t.hpp;
  }
};

// Writes an accumulator into the (alpha0, alpha1, phi) slots of an evaluation.
void write_nuisance(Evaluation& e, const Accumulator& a, Order order) {
  e.loglik += a.ll;
  if (order == Order::Value) return;
  e.grad[kAlpha0] += a.g0;
  e.grad[kAlpha1] += a.g1;
  e.grad[kPhi] += a.gp;
  if (order == Order::Gradient) return;
  e.hess(kAlpha0, kAlpha0) += a.h00;
  e.hess(kAlpha0, kAlpha1) += a.h01;
  e.hess(kAlpha1, kAlpha1) += a.h11;
  e.hess(kAlpha0, kPhi) += a.h0p;
  e.hess(kAlpha1, kPhi) += a.h1p;
  e.hess(kPhi, kPhi) += a.hpp;
}

void symmetrize(Matrix4& h) {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) h(i, j) = h(j, i);
}

}  // namespace

Evaluation evaluate_grouped(const ModelParams& params, const GroupedCounts& data, Order order) {
  check_phi(params.phi);
  const auto& tables =
      tables_for(params.phi, std::max(max_events(data.treatment), max_events(data.control)));
  Accumulator control, treatment;
  const double log_c = params.alpha0;
  const double log_t = params.alpha0 + params.beta;
  const double scale_c = std::exp(log_c);
  const double scale_t = std::exp(log_t);
  for (const auto& rec : data.control) {
    const Shape s = shape_at(params.alpha1, rec.exposure, order);
    control.add(subject_terms(scale_c, log_c, params.phi, rec, s, tables, order), rec,
                params.alpha1);
  }
  for (const auto& rec : data.treatment) {
    const Shape s = shape_at(params.alpha1, rec.exposure, order);
    treatment.add(subject_terms(scale_t, log_t, params.phi, rec, s, tables, order), rec,
                  params.alpha1);
  }

  Evaluation e;
  write_nuisance(e, control, order);
  write_nuisance(e, treatment, order);
  if (order != Order::Value) {
    e.grad[kBeta] = treatment.g0;
    if (order == Order::Hessian) {
      e.hess(kAlpha0, kBeta) = treatment.h00;
      e.hess(kAlpha1, kBeta) = treatment.h01;
      e.hess(kBeta, kBeta) = treatment.h00;
      e.hess(kBeta, kPhi) = treatment.h0p;
      symmetrize(e.hess);
    }
  }
  return e;
}

Evaluation evaluate_offset(const NuisanceParams& params, double log_offset, const BlindedCounts& data,
                           Order order) {
  check_phi(params.phi);
  const auto& tables = tables_for(params.phi, max_events(data));
  const double log_scale = params.alpha0 + log_offset;
  const double scale = std::exp(log_scale);
  Accumulator acc;
  for (const auto& rec : data) {
    const Shape s = shape_at(params.alpha1, rec.exposure, order);
    acc.add(subject_terms(scale, log_scale, params.phi, rec, s, tables, order), rec,
            params.alpha1);
  }
  Evaluation e;
  write_nuisance(e, acc, order);
  if (order == Order::Hessian) symmetrize(e.hess);
  return e;
}

Evaluation evaluate_mixture(const NuisanceParams& params, double beta_h1, AllocationWeights weights,
                            const BlindedCounts& data, Order order) {
  check_phi(params.phi);
  const auto& tables = tables_for(params.phi, max_events(data));
  const double log_t = params.alpha0 + beta_h1;
  const double log_c = params.alpha0;
  const double scale_t = std::exp(log_t);
  const double scale_c = std::exp(log_c);
  const double log_wt = std::log(weights.treatment());
  const double log_wc = std::log(weights.control());
  const bool has_t = weights.treatment() > 0.0;
  const bool has_c = weights.control() > 0.0;

  Accumulator acc;
  for (const auto& rec : data) {
    const Shape s = shape_at(params.alpha1, rec.exposure, order);
    Terms t{}, c{};
    if (has_t) t = subject_terms(scale_t, log_t, params.phi, rec, s, tables, order);
    if (has_c) c = subject_terms(scale_c, log_c, params.phi, rec, s, tables, order);
    if (!has_c) {
      acc.add(t, rec, params.alpha1);
      continue;
    }
    if (!has_t) {
      acc.add(c, rec, params.alpha1);
      continue;
    }
    const double lt = log_wt + t.ll;
    const double lc = log_wc + c.ll;
    const double top = std::max(lt, lc);
    const double ll = top + std::log(std::exp(lt - top) + std::exp(lc - top));
    Terms m;
    m.ll = ll;
    if (order != Order::Value) {
      const double rt = std::exp(lt - ll);
      const double rc = std::exp(lc - ll);
      m.g0 = rt * t.g0 + rc * c.g0;
      m.g1 = rt * t.g1 + rc * c.g1;
      m.gp = rt * t.gp + rc * c.gp;
      if (order == Order::Hessian) {
        // sum r_i H_i + r_T r_C (g_T - g_C)(g_T - g_C)'
        const double rr = rt * rc;
        const double d0 = t.g0 - c.g0, d1 = t.g1 - c.g1, dp = t.gp - c.gp;
        m.h00 = rt * t.h00 + rc * c.h00 + rr * d0 * d0;
        m.h01 = rt * t.h01 + rc * c.h01 + rr * d0 * d1;
        m.h11 = rt * t.h11 + rc * c.h11 + rr * d1 * d1;
        m.h0p = rt * t.h0p + rc * c.h0p + rr * d0 * dp;
        m.h1p = rt * t.h1p + rc * c.h1p + rr * d1 * dp;
        m.hpp = rt * t.hpp + rc * c.hpp + rr * dp * dp;
      }
    }
    acc.add(m, rec, params.alpha1);
  }
  Evaluation e;
  write_nuisance(e, acc, order);
  if (order == Order::Hessian) symmetrize(e.hess);
  return e;
}

double expected_phi_information(double mean, double phi) {
  const double x = phi * mean;
  const double inv1x = 1.0 / (1.0 + x);
  // E[sum_{k<N} k^2/(1+k phi)^2] = sum_k k^2/(1+k phi)^2 P(N > k)
  double pmf = std::exp(-mean * (x > 1e-8 ? std::log1p(x) / x : 1.0 - x / 2.0));
  double cdf = pmf;
  double curvature = 0.0;
  const double ratio = mean * inv1x;
  for (int k = 0; k < 100000; ++k) {
    const double tail = 1.0 - cdf;
    if (tail < 1e-14 && k > 2) break;
    const double denom = 1.0 + k * phi;
    curvature += (static_cast<double>(k) * k) / (denom * denom) * tail;
    pmf *= (1.0 + k * phi) / (k + 1.0) * ratio;
    cdf += pmf;
  }
  return curvature - mean * mean * mean * detail::phi_curvature_kernel(x) -
         mean * mean * mean * inv1x * inv1x;
}

void accumulate_expected_fisher(Matrix4& fisher, double weight, const ModelParams& params, Group group,
                                double exposure, bool with_phi) {
  const double xg = indicator(group);
  const double scale = std::exp(params.alpha0 + params.beta * xg);
  const Shape s = shape_at(params.alpha1, exposure, Order::Hessian);
  const double lam = scale * s.base, lam1 = scale * s.d1, lam11 = scale * s.d2;
  const double k = params.phi / (1.0 + params.phi * lam);
  const Eigen::Vector3d d(lam, lam1, xg * lam);
  Eigen::Matrix3d m;
  m << lam, lam1, xg * lam,  //
      lam1, lam11, xg * lam1,  //
      xg * lam, xg * lam1, xg * lam;
  const Eigen::Matrix3d outer = d * d.transpose();
  fisher.topLeftCorner<3, 3>() += weight * (m - k * outer);
  if (with_phi) fisher(kPhi, kPhi) += weight * expected_phi_information(lam, params.phi);
}

double information_for_beta(const Matrix4& fisher) {
  const Eigen::Matrix3d block = fisher.topLeftCorner<3, 3>();
  Eigen::LLT<Eigen::Matrix3d> llt(block);
  if (llt.info() != Eigen::Success) throw SingularityError("Fisher information block is not positive definite");
  const Eigen::Vector3d y = llt.solve(Eigen::Vector3d::UnitZ());
  const double var = y[2];
  if (!(var > 0.0) || !std::isfinite(var)) throw SingularityError("variance of beta is not positive");
  return 1.0 / var;
}

double information_for_beta_without_trend(const Matrix4& fisher) {
  const double a = fisher(kAlpha0, kAlpha0), b = fisher(kAlpha0, kBeta), c = fisher(kBeta, kBeta);
  const double det = a * c - b * b;
  if (!(a > 0.0) || !(det > 0.0) || !std::isfinite(det))
    throw SingularityError("Fisher information block is not positive definite");
  return det / a;
}

}  // namespace bcm
