#ifndef DPPCDF_BROMWICH_HPP
#define DPPCDF_BROMWICH_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "dppcdf/error.hpp"
#include "dppcdf/linalg.hpp"
#include "dppcdf/parallel.hpp"

// Numerical inversion of F(t) from s^{-1} L(s) on the line Re(s) = sigma.
//
// The trapezoidal rule with half-period T on that line turns the Bromwich
// integral into a Fourier series in z = exp(i pi t / T),
//
//   F(t) ~ exp(sigma t) / T * Re[ a_0 / 2 + sum_k a_k z^k ],  a_k = L(s_k) / s_k,
//
// with nodes s_k = sigma + i k pi / T. de Hoog, Knight and Stokes accelerate
// the partial sums by turning the power series into a continued fraction
// (quotient-difference algorithm) and closing it with an estimate of the tail.
// The nodes do not depend on t, so one set of transform samples serves every
// t <= t_max.

namespace dppcdf {

inline constexpr double kDefaultPeriodScale = 2.0;
inline constexpr double kDefaultAbscissaTolerance = 1e-10;
inline constexpr int kDefaultNodes = 41;

struct QuadraturePlan {
  double sigma = 1.0;
  int e_nodes = kDefaultNodes;
  double period_scale = kDefaultPeriodScale;
  double t_max = 1.0;

  double half_period() const { return period_scale * t_max; }
  int degree() const { return (e_nodes - 1) / 2; }

  Complex node(int k) const {
    return {sigma, static_cast<double>(k) * std::numbers::pi / half_period()};
  }

  std::vector<Complex> nodes() const {
    std::vector<Complex> out(static_cast<std::size_t>(e_nodes));
    for (int k = 0; k < e_nodes; ++k) {
      out[static_cast<std::size_t>(k)] = node(k);
    }
    return out;
  }

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw InputError("Bromwich abscissa must be positive");
    }
    if (e_nodes < 5 || e_nodes % 2 == 0) {
      throw InputError("number of nodes must be odd and >= 5, got " + std::to_string(e_nodes));
    }
    if (!(period_scale >= 1.0) || !(t_max > 0.0) || !std::isfinite(t_max)) {
      throw InputError("period scale must be >= 1 and t_max positive");
    }
  }
};

struct PlanOptions {
  int e_nodes = kDefaultNodes;
  std::optional<double> sigma;
  double period_scale = kDefaultPeriodScale;
  /// Target aliasing level of the default abscissa rule.
  double tolerance = kDefaultAbscissaTolerance;
};

/// One plan for all t: T = period_scale * max(t), and unless given,
/// sigma = -ln(tolerance) / (2 T).
inline QuadraturePlan make_plan(std::span<const double> t_values, const PlanOptions &opts = {}) {
  if (t_values.empty()) {
    throw InputError("make_plan needs at least one t");
  }
  for (const double t : t_values) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw InputError("inversion points must be positive and finite");
    }
  }
  if (!(opts.tolerance > 0.0 && opts.tolerance < 1.0)) {
    throw InputError("abscissa tolerance must lie in (0, 1)");
  }
  QuadraturePlan plan;
  plan.e_nodes = opts.e_nodes;
  plan.period_scale = opts.period_scale;
  plan.t_max = *std::max_element(t_values.begin(), t_values.end());
  plan.sigma = opts.sigma.value_or(-std::log(opts.tolerance) / (2.0 * plan.half_period()));
  plan.validate();
  return plan;
}

inline QuadraturePlan make_plan(std::initializer_list<double> t_values, const PlanOptions &opts = {}) {
  return make_plan(std::span<const double>(t_values.begin(), t_values.size()), opts);
}

struct TransformSamples {
  QuadraturePlan plan;
  std::vector<Complex> values; // values[k] = L(plan.node(k))
};

using TransformEvaluator = std::function<Complex(Complex)>;

/// Evaluates the transform at every node of the plan; the evaluator must be
/// safe to call concurrently when threads > 1.
inline TransformSamples sample_transform(const TransformEvaluator &evaluator, const QuadraturePlan &plan,
                                         std::size_t threads = default_thread_count()) {
  plan.validate();
  TransformSamples out{plan, std::vector<Complex>(static_cast<std::size_t>(plan.e_nodes))};
  parallel_for(
      out.values.size(),
      [&](std::size_t k) {
        Complex v;
        try {
          v = evaluator(plan.node(static_cast<int>(k)));
        } catch (const std::exception &e) {
          throw EvaluationError(e.what(), k);
        }
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
          throw EvaluationError("non-finite transform value", k);
        }
        out.values[k] = v;
      },
      threads);
  return out;
}

/// Continued-fraction coefficients d_0..d_{E-1}, independent of t.
template <typename Real = double>
struct ContinuedFraction {
  QuadraturePlan plan;
  std::vector<std::complex<Real>> d;
  /// Number of vanishing quotient-difference denominators replaced by 1e-30.
  std::size_t perturbations = 0;
};

namespace detail {

template <typename Real>
std::complex<Real> guard_denominator(std::complex<Real> x, std::size_t &perturbations) {
  if (std::abs(x) < std::numeric_limits<Real>::min()) {
    ++perturbations;
    return {Real(1e-30), Real(0)};
  }
  return x;
}

} // namespace detail

/// Quotient-difference table of the power series c_0 = a_0 / 2, c_k = a_k.
/// Real is the working precision of the inversion arithmetic.
template <typename Real = double>
ContinuedFraction<Real> dehoog_coefficients(const TransformSamples &samples) {
  using C = std::complex<Real>;
  const QuadraturePlan &plan = samples.plan;
  plan.validate();
  if (samples.values.size() != static_cast<std::size_t>(plan.e_nodes)) {
    throw InputError("transform samples do not match the plan");
  }
  const int m = plan.degree();
  const int count = plan.e_nodes; // 2m + 1
  ContinuedFraction<Real> out{plan, std::vector<C>(static_cast<std::size_t>(count)), 0};

  std::vector<C> c(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const Complex s = plan.node(k);
    const Complex a = samples.values[static_cast<std::size_t>(k)] / s;
    c[static_cast<std::size_t>(k)] = C(static_cast<Real>(a.real()), static_cast<Real>(a.imag()));
  }
  c[0] *= Real(0.5);

  // q holds column r of the q table, e column r of the e table; both indexed by i.
  std::vector<C> q(static_cast<std::size_t>(count - 1));
  std::vector<C> e(static_cast<std::size_t>(count), C(0));
  for (int i = 0; i + 1 < count; ++i) {
    q[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i + 1)] /
                                     detail::guard_denominator(c[static_cast<std::size_t>(i)], out.perturbations);
  }
  out.d[0] = c[0];
  for (int r = 1; r <= m; ++r) {
    // e_r^(i) = q_r^(i+1) - q_r^(i) + e_{r-1}^(i+1),  i = 0 .. 2(m-r)
    const int e_len = 2 * (m - r) + 1;
    std::vector<C> e_next(static_cast<std::size_t>(e_len));
    for (int i = 0; i < e_len; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      e_next[ui] = q[ui + 1] - q[ui] + e[ui + 1];
    }
    out.d[static_cast<std::size_t>(2 * r - 1)] = -q[0];
    out.d[static_cast<std::size_t>(2 * r)] = -e_next[0];
    if (r == m) {
      break;
    }
    // q_{r+1}^(i) = q_r^(i+1) e_r^(i+1) / e_r^(i),  i = 0 .. 2(m-r)-1
    const int q_len = e_len - 1;
    std::vector<C> q_next(static_cast<std::size_t>(q_len));
    for (int i = 0; i < q_len; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      q_next[ui] = q[ui + 1] * e_next[ui + 1] / detail::guard_denominator(e_next[ui], out.perturbations);
    }
    q = std::move(q_next);
    e = std::move(e_next);
  }
  return out;
}

/// Three-term recurrence for the convergents at z = exp(i pi t / T), with the
/// de Hoog estimate of the remainder closing the last term.
template <typename Real>
double evaluate_continued_fraction(const ContinuedFraction<Real> &cf, double t) {
  using C = std::complex<Real>;
  const QuadraturePlan &plan = cf.plan;
  if (!(t > 0.0) || t > plan.t_max * (1.0 + 1e-12)) {
    throw InputError("inversion point must lie in (0, t_max]");
  }
  const int m2 = 2 * plan.degree();
  const Real period = static_cast<Real>(plan.half_period());
  const Real phase = std::numbers::pi_v<Real> * static_cast<Real>(t) / period;
  const C z(std::cos(phase), std::sin(phase));
  const auto &d = cf.d;

  // a_prev2/b_prev2 = A_{n-2}, a_prev/b_prev = A_{n-1}
  C a_prev2(0), b_prev2(1), a_prev(d[0]), b_prev(1);
  for (int n = 1; n < m2; ++n) {
    const C dz = d[static_cast<std::size_t>(n)] * z;
    const C a_n = a_prev + dz * a_prev2;
    const C b_n = b_prev + dz * b_prev2;
    a_prev2 = a_prev;
    b_prev2 = b_prev;
    a_prev = a_n;
    b_prev = b_n;
  }
  const C d_last = d[static_cast<std::size_t>(m2)];
  const C h = Real(0.5) * (C(1) + z * (d[static_cast<std::size_t>(m2 - 1)] - d_last));
  const C rem = -h * (C(1) - std::sqrt(C(1) + z * d_last / (h * h)));
  const C a_final = a_prev + rem * a_prev2;
  const C b_final = b_prev + rem * b_prev2;
  const Real sigma = static_cast<Real>(plan.sigma);
  const Real value = std::exp(sigma * static_cast<Real>(t)) / period * (a_final / b_final).real();
  return static_cast<double>(value);
}

struct InversionResult {
  double value = 0.0;
  std::size_t qd_perturbations = 0;
};

inline InversionResult dehoog_invert_checked(const TransformSamples &samples, double t) {
  const ContinuedFraction<double> cf = dehoog_coefficients<double>(samples);
  return {evaluate_continued_fraction(cf, t), cf.perturbations};
}

/// de Hoog estimate of F(t) where the samples hold L(s) and F has transform L(s)/s.
inline double dehoog_invert(const TransformSamples &samples, double t) {
  return dehoog_invert_checked(samples, t).value;
}

} // namespace dppcdf

#endif // DPPCDF_BROMWICH_HPP
