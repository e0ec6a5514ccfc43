#ifndef DPPCDF_CDF_HPP
#define DPPCDF_CDF_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dppcdf/bromwich.hpp"
#include "dppcdf/kernel.hpp"
#include "dppcdf/laplace.hpp"
#include "dppcdf/lowrank.hpp"

namespace dppcdf {

enum class CdfMethod { dense, lowrank_fixed, lowrank_per_node, exact, empirical };

inline const char *to_string(CdfMethod m) {
  switch (m) {
  case CdfMethod::dense: return "dense";
  case CdfMethod::lowrank_fixed: return "lowrank_fixed";
  case CdfMethod::lowrank_per_node: return "lowrank_per_node";
  case CdfMethod::exact: return "exact";
  case CdfMethod::empirical: return "empirical";
  }
  return "unknown";
}

struct PhaseTimings {
  double factorization_s = 0.0;
  double sampling_s = 0.0;
  double inversion_s = 0.0;
};

struct CdfEstimate {
  std::vector<double> t_grid;
  std::vector<double> f_values;
  /// Quadrature output before monotone repair; equal to f_values while unrepaired.
  std::vector<double> raw_values;
  CdfMethod method = CdfMethod::dense;
  Index rank = 0; // D for the low-rank methods
  int e_nodes = 0;
  double sigma = 0.0;
  double period_scale = kDefaultPeriodScale;
  bool shared_sigma = true;
  bool repaired = false;
  std::size_t transform_evaluations = 0;
  std::size_t svd_count = 0;
  std::size_t qd_perturbations = 0;
  PhaseTimings timings;
};

struct CdfOptions {
  int e_nodes = kDefaultNodes;
  std::optional<double> sigma;
  double period_scale = kDefaultPeriodScale;
  /// One abscissa and one node set for the whole grid. When false, every t gets
  /// its own plan with T = period_scale * t, which costs E evaluations per t.
  bool shared_sigma = true;
  std::size_t threads = default_thread_count();
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

inline void check_grid(std::span<const double> t_grid) {
  if (t_grid.empty()) {
    throw InputError("t grid is empty");
  }
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0) || !std::isfinite(t_grid[i])) {
      throw InputError("t grid must be positive and finite");
    }
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) {
      throw InputError("t grid must be strictly increasing");
    }
  }
}

inline void check_cdf_statistic(const LinearStatistic &psi) {
  if (!psi.nonnegative()) {
    throw InputError("CDF inversion needs a nonnegative statistic");
  }
}

// Shared quadrature driver: samples the transform and inverts at every t.
inline CdfEstimate invert_on_grid(const TransformEvaluator &evaluator, std::span<const double> t_grid,
                                  const CdfOptions &opts) {
  check_grid(t_grid);
  std::atomic<std::size_t> calls{0};
  const TransformEvaluator counted = [&](Complex s) {
    calls.fetch_add(1, std::memory_order_relaxed);
    return evaluator(s);
  };
  PlanOptions plan_opts;
  plan_opts.e_nodes = opts.e_nodes;
  plan_opts.sigma = opts.sigma;
  plan_opts.period_scale = opts.period_scale;

  CdfEstimate est;
  est.t_grid.assign(t_grid.begin(), t_grid.end());
  est.f_values.resize(t_grid.size());
  est.e_nodes = opts.e_nodes;
  est.period_scale = opts.period_scale;
  est.shared_sigma = opts.shared_sigma;

  if (opts.shared_sigma) {
    const QuadraturePlan plan = make_plan(t_grid, plan_opts);
    auto start = Clock::now();
    const TransformSamples samples = sample_transform(counted, plan, opts.threads);
    est.timings.sampling_s = seconds_since(start);
    start = Clock::now();
    const ContinuedFraction<double> cf = dehoog_coefficients<double>(samples);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      est.f_values[i] = evaluate_continued_fraction(cf, t_grid[i]);
    }
    est.timings.inversion_s = seconds_since(start);
    est.sigma = plan.sigma;
    est.qd_perturbations = cf.perturbations;
  } else {
    double sigma_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      const double t = t_grid[i];
      const QuadraturePlan plan = make_plan(std::span<const double>(&t, 1), plan_opts);
      auto start = Clock::now();
      const TransformSamples samples = sample_transform(counted, plan, opts.threads);
      est.timings.sampling_s += seconds_since(start);
      start = Clock::now();
      const InversionResult r = dehoog_invert_checked(samples, t);
      est.timings.inversion_s += seconds_since(start);
      est.f_values[i] = r.value;
      est.qd_perturbations += r.qd_perturbations;
      sigma_min = std::min(sigma_min, plan.sigma);
    }
    est.sigma = sigma_min;
  }
  est.raw_values = est.f_values;
  est.transform_evaluations = calls.load();
  return est;
}

} // namespace detail

/// CDF of Lambda(psi) under DPP(K) on t_grid from Det[I - Delta K].
inline CdfEstimate approx_cdf(const DenseKernel &k, const LinearStatistic &psi, std::span<const double> t_grid,
                              const CdfOptions &opts = {}) {
  check_dimensions(k.n(), psi);
  detail::check_cdf_statistic(psi);
  CdfEstimate est = detail::invert_on_grid(
      [&](Complex s) { return laplace_dense(k, make_delta(psi, s)); }, t_grid, opts);
  est.method = CdfMethod::dense;
  est.rank = k.n();
  return est;
}

/// Same, through the D x D determinant of a factored kernel.
inline CdfEstimate approx_cdf(const FactoredKernel &b, const LinearStatistic &psi, std::span<const double> t_grid,
                              const CdfOptions &opts = {}) {
  check_dimensions(b.n(), psi);
  detail::check_cdf_statistic(psi);
  CdfEstimate est = detail::invert_on_grid(
      [&](Complex s) { return laplace_lowrank(b, make_delta(psi, s)); }, t_grid, opts);
  est.method = CdfMethod::lowrank_fixed;
  est.rank = b.d();
  return est;
}

inline CdfEstimate approx_cdf(const SvdFactors &f, const LinearStatistic &psi, std::span<const double> t_grid,
                              const CdfOptions &opts = {}) {
  check_dimensions(f.n(), psi);
  detail::check_cdf_statistic(psi);
  CdfEstimate est = detail::invert_on_grid(
      [&](Complex s) { return laplace_svd(f, make_delta(psi, s)); }, t_grid, opts);
  est.method = CdfMethod::lowrank_fixed;
  est.rank = f.d();
  return est;
}

/// Low-rank approximation recomputed at every node: a randomized SVD of
/// Delta(s) K, so the sketch sees the statistic. One SVD per transform evaluation.
inline CdfEstimate approx_cdf_with_diagonal(const DenseKernel &k, const LinearStatistic &psi,
                                            std::span<const double> t_grid, Index d, const CdfOptions &opts = {},
                                            RandomizedSvdConfig svd_cfg = {}) {
  check_dimensions(k.n(), psi);
  detail::check_cdf_statistic(psi);
  svd_cfg.d = d;
  std::atomic<std::size_t> svds{0};
  CdfEstimate est = detail::invert_on_grid(
      [&](Complex s) {
        const SvdFactors f = lowrank_of_weighted(k, make_delta(psi, s), svd_cfg);
        svds.fetch_add(1, std::memory_order_relaxed);
        return laplace_from_weighted_svd(f);
      },
      t_grid, opts);
  est.method = CdfMethod::lowrank_per_node;
  est.rank = d;
  est.svd_count = svds.load();
  // The SVDs happen inside the sampling phase; report them as factorization work.
  est.timings.factorization_s = est.timings.sampling_s;
  return est;
}

/// Isotonic (pool-adjacent-violators) projection of the values, then a clamp to [0, 1].
inline CdfEstimate monotone_repair(const CdfEstimate &est) {
  CdfEstimate out = est;
  if (!est.repaired) {
    out.raw_values = est.f_values;
  }
  struct Block {
    double sum;
    std::size_t count;
    double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  blocks.reserve(est.f_values.size());
  for (const double v : est.f_values) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
      const Block top = blocks.back();
      blocks.pop_back();
      blocks.back().sum += top.sum;
      blocks.back().count += top.count;
    }
  }
  std::size_t pos = 0;
  for (const Block &b : blocks) {
    const double value = std::clamp(b.mean(), 0.0, 1.0);
    for (std::size_t j = 0; j < b.count; ++j) {
      out.f_values[pos++] = value;
    }
  }
  out.repaired = true;
  return out;
}

enum class QuantileFlag { interior, below_grid, saturated };

struct QuantileResult {
  double value = 0.0;
  QuantileFlag flag = QuantileFlag::interior;
};

/// Smallest t with F(t) >= q on the linear interpolant of a repaired estimate.
inline QuantileResult quantile(const CdfEstimate &est, double q) {
  if (!est.repaired) {
    throw InputError("quantile needs a monotone (repaired) estimate");
  }
  if (!(q > 0.0 && q < 1.0)) {
    throw InputError("quantile level must lie in (0, 1)");
  }
  const auto &f = est.f_values;
  const auto &t = est.t_grid;
  if (f.empty()) {
    throw InputError("empty estimate");
  }
  const auto it = std::lower_bound(f.begin(), f.end(), q);
  if (it == f.end()) {
    return {t.back(), QuantileFlag::saturated};
  }
  const auto j = static_cast<std::size_t>(it - f.begin());
  if (j == 0) {
    return {t.front(), f.front() > q ? QuantileFlag::below_grid : QuantileFlag::interior};
  }
  const double f0 = f[j - 1];
  const double f1 = f[j];
  const double w = f1 > f0 ? (q - f0) / (f1 - f0) : 1.0;
  return {t[j - 1] + w * (t[j] - t[j - 1]), QuantileFlag::interior};
}

/// Inverse-CDF draw of the statistic.
template <typename Rng>
double inverse_cdf_sample(const CdfEstimate &est, Rng &rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = 0.0;
  do {
    u = unit(rng);
  } while (!(u > 0.0));
  return quantile(est, u).value;
}

} // namespace dppcdf

#endif // DPPCDF_CDF_HPP
