#ifndef DPPCDF_REPORT_HPP
#define DPPCDF_REPORT_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dppcdf/cdf.hpp"
#include "dppcdf/io.hpp"

// JSON metadata for CDF estimates and curve comparison.

namespace dppcdf {

inline nlohmann::ordered_json to_json(const CdfEstimate &est) {
  nlohmann::ordered_json j;
  j["method"] = to_string(est.method);
  j["rank"] = est.rank;
  j["grid"] = {{"t_min", est.t_grid.empty() ? 0.0 : est.t_grid.front()},
               {"t_max", est.t_grid.empty() ? 0.0 : est.t_grid.back()},
               {"points", est.t_grid.size()}};
  j["e_nodes"] = est.e_nodes;
  j["sigma"] = est.sigma;
  j["period_scale"] = est.period_scale;
  j["shared_sigma"] = est.shared_sigma;
  j["repaired"] = est.repaired;
  j["transform_evaluations"] = est.transform_evaluations;
  j["svd_count"] = est.svd_count;
  j["qd_perturbations"] = est.qd_perturbations;
  j["timings_s"] = {{"factorization", est.timings.factorization_s},
                    {"transform_sampling", est.timings.sampling_s},
                    {"inversion", est.timings.inversion_s}};
  return j;
}

struct ComparisonReport {
  std::vector<double> t;
  std::vector<double> difference; // a - b at each compared point
  double sup_distance = 0.0;
  /// Fraction of points where a lies inside b's band; empty when b has none.
  std::optional<double> containment;
};

namespace detail {

inline double interpolate(const std::vector<double> &x, const std::vector<double> &y, double t) {
  const auto it = std::lower_bound(x.begin(), x.end(), t);
  if (it == x.begin()) {
    return y.front();
  }
  if (it == x.end()) {
    return y.back();
  }
  const auto j = static_cast<std::size_t>(it - x.begin());
  if (*it == t) {
    return y[j];
  }
  const double w = (t - x[j - 1]) / (x[j] - x[j - 1]);
  return y[j - 1] + w * (y[j] - y[j - 1]);
}

} // namespace detail

/// Compares curve a against curve b at the points of a that fall inside b's
/// t range; b is linearly interpolated when the grids differ.
inline ComparisonReport compare_curves(const Curve &a, const Curve &b) {
  ComparisonReport report;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < a.t.size(); ++i) {
    const double t = a.t[i];
    const double span = std::max(std::abs(b.t.back()), 1.0) * 1e-12;
    if (t < b.t.front() - span || t > b.t.back() + span) {
      continue;
    }
    const double diff = a.f[i] - detail::interpolate(b.t, b.f, t);
    report.t.push_back(t);
    report.difference.push_back(diff);
    report.sup_distance = std::max(report.sup_distance, std::abs(diff));
    if (b.has_band()) {
      const double lo = detail::interpolate(b.t, b.lower, t);
      const double hi = detail::interpolate(b.t, b.upper, t);
      if (a.f[i] >= lo && a.f[i] <= hi) {
        ++inside;
      }
    }
  }
  if (report.t.empty()) {
    throw InputError("curves have disjoint t grids");
  }
  if (b.has_band()) {
    report.containment = static_cast<double>(inside) / static_cast<double>(report.t.size());
  }
  return report;
}

} // namespace dppcdf

#endif // DPPCDF_REPORT_HPP
