#ifndef DPPCDF_SAMPLERS_HPP
#define DPPCDF_SAMPLERS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dppcdf/kernel.hpp"
#include "dppcdf/linalg.hpp"

// Ground-truth machinery: the HKPV spectral sampler, exact distributions by
// subset enumeration, empirical CDFs with DKW bands.

namespace dppcdf {

struct SampleBatch {
  Index n = 0;
  std::vector<Subset> subsets;
  std::uint64_t kernel_fingerprint = 0;
  std::uint64_t seed = 0;
};

/// FNV-1a over the side length and the raw entries.
inline std::uint64_t kernel_fingerprint(const DenseKernel &k) {
  std::uint64_t h = 14695981039346656037ull;
  const auto mix = [&h](const void *data, std::size_t bytes) {
    const auto *p = static_cast<const unsigned char *>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  const auto n = static_cast<std::uint64_t>(k.n());
  mix(&n, sizeof n);
  mix(k.entries().data(), static_cast<std::size_t>(k.entries().size()) * sizeof(Complex));
  return h;
}

// --- HKPV -------------------------------------------------------------------

inline constexpr double kSpectrumTolerance = 1e-8;

namespace detail {

template <typename Scalar>
struct SpectralSampler {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  RealVector eigenvalues;
  Matrix eigenvectors;

  template <typename Rng>
  Subset sample(Rng &rng, std::atomic<std::size_t> &warnings) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Index n = eigenvectors.rows();
    std::vector<Index> chosen;
    for (Index i = 0; i < eigenvalues.size(); ++i) {
      if (unit(rng) < eigenvalues(i)) {
        chosen.push_back(i);
      }
    }
    const auto k = static_cast<Index>(chosen.size());
    Matrix v(n, k);
    for (Index c = 0; c < k; ++c) {
      v.col(c) = eigenvectors.col(chosen[static_cast<std::size_t>(c)]);
    }
    // H = V V^H is never formed: its diagonal is tracked in `diag`, and every
    // rank-one update H <- H - H_{:eta} H_{:eta}^H / H_{eta eta} is kept as a
    // column of `updates`.
    RealVector diag = v.rowwise().squaredNorm();
    Matrix updates(n, k);
    std::vector<bool> in_set(static_cast<std::size_t>(n), false);
    Subset out;
    out.reserve(static_cast<std::size_t>(k));
    for (Index step = 0; step < k; ++step) {
      double total = 0.0;
      for (Index j = 0; j < n; ++j) {
        if (in_set[static_cast<std::size_t>(j)]) {
          continue;
        }
        if (diag(j) < 0.0) {
          if (diag(j) < -1e-8) {
            warnings.fetch_add(1, std::memory_order_relaxed);
          }
          diag(j) = 0.0;
        }
        total += diag(j);
      }
      Index eta = -1;
      if (total > 0.0) {
        double target = unit(rng) * total;
        for (Index j = 0; j < n; ++j) {
          if (in_set[static_cast<std::size_t>(j)]) {
            continue;
          }
          eta = j;
          target -= diag(j);
          if (target < 0.0) {
            break;
          }
        }
      } else {
        warnings.fetch_add(1, std::memory_order_relaxed);
        std::vector<Index> free;
        for (Index j = 0; j < n; ++j) {
          if (!in_set[static_cast<std::size_t>(j)]) {
            free.push_back(j);
          }
        }
        std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
        eta = free[pick(rng)];
      }
      Vector column = v * v.row(eta).adjoint();
      if (step > 0) {
        column -= updates.leftCols(step) * updates.row(eta).leftCols(step).adjoint();
      }
      const double pivot = std::max(diag(eta), std::numeric_limits<double>::min());
      updates.col(step) = column / std::sqrt(pivot);
      diag -= updates.col(step).cwiseAbs2();
      in_set[static_cast<std::size_t>(eta)] = true;
      out.push_back(eta);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

} // namespace detail

/// Spectral sampler for Hermitian kernels with spectrum in [0, 1]. The
/// eigendecomposition is done once; each draw costs O(N k^2) for k points.
class HkpvSampler {
public:
  explicit HkpvSampler(const DenseKernel &k) : n_(k.n()) {
    if (!k.is_hermitian()) {
      throw CapabilityError("HKPV needs a Hermitian kernel; use the brute-force sampler (n <= 15) instead");
    }
    if (k.is_real()) {
      const RealMatrix sym = 0.5 * (k.entries().real() + k.entries().real().transpose());
      const Eigen::SelfAdjointEigenSolver<RealMatrix> eig(sym);
      real_.eigenvalues = clamp(eig.eigenvalues());
      real_.eigenvectors = eig.eigenvectors();
      is_real_ = true;
    } else {
      const ComplexMatrix sym = 0.5 * (k.entries() + k.entries().adjoint());
      const Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(sym);
      complex_.eigenvalues = clamp(eig.eigenvalues());
      complex_.eigenvectors = eig.eigenvectors();
    }
  }

  HkpvSampler(const HkpvSampler &other)
      : n_(other.n_), is_real_(other.is_real_), real_(other.real_), complex_(other.complex_) {}

  Index n() const { return n_; }
  const RealVector &eigenvalues() const { return is_real_ ? real_.eigenvalues : complex_.eigenvalues; }
  /// Count of negative conditional diagonals below -1e-8 clamped so far.
  std::size_t warnings() const { return warnings_.load(); }

  template <typename Rng>
  Subset sample(Rng &rng) const {
    return is_real_ ? real_.sample(rng, warnings_) : complex_.sample(rng, warnings_);
  }

private:
  static RealVector clamp(const RealVector &ev) {
    if (ev.size() > 0 && (ev.minCoeff() < -kSpectrumTolerance || ev.maxCoeff() > 1.0 + kSpectrumTolerance)) {
      throw CapabilityError("HKPV needs a spectrum in [0, 1]; got [" + std::to_string(ev.minCoeff()) + ", " +
                            std::to_string(ev.maxCoeff()) + "]");
    }
    return ev.cwiseMax(0.0).cwiseMin(1.0);
  }

  Index n_;
  bool is_real_ = false;
  detail::SpectralSampler<double> real_;
  detail::SpectralSampler<Complex> complex_;
  mutable std::atomic<std::size_t> warnings_{0};
};

template <typename Rng>
Subset hkpv_sample(const DenseKernel &k, Rng &rng) {
  return HkpvSampler(k).sample(rng);
}

inline SampleBatch hkpv_batch(const DenseKernel &k, std::size_t m, std::uint64_t seed) {
  const HkpvSampler sampler(k);
  std::mt19937_64 rng(seed);
  SampleBatch batch{k.n(), {}, kernel_fingerprint(k), seed};
  batch.subsets.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    batch.subsets.push_back(sampler.sample(rng));
  }
  return batch;
}

/// Keeps each point independently with probability 1 / (1 + eps).
template <typename Rng>
Subset thin_sample(std::span<const Index> subset, double eps, Rng &rng) {
  if (!(eps > 0.0)) {
    throw InputError("thinning parameter must be positive");
  }
  std::bernoulli_distribution keep(1.0 / (1.0 + eps));
  Subset out;
  for (const Index i : subset) {
    if (keep(rng)) {
      out.push_back(i);
    }
  }
  return out;
}

// --- enumeration oracles -------------------------------------------------------

/// P(X = A) for all 2^n subsets, indexed by bitmask.
struct AtomTable {
  Index n = 0;
  std::vector<double> prob;

  double total() const {
    double s = 0.0;
    for (const double p : prob) {
      s += p;
    }
    return s;
  }
};

inline constexpr double kAtomTolerance = 1e-9;

namespace detail {

inline void check_atoms(const std::vector<double> &atoms) {
  const double lowest = *std::min_element(atoms.begin(), atoms.end());
  if (lowest < -kAtomTolerance) {
    throw InvalidKernelError("kernel gives a negative atom probability " + std::to_string(lowest));
  }
}

} // namespace detail

/// P(X = A) = Det[L_A] / Det[I + L].
inline AtomTable brute_force_atoms(const DenseKernel &l) {
  const std::vector<Complex> minors = all_principal_minors(l.entries());
  const ComplexMatrix shifted = ComplexMatrix::Identity(l.n(), l.n()) + l.entries();
  const Complex normalizer = determinant(shifted);
  if (std::abs(normalizer) == 0.0) {
    throw InvalidKernelError("Det[I + L] vanishes");
  }
  AtomTable table{l.n(), std::vector<double>(minors.size())};
  for (std::size_t mask = 0; mask < minors.size(); ++mask) {
    const Complex p = minors[mask] / normalizer;
    if (std::abs(p.imag()) > kAtomTolerance) {
      throw InvalidKernelError("complex atom probability");
    }
    table.prob[mask] = p.real();
  }
  detail::check_atoms(table.prob);
  return table;
}

/// Atoms of DPP(K) by inclusion-exclusion on Det[K_B]; no L-ensemble needed.
inline AtomTable atoms_from_marginal_kernel(const DenseKernel &k) {
  AtomTable table{k.n(), inclusion_exclusion_atoms(k)};
  detail::check_atoms(table.prob);
  return table;
}

/// Piecewise-constant CDF with jumps at `jumps` (sorted, distinct).
struct ExactCdf {
  std::vector<double> jumps;
  std::vector<double> masses;
  std::vector<double> cumulative;

  double operator()(double t) const {
    const auto it = std::upper_bound(jumps.begin(), jumps.end(), t);
    return it == jumps.begin() ? 0.0 : cumulative[static_cast<std::size_t>(it - jumps.begin()) - 1];
  }

  double distance_to_jump(double t) const {
    double best = std::numeric_limits<double>::infinity();
    for (const double j : jumps) {
      best = std::min(best, std::abs(t - j));
    }
    return best;
  }

  /// Jumps carrying less than `min_mass` are ignored by distance_to_jump callers.
  double total_mass() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

inline ExactCdf statistic_cdf_from_atoms(const AtomTable &atoms, const LinearStatistic &psi) {
  check_dimensions(atoms.n, psi);
  std::vector<std::pair<double, double>> points;
  points.reserve(atoms.prob.size());
  for (std::uint64_t mask = 0; mask < atoms.prob.size(); ++mask) {
    double value = 0.0;
    for (Index i = 0; i < atoms.n; ++i) {
      if (mask >> i & 1u) {
        value += psi.values()(i);
      }
    }
    points.emplace_back(value, atoms.prob[mask]);
  }
  std::sort(points.begin(), points.end());
  ExactCdf cdf;
  double running = 0.0;
  for (const auto &[value, mass] : points) {
    if (!cdf.jumps.empty() && std::abs(value - cdf.jumps.back()) <= 1e-12 * (1.0 + std::abs(value))) {
      cdf.masses.back() += mass;
    } else {
      cdf.jumps.push_back(value);
      cdf.masses.push_back(mass);
    }
  }
  for (const double m : cdf.masses) {
    running += m;
    cdf.cumulative.push_back(running);
  }
  return cdf;
}

/// Exact CDF of Lambda(psi) under the L-ensemble with kernel L.
inline ExactCdf brute_force_statistic_cdf(const DenseKernel &l, const LinearStatistic &psi) {
  return statistic_cdf_from_atoms(brute_force_atoms(l), psi);
}

/// Inverse-CDF sampling over the atom table in bitmask order.
class AtomSampler {
public:
  explicit AtomSampler(const AtomTable &atoms) : n_(atoms.n), cumulative_(atoms.prob.size()) {
    double running = 0.0;
    for (std::size_t i = 0; i < atoms.prob.size(); ++i) {
      running += std::max(atoms.prob[i], 0.0);
      cumulative_[i] = running;
    }
  }

  template <typename Rng>
  Subset sample(Rng &rng) const {
    std::uniform_real_distribution<double> unit(0.0, cumulative_.back());
    const double u = unit(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) {
      --it;
    }
    return mask_to_subset(static_cast<std::uint64_t>(it - cumulative_.begin()));
  }

  Index n() const { return n_; }

private:
  Index n_;
  std::vector<double> cumulative_;
};

template <typename Rng>
Subset brute_force_sample(const DenseKernel &l, Rng &rng) {
  return AtomSampler(brute_force_atoms(l)).sample(rng);
}

inline SampleBatch brute_force_batch(const DenseKernel &l, std::size_t m, std::uint64_t seed) {
  const AtomSampler sampler(brute_force_atoms(l));
  std::mt19937_64 rng(seed);
  SampleBatch batch{l.n(), {}, kernel_fingerprint(l), seed};
  batch.subsets.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    batch.subsets.push_back(sampler.sample(rng));
  }
  return batch;
}

// --- empirical CDF ----------------------------------------------------------------

inline double dkw_half_width(std::size_t m, double delta) {
  if (m == 0 || !(delta > 0.0 && delta < 1.0)) {
    throw InputError("DKW band needs m >= 1 and delta in (0, 1)");
  }
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(m)));
}

struct EmpiricalCdf {
  std::vector<double> y_sorted;
  std::size_t m = 0;
  double delta = 0.05;

  double half_width() const { return dkw_half_width(m, delta); }

  double operator()(double t) const {
    const auto it = std::upper_bound(y_sorted.begin(), y_sorted.end(), t);
    return static_cast<double>(it - y_sorted.begin()) / static_cast<double>(m);
  }

  double lower(double t) const { return std::max(0.0, (*this)(t) - half_width()); }
  double upper(double t) const { return std::min(1.0, (*this)(t) + half_width()); }
};

inline EmpiricalCdf empirical_cdf(std::span<const double> values, double delta) {
  if (values.empty()) {
    throw InputError("empirical CDF of an empty batch");
  }
  EmpiricalCdf out{std::vector<double>(values.begin(), values.end()), values.size(), delta};
  std::sort(out.y_sorted.begin(), out.y_sorted.end());
  (void)out.half_width(); // validates delta
  return out;
}

inline EmpiricalCdf empirical_cdf(const SampleBatch &batch, const LinearStatistic &psi, double delta) {
  if (batch.subsets.empty()) {
    throw InputError("empirical CDF of an empty batch");
  }
  check_dimensions(batch.n, psi);
  std::vector<double> y;
  y.reserve(batch.subsets.size());
  for (const Subset &s : batch.subsets) {
    y.push_back(evaluate_statistic(psi, s));
  }
  return empirical_cdf(y, delta);
}

// --- counting statistic ------------------------------------------------------------

struct CountingCheckReport {
  std::vector<double> spectrum_pmf;    // P(N_A = j) from the Bernoulli(Spec(K_A)) convolution
  std::vector<double> enumeration_pmf; // P(N_A = j) from the atoms of DPP(K_A)
  RealVector eigenvalues;
  double sup_distance = 0.0; // between the two CDFs
};

/// PMF of a sum of independent Bernoulli(p_i) by direct convolution.
inline std::vector<double> bernoulli_sum_pmf(std::span<const double> p) {
  std::vector<double> pmf{1.0};
  for (const double pi : p) {
    std::vector<double> next(pmf.size() + 1, 0.0);
    for (std::size_t j = 0; j < pmf.size(); ++j) {
      next[j] += pmf[j] * (1.0 - pi);
      next[j + 1] += pmf[j] * pi;
    }
    pmf = std::move(next);
  }
  return pmf;
}

/// N_A = |X intersect A| two ways: the Bernoulli law with parameters Spec(K_A),
/// and enumeration of X intersect A ~ DPP(K_A).
inline CountingCheckReport counting_statistic_spectrum_check(const DenseKernel &k, std::span<const Index> a) {
  if (!k.is_hermitian()) {
    throw CapabilityError("counting-statistic check needs a Hermitian kernel");
  }
  if (a.size() > 12) {
    throw InputError("counting-statistic check supports |A| <= 12");
  }
  check_indices(a, k.n());
  CountingCheckReport report;
  const std::size_t size = a.size();
  if (size == 0) {
    report.spectrum_pmf = {1.0};
    report.enumeration_pmf = {1.0};
    return report;
  }
  const ComplexMatrix block = principal_submatrix(k.entries(), a);
  const Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(0.5 * (block + block.adjoint()), Eigen::EigenvaluesOnly);
  report.eigenvalues = eig.eigenvalues();
  std::vector<double> p(report.eigenvalues.data(), report.eigenvalues.data() + report.eigenvalues.size());
  report.spectrum_pmf = bernoulli_sum_pmf(p);

  const std::vector<double> atoms = inclusion_exclusion_atoms(DenseKernel(block));
  report.enumeration_pmf.assign(size + 1, 0.0);
  for (std::uint64_t mask = 0; mask < atoms.size(); ++mask) {
    report.enumeration_pmf[static_cast<std::size_t>(std::popcount(mask))] += atoms[mask];
  }
  double c1 = 0.0;
  double c2 = 0.0;
  for (std::size_t j = 0; j <= size; ++j) {
    c1 += report.spectrum_pmf[j];
    c2 += report.enumeration_pmf[j];
    report.sup_distance = std::max(report.sup_distance, std::abs(c1 - c2));
  }
  return report;
}

} // namespace dppcdf

#endif // DPPCDF_SAMPLERS_HPP
