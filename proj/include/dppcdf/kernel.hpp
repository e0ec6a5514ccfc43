#ifndef DPPCDF_KERNEL_HPP
#define DPPCDF_KERNEL_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dppcdf/error.hpp"
#include "dppcdf/linalg.hpp"

namespace dppcdf {

/// Largest ground set for which subset enumeration is attempted (2^15 subsets).
inline constexpr Index kMaxEnumerationSize = 15;
/// Conversions K <-> L refuse matrices above this condition number.
inline constexpr double kMaxConditionNumber = 1e12;
inline constexpr double kHermitianTolerance = 1e-10;

/// Square complex matrix used both as a marginal kernel K and as an
/// L-ensemble kernel L; the consuming operation decides the role.
class DenseKernel {
public:
  explicit DenseKernel(ComplexMatrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
      throw InputError("kernel must be square with side >= 1, got " +
                       std::to_string(entries_.rows()) + "x" + std::to_string(entries_.cols()));
    }
    if (!entries_.allFinite()) {
      throw InputError("kernel has non-finite entries");
    }
  }

  explicit DenseKernel(const RealMatrix &entries) : DenseKernel(ComplexMatrix(entries.cast<Complex>())) {}

  Index n() const { return entries_.rows(); }
  const ComplexMatrix &entries() const { return entries_; }
  bool is_real() const { return dppcdf::is_real(entries_); }
  bool is_hermitian(double rel_tol = kHermitianTolerance) const {
    return dppcdf::is_hermitian(entries_, rel_tol);
  }

private:
  ComplexMatrix entries_;
};

/// K = factor^T factor (or factor^H factor when `conjugate` is set), factor D x N.
class FactoredKernel {
public:
  FactoredKernel(ComplexMatrix factor, bool conjugate)
      : factor_(std::move(factor)), conjugate_(conjugate) {
    if (factor_.rows() < 1 || factor_.cols() < 1 || factor_.rows() > factor_.cols()) {
      throw InputError("factor must be D x N with 1 <= D <= N, got " +
                       std::to_string(factor_.rows()) + "x" + std::to_string(factor_.cols()));
    }
    if (!factor_.allFinite()) {
      throw InputError("factor has non-finite entries");
    }
  }

  Index d() const { return factor_.rows(); }
  Index n() const { return factor_.cols(); }
  bool conjugate() const { return conjugate_; }
  const ComplexMatrix &factor() const { return factor_; }

  DenseKernel to_dense() const {
    if (conjugate_) {
      return DenseKernel(ComplexMatrix(factor_.adjoint() * factor_));
    }
    return DenseKernel(ComplexMatrix(factor_.transpose() * factor_));
  }

private:
  ComplexMatrix factor_;
  bool conjugate_;
};

/// Rank-D approximation U diag(sigma) V^H.
class SvdFactors {
public:
  SvdFactors(ComplexMatrix u, RealVector sigma, ComplexMatrix v)
      : u_(std::move(u)), sigma_(std::move(sigma)), v_(std::move(v)) {
    const Index d = sigma_.size();
    if (d < 1 || u_.cols() != d || v_.cols() != d || u_.rows() != v_.rows() || u_.rows() < d) {
      throw InputError("SVD factors must be U (N x D), sigma (D), V (N x D) with D <= N");
    }
    for (Index j = 0; j < d; ++j) {
      if (!(sigma_(j) >= 0.0) || (j > 0 && sigma_(j) > sigma_(j - 1))) {
        throw InputError("singular values must be nonnegative and nonincreasing");
      }
    }
    const ComplexMatrix eye = ComplexMatrix::Identity(d, d);
    const auto orth_error = [&](const ComplexMatrix &m) {
      return (m.adjoint() * m - eye).operatorNorm();
    };
    if (orth_error(u_) > 1e-8 || orth_error(v_) > 1e-8) {
      throw InputError("SVD factor columns are not orthonormal to 1e-8");
    }
  }

  Index n() const { return u_.rows(); }
  Index d() const { return sigma_.size(); }
  const ComplexMatrix &u() const { return u_; }
  const RealVector &sigma() const { return sigma_; }
  const ComplexMatrix &v() const { return v_; }

  ComplexMatrix reconstruct() const { return u_ * sigma_.cast<Complex>().asDiagonal() * v_.adjoint(); }

private:
  ComplexMatrix u_;
  RealVector sigma_;
  ComplexMatrix v_;
};

/// Per-item values of a linear statistic, Lambda(X) = sum over x in X of values[x].
class LinearStatistic {
public:
  explicit LinearStatistic(RealVector values) : values_(std::move(values)) {
    if (values_.size() < 1) {
      throw InputError("statistic needs at least one item");
    }
    if (!values_.allFinite()) {
      throw InputError("statistic has non-finite values");
    }
    nonnegative_ = values_.minCoeff() >= 0.0;
  }

  explicit LinearStatistic(const std::vector<double> &values)
      : LinearStatistic(RealVector(Eigen::Map<const RealVector>(values.data(), static_cast<Index>(values.size())))) {}

  Index size() const { return values_.size(); }
  const RealVector &values() const { return values_; }
  bool nonnegative() const { return nonnegative_; }

private:
  RealVector values_;
  bool nonnegative_ = true;
};

struct KernelDiagnostics {
  bool hermitian = false;
  /// Empty for non-Hermitian kernels, where the spectrum test does not apply.
  std::optional<bool> spectrum_in_unit_interval;
  /// Minimum real part of Det[K_A] over nonempty |A| <= max_subset_size_checked.
  std::optional<double> min_principal_minor_checked;
  /// Minimum of P(X = A) over all subsets, by inclusion-exclusion on the minors.
  std::optional<double> min_atom_probability;
  Subset min_atom;
  Index max_subset_size_checked = 0;

  bool passes(double tol = 1e-10) const {
    if (spectrum_in_unit_interval.has_value() && !*spectrum_in_unit_interval) {
      return false;
    }
    if (min_atom_probability.has_value() && *min_atom_probability < -tol) {
      return false;
    }
    if (min_principal_minor_checked.has_value() && *min_principal_minor_checked < -tol) {
      return false;
    }
    return true;
  }
};

// ---------------------------------------------------------------------------

/// P(A subset of X) = Det[K_A]; the empty subset gives 1.
inline Complex marginal(const DenseKernel &k, std::span<const Index> a) {
  check_indices(a, k.n());
  Subset sorted(a.begin(), a.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InputError("subset has repeated indices");
  }
  if (a.empty()) {
    return {1.0, 0.0};
  }
  return determinant(principal_submatrix(k.entries(), a));
}

inline Complex marginal(const DenseKernel &k, std::initializer_list<Index> a) {
  const Subset s(a);
  return marginal(k, std::span<const Index>(s));
}

namespace detail {

// Solves (I + sign * M) X = M, the shared core of both kernel conversions.
inline ComplexMatrix resolvent_solve(const ComplexMatrix &m, double sign, const char *what) {
  const Index n = m.rows();
  const ComplexMatrix lhs = ComplexMatrix::Identity(n, n) + sign * m;
  const Eigen::PartialPivLU<ComplexMatrix> lu(lhs);
  const double rcond = lu.rcond();
  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxConditionNumber)) {
    throw ConditioningError(std::string(what) + ": matrix is singular or nearly singular", cond);
  }
  ComplexMatrix out = lu.solve(m);
  const double residual = (lhs * out - m).norm();
  if (residual > 1e-8 * m.norm()) {
    throw ConditioningError(std::string(what) + ": solve residual " + std::to_string(residual) +
                                " exceeds tolerance",
                            cond);
  }
  return out;
}

} // namespace detail

/// K = (I + L)^{-1} L.
inline DenseKernel l_to_k(const DenseKernel &l) {
  return DenseKernel(detail::resolvent_solve(l.entries(), 1.0, "l_to_k"));
}

/// L = (I - K)^{-1} K. Fails on kernels with an eigenvalue at 1 (use thin_kernel first).
inline DenseKernel k_to_l(const DenseKernel &k) {
  return DenseKernel(detail::resolvent_solve(k.entries(), -1.0, "k_to_l"));
}

/// Kernel of DPP(K) after keeping each point independently with probability 1/(1+eps).
inline DenseKernel thin_kernel(const DenseKernel &k, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw InputError("thinning parameter must be positive and finite");
  }
  return DenseKernel(ComplexMatrix(k.entries() / (1.0 + eps)));
}

/// Principal minors Det[K_A] for every subset A, indexed by bitmask.
inline std::vector<Complex> all_principal_minors(const ComplexMatrix &k) {
  const Index n = k.rows();
  if (n > kMaxEnumerationSize) {
    throw CapabilityError("subset enumeration limited to n <= " + std::to_string(kMaxEnumerationSize));
  }
  const std::uint64_t count = std::uint64_t{1} << n;
  std::vector<Complex> minors(count);
  minors[0] = 1.0;
  for (std::uint64_t mask = 1; mask < count; ++mask) {
    const Subset s = mask_to_subset(mask);
    minors[mask] = determinant(principal_submatrix(k, s));
  }
  return minors;
}

/// P(X = A) for every A, recovered from the marginals P(B subset of X) = Det[K_B]
/// by Moebius inversion over supersets. Works for any valid kernel, including
/// projections where no L-ensemble exists.
inline std::vector<double> inclusion_exclusion_atoms(const DenseKernel &k) {
  std::vector<Complex> f = all_principal_minors(k.entries());
  const Index n = k.n();
  for (Index bit = 0; bit < n; ++bit) {
    const std::uint64_t b = std::uint64_t{1} << bit;
    for (std::uint64_t mask = 0; mask < f.size(); ++mask) {
      if (!(mask & b)) {
        f[mask] -= f[mask | b];
      }
    }
  }
  std::vector<double> atoms(f.size());
  std::transform(f.begin(), f.end(), atoms.begin(), [](Complex c) { return c.real(); });
  return atoms;
}

/// Existence checks for DPP(K). Enumeration (max_subset > 0) needs n <= 15.
inline KernelDiagnostics validate_kernel(const DenseKernel &k, Index max_subset) {
  const Index n = k.n();
  if (max_subset < 0 || max_subset > n) {
    throw InputError("max_subset must lie in [0, n]");
  }
  if (max_subset > 0 && n > kMaxEnumerationSize) {
    throw CapabilityError("enumeration requested for n = " + std::to_string(n) + " > " +
                          std::to_string(kMaxEnumerationSize));
  }
  KernelDiagnostics diag;
  diag.hermitian = k.is_hermitian();
  if (diag.hermitian) {
    const ComplexMatrix sym = 0.5 * (k.entries() + k.entries().adjoint());
    const Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(sym, Eigen::EigenvaluesOnly);
    const RealVector &ev = eig.eigenvalues();
    diag.spectrum_in_unit_interval = ev.minCoeff() >= -1e-10 && ev.maxCoeff() <= 1.0 + 1e-10;
  }
  if (max_subset == 0) {
    return diag;
  }
  const std::vector<Complex> minors = all_principal_minors(k.entries());
  double min_minor = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 1; mask < minors.size(); ++mask) {
    if (std::popcount(mask) <= max_subset) {
      min_minor = std::min(min_minor, minors[mask].real());
    }
  }
  diag.min_principal_minor_checked = min_minor;
  diag.max_subset_size_checked = max_subset;

  const std::vector<double> atoms = inclusion_exclusion_atoms(k);
  const auto it = std::min_element(atoms.begin(), atoms.end());
  diag.min_atom_probability = *it;
  diag.min_atom = mask_to_subset(static_cast<std::uint64_t>(it - atoms.begin()));
  return diag;
}

/// Lambda(psi, subset) = sum of psi over the subset.
inline double evaluate_statistic(const LinearStatistic &psi, std::span<const Index> subset) {
  check_indices(subset, psi.size());
  double total = 0.0;
  for (const Index i : subset) {
    total += psi.values()(i);
  }
  return total;
}

inline void check_dimensions(Index kernel_n, const LinearStatistic &psi) {
  if (psi.size() != kernel_n) {
    throw InputError("statistic has " + std::to_string(psi.size()) + " values but kernel has n = " +
                     std::to_string(kernel_n));
  }
}

} // namespace dppcdf

#endif // DPPCDF_KERNEL_HPP
