#ifndef DPPCDF_LAPLACE_HPP
#define DPPCDF_LAPLACE_HPP

#include <span>

#include "dppcdf/kernel.hpp"

// Laplace transform of a linear statistic of DPP(K):
//
//   E[exp(-s Lambda)] = Det[I - Delta K],  Delta = Diag(1 - exp(-s psi(i))).
//
// Delta is kept as a vector; every product with it is a row or column scaling.
// The factored forms reduce the N x N determinant to a D x D one through
// Det[I + PQ] = Det[I + QP].

namespace dppcdf {

struct DeltaDiagonal {
  Complex s{0.0, 0.0};
  ComplexVector entries;

  Index size() const { return entries.size(); }
};

/// entries[i] = 1 - exp(-s psi(i)) = -expm1(-s psi(i)).
inline DeltaDiagonal make_delta(std::span<const Complex> psi, Complex s) {
  if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
    throw InputError("Laplace argument must be finite");
  }
  DeltaDiagonal out{s, ComplexVector(static_cast<Index>(psi.size()))};
  for (Index i = 0; i < out.entries.size(); ++i) {
    out.entries(i) = -complex_expm1(-s * psi[static_cast<std::size_t>(i)]);
  }
  return out;
}

inline DeltaDiagonal make_delta(const LinearStatistic &psi, Complex s) {
  if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
    throw InputError("Laplace argument must be finite");
  }
  DeltaDiagonal out{s, ComplexVector(psi.size())};
  for (Index i = 0; i < psi.size(); ++i) {
    out.entries(i) = -complex_expm1(-s * psi.values()(i));
  }
  return out;
}

namespace detail {

inline void check_delta(Index n, const DeltaDiagonal &delta) {
  if (delta.size() != n) {
    throw InputError("diagonal has " + std::to_string(delta.size()) + " entries but kernel has n = " +
                     std::to_string(n));
  }
}

inline bool all_zero(const ComplexVector &v) { return v.size() == 0 || v.cwiseAbs().maxCoeff() == 0.0; }

} // namespace detail

// --- dense -----------------------------------------------------------------

inline LogDet log_laplace_dense(const DenseKernel &k, const DeltaDiagonal &delta) {
  detail::check_delta(k.n(), delta);
  if (detail::all_zero(delta.entries)) {
    return {};
  }
  ComplexMatrix m = -(delta.entries.asDiagonal() * k.entries());
  m.diagonal().array() += 1.0;
  return log_determinant(m);
}

inline Complex laplace_dense(const DenseKernel &k, const DeltaDiagonal &delta) {
  return log_laplace_dense(k, delta).value();
}

/// Det[I - Delta K]; exactly 1 at s = 0.
inline Complex laplace_dense(const DenseKernel &k, const LinearStatistic &psi, Complex s) {
  check_dimensions(k.n(), psi);
  return laplace_dense(k, make_delta(psi, s));
}

// --- factored K = B^T B ------------------------------------------------------

inline LogDet log_laplace_lowrank(const FactoredKernel &b, const DeltaDiagonal &delta) {
  detail::check_delta(b.n(), delta);
  const ComplexMatrix &f = b.factor();
  ComplexMatrix scaled = f * delta.entries.asDiagonal();
  ComplexMatrix m = b.conjugate() ? ComplexMatrix(-(scaled * f.adjoint()))
                                  : ComplexMatrix(-(scaled * f.transpose()));
  m.diagonal().array() += 1.0;
  return log_determinant(m);
}

inline Complex laplace_lowrank(const FactoredKernel &b, const DeltaDiagonal &delta) {
  return log_laplace_lowrank(b, delta).value();
}

/// Det[I_D - B Delta B^T], O(N D^2).
inline Complex laplace_lowrank(const FactoredKernel &b, const LinearStatistic &psi, Complex s) {
  check_dimensions(b.n(), psi);
  return laplace_lowrank(b, make_delta(psi, s));
}

// --- SVD K ~ U Sigma V^H -------------------------------------------------------

inline LogDet log_laplace_svd(const SvdFactors &f, const DeltaDiagonal &delta) {
  detail::check_delta(f.n(), delta);
  const ComplexVector root = f.sigma().cwiseSqrt().cast<Complex>();
  ComplexMatrix m = -(root.asDiagonal() * (f.v().adjoint() * (delta.entries.asDiagonal() * f.u())) *
                      root.asDiagonal());
  m.diagonal().array() += 1.0;
  return log_determinant(m);
}

inline Complex laplace_svd(const SvdFactors &f, const DeltaDiagonal &delta) {
  return log_laplace_svd(f, delta).value();
}

/// Det[I_D - Sigma^{1/2} V^H Delta U Sigma^{1/2}], O(N D^2).
inline Complex laplace_svd(const SvdFactors &f, const LinearStatistic &psi, Complex s) {
  check_dimensions(f.n(), psi);
  return laplace_svd(f, make_delta(psi, s));
}

/// Det[I - U Sigma V^H] for factors that already approximate Delta K.
inline Complex laplace_from_weighted_svd(const SvdFactors &weighted) {
  const ComplexVector root = weighted.sigma().cwiseSqrt().cast<Complex>();
  ComplexMatrix m = -(root.asDiagonal() * (weighted.v().adjoint() * weighted.u()) * root.asDiagonal());
  m.diagonal().array() += 1.0;
  return determinant(m);
}

} // namespace dppcdf

#endif // DPPCDF_LAPLACE_HPP
