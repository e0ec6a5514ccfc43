#ifndef DPPCDF_LOWRANK_HPP
#define DPPCDF_LOWRANK_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dppcdf/kernel.hpp"
#include "dppcdf/laplace.hpp"

namespace dppcdf {

struct NystromConfig {
  Index d = 1;
  /// Ridge for the leverage scores; empty selects Tr(K) / d.
  std::optional<double> ridge;
  std::uint64_t seed = 0;
};

struct RandomizedSvdConfig {
  Index d = 1;
  Index oversampling = 10;
  Index power_iters = 2;
  std::uint64_t seed = 0;
};

struct NystromResult {
  FactoredKernel factor;
  Subset landmarks; // in draw order
  double ridge = 0.0;
};

/// Relative eigenvalue cutoff for the pseudo-inverse square root of K_Z.
inline constexpr double kNystromCutoff = 1e-10;

namespace detail {

struct HermitianEigen {
  RealVector values;   // ascending
  ComplexMatrix vectors;
};

// Real symmetric inputs go through the (much cheaper) real solver.
inline HermitianEigen hermitian_eigen(const ComplexMatrix &m) {
  HermitianEigen out;
  if (is_real(m)) {
    const RealMatrix sym = 0.5 * (m.real() + m.real().transpose());
    const Eigen::SelfAdjointEigenSolver<RealMatrix> eig(sym);
    out.values = eig.eigenvalues();
    out.vectors = eig.eigenvectors().cast<Complex>();
  } else {
    const ComplexMatrix sym = 0.5 * (m + m.adjoint());
    const Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(sym);
    out.values = eig.eigenvalues();
    out.vectors = eig.eigenvectors();
  }
  return out;
}

inline void require_hermitian(const DenseKernel &k, const char *what) {
  if (!k.is_hermitian()) {
    throw CapabilityError(std::string(what) + " requires a Hermitian kernel");
  }
}

inline ComplexMatrix gaussian_test_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  ComplexMatrix out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      out(i, j) = Complex(re, im);
    }
  }
  return out;
}

} // namespace detail

/// l_i = (K (K + ridge I)^{-1})_ii from one Hermitian eigendecomposition.
inline RealVector ridge_leverage_scores(const DenseKernel &k, double ridge) {
  detail::require_hermitian(k, "ridge_leverage_scores");
  if (!(ridge > 0.0) || !std::isfinite(ridge)) {
    throw InputError("ridge must be positive");
  }
  const detail::HermitianEigen eig = detail::hermitian_eigen(k.entries());
  const double scale = std::max(eig.values.cwiseAbs().maxCoeff(), 1.0);
  if (eig.values.minCoeff() < -1e-8 * scale) {
    throw InputError("ridge_leverage_scores requires a positive semidefinite kernel");
  }
  const RealVector weights =
      eig.values.unaryExpr([ridge](double lam) { return std::max(lam, 0.0) / (std::max(lam, 0.0) + ridge); });
  RealVector scores = eig.vectors.cwiseAbs2() * weights;
  return scores.cwiseMax(0.0);
}

/// B = (K_Z)^{+1/2} K_{Z,:} for a fixed landmark set; B^H B = K_{:,Z} K_Z^+ K_{Z,:}.
inline FactoredKernel nystrom_from_landmarks(const DenseKernel &k, std::span<const Index> landmarks) {
  check_indices(landmarks, k.n());
  if (landmarks.empty()) {
    throw InputError("Nystrom needs at least one landmark");
  }
  const ComplexMatrix core = principal_submatrix(k.entries(), landmarks);
  const detail::HermitianEigen eig = detail::hermitian_eigen(core);
  const double cutoff = kNystromCutoff * std::max(eig.values.maxCoeff(), 0.0);
  const RealVector inv_root =
      eig.values.unaryExpr([cutoff](double lam) { return lam > cutoff && lam > 0.0 ? 1.0 / std::sqrt(lam) : 0.0; });
  const ComplexMatrix s = eig.vectors * inv_root.cast<Complex>().asDiagonal() * eig.vectors.adjoint();

  const auto d = static_cast<Index>(landmarks.size());
  ComplexMatrix rows(d, k.n());
  for (Index a = 0; a < d; ++a) {
    rows.row(a) = k.entries().row(landmarks[static_cast<std::size_t>(a)]);
  }
  return FactoredKernel(s * rows, true);
}

/// Landmarks drawn without replacement, one at a time, with probability
/// proportional to the ridge leverage scores of the items still available.
inline NystromResult nystrom_with_landmarks(const DenseKernel &k, const NystromConfig &cfg) {
  detail::require_hermitian(k, "nystrom");
  if (cfg.d < 1 || cfg.d > k.n()) {
    throw InputError("Nystrom rank must lie in [1, n]");
  }
  const double ridge = cfg.ridge.value_or(k.entries().trace().real() / static_cast<double>(cfg.d));
  if (cfg.ridge.has_value() && !(ridge > 0.0)) {
    throw InputError("Nystrom ridge must be positive");
  }
  // A zero-trace kernel has no preferred column; any landmark set reproduces it.
  const RealVector scores = ridge > 0.0 ? ridge_leverage_scores(k, ridge) : RealVector(RealVector::Ones(k.n()));

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> weight(scores.data(), scores.data() + scores.size());
  std::vector<bool> taken(weight.size(), false);
  Subset landmarks;
  landmarks.reserve(static_cast<std::size_t>(cfg.d));
  for (Index draw = 0; draw < cfg.d; ++draw) {
    double total = 0.0;
    for (std::size_t i = 0; i < weight.size(); ++i) {
      if (!taken[i]) {
        total += weight[i];
      }
    }
    const bool uniform = !(total > 0.0);
    const double remaining = static_cast<double>(weight.size()) - static_cast<double>(draw);
    double target = unit(rng) * (uniform ? remaining : total);
    std::size_t pick = weight.size();
    for (std::size_t i = 0; i < weight.size(); ++i) {
      if (taken[i]) {
        continue;
      }
      pick = i;
      target -= uniform ? 1.0 : weight[i];
      if (target < 0.0) {
        break;
      }
    }
    taken[pick] = true;
    landmarks.push_back(static_cast<Index>(pick));
  }
  return {nystrom_from_landmarks(k, landmarks), std::move(landmarks), ridge};
}

inline FactoredKernel nystrom(const DenseKernel &k, const NystromConfig &cfg) {
  return nystrom_with_landmarks(k, cfg).factor;
}

/// Range finder with QR-stabilised power iterations, then an exact SVD of the
/// projected (d + oversampling) x N matrix.
inline SvdFactors randomized_svd_matrix(const ComplexMatrix &m, const RandomizedSvdConfig &cfg) {
  const Index n = m.cols();
  if (cfg.d < 1 || cfg.oversampling < 0 || cfg.power_iters < 0) {
    throw InputError("randomized SVD needs d >= 1, oversampling >= 0, power_iters >= 0");
  }
  const Index width = cfg.d + cfg.oversampling;
  if (width > n || width > m.rows()) {
    throw InputError("randomized SVD needs d + oversampling <= N");
  }
  const ComplexMatrix omega = detail::gaussian_test_matrix(n, width, cfg.seed);
  ComplexMatrix q = thin_q(ComplexMatrix(m * omega));
  for (Index it = 0; it < cfg.power_iters; ++it) {
    const ComplexMatrix z = thin_q(ComplexMatrix(m.adjoint() * q));
    q = thin_q(ComplexMatrix(m * z));
  }
  const ComplexMatrix projected = q.adjoint() * m;
  const Eigen::BDCSVD<ComplexMatrix> svd(projected, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ComplexMatrix u = q * svd.matrixU().leftCols(cfg.d);
  return SvdFactors(std::move(u), svd.singularValues().head(cfg.d), svd.matrixV().leftCols(cfg.d));
}

inline SvdFactors randomized_svd(const DenseKernel &m, const RandomizedSvdConfig &cfg) {
  return randomized_svd_matrix(m.entries(), cfg);
}

/// Randomized SVD of Delta K, where the only N x N work beyond the sketch is
/// one row scaling of K.
inline SvdFactors lowrank_of_weighted(const DenseKernel &m, const DeltaDiagonal &delta,
                                      const RandomizedSvdConfig &cfg) {
  detail::check_delta(m.n(), delta);
  return randomized_svd_matrix(ComplexMatrix(delta.entries.asDiagonal() * m.entries()), cfg);
}

} // namespace dppcdf

#endif // DPPCDF_LOWRANK_HPP
