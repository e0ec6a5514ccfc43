#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dppcdf/lowrank.hpp"
#include "dppcdf/synthetic.hpp"
#include "oracles.hpp"

using namespace dppcdf;

TEST(Leverage, DiagonalAndScaledIdentity) {
  RealVector p(4);
  p << 0.1, 0.5, 0.0, 0.9;
  const DenseKernel d(RealMatrix(p.asDiagonal()));
  const RealVector scores = ridge_leverage_scores(d, 0.3);
  for (Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(scores(i), p(i) / (p(i) + 0.3), 1e-15);
  }
  const DenseKernel c(RealMatrix(RealMatrix::Identity(5, 5) * 0.4));
  const RealVector sc = ridge_leverage_scores(c, 0.1);
  for (Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(sc(i), 0.4 / 0.5, 1e-15);
  }
}

TEST(Leverage, MatchesExplicitInverse) {
  std::mt19937_64 rng(3);
  const RealMatrix k = oracle::random_psd(10, rng);
  const RealVector got = ridge_leverage_scores(DenseKernel(k), 0.1);
  const RealVector want = oracle::explicit_leverage(k.cast<Complex>(), 0.1);
  EXPECT_LE((got - want).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Leverage, RangeAndEffectiveDimension) {
  std::mt19937_64 rng(5);
  const ComplexMatrix k = oracle::random_hermitian_kernel(15, rng, true);
  const double ridge = 0.05;
  const RealVector scores = ridge_leverage_scores(DenseKernel(k), ridge);
  EXPECT_GE(scores.minCoeff(), 0.0);
  EXPECT_LT(scores.maxCoeff(), 1.0);
  const ComplexMatrix inv = (k + ridge * ComplexMatrix::Identity(15, 15)).inverse();
  EXPECT_NEAR(scores.sum(), (k * inv).trace().real(), 1e-9);
}

TEST(Leverage, Errors) {
  std::mt19937_64 rng(7);
  const DenseKernel nonsym = l_to_k(DenseKernel(oracle::random_nonsymmetric_l(5, rng)));
  EXPECT_THROW(ridge_leverage_scores(nonsym, 0.1), CapabilityError);
  const DenseKernel k(oracle::random_psd(5, rng));
  EXPECT_THROW(ridge_leverage_scores(k, 0.0), InputError);
  EXPECT_THROW(ridge_leverage_scores(DenseKernel(RealMatrix(-RealMatrix::Identity(3, 3))), 0.1), InputError);
}

TEST(Nystrom, ExactRecoveryAtFullRank) {
  const DenseKernel k = gen_synthetic_kernel(40, 8, 11);
  // landmarks drawn by leverage score land on independent columns almost surely
  const NystromResult r = nystrom_with_landmarks(k, {8, std::nullopt, 1});
  const ComplexMatrix approx = r.factor.to_dense().entries();
  EXPECT_LE((approx - k.entries()).norm(), 1e-6 * k.entries().norm());
  EXPECT_TRUE(r.factor.conjugate());
  EXPECT_EQ(r.landmarks.size(), 8u);
  EXPECT_NEAR(r.ridge, k.entries().trace().real() / 8.0, 1e-14);
}

TEST(Nystrom, FullNystromIsExact) {
  std::mt19937_64 rng(13);
  const DenseKernel k(oracle::random_hermitian_kernel(9, rng, true));
  const NystromResult r = nystrom_with_landmarks(k, {9, std::nullopt, 2});
  EXPECT_LE((r.factor.to_dense().entries() - k.entries()).norm(), 1e-8 * k.entries().norm());
  Subset sorted = r.landmarks;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (Subset{0, 1, 2, 3, 4, 5, 6, 7, 8}));
}

TEST(Nystrom, AgreesOnLandmarkBlockAndStaysPsd) {
  std::mt19937_64 rng(17);
  const DenseKernel k(oracle::random_hermitian_kernel(30, rng, true));
  const NystromResult r = nystrom_with_landmarks(k, {6, 0.2, 5});
  const ComplexMatrix approx = r.factor.to_dense().entries();
  const ComplexMatrix block = principal_submatrix(approx, r.landmarks);
  EXPECT_LE((block - principal_submatrix(k.entries(), r.landmarks)).norm(), 1e-8);
  EXPECT_TRUE(is_hermitian(approx, 1e-10));
  const Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(0.5 * (approx + approx.adjoint()), Eigen::EigenvaluesOnly);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
}

TEST(Nystrom, RankDeficientCoreDoesNotCrash) {
  // two identical columns: K_Z is singular for Z = {0, 1}
  RealMatrix v(4, 1);
  v << 0.5, 0.5, 0.5, 0.5;
  const DenseKernel k(RealMatrix(v * v.transpose()));
  const Index z[] = {0, 1};
  const FactoredKernel b = nystrom_from_landmarks(k, z);
  EXPECT_TRUE(b.factor().allFinite());
  EXPECT_LE((b.to_dense().entries() - k.entries()).norm(), 1e-12);
}

TEST(Nystrom, DeterministicGivenSeed) {
  const DenseKernel k = gen_synthetic_kernel(60, 20, 3);
  const NystromResult a = nystrom_with_landmarks(k, {10, std::nullopt, 99});
  const NystromResult b = nystrom_with_landmarks(k, {10, std::nullopt, 99});
  EXPECT_EQ(a.landmarks, b.landmarks);
  EXPECT_EQ(a.factor.factor(), b.factor.factor());
  const NystromResult c = nystrom_with_landmarks(k, {10, std::nullopt, 100});
  EXPECT_NE(a.landmarks, c.landmarks);
}

TEST(Nystrom, Errors) {
  const DenseKernel k = gen_synthetic_kernel(10, 3, 1);
  EXPECT_THROW(nystrom(k, {0, std::nullopt, 0}), InputError);
  EXPECT_THROW(nystrom(k, {11, std::nullopt, 0}), InputError);
  EXPECT_THROW(nystrom(k, {3, 0.0, 0}), InputError);
  std::mt19937_64 rng(1);
  EXPECT_THROW(nystrom(l_to_k(DenseKernel(oracle::random_nonsymmetric_l(6, rng))), {2, std::nullopt, 0}),
               CapabilityError);
}

namespace {

ComplexMatrix decaying_matrix(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const ComplexMatrix u = oracle::haar_unitary(n, rng, true);
  const ComplexMatrix v = oracle::haar_unitary(n, rng, true);
  RealVector s(n);
  for (Index j = 0; j < n; ++j) {
    s(j) = std::pow(2.0, -static_cast<double>(j));
  }
  return u * s.cast<Complex>().asDiagonal() * v.adjoint();
}

} // namespace

TEST(RandomizedSvd, ExactLowRank) {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix a(50, 6);
  ComplexMatrix b(6, 50);
  for (Index i = 0; i < 50; ++i) {
    for (Index j = 0; j < 6; ++j) {
      a(i, j) = Complex(normal(rng), normal(rng));
      b(j, i) = Complex(normal(rng), normal(rng));
    }
  }
  const ComplexMatrix m = a * b;
  const SvdFactors f = randomized_svd(DenseKernel(m), {6, 10, 2, 4});
  EXPECT_LE((f.reconstruct() - m).norm(), 1e-8 * m.norm());
}

TEST(RandomizedSvd, ZeroMatrix) {
  const SvdFactors f = randomized_svd(DenseKernel(RealMatrix(RealMatrix::Zero(20, 20))), {3, 5, 1, 0});
  EXPECT_EQ(f.sigma().maxCoeff(), 0.0);
}

TEST(RandomizedSvd, DecayingSpectrumAndErrorBound) {
  const ComplexMatrix m = decaying_matrix(200, 23);
  const Index d = 12;
  const SvdFactors f = randomized_svd_matrix(m, {d, 10, 2, 8});
  for (Index j = 0; j < d; ++j) {
    const double exact = std::pow(2.0, -static_cast<double>(j));
    EXPECT_NEAR(f.sigma()(j) / exact, 1.0, 1e-3) << "j = " << j;
  }
  const Eigen::JacobiSVD<ComplexMatrix> svd(f.reconstruct() - m);
  EXPECT_LE(svd.singularValues()(0), 10.0 * std::pow(2.0, -static_cast<double>(d)));
  const ComplexMatrix eye = ComplexMatrix::Identity(d, d);
  EXPECT_LE((f.u().adjoint() * f.u() - eye).norm(), 1e-8);
  EXPECT_LE((f.v().adjoint() * f.v() - eye).norm(), 1e-8);
}

TEST(RandomizedSvd, ErrorNonincreasingInRankOnAverage) {
  std::mt19937_64 rng(29);
  const ComplexMatrix m = oracle::random_hermitian_kernel(60, rng, true);
  double previous = std::numeric_limits<double>::infinity();
  for (const Index d : {2, 5, 10, 20, 40}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      total += (randomized_svd_matrix(m, {d, 5, 1, seed}).reconstruct() - m).norm();
    }
    EXPECT_LE(total / 20.0, previous * (1.0 + 1e-12)) << "d = " << d;
    previous = total / 20.0;
  }
}

TEST(RandomizedSvd, Validation) {
  const DenseKernel k(RealMatrix(RealMatrix::Identity(10, 10)));
  EXPECT_THROW(randomized_svd(k, {5, 6, 1, 0}), InputError);
  EXPECT_THROW(randomized_svd(k, {0, 2, 1, 0}), InputError);
  EXPECT_THROW(randomized_svd(k, {2, -1, 1, 0}), InputError);
  EXPECT_NO_THROW(randomized_svd(k, {5, 5, 0, 0}));
}

TEST(Weighted, ZeroAndUnitDiagonals) {
  const DenseKernel k = gen_synthetic_kernel(40, 10, 5);
  const LinearStatistic psi = abs_cos_statistic(40);
  const SvdFactors zero = lowrank_of_weighted(k, make_delta(psi, 0.0), {5, 5, 1, 3});
  EXPECT_EQ(zero.sigma().maxCoeff(), 0.0);

  DeltaDiagonal ones{Complex(0.0), ComplexVector::Ones(40)};
  const SvdFactors a = lowrank_of_weighted(k, ones, {5, 5, 1, 3});
  const SvdFactors b = randomized_svd(k, {5, 5, 1, 3});
  EXPECT_EQ(a.sigma(), b.sigma());
  EXPECT_EQ(a.reconstruct(), b.reconstruct());

  DeltaDiagonal short_delta{Complex(0.0), ComplexVector::Ones(3)};
  EXPECT_THROW(lowrank_of_weighted(k, short_delta, {5, 5, 1, 3}), InputError);
}

TEST(Weighted, DecayingStatisticLowersEffectiveRank) {
  const DenseKernel k = gen_synthetic_kernel(200, 100, 7);
  const LinearStatistic psi = inverse_index_statistic(200);
  const DeltaDiagonal delta = make_delta(psi, 1.0);
  const ComplexMatrix weighted = delta.entries.asDiagonal() * k.entries();
  const Eigen::BDCSVD<ComplexMatrix> plain(k.entries());
  const Eigen::BDCSVD<ComplexMatrix> scaled(weighted);
  const double ratio_k = plain.singularValues()(49) / plain.singularValues()(0);
  const double ratio_w = scaled.singularValues()(49) / scaled.singularValues()(0);
  EXPECT_LT(ratio_w, ratio_k);
}
