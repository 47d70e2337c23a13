#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fimopt/errors.hpp"
#include "fimopt/linalg.hpp"
#include "fimopt/shape_ops.hpp"
#include "test_support.hpp"

namespace fimopt {
namespace {

using testing::random_matrix;
using testing::random_orthonormal;
using testing::random_spd;
using testing::rel_frobenius;

TEST(VecTest, ColumnStacking) {
  const Matrix m = Matrix::from_rows({{1, 3}, {2, 4}});
  EXPECT_EQ(vec(m), (Vector{1, 2, 3, 4}));
  const Vector v{1, 2, 3, 4};
  EXPECT_EQ(devec(v, 2, 2), m);
  EXPECT_EQ(vec(Matrix::from_rows({{7}})), Vector{7});
}

TEST(VecTest, RoundTripIsExactForAllShapes) {
  std::mt19937_64 rng(11);
  for (std::size_t r = 1; r <= 5; ++r)
    for (std::size_t c = 1; c <= 5; ++c) {
      const Matrix m = random_matrix(r, c, rng);
      EXPECT_EQ(devec(vec(m), r, c), m);
    }
}

TEST(VecTest, DevecLengthMismatch) {
  const Vector v{1, 2, 3};
  EXPECT_THROW(devec(v, 2, 2), DimensionError);
}

TEST(DiagOpsTest, WorkedExamples) {
  const Matrix m = Matrix::from_rows({{11, 12}, {21, 22}});
  EXPECT_EQ(diag(diagm(m)), (Vector{11, 21, 12, 22}));
  EXPECT_EQ(diagv(Vector{1, 2}), Matrix::from_rows({{1, 0}, {0, 2}}));
  const Vector v{3, -1, 5};
  EXPECT_EQ(diag(diagv(v)), v);

  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5}});
  const Matrix blocks = diagb({a, b});
  EXPECT_EQ(blocks, Matrix::from_rows({{1, 2, 0}, {3, 4, 0}, {0, 0, 5}}));
  EXPECT_THROW(diagb({Matrix(2, 3)}), DimensionError);
  EXPECT_THROW(diag(Matrix(2, 3)), DimensionError);
}

TEST(KronApplyTest, IdentityAndScalars) {
  std::mt19937_64 rng(1);
  const Matrix c = random_matrix(2, 3, rng);
  EXPECT_LT(max_abs_diff(kron_apply(Matrix::identity(3), Matrix::identity(2), c), c), 1e-15);
  EXPECT_LT(max_abs_diff(kron_apply(Matrix::identity(3) * 2.0, Matrix::identity(2) * 3.0, c),
                         c * 6.0),
            1e-14);
}

TEST(KronApplyTest, MatchesDenseKroneckerProduct) {
  std::mt19937_64 rng(2);
  for (std::size_t m = 1; m <= 6; ++m)
    for (std::size_t n = 1; n <= 6; ++n) {
      const Matrix a = random_matrix(n, n, rng);
      const Matrix b = random_matrix(m, m, rng);
      const Matrix c = random_matrix(m, n, rng);
      const Matrix dense = kron(a, b) * devec(vec(c), m * n, 1);
      EXPECT_LT(max_abs_diff(kron_apply(a, b, c), devec(vec(dense), m, n)), 1e-12)
          << m << "x" << n;
    }
  EXPECT_THROW(kron_apply(Matrix(3, 3), Matrix(2, 2), Matrix(3, 3)), DimensionError);
}

TEST(KronIdentityTest, InverseSqrtFactorsAcrossKronecker) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_spd(3, rng);
    const Matrix b = random_spd(4, rng);
    const Matrix lhs = testing::eigen_sym_pow(kron(a, b), -0.5);
    const Matrix rhs = kron(sym_pow(a, -0.5), sym_pow(b, -0.5));
    EXPECT_LT(max_abs_diff(lhs, rhs), 1e-8);
  }
}

TEST(KronIdentityTest, BlockDiagonalInverseSqrtIsBlockwise) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Matrix> blocks;
    std::vector<Matrix> roots;
    for (std::size_t s = 1; s <= 4; ++s) {
      blocks.push_back(random_spd(s, rng));
      roots.push_back(testing::eigen_sym_pow(blocks.back(), -0.5));
    }
    EXPECT_LT(max_abs_diff(sym_pow(diagb(blocks), -0.5), diagb(roots)), 1e-10);
  }
}

TEST(SymEigTest, DiagonalInput) {
  const SymEigen e = sym_eig(diagv(Vector{3, 1}));
  EXPECT_DOUBLE_EQ(e.values[0], 3);
  EXPECT_DOUBLE_EQ(e.values[1], 1);
  EXPECT_LT(max_abs_diff(e.vectors, Matrix::identity(2)), 1e-15);

  const SymEigen swapped = sym_eig(diagv(Vector{1, 3}));
  EXPECT_LT(max_abs_diff(swapped.vectors, Matrix::from_rows({{0, 1}, {1, 0}})), 1e-15);
}

TEST(SymEigTest, RandomSpdReconstruction) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_spd(5, rng, 50.0);
    const SymEigen e = sym_eig(a);
    Matrix scaled = e.vectors;
    for (std::size_t k = 0; k < 5; ++k)
      for (double& x : scaled.col(k)) x *= e.values[k];
    const Matrix recon = kernels::matmul_nt(scaled, e.vectors);
    EXPECT_LE(frobenius_norm(recon - a), 1e-8 * frobenius_norm(a));
    EXPECT_LT(orthonormality_error(e.vectors), 1e-10);
    for (std::size_t k = 1; k < 5; ++k) EXPECT_GE(e.values[k - 1], e.values[k]);
  }
}

TEST(SymEigTest, RankOne) {
  const Vector u{0.6, 0.0, -0.8};
  Matrix a(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) a(i, j) = u[i] * u[j];
  const SymEigen e = sym_eig(a, 1);
  EXPECT_NEAR(e.values[0], 1.0, 1e-14);
  // Sign convention: first nonzero component positive, so +u.
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(e.vectors(i, 0), u[i], 1e-14);
}

TEST(SymEigTest, TwoByTwoMatchesCharacteristicRoots) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    const double a = normal(rng);
    const double b = normal(rng);
    const double d = normal(rng);
    const SymEigen e = sym_eig(Matrix::from_rows({{a, b}, {b, d}}));
    const double mean = 0.5 * (a + d);
    const double radius = std::hypot(0.5 * (a - d), b);
    EXPECT_NEAR(e.values[0], mean + radius, 1e-12);
    EXPECT_NEAR(e.values[1], mean - radius, 1e-12);
  }
}

TEST(SymEigTest, SignConventionFirstNonzeroPositive) {
  std::mt19937_64 rng(7);
  const SymEigen e = sym_eig(random_spd(6, rng));
  for (std::size_t k = 0; k < 6; ++k) {
    for (std::size_t i = 0; i < 6; ++i) {
      if (std::abs(e.vectors(i, k)) > 1e-12) {
        EXPECT_GT(e.vectors(i, k), 0.0);
        break;
      }
    }
  }
}

TEST(SymEigTest, Errors) {
  Matrix bad = Matrix::identity(2);
  bad(0, 1) = std::nan("");
  EXPECT_THROW(sym_eig(bad), NumericError);
  EXPECT_THROW(sym_eig(Matrix(2, 3)), DimensionError);
  EXPECT_THROW(sym_eig(Matrix::from_rows({{1, 1}, {0, 1}})), PreconditionError);
}

TEST(QrComplementTest, AxisComplement) {
  Matrix u(3, 1);
  u(0, 0) = 1.0;
  const Matrix uc = qr_complement(u);
  ASSERT_EQ(uc.cols(), 2u);
  EXPECT_LT(max_abs(kernels::matmul_tn(uc, u)), 1e-15);
  EXPECT_LT(orthonormality_error(uc), 1e-15);
}

TEST(QrComplementTest, RandomCompletionIsOrthonormal) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix u = random_orthonormal(6, 2, rng);
    const Matrix full = hconcat(u, qr_complement(u));
    EXPECT_LT(orthonormality_error(full), 1e-10);
  }
}

TEST(QrComplementTest, TwoDimensionalComplement) {
  const double h = 1.0 / std::sqrt(2.0);
  const Matrix u = Matrix::from_rows({{h}, {h}});
  const Matrix uc = qr_complement(u);
  EXPECT_NEAR(std::abs(uc(0, 0)), h, 1e-15);
  EXPECT_NEAR(uc(0, 0), -uc(1, 0), 1e-15);
}

TEST(QrComplementTest, Errors) {
  EXPECT_THROW(qr_complement(Matrix::identity(3)), DimensionError);
  Matrix skew(3, 1);
  skew(0, 0) = 2.0;
  EXPECT_THROW(qr_complement(skew), PreconditionError);
}

TEST(NewtonSchulzTest, ScalarCases) {
  EXPECT_LT(max_abs_diff(newton_schulz_inv_sqrt(Matrix::identity(3)), Matrix::identity(3)),
            1e-13);
  // 4·I₃ normalizes to I/√3, which needs more than the default 5 steps.
  EXPECT_LT(max_abs_diff(newton_schulz_inv_sqrt(Matrix::identity(3) * 4.0, 12),
                         Matrix::identity(3) * 0.5),
            1e-12);
}

TEST(NewtonSchulzTest, MatchesEigenInverseSqrt) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_spd(5, rng, 20.0);
    const Matrix oracle = testing::eigen_sym_pow(a, -0.5);
    EXPECT_LT(rel_frobenius(newton_schulz_inv_sqrt(a, 20), oracle), 1e-5);
  }
}

TEST(NewtonSchulzTest, ResidualDecreasesMonotonically) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_spd(5, rng, 100.0);
    double previous = std::numeric_limits<double>::infinity();
    for (int steps = 1; steps <= 5; ++steps) {
      const Matrix z = newton_schulz_inv_sqrt(a, steps);
      const double residual =
          frobenius_norm(kernels::matmul(kernels::matmul(z, a), z) - Matrix::identity(5));
      EXPECT_LT(residual, previous);
      previous = residual;
    }
  }
}

TEST(NewtonSchulzTest, RejectsIndefinite) {
  EXPECT_THROW(newton_schulz(diagv(Vector{1.0, -0.5})), NumericError);
  EXPECT_FALSE(newton_schulz(Matrix::identity(2)).convergence_warning);
}

TEST(SubspaceIterationTest, ExactBlockIsFixedPoint) {
  const Matrix a = diagv(Vector{5, 3, 1});
  const SymEigen e = subspace_iteration(a, Matrix::identity(3).cols_range(0, 2), 1);
  EXPECT_NEAR(e.values[0], 5, 1e-14);
  EXPECT_NEAR(e.values[1], 3, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(1, 1)), 1.0, 1e-14);
}

Matrix psd_with_spectrum(const Vector& spectrum, std::mt19937_64& rng) {
  const std::size_t n = spectrum.size();
  const Matrix q = random_orthonormal(n, n, rng);
  Matrix scaled = q;
  for (std::size_t k = 0; k < n; ++k)
    for (double& x : scaled.col(k)) x *= spectrum[k];
  return symmetrized(kernels::matmul_nt(scaled, q));
}

TEST(SubspaceIterationTest, ConvergesToDenseTopSubspace) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = psd_with_spectrum({10, 7, 5, 2, 1.5, 1, 0.5, 0.1}, rng);
    const SymEigen e = subspace_iteration(a, random_matrix(8, 3, rng), 50);
    const Matrix dense = sym_eig(a, 3).vectors;
    const Eigen::VectorXd cosines = testing::principal_cosines(e.vectors, dense);
    for (Eigen::Index k = 0; k < cosines.size(); ++k) {
      EXPECT_LE(std::acos(std::min(1.0, cosines(k))), 1e-6);
    }
    EXPECT_LT(orthonormality_error(e.vectors), 1e-12);
    EXPECT_NEAR(e.values[0], 10, 1e-9);
  }
}

TEST(SubspaceIterationTest, OneStepTracksSlowDrift) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a0 = psd_with_spectrum({10, 7, 5, 2, 1.5, 1, 0.5, 0.1}, rng);
    const Matrix noise = random_matrix(8, 8, rng, 0.1);
    const Matrix a1 = a0 + symmetrized(noise);
    const SymEigen previous = sym_eig(a0, 3);
    const SymEigen tracked = subspace_iteration(a1, previous.vectors, 1);
    const SymEigen truth = sym_eig(a1, 3);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_NEAR(tracked.values[k], truth.values[k], 0.05 * truth.values[k]);
    }
  }
}

TEST(SubspaceIterationTest, RankDeficientInitStillOrthonormal) {
  std::mt19937_64 rng(14);
  const Matrix a = psd_with_spectrum({4, 3, 2, 1}, rng);
  const SymEigen e = subspace_iteration(a, Matrix(4, 2), 3);
  EXPECT_LT(orthonormality_error(e.vectors), 1e-12);
  EXPECT_GE(e.values[0], e.values[1]);
}

TEST(SymPowTest, PseudoInverseOnRankDeficient) {
  const Matrix a = diagv(Vector{4, 0});
  EXPECT_EQ(sym_pow(a, -0.5), diagv(Vector{0.5, 0}));
}

}  // namespace
}  // namespace fimopt
