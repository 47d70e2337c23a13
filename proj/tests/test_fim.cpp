#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fimopt/errors.hpp"
#include "fimopt/fim/apply.hpp"
#include "fimopt/fim/certify.hpp"
#include "fimopt/fim/fit.hpp"
#include "fimopt/fim/oracle.hpp"
#include "fimopt/shape_ops.hpp"
#include "test_support.hpp"

namespace fimopt::fim {
namespace {

using fimopt::testing::random_matrix;
using fimopt::testing::random_orthonormal;

GradientSample random_samples(std::size_t m, std::size_t n, std::size_t count,
                              std::mt19937_64& rng) {
  const Matrix a = random_matrix(m, m, rng);
  std::vector<Matrix> mats;
  for (std::size_t k = 0; k < count; ++k) mats.push_back(a * random_matrix(m, n, rng));
  return GradientSample(std::move(mats));
}

double max_vec_diff(const Vector& a, const Vector& b) {
  double out = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) out = std::max(out, std::abs(a[k] - b[k]));
  return out;
}

TEST(GradientSampleTest, Validation) {
  EXPECT_THROW(GradientSample({}), DimensionError);
  EXPECT_THROW(GradientSample({Matrix(2, 2), Matrix(2, 3)}), DimensionError);
  Matrix bad(1, 1);
  bad(0, 0) = INFINITY;
  EXPECT_THROW(GradientSample({bad}), NumericError);
}

TEST(EmpiricalFimTest, Definitions) {
  const GradientSample one({Matrix::from_rows({{1, 2}, {3, 4}})});
  const EmpiricalFim f1 = build_empirical_fim(one);
  const Vector g{1, 3, 2, 4};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(f1.f(i, j), g[i] * g[j]);

  std::mt19937_64 rng(1);
  const GradientSample s = random_samples(3, 4, 20, rng);
  const EmpiricalFim f = build_empirical_fim(s);
  EXPECT_LT(max_vec_diff(diag(f.f), fit_diagonal(s).v), 1e-14);
  double mean_norm = 0.0;
  for (const auto& m : s.mats()) mean_norm += frobenius_norm_sq(m) / 20.0;
  EXPECT_NEAR(trace(f.f), mean_norm, 1e-12);
  EXPECT_EQ(asymmetry(f.f), 0.0);

  EXPECT_THROW(build_empirical_fim(GradientSample({Matrix(9, 8)})), RefusalError);
}

TEST(FitDiagonalTest, Examples) {
  EXPECT_EQ(fit_diagonal(GradientSample({Matrix::from_rows({{1, 2}, {3, 4}})})).v,
            (Vector{1, 9, 4, 16}));
  const GradientSample two({Matrix::from_rows({{1}, {0}}), Matrix::from_rows({{0}, {2}})});
  EXPECT_EQ(fit_diagonal(two).v, (Vector{0.5, 2}));
}

TEST(FitDiagonalTest, MatchesOracle) {
  std::mt19937_64 rng(2);
  const GradientSample s = random_samples(3, 2, 50, rng);
  const EmpiricalFim f = build_empirical_fim(s);
  const OracleResult oracle = oracle_minimize({Family::Diagonal, 3, 2, {}, {}}, f);
  ASSERT_TRUE(oracle.converged);
  EXPECT_LT(max_vec_diff(oracle.diagonal, fit_diagonal(s).v), 1e-8);
  EXPECT_LT(max_vec_diff(oracle.diagonal, diag(f.f)), 1e-8);
}

TEST(FitShampooTest, IdentitySample) {
  const KroneckerSqrt k = fit_kronecker_shampoo(GradientSample({Matrix::identity(2)}));
  EXPECT_EQ(k.rn, Matrix::identity(2) * 0.5);
  EXPECT_EQ(k.lm, Matrix::identity(2) * 0.5);
}

TEST(FitShampooTest, SquareSampleSharesSpectrum) {
  std::mt19937_64 rng(3);
  const GradientSample s({random_matrix(4, 4, rng)});
  const KroneckerSqrt k = fit_kronecker_shampoo(s);
  const SymEigen er = sym_eig(k.rn * 4.0);
  const SymEigen el = sym_eig(k.lm * 4.0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(er.values[i], el.values[i], 1e-10);
}

TEST(FitShampooTest, OneSidedFactorsMatchOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    const GradientSample s = random_samples(3, 4, 50, rng);
    const EmpiricalFim f = build_empirical_fim(s);
    const KroneckerSqrt k = fit_kronecker_shampoo(s);
    const OracleResult right = oracle_minimize({Family::ShampooRight, 3, 4, {}, {}}, f);
    const OracleResult left = oracle_minimize({Family::ShampooLeft, 3, 4, {}, {}}, f);
    EXPECT_LT(max_abs_diff(right.blocks[0], k.rn), 1e-6);
    EXPECT_LT(max_abs_diff(left.blocks[0], k.lm), 1e-6);
  }
}

TEST(FitWhiteningTest, Examples) {
  // Unit-norm columns give s = 1/m.
  const double h = 1.0 / std::sqrt(2.0);
  const Normalization norm =
      fit_normalization(GradientSample({Matrix::from_rows({{h, 1, 0}, {h, 0, 1}})}));
  for (double x : norm.s) EXPECT_DOUBLE_EQ(x, 0.5);

  std::mt19937_64 rng(5);
  const Matrix q = random_orthonormal(3, 3, rng);
  const Whitening w = fit_whitening(GradientSample({q}));
  EXPECT_LT(max_abs_diff(w.m, Matrix::identity(3) * (1.0 / 3.0)), 1e-14);
}

TEST(FitWhiteningTest, MatchOracle) {
  std::mt19937_64 rng(6);
  const GradientSample s = random_samples(3, 3, 50, rng);
  const EmpiricalFim f = build_empirical_fim(s);
  const OracleResult white = oracle_minimize({Family::Whitening, 3, 3, {}, {}}, f);
  const OracleResult norm = oracle_minimize({Family::Normalization, 3, 3, {}, {}}, f);
  EXPECT_LT(max_abs_diff(white.blocks[0], fit_whitening(s).m), 1e-6);
  EXPECT_LT(max_vec_diff(norm.diagonal, fit_normalization(s).s), 1e-6);
}

TEST(FitNormalizationTest, ZeroColumnIsPositivityError) {
  EXPECT_THROW(fit_normalization(GradientSample({Matrix::from_rows({{1, 0}, {2, 0}})})),
               PositivityError);
}

TEST(FitSharedEigenTest, DiagonalGramReducesToDiagonalFit) {
  // Both samples have orthogonal rows, so mean(GGᵀ) = diag(4, 1).
  const GradientSample s({Matrix::from_rows({{0, 2}, {1, 0}}), Matrix::from_rows({{2, 0}, {0, 1}})});
  const SharedEigen e = fit_shared_eigen(s);
  EXPECT_LT(max_abs_diff(e.u, Matrix::identity(2)), 1e-15);
  EXPECT_LT(max_vec_diff(vec(e.dtab), fit_diagonal(s).v), 1e-15);
}

TEST(FitSharedEigenTest, TwoByTwoPermutation) {
  const SharedEigen e = fit_shared_eigen(GradientSample({Matrix::from_rows({{1, 0}, {0, 2}})}));
  EXPECT_LT(max_abs_diff(e.u, Matrix::from_rows({{0, 1}, {1, 0}})), 1e-15);
  EXPECT_LT(max_abs_diff(e.dtab, Matrix::from_rows({{0, 4}, {1, 0}})), 1e-15);
}

TEST(FitSharedEigenTest, FixedBasisDStepMatchesOracle) {
  std::mt19937_64 rng(7);
  const GradientSample s = random_samples(3, 3, 50, rng);
  const Matrix u = random_orthonormal(3, 3, rng);
  const SharedEigen e = fit_shared_eigen(s, u);
  const OracleResult oracle =
      oracle_minimize({Family::SharedEigenD, 3, 3, u, {}}, build_empirical_fim(s));
  EXPECT_LT(max_vec_diff(oracle.diagonal, vec(e.dtab)), 1e-8);
}

TEST(FitSoapTest, IdentityRightBasisReducesToSharedEigen) {
  std::mt19937_64 rng(8);
  const GradientSample s = random_samples(3, 4, 30, rng);
  const SharedEigen e = fit_shared_eigen(s);
  const SoapEigen soap = fit_soap(s, e.u, Matrix::identity(4));
  EXPECT_LT(max_abs_diff(soap.dtab, e.dtab), 1e-12);
}

TEST(FitSoapTest, DiagonalSample) {
  const SoapEigen soap = fit_soap(GradientSample({Matrix::from_rows({{1, 0}, {0, 3}})}));
  EXPECT_LT(max_abs_diff(soap.ul, Matrix::from_rows({{0, 1}, {1, 0}})), 1e-15);
  EXPECT_LT(max_abs_diff(soap.ur, Matrix::from_rows({{0, 1}, {1, 0}})), 1e-15);
  EXPECT_LT(max_abs_diff(soap.dtab, Matrix::from_rows({{9, 0}, {0, 1}})), 1e-14);
}

TEST(FitSoapTest, DStepMatchesOracle) {
  std::mt19937_64 rng(9);
  const GradientSample s = random_samples(3, 3, 50, rng);
  const SoapEigen soap = fit_soap(s);
  const OracleResult oracle =
      oracle_minimize({Family::SoapD, 3, 3, soap.ul, soap.ur}, build_empirical_fim(s));
  EXPECT_LT(max_vec_diff(oracle.diagonal, vec(soap.dtab)), 1e-8);
}

TEST(FitTwoSidedTest, RankOneIsExactAfterOneIteration) {
  const Vector u{1.0, 2.0, 0.5};
  const Vector v{3.0, 1.0};
  Matrix g(3, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) g(i, j) = std::sqrt(u[i] * v[j]);
  const TwoSidedScaling t = fit_two_sided(GradientSample({g}), 1);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(t.q[i] * t.s[j], u[i] * v[j], 1e-12);
}

TEST(FitTwoSidedTest, ConvergesToPrincipalSingularVectors) {
  std::mt19937_64 rng(10);
  const GradientSample s = random_samples(4, 6, 30, rng);
  const TwoSidedScaling t = fit_two_sided(s, 200);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(fimopt::testing::to_eigen(s.mean_squares()),
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd left = svd.matrixU().col(0);
  const Eigen::VectorXd right = svd.matrixV().col(0);
  const Eigen::Map<const Eigen::VectorXd> q(t.q.data(), 4);
  const Eigen::Map<const Eigen::VectorXd> sv(t.s.data(), 6);
  EXPECT_GE(std::abs(left.dot(q)) / q.norm(), 1.0 - 1e-10);
  EXPECT_GE(std::abs(right.dot(sv)) / sv.norm(), 1.0 - 1e-10);
  for (double x : t.q) EXPECT_GT(x, 0.0);
  for (double x : t.s) EXPECT_GT(x, 0.0);
}

TEST(FitTwoSidedTest, DefaultsAreFiveIterationsFromOnes) {
  std::mt19937_64 rng(11);
  const GradientSample s = random_samples(3, 5, 10, rng);
  const TwoSidedScaling a = fit_two_sided(s);
  const TwoSidedScaling b = fit_two_sided(s, 5, Vector(3, 1.0));
  EXPECT_EQ(a.s, b.s);
  EXPECT_EQ(a.q, b.q);
  EXPECT_NE(fit_two_sided(s, 4).s, a.s);
}

TEST(FitTwoSidedTest, Errors) {
  EXPECT_THROW(fit_two_sided(GradientSample({Matrix::from_rows({{1, 0}})})), PositivityError);
  EXPECT_THROW(fit_two_sided(GradientSample({Matrix(1, 1, 1.0)}), 0), ConfigError);
}

TEST(FitGeneralScaledTest, IdentityMatrixGivesNormalization) {
  std::mt19937_64 rng(12);
  const GradientSample s = random_samples(3, 4, 20, rng);
  Vector first_s;
  fit_general_scaled(s, 1, std::nullopt, [&](int, const GeneralScaled& st) { first_s = st.s; });
  EXPECT_LT(max_vec_diff(first_s, fit_normalization(s).s), 1e-13);
}

TEST(FitGeneralScaledTest, FixedPointIsInitIndependent) {
  std::mt19937_64 rng(13);
  const GradientSample s = random_samples(3, 4, 50, rng);
  const GeneralScaled a = fit_general_scaled(s, 300, Vector(3, 1.0));
  const GeneralScaled b = fit_general_scaled(s, 300, Vector(3, 2.0));
  const Matrix ka = kron(diagv(a.s), a.m);
  const Matrix kb = kron(diagv(b.s), b.m);
  EXPECT_LT(max_abs_diff(ka, kb), 1e-8 * max_abs(ka));
}

TEST(FitGeneralScaledTest, ObjectiveNonIncreasing) {
  std::mt19937_64 rng(14);
  const GradientSample s = random_samples(3, 4, 50, rng);
  const EmpiricalFim f = build_empirical_fim(s);
  double previous = INFINITY;
  fit_general_scaled(s, 300, std::nullopt, [&](int, const GeneralScaled& st) {
    const double loss = frobenius_norm_sq(kron(diagv(st.s), st.m) - f.f);
    EXPECT_LE(loss, previous + 1e-12 * previous);
    previous = loss;
  });
}

TEST(FitCompensationTest, AxisBasisClosedForm) {
  std::mt19937_64 rng(15);
  const GradientSample s = random_samples(4, 3, 10, rng);
  const Matrix u = Matrix::identity(4).cols_range(0, 2);
  const CompensationScale c = fit_compensation_scale(s, u);
  for (std::size_t i = 0; i < 3; ++i) {
    double residual = 0.0;
    for (const auto& g : s.mats()) residual += (g(2, i) * g(2, i) + g(3, i) * g(3, i)) / 10.0;
    EXPECT_NEAR(c.s[i], std::sqrt(2.0) / std::sqrt(residual), 1e-12 * c.s[i]);
  }
}

TEST(FitCompensationTest, SingleComplementDirection) {
  std::mt19937_64 rng(16);
  const GradientSample s = random_samples(3, 2, 10, rng);
  const Matrix u = random_orthonormal(3, 2, rng);
  const Matrix uc = qr_complement(u);
  const CompensationScale c = fit_compensation_scale(s, u);
  for (std::size_t i = 0; i < 2; ++i) {
    double residual = 0.0;
    for (const auto& g : s.mats()) residual += std::pow(dot(uc.col(0), g.col(i)), 2) / 10.0;
    EXPECT_NEAR(c.s[i], 1.0 / std::sqrt(residual), 1e-9 * c.s[i]);
  }
}

TEST(FitCompensationTest, MatchesOracle) {
  std::mt19937_64 rng(17);
  const GradientSample s = random_samples(4, 3, 50, rng);
  const Matrix u = random_orthonormal(4, 2, rng);
  const CompensationScale c = fit_compensation_scale(s, u);
  const OracleResult oracle =
      oracle_minimize({Family::CompensationScale, 4, 3, u, {}}, compensation_target(s, u));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(1.0 / std::sqrt(oracle.diagonal[i]), c.s[i], 1e-6 * c.s[i]);
  }
}

TEST(FitCompensationTest, Errors) {
  const GradientSample s({Matrix(3, 2, 1.0)});
  EXPECT_THROW(fit_compensation_scale(s, Matrix::identity(3)), DimensionError);
  Matrix skew(3, 1);
  skew(0, 0) = 3.0;
  EXPECT_THROW(fit_compensation_scale(s, skew), PreconditionError);
}

TEST(FitBlockDiagTest, SingleSampleOuterProducts) {
  const Matrix g = Matrix::from_rows({{1, 2}, {3, 4}});
  const GeneralBlockDiag b = fit_general_blockdiag(GradientSample({g}));
  EXPECT_EQ(b.blocks[0], Matrix::from_rows({{1, 3}, {3, 9}}));
  EXPECT_EQ(b.blocks[1], Matrix::from_rows({{4, 8}, {8, 16}}));
  EXPECT_THROW(fit_general_blockdiag(GradientSample({Matrix(9, 1)})), RefusalError);
}

TEST(FitBlockDiagTest, DiagonalsMatchDiagonalFit) {
  std::mt19937_64 rng(18);
  const GradientSample s = random_samples(3, 4, 20, rng);
  const GeneralBlockDiag b = fit_general_blockdiag(s);
  const Vector v = fit_diagonal(s).v;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(b.blocks[i](k, k), v[i * 3 + k], 1e-14);
}

TEST(GeneralityOrderingTest, MoreGeneralStructuresFitBetter) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const GradientSample s = random_samples(3, 4, 50, rng);
    const EmpiricalFim f = build_empirical_fim(s);
    const double block = structure_loss(fit_general_blockdiag(s), f);
    const double shared = structure_loss(fit_shared_eigen(s), f);
    EXPECT_LE(block, shared + 1e-9);
    EXPECT_LE(shared, structure_loss(fit_diagonal(s), f) + 1e-9);
    EXPECT_LE(shared, structure_loss(fit_normalization(s), f) + 1e-9);
    EXPECT_LE(shared, structure_loss(fit_whitening(s), f) + 1e-9);
  }
}

TEST(StructureLossTest, ExactReconstructionIsZero) {
  const GradientSample s({Matrix::from_rows({{1}, {2}})});
  EXPECT_EQ(structure_loss(fit_general_blockdiag(s), build_empirical_fim(s)), 0.0);
}

TEST(ApplyTest, UnitDiagonalIsIdentity) {
  std::mt19937_64 rng(20);
  const Matrix g = random_matrix(3, 4, rng);
  EXPECT_EQ(apply_preconditioner(Diagonal{Vector(12, 1.0)}, g), g);
}

TEST(ApplyTest, SharedEigenWithIdentityBasisIsDiagonal) {
  std::mt19937_64 rng(21);
  const GradientSample s = random_samples(3, 4, 20, rng);
  const SharedEigen e = fit_shared_eigen(s, Matrix::identity(3));
  const Matrix g = random_matrix(3, 4, rng);
  EXPECT_EQ(apply_preconditioner(e, g), apply_preconditioner(fit_diagonal(s), g));
}

TEST(ApplyTest, FactoredFormsMatchDenseRoot) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    const GradientSample s = random_samples(3, 4, 30, rng);
    const Matrix u = random_orthonormal(3, 1, rng);
    const std::vector<StructuredFactor> factors{
        fit_diagonal(s),     fit_kronecker_shampoo(s), fit_whitening(s),
        fit_normalization(s), fit_shared_eigen(s),     fit_soap(s),
        fit_two_sided(s),     fit_compensation_scale(s, u), fit_general_blockdiag(s)};
    const Matrix g = random_matrix(3, 4, rng);
    for (const auto& f : factors) {
      const Matrix dense = apply_dense(f, g);
      EXPECT_LT(max_abs_diff(apply_preconditioner(f, g), dense), 1e-8 * std::max(1.0, max_abs(dense)))
          << kind_name(f);
    }
  }
}

TEST(ApplyTest, RankDeficientUsesPseudoInverse) {
  std::mt19937_64 rng(23);
  const GradientSample s({random_matrix(3, 2, rng)});
  const Matrix g = random_matrix(3, 2, rng);
  for (const StructuredFactor& f : std::vector<StructuredFactor>{
           fit_whitening(s), fit_shared_eigen(s), fit_soap(s), fit_general_blockdiag(s)}) {
    const Matrix dense = apply_dense(f, g);
    EXPECT_LT(max_abs_diff(apply_preconditioner(f, g), dense), 1e-8 * std::max(1.0, max_abs(dense)))
        << kind_name(f);
  }
}

TEST(ApplyTest, WhiteningNewtonSchulzSwitch) {
  std::mt19937_64 rng(24);
  const GradientSample s = random_samples(3, 5, 40, rng);
  const Whitening w = fit_whitening(s);
  const Matrix g = random_matrix(3, 5, rng);
  ApplyOptions ns;
  ns.newton_schulz = true;
  EXPECT_LT(fimopt::testing::rel_frobenius(apply_preconditioner(w, g, ns), apply_preconditioner(w, g)),
            1e-5);
}

TEST(OracleTest, ReportsStepCap) {
  std::mt19937_64 rng(25);
  const GradientSample s = random_samples(3, 3, 20, rng);
  OracleOptions tiny;
  tiny.max_steps = 3;
  const OracleResult r = oracle_minimize({Family::Whitening, 3, 3, {}, {}}, build_empirical_fim(s),
                                         std::nullopt, tiny);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.steps, 3);
}

TEST(OracleTest, RefusesLargeProblems) {
  EmpiricalFim f{Matrix(72, 72), 9, 8};
  EXPECT_THROW(oracle_minimize({Family::Diagonal, 9, 8, {}, {}}, f), RefusalError);
}

TEST(OracleTest, FamilyNamesRoundTrip) {
  for (Family f : all_families()) EXPECT_EQ(family_from_name(family_name(f)), f);
  EXPECT_FALSE(family_from_name("nope").has_value());
}

TEST(CertificationTest, SmallTierPasses) {
  CertifyOptions options;
  options.cases = 4;
  for (const auto& row : run_certification(options)) {
    EXPECT_TRUE(row.passed) << row.name << ": " << row.detail;
  }
}

TEST(CertificationTest, InjectedFaultIsNamed) {
  for (const std::string name : {"whitening", "compensation", "two_sided", "apply_identity"}) {
    CertifyOptions options;
    options.cases = 2;
    options.perturb = name;
    for (const auto& row : run_certification(options)) {
      EXPECT_EQ(row.passed, row.name != name) << row.name << ": " << row.detail;
    }
  }
}

}  // namespace
}  // namespace fimopt::fim
