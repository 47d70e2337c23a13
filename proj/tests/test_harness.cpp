#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fimopt/errors.hpp"
#include "fimopt/harness/train.hpp"
#include "fimopt/kernels.hpp"
#include "test_support.hpp"

namespace fimopt::harness {
namespace {

using optim::Hyper;
using optim::OptimizerKind;

Schedule schedule(double lr, long steps, double warmup = 0.1, double final = 0.1) {
  Schedule s;
  s.base_lr = lr;
  s.total_steps = steps;
  s.warmup_frac = warmup;
  s.final_frac = final;
  return s;
}

// ---------------------------------------------------------------- schedule

TEST(ScheduleTest, Endpoints) {
  const Schedule s = schedule(0.02, 1000);
  EXPECT_EQ(lr_at(s, 0), 0.0);
  EXPECT_DOUBLE_EQ(lr_at(s, 100), 0.02);
  EXPECT_DOUBLE_EQ(lr_at(s, 1000), 0.002);
  EXPECT_DOUBLE_EQ(lr_at(s, 50), 0.01);
}

TEST(ScheduleTest, CosineMidpoint) {
  const Schedule s = schedule(1.0, 1000);
  EXPECT_NEAR(lr_at(s, 550), 0.55, 1e-15);
}

TEST(ScheduleTest, MonotoneAfterWarmup) {
  const Schedule s = schedule(1.0, 500);
  for (long t = 51; t <= 500; ++t) ASSERT_LE(lr_at(s, t), lr_at(s, t - 1));
  for (long t = 1; t <= 50; ++t) ASSERT_GT(lr_at(s, t), lr_at(s, t - 1));
}

TEST(ScheduleTest, NoWarmupFlatFinalIsConstant) {
  const Schedule s = schedule(0.3, 10, 0.0, 1.0);
  for (long t = 0; t <= 10; ++t) EXPECT_DOUBLE_EQ(lr_at(s, t), 0.3);
}

TEST(ScheduleTest, RejectsBadInput) {
  const Schedule s = schedule(1.0, 10);
  EXPECT_THROW(lr_at(s, 11), ConfigError);
  EXPECT_THROW(lr_at(s, -1), ConfigError);
  EXPECT_THROW(lr_at(schedule(1.0, 10, 1.0), 1), ConfigError);
  EXPECT_THROW(lr_at(schedule(1.0, 10, 0.1, 0.0), 1), ConfigError);
  EXPECT_THROW(lr_at(schedule(-1.0, 10), 1), ConfigError);
}

// ---------------------------------------------------------------- problems

// Central differences on every parameter entry.
double max_fd_error(Problem& p, const Params& at) {
  Params grad;
  p.loss_and_grad(at, grad);
  const double h = 1e-5;
  double worst = 0.0;
  auto check = [&](double& slot, double analytic) {
    const double keep = slot;
    slot = keep + h;
    const double up = p.loss(at);
    slot = keep - h;
    const double down = p.loss(at);
    slot = keep;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(fd - analytic) / std::max(1.0, std::abs(analytic)));
  };
  Params& w = const_cast<Params&>(at);
  for (std::size_t k = 0; k < w.weights.size(); ++k)
    for (std::size_t i = 0; i < w.weights[k].size(); ++i)
      check(w.weights[k].data()[i], grad.weights[k].data()[i]);
  for (std::size_t k = 0; k < w.biases.size(); ++k)
    for (std::size_t i = 0; i < w.biases[k].size(); ++i) check(w.biases[k][i], grad.biases[k][i]);
  return worst;
}

Params perturbed(const Params& base, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Params p = base;
  for (Matrix& w : p.weights)
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] += normal(rng);
  for (Vector& b : p.biases)
    for (double& x : b) x += normal(rng);
  return p;
}

TEST(ProblemTest, RegressionGradientMatchesFiniteDifferences) {
  RegressionSpec spec;
  spec.samples = 40;
  spec.m = 6;
  spec.n = 4;
  spec.noise = 0.1;
  spec.rotate = true;
  MatrixRegression p(spec, 1);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 5; ++k) EXPECT_LT(max_fd_error(p, perturbed(p.initial_params(), rng, 1.0)), 1e-4);
}

TEST(ProblemTest, MlpGradientMatchesFiniteDifferences) {
  MlpSpec spec;
  spec.inputs = 5;
  spec.hidden = 7;
  spec.classes = 3;
  spec.samples = 30;
  TinyMlp p(spec, 3);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 5; ++k) EXPECT_LT(max_fd_error(p, perturbed(p.initial_params(), rng, 0.5)), 1e-4);
}

TEST(ProblemTest, RegressionMinimizerIsStationary) {
  RegressionSpec spec;
  spec.noise = 0.5;
  spec.rotate = true;
  MatrixRegression p(spec, 5);
  Params at = p.initial_params();
  at.weights[0] = p.solve();
  Params grad;
  p.loss_and_grad(at, grad);
  EXPECT_LT(grad_norm(grad), 1e-8);
}

TEST(ProblemTest, NoiselessRegressionHasZeroMinimum) {
  MatrixRegression p(RegressionSpec{}, 6);
  Params at = p.initial_params();
  at.weights[0] = p.solve();
  EXPECT_LT(p.loss(at), 1e-18);
  EXPECT_GT(p.loss(p.initial_params()), 1.0);
}

TEST(ProblemTest, StreamCovarianceMatchesFactors) {
  StreamSpec spec;
  spec.m = 5;
  spec.n = 7;
  spec.noise = 0.3;
  GradientStream s(spec, 7);
  Matrix acc(5, 5);
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) acc += kernels::gram_rows(s.next());
  acc *= 1.0 / draws;
  const double tr = frobenius_norm_sq(s.b());
  Matrix expected = kernels::matmul_nt(s.a(), s.a()) * tr;
  expected += Matrix::identity(5) * (spec.noise * spec.noise * spec.n);
  EXPECT_LT(testing::rel_frobenius(acc, expected), 0.05);
}

TEST(ProblemTest, StreamHasNoLoss) {
  GradientStream s(StreamSpec{}, 8);
  EXPECT_FALSE(s.has_loss());
  EXPECT_TRUE(std::isnan(s.loss(s.initial_params())));
}

TEST(ProblemTest, BadSpecsAreConfigErrors) {
  RegressionSpec r;
  r.m = 0;
  EXPECT_THROW(MatrixRegression(r, 1), ConfigError);
  MlpSpec m;
  m.classes = 1;
  EXPECT_THROW(TinyMlp(m, 1), ConfigError);
  StreamSpec s;
  s.noise = -1.0;
  EXPECT_THROW(GradientStream(s, 1), ConfigError);
}

// ---------------------------------------------------------------- train

TEST(TrainTest, SmallStepSgdIsMonotone) {
  MatrixRegression p(RegressionSpec{}, 9);
  const RunRecord rec = train(p, OptimizerKind::Sgd, Hyper{}, schedule(0.05, 300), 1);
  ASSERT_FALSE(rec.diverged);
  ASSERT_EQ(rec.rows.size(), 300u);
  for (std::size_t k = 1; k < rec.rows.size(); ++k) {
    ASSERT_LE(rec.rows[k].loss, rec.rows[k - 1].loss + 1e-9);
    ASSERT_EQ(rec.rows[k].step, rec.rows[k - 1].step + 1);
  }
  EXPECT_LT(rec.final_loss, rec.rows.front().loss);
}

TEST(TrainTest, SameSeedGivesIdenticalRecords) {
  Hyper h;
  h.alice.rank = 4;
  h.alice.leading = 2;
  h.alice.interval = 5;
  TrainOptions opts;
  opts.record_timing = false;
  for (OptimizerKind k : {OptimizerKind::Alice, OptimizerKind::Racs, OptimizerKind::Adam}) {
    MlpSpec spec;
    TinyMlp a(spec, 10);
    TinyMlp b(spec, 10);
    const RunRecord ra = train(a, k, h, schedule(0.01, 60), 3, opts);
    const RunRecord rb = train(b, k, h, schedule(0.01, 60), 3, opts);
    ASSERT_EQ(ra.rows, rb.rows);
    EXPECT_EQ(ra.final_loss, rb.final_loss);
    EXPECT_EQ(ra.params.weights, rb.params.weights);
  }
}

TEST(TrainTest, DifferentSeedsChangeSwitching) {
  Hyper h;
  h.alice.rank = 4;
  h.alice.leading = 1;
  h.alice.interval = 3;
  TrainOptions opts;
  opts.record_timing = false;
  MatrixRegression a(RegressionSpec{}, 11);
  MatrixRegression b(RegressionSpec{}, 11);
  const RunRecord ra = train(a, OptimizerKind::Alice, h, schedule(0.01, 30), 1, opts);
  const RunRecord rb = train(b, OptimizerKind::Alice, h, schedule(0.01, 30), 2, opts);
  EXPECT_NE(ra.rows, rb.rows);
}

TEST(TrainTest, HugeLearningRateIsReportedAsDivergence) {
  MatrixRegression p(RegressionSpec{}, 12);
  const RunRecord rec = train(p, OptimizerKind::Sgd, Hyper{}, schedule(1e3, 200), 1);
  ASSERT_TRUE(rec.diverged);
  EXPECT_GT(rec.diverged_step, 1);
  EXPECT_EQ(rec.rows.size(), static_cast<std::size_t>(rec.diverged_step));
  EXPECT_FALSE(rec.divergence_reason.empty());
  EXPECT_FALSE(steps_to_threshold(rec, 1e-3).has_value());
}

TEST(TrainTest, MlpLossDecreasesWithEveryKind) {
  Hyper h;
  h.alice.rank = 4;
  h.alice.leading = 2;
  h.alice.interval = 20;
  h.galore.rank = 4;
  h.galore.interval = 20;
  const double lrs[] = {0.1, 0.01, 0.02, 0.02, 0.02, 0.01, 0.01, 0.1, 0.02};
  std::size_t idx = 0;
  for (OptimizerKind k : optim::all_kinds()) {
    TinyMlp p(MlpSpec{}, 13);
    const RunRecord rec = train(p, k, h, schedule(lrs[idx++], 200), 4);
    ASSERT_FALSE(rec.diverged) << optim::kind_name(k);
    EXPECT_LT(rec.final_loss, 0.5 * rec.rows.front().loss) << optim::kind_name(k);
  }
}

TEST(TrainTest, StreamRunsWithoutLoss) {
  GradientStream s(StreamSpec{}, 14);
  Hyper h;
  h.alice.rank = 4;
  h.alice.leading = 2;
  const RunRecord rec = train(s, OptimizerKind::Alice, h, schedule(0.01, 50), 5);
  EXPECT_FALSE(rec.diverged);
  EXPECT_EQ(rec.rows.size(), 50u);
  EXPECT_TRUE(std::isnan(rec.rows.back().loss));
  EXPECT_GT(rec.rows.back().grad_norm, 0.0);
}

// Compared once both have converged: with noise the minimum is nonzero, so a
// relative band is meaningful. Early in training the two differ by orders of
// magnitude at a shared lr.
TEST(TrainTest, SoapTracksAliceCOnTheQuadratic) {
  RegressionSpec spec;
  spec.rotate = true;
  spec.noise = 0.1;
  MatrixRegression a(spec, 15);
  MatrixRegression b(spec, 15);
  const RunRecord rs = train(a, OptimizerKind::Soap, Hyper{}, schedule(0.1, 500), 6);
  const RunRecord rc = train(b, OptimizerKind::AliceC, Hyper{}, schedule(0.1, 500), 6);
  ASSERT_FALSE(rs.diverged);
  ASSERT_FALSE(rc.diverged);
  EXPECT_LT(std::abs(rs.final_loss - rc.final_loss), 0.2 * rc.final_loss);
  Params best = a.initial_params();
  best.weights[0] = a.solve();
  EXPECT_LT(rs.final_loss, 1.2 * a.loss(best));
}

TEST(TrainTest, ThresholdCountsUpdates) {
  RunRecord rec;
  rec.rows = {{1, 100.0, 0, 0, 0}, {2, 10.0, 0, 0, 0}, {3, 0.05, 0, 0, 0}};
  rec.final_loss = 0.01;
  EXPECT_EQ(steps_to_threshold(rec, 0.5), 1);
  EXPECT_EQ(steps_to_threshold(rec, 1e-3), 2);
  EXPECT_EQ(steps_to_threshold(rec, 2e-4), 3);
  EXPECT_FALSE(steps_to_threshold(rec, 1e-5).has_value());
}

}  // namespace
}  // namespace fimopt::harness
