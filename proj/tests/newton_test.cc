#include "detavg/newton.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "detavg/dataio.hpp"
#include "detavg/errors.hpp"
#include "detavg/oracle.hpp"
#include "detavg/report.hpp"
#include "test_util.hpp"

namespace detavg {
namespace {

Objective mid_square_objective() {
  return Objective(synth_regression(1000, 5, 0.5, 3), LossKind::Square, 1.0 / 1000);
}

Objective logistic_objective() { return Objective(synth_classification(2000, 10, 7), LossKind::Logistic, 1.0 / 2000); }

TEST(LocalNewtonEstimateTest, FullMaskGivesExactStep) {
  const Objective obj = mid_square_objective();
  const Vector w = Vector::Constant(5, 0.1);
  const auto est = local_newton_estimate(obj, w, draw_mask(obj.n(), static_cast<double>(obj.n()), {}));
  const Vector p = exact_newton_step(obj, w);
  EXPECT_LE((est.value - p).norm(), 1e-12 * p.norm());
  EXPECT_NEAR(est.log_weight, log_det_psd(hessian(obj, w)), 1e-12);
}

TEST(LocalNewtonEstimateTest, EmptyMaskGivesScaledGradient) {
  const Objective obj = testing::tiny_square_objective(0.1);
  const Vector w(Eigen::Vector2d(0.3, -0.2));
  const auto est = local_newton_estimate(obj, w, SketchMask(std::vector<char>(4, 0), 2.0));
  EXPECT_LE((est.value - gradient(obj, w) / 0.1).norm(), 1e-12);
  EXPECT_NEAR(est.log_weight, 2 * std::log(0.1), 1e-14);
}

TEST(LocalNewtonEstimateTest, DeterminantWeightedMeanIsExactStep) {
  // enumerate all 16 masks with Bernoulli(k/n) probabilities
  const Objective obj = testing::tiny_square_objective(0.1);
  const Vector w = Vector::Zero(2);
  const double k = 2.0, p = k / 4.0;
  Vector num = Vector::Zero(2);
  double den = 0.0;
  for (unsigned bits = 0; bits < 16; ++bits) {
    std::vector<char> include(4);
    double prob = 1.0;
    for (unsigned i = 0; i < 4; ++i) {
      include[i] = static_cast<char>((bits >> i) & 1u);
      prob *= include[i] ? p : 1 - p;
    }
    const auto est = local_newton_estimate(obj, w, SketchMask(include, k));
    num += prob * std::exp(est.log_weight) * est.value;
    den += prob * std::exp(est.log_weight);
  }
  const Vector exact = exact_newton_step(obj, w);
  EXPECT_LE((num / den - exact).norm(), 1e-12 * exact.norm());
}

TEST(MergedStepTest, SingleFullMachineIsExact) {
  const Objective obj = mid_square_objective();
  const auto report = merged_step(obj, Vector::Zero(5), {1, 1000.0, Scheme::Determinantal}, 9);
  EXPECT_LE(report.err_euclidean, 1e-12 * report.exact.norm());
  EXPECT_LE(report.err_hnorm, 1e-12 * report.exact.norm());
  ASSERT_EQ(report.log_weights.size(), 1u);
}

TEST(MergedStepTest, SchemesAgreeForOneMachine) {
  const Objective obj = mid_square_objective();
  const auto uni = merged_step(obj, Vector::Zero(5), {1, 50.0, Scheme::Uniform}, 4, 2);
  const auto det = merged_step(obj, Vector::Zero(5), {1, 50.0, Scheme::Determinantal}, 4, 2);
  EXPECT_EQ(uni.merged, det.merged);
}

TEST(MergedStepTest, ErrorMetricsAreConsistent) {
  const Objective obj = mid_square_objective();
  const Vector w = Vector::Zero(5);
  const auto r = merged_step(obj, w, {16, 50.0, Scheme::Uniform}, 4);
  EXPECT_GE(r.err_euclidean, 0.0);
  EXPECT_NEAR(r.err_hnorm, mahalanobis_norm(r.merged - r.exact, hessian(obj, w)), 1e-15);
  EXPECT_EQ(r.log_weights.size(), 16u);
}

double median_hnorm_error(const Objective& obj, std::size_t m, Scheme scheme, std::uint64_t seed) {
  std::vector<double> errs;
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    errs.push_back(merged_step(obj, Vector::Zero(2), {m, 2.0, scheme}, seed, trial).err_hnorm);
  }
  return median(errs);
}

TEST(MergedStepTest, DeterminantalIsConsistentOnTinyInstance) {
  const Objective obj = testing::tiny_square_objective(0.1);
  const double small = median_hnorm_error(obj, 1u << 6, Scheme::Determinantal, 12);
  const double large = median_hnorm_error(obj, 1u << 14, Scheme::Determinantal, 12);
  EXPECT_LE(large, small / 4);
}

TEST(MergedStepTest, UniformPlateausAtInversionBias) {
  const Objective obj = testing::tiny_square_objective(0.1);
  const Vector bias = oracle::expect_uniform_newton_bias(obj, Vector::Zero(2), 2.0);
  const double bias_h = mahalanobis_norm(bias, hessian(obj, Vector::Zero(2)));
  const double large = median_hnorm_error(obj, 1u << 14, Scheme::Uniform, 12);
  EXPECT_NEAR(large, bias_h, 0.25 * bias_h);
}

TEST(ErrorSweepTest, SingleExactRow) {
  const Objective obj = mid_square_objective();
  const std::size_t ms[] = {1};
  const auto rows = error_sweep(obj, Vector::Zero(5), 1000.0, ms, 1, Scheme::Determinantal, 3);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].m, 1u);
  EXPECT_EQ(rows[0].trial, 0u);
  EXPECT_LE(rows[0].err_euclidean, 1e-12);
}

TEST(ErrorSweepTest, RowsMatchMergedStep) {
  const Objective obj = mid_square_objective();
  const std::size_t ms[] = {2, 8};
  const Scheme schemes[] = {Scheme::Uniform, Scheme::Determinantal};
  const auto rows = error_sweep(obj, Vector::Zero(5), 60.0, ms, 3, schemes, 21);
  ASSERT_EQ(rows.size(), 12u);
  for (const SweepRow& row : rows) {
    const auto r = merged_step(obj, Vector::Zero(5), {row.m, 60.0, row.scheme}, 21, row.trial);
    EXPECT_NEAR(row.err_hnorm, r.err_hnorm, 1e-12);
    EXPECT_NEAR(row.err_euclidean, r.err_euclidean, 1e-12);
  }
  EXPECT_EQ(rows.front().scheme, Scheme::Uniform);
  EXPECT_EQ(rows.back().scheme, Scheme::Determinantal);
  EXPECT_EQ(rows.back().m, 8u);
  EXPECT_EQ(rows.back().trial, 2u);
}

TEST(ErrorSweepTest, DeterministicAcrossRunsAndThreads) {
  const Objective obj = mid_square_objective();
  const std::size_t ms[] = {4, 16, 64};
  const Scheme schemes[] = {Scheme::Uniform, Scheme::Determinantal};
  const auto a = error_sweep(obj, Vector::Zero(5), 60.0, ms, 4, schemes, 5, 1);
  const auto b = error_sweep(obj, Vector::Zero(5), 60.0, ms, 4, schemes, 5, 1);
  const auto c = error_sweep(obj, Vector::Zero(5), 60.0, ms, 4, schemes, 5, 3);
  EXPECT_EQ(newton_csv(a), newton_csv(b));
  EXPECT_EQ(newton_csv(a), newton_csv(c));
  const auto other = error_sweep(obj, Vector::Zero(5), 60.0, ms, 4, schemes, 6, 1);
  EXPECT_NE(newton_csv(a), newton_csv(other));
}

TEST(ErrorSweepTest, Validation) {
  const Objective obj = mid_square_objective();
  const std::vector<std::size_t> empty;
  const std::size_t unsorted[] = {8, 4};
  const std::size_t zero[] = {0, 4};
  const std::size_t ok[] = {4};
  EXPECT_THROW(error_sweep(obj, Vector::Zero(5), 60.0, empty, 1, Scheme::Uniform, 0), ValidationError);
  EXPECT_THROW(error_sweep(obj, Vector::Zero(5), 60.0, unsorted, 1, Scheme::Uniform, 0), ValidationError);
  EXPECT_THROW(error_sweep(obj, Vector::Zero(5), 60.0, zero, 1, Scheme::Uniform, 0), ValidationError);
  EXPECT_THROW(error_sweep(obj, Vector::Zero(5), 2000.0, ok, 1, Scheme::Uniform, 0), InvalidSampleSize);
}

TEST(ErrorSweepTest, DeterminantalErrorDecaysAtInverseSquareRootRate) {
  const Objective obj = mid_square_objective();
  const std::size_t ms[] = {8, 16, 32, 64, 128, 256, 512};
  const auto rows = error_sweep(obj, Vector::Zero(5), 100.0, ms, 20, Scheme::Determinantal, 8);
  const auto med = median_error_by_m(rows, Scheme::Determinantal, ErrorMetric::HNorm);
  std::vector<double> x, y;
  for (const auto& [m, e] : med) {
    x.push_back(static_cast<double>(m));
    y.push_back(e);
  }
  EXPECT_NEAR(loglog_slope(x, y), -0.5, 0.15);

  // err / |p|_H <= eta / sqrt(m) with one eta for the whole sweep
  const SymMatrix h = hessian(obj, Vector::Zero(5));
  const double p_h = mahalanobis_norm(exact_newton_step(obj, Vector::Zero(5)), h);
  double lo = 1e300, hi = 0.0;
  for (const auto& [m, e] : med) {
    const double eta = std::sqrt(static_cast<double>(m)) * e / p_h;
    lo = std::min(lo, eta);
    hi = std::max(hi, eta);
  }
  EXPECT_LE(hi / lo, 2.0);
}

TEST(FindMinimizerTest, ReachesGradientTolerance) {
  const Objective obj = logistic_objective();
  EXPECT_LE(gradient(obj, find_minimizer(obj)).norm(), 1e-12);
}

TEST(RunDistributedNewtonTest, SquareLossExactStepsConvergeInOneIteration) {
  const Objective obj = mid_square_objective();
  const auto traj = run_distributed_newton(obj, Vector::Zero(5), 2, {1, 1000.0, Scheme::Determinantal}, 1);
  ASSERT_EQ(traj.dist_to_opt.size(), 3u);
  ASSERT_EQ(traj.loss.size(), 3u);
  EXPECT_LE(traj.dist_to_opt[1], 1e-10 * traj.dist_to_opt[0]);
}

TEST(RunExactNewtonTest, LogisticConvergesQuadratically) {
  const Objective obj = logistic_objective();
  const auto traj = run_exact_newton(obj, Vector::Zero(10), 8);
  bool checked = false;
  for (std::size_t t = 0; t + 1 < traj.dist_to_opt.size(); ++t) {
    const double e = traj.dist_to_opt[t], next = traj.dist_to_opt[t + 1];
    // inside the basin and above the floating-point floor
    if (e < 0.1 && next > 1e-10) {
      EXPECT_LE(next, 0.5 * e * e) << "iteration " << t;
      checked = true;
    }
  }
  EXPECT_TRUE(checked);
  EXPECT_LE(traj.dist_to_opt.back(), 1e-9);
}

TEST(RunDistributedNewtonTest, DeterminantalTracksExactNewton) {
  const Objective obj = logistic_objective();
  const auto exact = run_exact_newton(obj, Vector::Zero(10), 4);
  const auto det = run_distributed_newton(obj, Vector::Zero(10), 4, {256, 200.0, Scheme::Determinantal}, 17);
  EXPECT_LE(det.dist_to_opt.back(), 10 * exact.dist_to_opt.back());
  EXPECT_EQ(det.optimum, exact.optimum);
}

TEST(RunDistributedNewtonTest, Validation) {
  const Objective obj = mid_square_objective();
  EXPECT_THROW(run_distributed_newton(obj, Vector::Zero(5), 0, {1, 10.0, Scheme::Uniform}, 0), ValidationError);
  EXPECT_THROW(run_distributed_newton(obj, Vector::Zero(4), 1, {1, 10.0, Scheme::Uniform}, 0), DimensionMismatch);
  EXPECT_THROW(run_distributed_newton(obj, Vector::Zero(5), 1, {0, 10.0, Scheme::Uniform}, 0), ValidationError);
}

TEST(CoherenceTest, NoDataIsZero) {
  const Objective obj(Dataset(Matrix::Zero(3, 4), Vector::Zero(3)), LossKind::Square, 1.0);
  EXPECT_EQ(coherence(obj, Vector::Zero(4)), 0.0);
}

TEST(CoherenceTest, SingleRow) {
  // x = e1, l'' = 2, H = diag(3, 1, 1): mu = 2 * (1/3) / 3
  const Objective obj(Dataset(Matrix(Vector::Unit(3, 0).transpose()), Vector::Zero(1)), LossKind::Square, 1.0);
  EXPECT_NEAR(coherence(obj, Vector::Zero(3)), 2.0 / 9.0, 1e-15);
}

TEST(CoherenceTest, MatchesDenseDefinition) {
  const Objective obj = logistic_objective();
  std::mt19937_64 rng(4);
  const Vector w = 0.3 * testing::random_vector(rng, 10);
  const Matrix h_inv = hessian(obj, w).matrix().inverse();
  const Vector c = obj.curvatures(w);
  double top = 0.0;
  for (Eigen::Index i = 0; i < obj.n(); ++i) {
    const Vector x = obj.data().row(i).transpose();
    top = std::max(top, c(i) * x.dot(h_inv * x));
  }
  EXPECT_NEAR(coherence(obj, w), top / 10.0, 1e-12 * top);
}

TEST(SchemeTest, NamesRoundTrip) {
  EXPECT_EQ(parse_scheme(to_string(Scheme::Uniform)), Scheme::Uniform);
  EXPECT_EQ(parse_scheme(to_string(Scheme::Determinantal)), Scheme::Determinantal);
  EXPECT_THROW(parse_scheme("median"), ValidationError);
}

}  // namespace
}  // namespace detavg
