#include "detavg/sketch.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "detavg/errors.hpp"
#include "detavg/parallel.hpp"
#include "test_util.hpp"

namespace detavg {
namespace {

Objective small_objective(LossKind loss, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix x = testing::random_matrix(rng, 40, 3);
  Vector y(40);
  for (Eigen::Index i = 0; i < 40; ++i) y(i) = loss == LossKind::Logistic ? static_cast<double>(i % 2) : x(i, 0);
  return Objective(Dataset(std::move(x), std::move(y)), loss, 0.3);
}

TEST(DrawMaskTest, FullProbabilityIncludesEverything) {
  const SketchMask mask = draw_mask(57, 57.0, SeedSpec{1, 2, 3});
  EXPECT_EQ(mask.count(), 57);
}

TEST(DrawMaskTest, DeterministicPerSeedSpec) {
  const SeedSpec spec{99, 4, 7};
  EXPECT_EQ(draw_mask(1000, 50.0, spec), draw_mask(1000, 50.0, spec));
  EXPECT_NE(draw_mask(1000, 50.0, spec), draw_mask(1000, 50.0, SeedSpec{99, 4, 8}));
  EXPECT_NE(draw_mask(1000, 50.0, spec), draw_mask(1000, 50.0, SeedSpec{99, 5, 7}));
  EXPECT_NE(draw_mask(1000, 50.0, spec), draw_mask(1000, 50.0, SeedSpec{98, 4, 7}));
}

TEST(DrawMaskTest, IndependentOfThreadSchedule) {
  std::vector<SketchMask> serial, threaded;
  for (std::size_t t = 0; t < 16; ++t) serial.push_back(draw_mask(500, 40.0, SeedSpec{5, t / 4, t % 4}));
  std::vector<std::vector<char>> slots(16);
  parallel_for(16, 4, [&](std::size_t t) { slots[t] = draw_mask(500, 40.0, SeedSpec{5, t / 4, t % 4}).include(); });
  for (std::size_t t = 0; t < 16; ++t) EXPECT_EQ(serial[t].include(), slots[t]);
}

TEST(DrawMaskTest, InclusionCountConcentrates) {
  const double n = 1e5, k = 1e3;
  const double sigma = std::sqrt(k * (1 - k / n));
  const SketchMask mask = draw_mask(static_cast<Eigen::Index>(n), k, SeedSpec{2024, 0, 0});
  EXPECT_LE(std::abs(static_cast<double>(mask.count()) - k), 3 * sigma);
}

TEST(DrawMaskTest, RejectsInvalidSampleSize) {
  EXPECT_THROW(draw_mask(10, 0.0, {}), InvalidSampleSize);
  EXPECT_THROW(draw_mask(10, -1.0, {}), InvalidSampleSize);
  EXPECT_THROW(draw_mask(10, 10.5, {}), InvalidSampleSize);
}

TEST(LocalHessianTest, EmptyMaskIsRidge) {
  const Objective obj = small_objective(LossKind::Logistic, 3);
  const SketchMask empty(std::vector<char>(40, 0), 10.0);
  EXPECT_EQ(testing::max_abs(local_hessian(obj, Vector::Ones(3), empty).matrix() - 0.3 * Matrix::Identity(3, 3)),
            0.0);
}

TEST(LocalHessianTest, FullMaskEqualsHessian) {
  for (const LossKind loss : {LossKind::Square, LossKind::Logistic}) {
    const Objective obj = small_objective(loss, 5);
    const Vector w(Eigen::Vector3d(0.2, -0.4, 1.0));
    const SketchMask full = draw_mask(40, 40.0, SeedSpec{});
    const Matrix h = hessian(obj, w).matrix();
    EXPECT_LE(testing::max_abs(local_hessian(obj, w, full).matrix() - h), 1e-13 * testing::max_abs(h));
  }
}

TEST(LocalCovarianceTest, EmptyAndFullMasks) {
  const Objective obj = small_objective(LossKind::Square, 7);
  const Dataset& data = obj.data();
  EXPECT_EQ(testing::max_abs(local_covariance(data, SketchMask(std::vector<char>(40, 0), 5.0)).matrix()), 0.0);
  const Matrix sigma = data.features().transpose() * data.features() / 40.0;
  EXPECT_LE(testing::max_abs(local_covariance(data, draw_mask(40, 40.0, {})).matrix() - sigma), 1e-13);
  EXPECT_THROW(local_covariance(data, draw_mask(41, 5.0, {})), DimensionMismatch);
}

// Entrywise mean and standard error over T sampled matrices.
struct MonteCarloMatrix {
  Matrix mean;
  Matrix se;
};

template <typename Sample>
MonteCarloMatrix monte_carlo(Eigen::Index d, int trials, Sample&& sample) {
  Matrix sum = Matrix::Zero(d, d), sum_sq = Matrix::Zero(d, d);
  for (int t = 0; t < trials; ++t) {
    const Matrix m = sample(static_cast<std::uint64_t>(t));
    sum += m;
    sum_sq += m.cwiseProduct(m);
  }
  const double count = trials;
  MonteCarloMatrix out;
  out.mean = sum / count;
  const Matrix var = (sum_sq / count - out.mean.cwiseProduct(out.mean)) * (count / (count - 1));
  out.se = (var / count).cwiseSqrt();
  return out;
}

TEST(LocalHessianTest, UnbiasedOverMasks) {
  const Objective obj = small_objective(LossKind::Logistic, 11);
  const Vector w(Eigen::Vector3d(0.5, 0.1, -0.3));
  const auto mc = monte_carlo(3, 10000, [&](std::uint64_t t) {
    return local_hessian(obj, w, draw_mask(40, 8.0, SeedSpec{77, t, 0})).matrix();
  });
  const Matrix h = hessian(obj, w).matrix();
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_LE(std::abs(mc.mean(i, j) - h(i, j)), 3 * mc.se(i, j));
  }
}

TEST(LocalCovarianceTest, UnbiasedOverMasks) {
  const Objective obj = small_objective(LossKind::Square, 13);
  const auto mc = monte_carlo(3, 10000, [&](std::uint64_t t) {
    return local_covariance(obj.data(), draw_mask(40, 8.0, SeedSpec{78, t, 0})).matrix();
  });
  const Matrix sigma = obj.data().features().transpose() * obj.data().features() / 40.0;
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_LE(std::abs(mc.mean(i, j) - sigma(i, j)), 3 * mc.se(i, j));
  }
}

}  // namespace
}  // namespace detavg
