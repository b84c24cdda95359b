#include "detavg/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detavg/errors.hpp"

namespace detavg {

std::mt19937_64 make_engine(const SeedSpec& seed) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed.master_seed), hi(seed.master_seed), lo(seed.trial),
                    hi(seed.trial),       lo(seed.machine),     hi(seed.machine)};
  return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64& engine) { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }

SketchMask::SketchMask(std::vector<char> include, double k) : include_(std::move(include)), k_(k) {
  if (!(k_ > 0.0) || k_ > static_cast<double>(include_.size())) {
    throw InvalidSampleSize("expected sample size k must satisfy 0 < k <= n");
  }
}

Eigen::Index SketchMask::count() const {
  return static_cast<Eigen::Index>(std::count(include_.begin(), include_.end(), char{1}));
}

SketchMask draw_mask(Eigen::Index n, double k, const SeedSpec& seed) {
  if (n <= 0 || !(k > 0.0) || k > static_cast<double>(n) || !std::isfinite(k)) {
    throw InvalidSampleSize("expected sample size k=" + std::to_string(k) +
                            " outside (0, n] for n=" + std::to_string(n));
  }
  const double p = k / static_cast<double>(n);
  std::mt19937_64 engine = make_engine(seed);
  std::vector<char> include(static_cast<std::size_t>(n));
  for (char& b : include) b = uniform01(engine) < p ? 1 : 0;
  return SketchMask(std::move(include), k);
}

namespace {

void check_mask(const Dataset& data, const SketchMask& mask) {
  if (mask.n() != data.n()) throw DimensionMismatch("mask length does not match example count");
}

// (1/k) sum over included rows of weight_i x_i x_i^T
Matrix weighted_outer_sum(const Dataset& data, const Vector* weights, const SketchMask& mask) {
  const Eigen::Index d = data.d();
  const Eigen::Index count = mask.count();
  Matrix rows(count, d);
  for (Eigen::Index i = 0, r = 0; i < data.n(); ++i) {
    if (!mask.included(i)) continue;
    rows.row(r) = data.row(i);
    if (weights != nullptr) rows.row(r) *= std::sqrt((*weights)(i));
    ++r;
  }
  Matrix out = Matrix::Zero(d, d);
  out.selfadjointView<Eigen::Lower>().rankUpdate(rows.transpose(), 1.0 / mask.k());
  return out;
}

}  // namespace

SymMatrix local_hessian_from_curvatures(const Dataset& data, const Vector& curvatures, double lambda,
                                        const SketchMask& mask) {
  check_mask(data, mask);
  Matrix h = weighted_outer_sum(data, &curvatures, mask);
  h.diagonal().array() += lambda;
  return SymMatrix(std::move(h));
}

SymMatrix local_hessian(const Objective& obj, const Vector& w, const SketchMask& mask) {
  return local_hessian_from_curvatures(obj.data(), obj.curvatures(w), obj.lambda(), mask);
}

SymMatrix local_covariance(const Dataset& data, const SketchMask& mask) {
  check_mask(data, mask);
  return SymMatrix(weighted_outer_sum(data, nullptr, mask));
}

}  // namespace detavg
