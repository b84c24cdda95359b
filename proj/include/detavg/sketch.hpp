#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "detavg/linalg.hpp"
#include "detavg/objective.hpp"

namespace detavg {

// Identifies one random stream. The stream is a pure function of the triple,
// so the (trial, machine) grid can be evaluated in any order.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t trial = 0;
  std::uint64_t machine = 0;
};

std::mt19937_64 make_engine(const SeedSpec& seed);

// Uniform double in [0, 1) with 53 random bits.
double uniform01(std::mt19937_64& engine);

// Independent Bernoulli(k/n) inclusion for each of n examples.
class SketchMask {
 public:
  SketchMask(std::vector<char> include, double k);

  Eigen::Index n() const { return static_cast<Eigen::Index>(include_.size()); }
  double k() const { return k_; }
  bool included(Eigen::Index i) const { return include_[static_cast<std::size_t>(i)] != 0; }
  const std::vector<char>& include() const { return include_; }
  Eigen::Index count() const;

  friend bool operator==(const SketchMask&, const SketchMask&) = default;

 private:
  std::vector<char> include_;
  double k_;
};

// Throws InvalidSampleSize unless 0 < k <= n.
SketchMask draw_mask(Eigen::Index n, double k, const SeedSpec& seed);

// (1/k) sum_{i in mask} l''(w.x_i) x_i x_i^T + lambda I
SymMatrix local_hessian(const Objective& obj, const Vector& w, const SketchMask& mask);

// Same as above with the per-example curvatures already evaluated at w.
SymMatrix local_hessian_from_curvatures(const Dataset& data, const Vector& curvatures, double lambda,
                                        const SketchMask& mask);

// (1/k) sum_{i in mask} x_i x_i^T, possibly singular.
SymMatrix local_covariance(const Dataset& data, const SketchMask& mask);

}  // namespace detavg
