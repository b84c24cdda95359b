#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <type_traits>

#include "detavg/errors.hpp"
#include "detavg/linalg.hpp"

namespace detavg {

// One machine's contribution: the quantity F(H_t^-1) and ln det(H_t).
// Value is double, Vector or Matrix.
template <typename Value>
struct LocalEstimate {
  Value value;
  double log_weight = 0.0;
};

namespace internal {

template <typename Value>
bool same_shape(const Value& a, const Value& b) {
  if constexpr (std::is_arithmetic_v<Value>) {
    return true;
  } else {
    return a.rows() == b.rows() && a.cols() == b.cols();
  }
}

}  // namespace internal

// Running determinant-weighted average kept in a shifted log domain:
//   S = sum_t exp(l_t - max_l),  V = sum_t exp(l_t - max_l) * value_t
// so V / S never overflows even when every l_t is around +-4e4.
template <typename Value>
class WeightedAccumulator {
 public:
  void push(const LocalEstimate<Value>& e) {
    if (!std::isfinite(e.log_weight)) throw ValidationError("log weight must be finite");
    if (count_ == 0) {
      max_log_weight_ = e.log_weight;
      weight_sum_ = 1.0;
      value_sum_ = e.value;
      count_ = 1;
      return;
    }
    if (!internal::same_shape(value_sum_, e.value)) {
      throw DimensionMismatch("estimate shape differs from accumulator");
    }
    if (e.log_weight > max_log_weight_) {
      const double rescale = std::exp(max_log_weight_ - e.log_weight);
      weight_sum_ = weight_sum_ * rescale + 1.0;
      value_sum_ = value_sum_ * rescale + e.value;
      max_log_weight_ = e.log_weight;
    } else {
      const double w = std::exp(e.log_weight - max_log_weight_);
      weight_sum_ += w;
      value_sum_ = value_sum_ + w * e.value;
    }
    ++count_;
  }

  // Folds another accumulator into this one; associative up to rounding.
  void merge(const WeightedAccumulator& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    if (!internal::same_shape(value_sum_, other.value_sum_)) {
      throw DimensionMismatch("accumulator shapes differ");
    }
    const double top = std::max(max_log_weight_, other.max_log_weight_);
    const double mine = std::exp(max_log_weight_ - top);
    const double theirs = std::exp(other.max_log_weight_ - top);
    weight_sum_ = weight_sum_ * mine + other.weight_sum_ * theirs;
    value_sum_ = value_sum_ * mine + other.value_sum_ * theirs;
    max_log_weight_ = top;
    count_ += other.count_;
  }

  Value finalize() const {
    if (count_ == 0) throw EmptyBatch();
    return value_sum_ / weight_sum_;
  }

  std::size_t count() const { return count_; }
  double max_log_weight() const { return max_log_weight_; }
  double shifted_weight_sum() const { return weight_sum_; }

 private:
  double max_log_weight_ = -std::numeric_limits<double>::infinity();
  double weight_sum_ = 0.0;
  Value value_sum_{};
  std::size_t count_ = 0;
};

// sum_t det(H_t) F_t / sum_t det(H_t), with det(H_t) = exp(log_weight).
template <typename Value>
Value combine_determinantal(std::span<const LocalEstimate<Value>> estimates) {
  if (estimates.empty()) throw EmptyBatch();
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& e : estimates) {
    if (!std::isfinite(e.log_weight)) throw ValidationError("log weight must be finite");
    if (!internal::same_shape(e.value, estimates.front().value)) {
      throw DimensionMismatch("estimates have inconsistent shapes");
    }
    top = std::max(top, e.log_weight);
  }
  double weight_sum = 0.0;
  Value value_sum = estimates.front().value * 0.0;
  for (const auto& e : estimates) {
    const double w = std::exp(e.log_weight - top);
    weight_sum += w;
    value_sum = value_sum + w * e.value;
  }
  return value_sum / weight_sum;
}

// Plain arithmetic mean of the values; weights are ignored.
template <typename Value>
Value combine_uniform(std::span<const LocalEstimate<Value>> estimates) {
  if (estimates.empty()) throw EmptyBatch();
  Value sum = estimates.front().value * 0.0;
  for (const auto& e : estimates) {
    if (!internal::same_shape(e.value, estimates.front().value)) {
      throw DimensionMismatch("estimates have inconsistent shapes");
    }
    sum = sum + e.value;
  }
  return sum / static_cast<double>(estimates.size());
}

}  // namespace detavg
