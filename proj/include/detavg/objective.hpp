#pragma once

#include <string_view>

#include "detavg/linalg.hpp"

namespace detavg {

// n examples with d features each, plus one label per example.
class Dataset {
 public:
  // Throws EmptyDataset for n == 0 and ValidationError for d == 0, for a
  // label count that differs from n, or for non-finite entries.
  Dataset(Matrix features, Vector labels);

  Eigen::Index n() const { return x_.rows(); }
  Eigen::Index d() const { return x_.cols(); }
  const Matrix& features() const { return x_; }
  const Vector& labels() const { return y_; }
  auto row(Eigen::Index i) const { return x_.row(i); }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.x_.rows() == b.x_.rows() && a.x_.cols() == b.x_.cols() && a.x_ == b.x_ && a.y_ == b.y_;
  }

 private:
  Matrix x_;
  Vector y_;
};

enum class LossKind { Square, Logistic };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

// Per-example loss l(z; y) and its first two derivatives in z.
//   Square:   (z - y)^2
//   Logistic: log(1 + e^z) - y z, labels in {0, 1}
double loss_at(LossKind kind, double z, double y);
double loss_derivative(LossKind kind, double z, double y);
double loss_curvature(LossKind kind, double z, double y);

// L(w) = (1/n) sum_i l(w.x_i; y_i) + (lambda/2) |w|^2
class Objective {
 public:
  Objective(Dataset data, LossKind loss, double lambda);

  const Dataset& data() const { return data_; }
  LossKind loss() const { return loss_; }
  double lambda() const { return lambda_; }
  Eigen::Index n() const { return data_.n(); }
  Eigen::Index d() const { return data_.d(); }

  // l''(w.x_i; y_i) for every example.
  Vector curvatures(const Vector& w) const;

 private:
  Dataset data_;
  LossKind loss_;
  double lambda_;
};

double loss_value(const Objective& obj, const Vector& w);
Vector gradient(const Objective& obj, const Vector& w);
SymMatrix hessian(const Objective& obj, const Vector& w);

// p solving hessian(w) p = gradient(w).
Vector exact_newton_step(const Objective& obj, const Vector& w);

}  // namespace detavg
