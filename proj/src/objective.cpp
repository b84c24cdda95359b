#include "detavg/objective.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "detavg/errors.hpp"

namespace detavg {

Dataset::Dataset(Matrix features, Vector labels) : x_(std::move(features)), y_(std::move(labels)) {
  if (x_.rows() == 0) throw EmptyDataset();
  if (x_.cols() == 0) throw ValidationError("dataset has no features");
  if (y_.size() != x_.rows()) throw ValidationError("label count does not match example count");
  if (!x_.allFinite() || !y_.allFinite()) throw ValidationError("dataset contains non-finite values");
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Square:
      return "square";
    case LossKind::Logistic:
      return "logistic";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "square") return LossKind::Square;
  if (name == "logistic") return LossKind::Logistic;
  throw ValidationError("unknown loss: " + std::string(name));
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double loss_at(LossKind kind, double z, double y) {
  switch (kind) {
    case LossKind::Square:
      return (z - y) * (z - y);
    case LossKind::Logistic:
      return softplus(z) - y * z;
  }
  return 0.0;
}

double loss_derivative(LossKind kind, double z, double y) {
  switch (kind) {
    case LossKind::Square:
      return 2.0 * (z - y);
    case LossKind::Logistic:
      return sigmoid(z) - y;
  }
  return 0.0;
}

double loss_curvature(LossKind kind, double z, double /*y*/) {
  switch (kind) {
    case LossKind::Square:
      return 2.0;
    case LossKind::Logistic: {
      const double s = sigmoid(z);
      return s * (1.0 - s);
    }
  }
  return 0.0;
}

Objective::Objective(Dataset data, LossKind loss, double lambda)
    : data_(std::move(data)), loss_(loss), lambda_(lambda) {
  if (!(lambda_ > 0.0) || !std::isfinite(lambda_)) {
    throw ValidationError("regularization lambda must be positive and finite");
  }
}

Vector Objective::curvatures(const Vector& w) const {
  const Vector z = data_.features() * w;
  Vector c(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) c(i) = loss_curvature(loss_, z(i), data_.labels()(i));
  return c;
}

namespace {

void check_dim(const Objective& obj, const Vector& w) {
  if (w.size() != obj.d()) throw DimensionMismatch("parameter vector has wrong length");
}

}  // namespace

double loss_value(const Objective& obj, const Vector& w) {
  check_dim(obj, w);
  const Vector z = obj.data().features() * w;
  const Vector& y = obj.data().labels();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) sum += loss_at(obj.loss(), z(i), y(i));
  return sum / static_cast<double>(obj.n()) + 0.5 * obj.lambda() * w.squaredNorm();
}

Vector gradient(const Objective& obj, const Vector& w) {
  check_dim(obj, w);
  const Vector z = obj.data().features() * w;
  const Vector& y = obj.data().labels();
  Vector dl(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) dl(i) = loss_derivative(obj.loss(), z(i), y(i));
  return obj.data().features().transpose() * dl / static_cast<double>(obj.n()) + obj.lambda() * w;
}

SymMatrix hessian(const Objective& obj, const Vector& w) {
  check_dim(obj, w);
  const Vector c = obj.curvatures(w);
  const Matrix& x = obj.data().features();
  Matrix h = x.transpose() * c.asDiagonal() * x / static_cast<double>(obj.n());
  h.diagonal().array() += obj.lambda();
  return SymMatrix(std::move(h));
}

Vector exact_newton_step(const Objective& obj, const Vector& w) {
  return solve_psd(hessian(obj, w), gradient(obj, w));
}

}  // namespace detavg
