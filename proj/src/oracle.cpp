#include "detavg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "detavg/errors.hpp"
#include "detavg/sketch.hpp"

namespace detavg::oracle {

ScalarLaw ScalarLaw::bernoulli(double p, double scale) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("Bernoulli probability outside [0, 1]");
  return ScalarLaw{{0.0, scale}, {1.0 - p, p}};
}

ScalarLaw ScalarLaw::uniform(std::vector<double> support) {
  if (support.empty()) throw ValidationError("empty support");
  const double p = 1.0 / static_cast<double>(support.size());
  std::vector<double> probs(support.size(), p);
  return ScalarLaw{std::move(support), std::move(probs)};
}

double ScalarLaw::mean() const {
  return std::inner_product(values.begin(), values.end(), probs.begin(), 0.0);
}

RandomRankOneSum RandomRankOneSum::scaled_bernoulli(std::vector<Matrix> components,
                                                    const std::vector<double>& gammas, Matrix base) {
  if (gammas.size() != components.size()) throw DimensionMismatch("one gamma per component required");
  RandomRankOneSum model{std::move(components), {}, std::move(base)};
  for (const double g : gammas) {
    if (!(g > 0.0 && g <= 1.0)) throw ValidationError("inclusion probability must lie in (0, 1]");
    model.laws.push_back(ScalarLaw::bernoulli(g, 1.0 / g));
  }
  return model;
}

Matrix RandomRankOneSum::mean() const {
  Matrix m = base;
  for (std::size_t i = 0; i < components.size(); ++i) m += laws[i].mean() * components[i];
  return m;
}

std::size_t RandomRankOneSum::outcome_count() const {
  std::size_t total = 1;
  for (const auto& law : laws) {
    if (law.values.empty() || total > kMaxOutcomes) return kMaxOutcomes + 1;
    total *= law.values.size();
  }
  return total;
}

void check_budget(const RandomRankOneSum& model) {
  if (model.components.size() != model.laws.size()) throw DimensionMismatch("one law per component required");
  if (model.base.rows() != model.base.cols()) throw DimensionMismatch("base matrix must be square");
  for (const auto& z : model.components) {
    if (z.rows() != model.dim() || z.cols() != model.dim()) throw DimensionMismatch("component has wrong size");
  }
  for (const auto& law : model.laws) {
    if (law.values.size() != law.probs.size()) throw DimensionMismatch("law support and probabilities differ");
  }
  if (model.components.size() > kMaxComponents) {
    throw EnumerationBudgetExceeded("enumeration supports at most " + std::to_string(kMaxComponents) +
                                    " components, got " + std::to_string(model.components.size()));
  }
  if (model.outcome_count() > kMaxOutcomes) {
    throw EnumerationBudgetExceeded("model has more than " + std::to_string(kMaxOutcomes) + " joint outcomes");
  }
}

namespace {

// Calls fn(probability, A) for each joint outcome of the coefficients.
template <typename Fn>
void for_each_outcome(const RandomRankOneSum& model, Fn&& fn) {
  check_budget(model);
  const std::size_t n = model.components.size();
  std::vector<std::size_t> digit(n, 0);
  Matrix a(model.dim(), model.dim());
  while (true) {
    double prob = 1.0;
    a = model.base;
    for (std::size_t i = 0; i < n; ++i) {
      prob *= model.laws[i].probs[digit[i]];
      a += model.laws[i].values[digit[i]] * model.components[i];
    }
    if (prob > 0.0) fn(prob, a);
    std::size_t i = 0;
    for (; i < n; ++i) {
      if (++digit[i] < model.laws[i].values.size()) break;
      digit[i] = 0;
    }
    if (i == n) return;
  }
}

// Kahan summation; enumeration sums up to 2^20 terms.
template <typename T>
class CompensatedSum {
 public:
  explicit CompensatedSum(T zero) : sum_(zero), comp_(std::move(zero)) {}
  void add(const T& x) {
    const T y = x - comp_;
    const T t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  const T& value() const { return sum_; }

 private:
  T sum_;
  T comp_;
};

}  // namespace

double expect_det(const RandomRankOneSum& model) {
  CompensatedSum<double> sum(0.0);
  for_each_outcome(model, [&](double prob, const Matrix& a) { sum.add(prob * cofactor_determinant(a)); });
  return sum.value();
}

Matrix expect_adjugate(const RandomRankOneSum& model) {
  CompensatedSum<Matrix> sum(Matrix::Zero(model.dim(), model.dim()));
  for_each_outcome(model, [&](double prob, const Matrix& a) { sum.add(prob * cofactor_adjugate(a)); });
  return sum.value();
}

namespace {

Eigen::PartialPivLU<Matrix> invertible_lu(const Matrix& a) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const double det = lu.determinant();
  if (det == 0.0 || !std::isfinite(det)) throw NumericalError("outcome matrix is singular");
  return lu;
}

}  // namespace

Matrix expect_weighted_inverse(const RandomRankOneSum& model) {
  CompensatedSum<Matrix> numerator(Matrix::Zero(model.dim(), model.dim()));
  CompensatedSum<double> denominator(0.0);
  for_each_outcome(model, [&](double prob, const Matrix& a) {
    const auto lu = invertible_lu(a);
    const double det = lu.determinant();
    numerator.add((prob * det) * lu.inverse());
    denominator.add(prob * det);
  });
  return numerator.value() / denominator.value();
}

Matrix expect_inverse(const RandomRankOneSum& model) {
  CompensatedSum<Matrix> sum(Matrix::Zero(model.dim(), model.dim()));
  for_each_outcome(model, [&](double prob, const Matrix& a) { sum.add(prob * invertible_lu(a).inverse()); });
  return sum.value();
}

NewtonExpectation expect_newton_step(const Objective& obj, const Vector& w, double k) {
  const auto n = static_cast<std::size_t>(obj.n());
  if (n > kMaxComponents) {
    throw EnumerationBudgetExceeded("mask enumeration supports n <= " + std::to_string(kMaxComponents) +
                                    ", got n = " + std::to_string(n));
  }
  if (!(k > 0.0) || k > static_cast<double>(n)) throw InvalidSampleSize("k must satisfy 0 < k <= n");
  const double p = k / static_cast<double>(n);
  const Vector grad = gradient(obj, w);
  const Vector curv = obj.curvatures(w);

  NewtonExpectation out;
  out.exact = solve_psd(hessian(obj, w), grad);
  CompensatedSum<Vector> uniform_sum(Vector::Zero(obj.d()));
  CompensatedSum<Vector> weighted_sum(Vector::Zero(obj.d()));
  CompensatedSum<double> det_sum(0.0);
  for (std::size_t bits = 0; bits < (std::size_t{1} << n); ++bits) {
    std::vector<char> include(n);
    double prob = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      include[i] = static_cast<char>((bits >> i) & 1u);
      prob *= include[i] ? p : 1.0 - p;
    }
    if (prob == 0.0) continue;
    const SymMatrix h = local_hessian_from_curvatures(obj.data(), curv, obj.lambda(), SketchMask(include, k));
    const Vector step = solve_psd(h, grad);
    // cofactor determinant keeps this route independent of the log-det path
    const double det = cofactor_determinant(h.matrix());
    uniform_sum.add(prob * step);
    weighted_sum.add((prob * det) * step);
    det_sum.add(prob * det);
  }
  out.uniform = uniform_sum.value();
  out.weighted = weighted_sum.value() / det_sum.value();
  return out;
}

Vector expect_uniform_newton_bias(const Objective& obj, const Vector& w, double k) {
  const NewtonExpectation e = expect_newton_step(obj, w, k);
  return e.uniform - e.exact;
}

double relative_deviation(double value, double reference) {
  const double scale = std::max(std::abs(reference), std::numeric_limits<double>::min());
  return std::abs(value - reference) / scale;
}

double relative_deviation(const Matrix& value, const Matrix& reference) {
  const double scale = std::max(reference.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  return (value - reference).cwiseAbs().maxCoeff() / scale;
}

RandomRankOneSum random_model(std::uint64_t seed, std::size_t index, std::size_t components, Eigen::Index dim) {
  std::mt19937_64 engine = make_engine(SeedSpec{seed, index, 0});
  std::normal_distribution<double> gauss;
  auto uniform_in = [&](double lo, double hi) { return lo + (hi - lo) * uniform01(engine); };

  RandomRankOneSum model;
  model.base = uniform_in(0.1, 1.0) * Matrix::Identity(dim, dim);
  for (std::size_t i = 0; i < components; ++i) {
    Vector z(dim);
    for (Eigen::Index j = 0; j < dim; ++j) z(j) = gauss(engine);
    model.components.push_back(z * z.transpose());
    const double gamma = uniform_in(0.1, 0.9);
    switch ((index + i) % 4) {
      case 0:
        model.laws.push_back(ScalarLaw::bernoulli(gamma, 1.0 / gamma));
        break;
      case 1:
        model.laws.push_back(ScalarLaw::bernoulli(gamma));
        break;
      case 2:
        model.laws.push_back(ScalarLaw::uniform({0.5, 1.5}));
        break;
      default:
        model.laws.push_back(ScalarLaw{{0.0, uniform_in(0.2, 1.0), uniform_in(1.0, 3.0)},
                                       {0.25, 0.35, 0.4}});
        break;
    }
  }
  return model;
}

std::vector<IdentityCheck> run_identity_suite(const IdentitySuiteOptions& options) {
  if (options.max_components > kMaxComponents) {
    throw EnumerationBudgetExceeded("identity suite supports at most " + std::to_string(kMaxComponents) +
                                    " components per model, requested " +
                                    std::to_string(options.max_components));
  }
  if (options.max_components < 1 || options.max_dim < 1 || options.models < 1) {
    throw ValidationError("identity suite needs at least one model, component and dimension");
  }

  // two-component instance with E[det A] = 0.75 worked out by hand
  IdentityCheck hand{"hand_checked_expected_det", 0.0, options.tolerance, false};
  {
    RandomRankOneSum model;
    model.base = Matrix::Zero(2, 2);
    model.components = {Matrix::Ones(2, 2), Matrix(Vector::Unit(2, 0) * Vector::Unit(2, 0).transpose()),
                        Matrix(Vector::Unit(2, 1) * Vector::Unit(2, 1).transpose())};
    model.laws.assign(3, ScalarLaw::bernoulli(0.5));
    hand.max_deviation = std::abs(expect_det(model) - 0.75);
  }

  IdentityCheck det{"expected_det_equals_det_of_mean", 0.0, options.tolerance, false};
  IdentityCheck adj{"expected_adjugate_equals_adjugate_of_mean", 0.0, options.tolerance, false};
  IdentityCheck inv{"weighted_inverse_equals_inverse_of_mean", 0.0, options.tolerance, false};
  for (std::size_t idx = 0; idx < options.models; ++idx) {
    const std::size_t n = 1 + idx % options.max_components;
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(idx % static_cast<std::size_t>(options.max_dim));
    const RandomRankOneSum model = random_model(options.seed, idx, std::max<std::size_t>(n, 2), d);
    const Matrix mean = model.mean();
    det.max_deviation = std::max(det.max_deviation, relative_deviation(expect_det(model), cofactor_determinant(mean)));
    adj.max_deviation = std::max(adj.max_deviation, relative_deviation(expect_adjugate(model), cofactor_adjugate(mean)));
    inv.max_deviation = std::max(inv.max_deviation, relative_deviation(expect_weighted_inverse(model),
                                                                       Matrix(mean.inverse())));
  }

  std::vector<IdentityCheck> checks{hand, det, adj, inv};
  if (options.include_rank2_counterexample) {
    // a full-rank component breaks E[det A] = det E[A]
    IdentityCheck rank2{"rank2_component_breaks_expected_det", 0.0, 1e-6, true};
    RandomRankOneSum model;
    model.base = 0.5 * Matrix::Identity(2, 2);
    model.components = {Matrix::Identity(2, 2), Matrix(Vector::Unit(2, 0) * Vector::Unit(2, 0).transpose())};
    model.laws = {ScalarLaw::bernoulli(0.5), ScalarLaw::bernoulli(0.3)};
    rank2.max_deviation = relative_deviation(expect_det(model), cofactor_determinant(model.mean()));
    checks.push_back(rank2);
  }
  return checks;
}

}  // namespace detavg::oracle
