#include "detavg/uq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "detavg/errors.hpp"
#include "detavg/parallel.hpp"

namespace detavg {

std::string_view to_string(Statistic statistic) {
  switch (statistic) {
    case Statistic::Trace:
      return "trace";
    case Statistic::Diagonal:
      return "diagonal";
  }
  return "unknown";
}

Statistic parse_statistic(std::string_view name) {
  if (name == "trace") return Statistic::Trace;
  if (name == "diagonal") return Statistic::Diagonal;
  throw ValidationError("unknown statistic: " + std::string(name));
}

double ridge_for(double eta, std::size_t m) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("eta must be positive and finite");
  if (m == 0) throw ValidationError("number of machines must be at least 1");
  return eta / std::sqrt(static_cast<double>(m));
}

Vector apply_statistic(const Matrix& inverse, Statistic statistic) {
  if (statistic == Statistic::Trace) return Vector::Constant(1, inverse.diagonal().sum());
  return inverse.diagonal();
}

LocalEstimate<Vector> local_uq_estimate(const SymMatrix& local_cov, double ridge, Statistic statistic) {
  Matrix shifted = local_cov.matrix();
  shifted.diagonal().array() += ridge;
  const CholFactor chol = cholesky(SymMatrix(std::move(shifted)));
  const Eigen::Index d = local_cov.dim();
  // d solves against the basis vectors
  const Matrix inverse = chol.solve(Matrix(Matrix::Identity(d, d)));
  return {apply_statistic(inverse, statistic), chol.log_det()};
}

LocalEstimate<Vector> local_uq_estimate(const Dataset& data, const SketchMask& mask, double eta, std::size_t m,
                                        Statistic statistic) {
  return local_uq_estimate(local_covariance(data, mask), ridge_for(eta, m), statistic);
}

SymMatrix sample_covariance(const Dataset& data) {
  Matrix sigma = Matrix::Zero(data.d(), data.d());
  sigma.selfadjointView<Eigen::Lower>().rankUpdate(data.features().transpose(),
                                                   1.0 / static_cast<double>(data.n()));
  return SymMatrix(std::move(sigma));
}

Vector precision_statistic(const Dataset& data, Statistic statistic) {
  const SymMatrix sigma = sample_covariance(data);
  try {
    const CholFactor chol = cholesky(sigma);
    // rank-deficient X can still leave a pivot at rounding level
    const double scale = sigma.matrix().diagonal().maxCoeff();
    const double floor = static_cast<double>(data.d()) * std::numeric_limits<double>::epsilon() * scale;
    if (chol.lower().diagonal().array().square().minCoeff() <= floor) throw SingularCovariance();
    return apply_statistic(chol.solve(Matrix(Matrix::Identity(data.d(), data.d()))), statistic);
  } catch (const NotPositiveDefinite&) {
    throw SingularCovariance();
  }
}

double statistic_summary(const Vector& value, Statistic statistic) {
  return statistic == Statistic::Trace ? value(0) : value.norm();
}

namespace {

void check_sample_size(const Dataset& data, double k) {
  if (!(k > 0.0) || k > static_cast<double>(data.n())) {
    throw InvalidSampleSize("expected sample size k must satisfy 0 < k <= n");
  }
}

std::vector<SymMatrix> local_covariances(const Dataset& data, double k, std::size_t m, std::uint64_t seed,
                                         std::uint64_t trial, std::size_t threads) {
  std::vector<SymMatrix> covs(m);
  parallel_for(m, threads, [&](std::size_t t) {
    covs[t] = local_covariance(data, draw_mask(data.n(), k, SeedSpec{seed, trial, t}));
  });
  return covs;
}

Vector combine_with_ridge(std::span<const SymMatrix> covs, double ridge, Statistic statistic,
                          std::size_t threads) {
  std::vector<LocalEstimate<Vector>> estimates(covs.size());
  parallel_for(covs.size(), threads,
               [&](std::size_t t) { estimates[t] = local_uq_estimate(covs[t], ridge, statistic); });
  return combine_determinantal<Vector>(estimates);
}

}  // namespace

UqResult estimate_precision_statistic(const Dataset& data, const UqConfig& cfg, std::uint64_t seed,
                                      std::uint64_t trial, std::size_t threads) {
  check_sample_size(data, cfg.k);
  const double ridge = ridge_for(cfg.eta, cfg.m);
  UqResult result;
  result.exact = precision_statistic(data, cfg.statistic);
  const auto covs = local_covariances(data, cfg.k, cfg.m, seed, trial, threads);
  result.estimate = combine_with_ridge(covs, ridge, cfg.statistic, threads);
  result.abs_err = (result.estimate - result.exact).norm();
  return result;
}

std::vector<UqRow> uq_sweep(const Dataset& data, double k, double eta, std::span<const std::size_t> m_list,
                            std::size_t trials, Statistic statistic, std::uint64_t seed, std::size_t threads) {
  if (m_list.empty()) throw ValidationError("machine count list is empty");
  if (!std::is_sorted(m_list.begin(), m_list.end())) {
    throw ValidationError("machine count list must be ascending");
  }
  check_sample_size(data, k);
  ridge_for(eta, m_list.front());
  const Vector exact = precision_statistic(data, statistic);
  const double exact_summary = statistic_summary(exact, statistic);

  // table[m_index][trial]
  std::vector<std::vector<UqRow>> table(m_list.size(), std::vector<UqRow>(trials));
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const auto covs = local_covariances(data, k, m_list.back(), seed, trial, threads);
    for (std::size_t mi = 0; mi < m_list.size(); ++mi) {
      const std::size_t m = m_list[mi];
      const Vector estimate =
          combine_with_ridge(std::span<const SymMatrix>(covs.data(), m), ridge_for(eta, m), statistic, threads);
      table[mi][trial] = {statistic, m,  k, eta, trial, statistic_summary(estimate, statistic), exact_summary,
                          (estimate - exact).norm()};
    }
  }
  std::vector<UqRow> rows;
  rows.reserve(m_list.size() * trials);
  for (const auto& per_m : table) rows.insert(rows.end(), per_m.begin(), per_m.end());
  return rows;
}

}  // namespace detavg
