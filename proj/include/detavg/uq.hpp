#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "detavg/averaging.hpp"
#include "detavg/objective.hpp"
#include "detavg/sketch.hpp"

namespace detavg {

// Which linear functional of the precision matrix is estimated.
enum class Statistic { Trace, Diagonal };

std::string_view to_string(Statistic statistic);
Statistic parse_statistic(std::string_view name);

struct UqConfig {
  std::size_t m = 1;
  double k = 1.0;
  double eta = 1.0;
  Statistic statistic = Statistic::Trace;
};

// Ridge added to each local covariance when m machines are combined: eta / sqrt(m).
double ridge_for(double eta, std::size_t m);

// F applied to an inverse: a length-1 vector holding the trace, or the diagonal.
Vector apply_statistic(const Matrix& inverse, Statistic statistic);

// value = F((Sigma_t + ridge I)^-1), log_weight = ln det(Sigma_t + ridge I).
LocalEstimate<Vector> local_uq_estimate(const SymMatrix& local_cov, double ridge, Statistic statistic);
LocalEstimate<Vector> local_uq_estimate(const Dataset& data, const SketchMask& mask, double eta, std::size_t m,
                                        Statistic statistic);

// (1/n) X^T X
SymMatrix sample_covariance(const Dataset& data);

// F(Sigma^-1) without ridge. Throws SingularCovariance if Sigma is not
// positive definite.
Vector precision_statistic(const Dataset& data, Statistic statistic);

// Scalar shown in reports: the trace itself, or the Euclidean norm of the
// diagonal vector.
double statistic_summary(const Vector& value, Statistic statistic);

struct UqResult {
  Vector estimate;
  Vector exact;
  double abs_err = 0.0;  // |estimate - exact|, Euclidean for the diagonal
};

UqResult estimate_precision_statistic(const Dataset& data, const UqConfig& cfg, std::uint64_t seed,
                                      std::uint64_t trial = 0, std::size_t threads = 1);

struct UqRow {
  Statistic statistic;
  std::size_t m;
  double k;
  double eta;
  std::size_t trial;
  double estimate;
  double exact;
  double abs_err;

  friend bool operator==(const UqRow&, const UqRow&) = default;
};

// Machine t in a trial keeps its mask across the m sweep; only the ridge
// changes with m. Rows are ordered by (m, trial).
std::vector<UqRow> uq_sweep(const Dataset& data, double k, double eta, std::span<const std::size_t> m_list,
                            std::size_t trials, Statistic statistic, std::uint64_t seed,
                            std::size_t threads = 1);

}  // namespace detavg
