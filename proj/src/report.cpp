#include "detavg/report.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "detavg/errors.hpp"

namespace detavg {

void write_newton_csv(std::span<const SweepRow> rows, std::ostream& out) {
  out << kNewtonSweepHeader << '\n';
  for (const SweepRow& r : rows) {
    out << fmt::format("{},{},{},{},{},{}\n", to_string(r.scheme), r.m, r.k, r.trial, r.err_euclidean,
                       r.err_hnorm);
  }
}

void write_uq_csv(std::span<const UqRow> rows, std::ostream& out) {
  out << kUqSweepHeader << '\n';
  for (const UqRow& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{}\n", to_string(r.statistic), r.m, r.k, r.eta, r.trial, r.estimate,
                       r.exact, r.abs_err);
  }
}

void write_trajectory_csv(const Trajectory& traj, std::string_view scheme, std::ostream& out) {
  out << kTrajectoryHeader << '\n';
  for (std::size_t t = 0; t < traj.dist_to_opt.size(); ++t) {
    out << fmt::format("{},{},{},{}\n", t, traj.dist_to_opt[t], traj.loss[t], scheme);
  }
}

std::string newton_csv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  write_newton_csv(rows, out);
  return out.str();
}

std::string uq_csv(std::span<const UqRow> rows) {
  std::ostringstream out;
  write_uq_csv(rows, out);
  return out.str();
}

std::string trajectory_csv(const Trajectory& traj, std::string_view scheme) {
  std::ostringstream out;
  write_trajectory_csv(traj, scheme, out);
  return out.str();
}

double median(std::vector<double> values) {
  if (values.empty()) throw EmptyBatch();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope fit needs two or more paired points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

std::map<std::size_t, double> median_error_by_m(std::span<const SweepRow> rows, Scheme scheme, ErrorMetric metric) {
  std::map<std::size_t, std::vector<double>> groups;
  for (const SweepRow& r : rows) {
    if (r.scheme != scheme) continue;
    groups[r.m].push_back(metric == ErrorMetric::HNorm ? r.err_hnorm : r.err_euclidean);
  }
  std::map<std::size_t, double> out;
  for (auto& [m, errs] : groups) out[m] = median(std::move(errs));
  return out;
}

std::map<std::size_t, double> median_error_by_m(std::span<const UqRow> rows) {
  std::map<std::size_t, std::vector<double>> groups;
  for (const UqRow& r : rows) groups[r.m].push_back(r.abs_err);
  std::map<std::size_t, double> out;
  for (auto& [m, errs] : groups) out[m] = median(std::move(errs));
  return out;
}

}  // namespace detavg
