#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detavg/newton.hpp"
#include "detavg/uq.hpp"

namespace detavg {

// CSV emitters. Column order is part of the output contract; numbers use the
// shortest representation that round-trips.
inline constexpr std::string_view kNewtonSweepHeader = "scheme,m,k,trial,err_euclidean,err_hnorm";
inline constexpr std::string_view kUqSweepHeader = "statistic,m,k,eta,trial,estimate,exact,abs_err";
inline constexpr std::string_view kTrajectoryHeader = "iter,dist_to_opt,loss,scheme";

void write_newton_csv(std::span<const SweepRow> rows, std::ostream& out);
void write_uq_csv(std::span<const UqRow> rows, std::ostream& out);
void write_trajectory_csv(const Trajectory& traj, std::string_view scheme, std::ostream& out);

std::string newton_csv(std::span<const SweepRow> rows);
std::string uq_csv(std::span<const UqRow> rows);
std::string trajectory_csv(const Trajectory& traj, std::string_view scheme);

double median(std::vector<double> values);

// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

enum class ErrorMetric { Euclidean, HNorm };

// m -> median error over trials, for one scheme.
std::map<std::size_t, double> median_error_by_m(std::span<const SweepRow> rows, Scheme scheme, ErrorMetric metric);
std::map<std::size_t, double> median_error_by_m(std::span<const UqRow> rows);

}  // namespace detavg
