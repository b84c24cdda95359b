#include "detavg/newton.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detavg/errors.hpp"
#include "detavg/parallel.hpp"

namespace detavg {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Uniform:
      return "uniform";
    case Scheme::Determinantal:
      return "determinantal";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "uniform") return Scheme::Uniform;
  if (name == "determinantal") return Scheme::Determinantal;
  throw ValidationError("unknown averaging scheme: " + std::string(name));
}

LocalEstimate<Vector> local_newton_estimate(const Objective& obj, const Vector& curvatures,
                                            const Vector& grad, const SketchMask& mask) {
  const SymMatrix h = local_hessian_from_curvatures(obj.data(), curvatures, obj.lambda(), mask);
  const CholFactor chol = cholesky(h);
  return {chol.solve(grad), chol.log_det()};
}

LocalEstimate<Vector> local_newton_estimate(const Objective& obj, const Vector& w, const SketchMask& mask) {
  return local_newton_estimate(obj, obj.curvatures(w), gradient(obj, w), mask);
}

namespace {

void check_machine_config(const Objective& obj, std::size_t m, double k) {
  if (m == 0) throw ValidationError("number of machines must be at least 1");
  if (!(k > 0.0) || k > static_cast<double>(obj.n())) {
    throw InvalidSampleSize("expected sample size k must satisfy 0 < k <= n");
  }
}

// Estimates for every (trial, machine) pair, trial-major.
std::vector<LocalEstimate<Vector>> estimate_grid(const Objective& obj, const Vector& curvatures,
                                                 const Vector& grad, double k, std::size_t m,
                                                 std::uint64_t seed, std::uint64_t first_trial,
                                                 std::size_t trials, std::size_t threads) {
  std::vector<LocalEstimate<Vector>> out(trials * m);
  parallel_for(out.size(), threads, [&](std::size_t idx) {
    const SeedSpec spec{seed, first_trial + idx / m, idx % m};
    out[idx] = local_newton_estimate(obj, curvatures, grad, draw_mask(obj.n(), k, spec));
  });
  return out;
}

}  // namespace

std::vector<LocalEstimate<Vector>> local_newton_estimates(const Objective& obj, const Vector& w, double k,
                                                          std::size_t m, std::uint64_t seed,
                                                          std::uint64_t trial, std::size_t threads) {
  check_machine_config(obj, m, k);
  return estimate_grid(obj, obj.curvatures(w), gradient(obj, w), k, m, seed, trial, 1, threads);
}

Vector merge_steps(std::span<const LocalEstimate<Vector>> estimates, Scheme scheme) {
  return scheme == Scheme::Determinantal ? combine_determinantal(estimates) : combine_uniform(estimates);
}

StepReport merged_step(const Objective& obj, const Vector& w, const MachineConfig& cfg, std::uint64_t seed,
                       std::uint64_t trial, std::size_t threads) {
  const auto estimates = local_newton_estimates(obj, w, cfg.k, cfg.m, seed, trial, threads);
  const SymMatrix h = hessian(obj, w);
  StepReport report;
  report.exact = solve_psd(h, gradient(obj, w));
  report.merged = merge_steps(estimates, cfg.scheme);
  const Vector diff = report.merged - report.exact;
  report.err_euclidean = diff.norm();
  report.err_hnorm = mahalanobis_norm(diff, h);
  report.log_weights.reserve(estimates.size());
  for (const auto& e : estimates) report.log_weights.push_back(e.log_weight);
  return report;
}

std::vector<SweepRow> error_sweep(const Objective& obj, const Vector& w, double k,
                                  std::span<const std::size_t> m_list, std::size_t trials,
                                  std::span<const Scheme> schemes, std::uint64_t seed, std::size_t threads) {
  if (m_list.empty()) throw ValidationError("machine count list is empty");
  if (!std::is_sorted(m_list.begin(), m_list.end())) {
    throw ValidationError("machine count list must be ascending");
  }
  const std::size_t max_m = m_list.back();
  check_machine_config(obj, m_list.front(), k);

  const SymMatrix h = hessian(obj, w);
  const Vector grad = gradient(obj, w);
  const Vector exact = solve_psd(h, grad);
  const auto grid = estimate_grid(obj, obj.curvatures(w), grad, k, max_m, seed, 0, trials, threads);

  std::vector<SweepRow> rows;
  rows.reserve(schemes.size() * m_list.size() * trials);
  for (const Scheme scheme : schemes) {
    for (const std::size_t m : m_list) {
      for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::span<const LocalEstimate<Vector>> batch(grid.data() + trial * max_m, m);
        const Vector diff = merge_steps(batch, scheme) - exact;
        rows.push_back({scheme, m, k, trial, diff.norm(), mahalanobis_norm(diff, h)});
      }
    }
  }
  return rows;
}

std::vector<SweepRow> error_sweep(const Objective& obj, const Vector& w, double k,
                                  std::span<const std::size_t> m_list, std::size_t trials, Scheme scheme,
                                  std::uint64_t seed, std::size_t threads) {
  const Scheme one[] = {scheme};
  return error_sweep(obj, w, k, m_list, trials, one, seed, threads);
}

Vector find_minimizer(const Objective& obj, double grad_tol, std::size_t max_iters) {
  Vector w = Vector::Zero(obj.d());
  Vector g = gradient(obj, w);
  double best = g.norm();
  std::size_t stalled = 0;
  for (std::size_t it = 0; it < max_iters && best > grad_tol && stalled < 3; ++it) {
    const Vector p = solve_psd(hessian(obj, w), g);
    // halve the step while the loss goes up; only matters far from w*
    double step = 1.0;
    const double current = loss_value(obj, w);
    Vector next = w - p;
    while (loss_value(obj, next) > current && step > 1e-8) {
      step *= 0.5;
      next = w - step * p;
    }
    const Vector g_next = gradient(obj, next);
    const double norm = g_next.norm();
    if (norm < best) {
      best = norm;
      stalled = 0;
    } else {
      ++stalled;
    }
    w = next;
    g = g_next;
  }
  return w;
}

namespace {

Trajectory start_trajectory(const Objective& obj, const Vector& w0, std::size_t iters) {
  if (iters == 0) throw ValidationError("iteration count must be at least 1");
  if (w0.size() != obj.d()) throw DimensionMismatch("starting point has wrong length");
  Trajectory traj;
  traj.optimum = find_minimizer(obj);
  traj.iterates.reserve(iters + 1);
  traj.iterates.push_back(w0);
  return traj;
}

void record(const Objective& obj, Trajectory& traj) {
  traj.dist_to_opt.clear();
  traj.loss.clear();
  for (const Vector& w : traj.iterates) {
    traj.dist_to_opt.push_back((w - traj.optimum).norm());
    traj.loss.push_back(loss_value(obj, w));
  }
}

}  // namespace

Trajectory run_distributed_newton(const Objective& obj, const Vector& w0, std::size_t iters,
                                  const MachineConfig& cfg, std::uint64_t seed, std::size_t threads) {
  check_machine_config(obj, cfg.m, cfg.k);
  Trajectory traj = start_trajectory(obj, w0, iters);
  for (std::size_t t = 0; t < iters; ++t) {
    const Vector& w = traj.iterates.back();
    const auto estimates = local_newton_estimates(obj, w, cfg.k, cfg.m, seed, t, threads);
    traj.iterates.push_back(w - merge_steps(estimates, cfg.scheme));
  }
  record(obj, traj);
  return traj;
}

Trajectory run_exact_newton(const Objective& obj, const Vector& w0, std::size_t iters) {
  Trajectory traj = start_trajectory(obj, w0, iters);
  for (std::size_t t = 0; t < iters; ++t) {
    const Vector& w = traj.iterates.back();
    traj.iterates.push_back(w - exact_newton_step(obj, w));
  }
  record(obj, traj);
  return traj;
}

double coherence(const Objective& obj, const Vector& w) {
  const CholFactor chol = cholesky(hessian(obj, w));
  const Vector c = obj.curvatures(w);
  const Matrix whitened = chol.lower().triangularView<Eigen::Lower>().solve(obj.data().features().transpose());
  double top = 0.0;
  for (Eigen::Index i = 0; i < obj.n(); ++i) top = std::max(top, c(i) * whitened.col(i).squaredNorm());
  return top / static_cast<double>(obj.d());
}

}  // namespace detavg
