#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "detavg/averaging.hpp"
#include "detavg/linalg.hpp"
#include "detavg/objective.hpp"
#include "detavg/sketch.hpp"

namespace detavg {

enum class Scheme { Uniform, Determinantal };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);

struct MachineConfig {
  std::size_t m = 1;  // number of machines
  double k = 1.0;     // expected local sample size
  Scheme scheme = Scheme::Determinantal;
};

struct StepReport {
  Vector merged;
  Vector exact;
  double err_euclidean = 0.0;
  double err_hnorm = 0.0;  // |merged - exact| in the Hessian norm
  std::vector<double> log_weights;
};

struct SweepRow {
  Scheme scheme;
  std::size_t m;
  double k;
  std::size_t trial;
  double err_euclidean;
  double err_hnorm;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct Trajectory {
  std::vector<Vector> iterates;     // w_0 ... w_T
  std::vector<double> dist_to_opt;  // |w_t - w*|
  std::vector<double> loss;         // L(w_t)
  Vector optimum;                   // w*
};

// Newton step from the local Hessian and the exact global gradient, weighted
// by ln det of the local Hessian.
LocalEstimate<Vector> local_newton_estimate(const Objective& obj, const Vector& w, const SketchMask& mask);

// Same, with l'' at w and the global gradient precomputed (they are shared by
// every machine at a given iterate).
LocalEstimate<Vector> local_newton_estimate(const Objective& obj, const Vector& curvatures,
                                            const Vector& grad, const SketchMask& mask);

// Local estimates for machines [0, m) of one trial. Machine t draws its mask
// from SeedSpec{seed, trial, t}.
std::vector<LocalEstimate<Vector>> local_newton_estimates(const Objective& obj, const Vector& w, double k,
                                                          std::size_t m, std::uint64_t seed,
                                                          std::uint64_t trial, std::size_t threads = 1);

Vector merge_steps(std::span<const LocalEstimate<Vector>> estimates, Scheme scheme);

StepReport merged_step(const Objective& obj, const Vector& w, const MachineConfig& cfg, std::uint64_t seed,
                       std::uint64_t trial = 0, std::size_t threads = 1);

// For every trial, machine t uses the same mask for every m in m_list, so the
// estimate at m is a prefix of the estimate at the next m. Rows are ordered
// by (scheme, m, trial).
std::vector<SweepRow> error_sweep(const Objective& obj, const Vector& w, double k,
                                  std::span<const std::size_t> m_list, std::size_t trials,
                                  std::span<const Scheme> schemes, std::uint64_t seed, std::size_t threads = 1);

std::vector<SweepRow> error_sweep(const Objective& obj, const Vector& w, double k,
                                  std::span<const std::size_t> m_list, std::size_t trials, Scheme scheme,
                                  std::uint64_t seed, std::size_t threads = 1);

// Exact Newton iterations from w = 0 until |grad| <= grad_tol, or until the
// gradient norm stops improving at floating-point resolution.
Vector find_minimizer(const Objective& obj, double grad_tol = 1e-12, std::size_t max_iters = 100);

// w_{t+1} = w_t - merged step, with fresh masks (trial index t) each iteration.
Trajectory run_distributed_newton(const Objective& obj, const Vector& w0, std::size_t iters,
                                  const MachineConfig& cfg, std::uint64_t seed, std::size_t threads = 1);

// Same recursion with the exact Newton step.
Trajectory run_exact_newton(const Objective& obj, const Vector& w0, std::size_t iters);

// mu = (1/d) max_i l''(w.x_i) |x_i|^2 in the inverse-Hessian norm.
double coherence(const Objective& obj, const Vector& w);

}  // namespace detavg
