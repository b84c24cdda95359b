// detavg: distributed Newton and precision-matrix experiments with
// determinant-weighted averaging.
//
// Exit status: 0 success, 1 invalid configuration or input, 2 numerical
// failure.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "detavg/dataio.hpp"
#include "detavg/errors.hpp"
#include "detavg/newton.hpp"
#include "detavg/oracle.hpp"
#include "detavg/report.hpp"
#include "detavg/uq.hpp"

namespace {

using detavg::ValidationError;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

struct RunConfig {
  std::string dataset_path;
  std::string synth;
  bool standardize = false;
  bool degree2 = false;
  std::string loss = "square";
  std::string lambda = "auto";
  double k = 200.0;
  std::string m_list = "8,16,32,64,128,256,512,1024";
  std::size_t trials = 100;
  double eta = 1.0;
  std::string statistic = "trace";
  std::optional<std::uint64_t> seed;
  std::string scheme = "both";
  std::string out;
  std::size_t threads = 1;
  std::size_t iters = 10;
};

struct IdentityFlags {
  std::size_t models = 50;
  std::size_t max_n = 8;
  Eigen::Index max_d = 3;
  std::uint64_t seed = 0;
  bool no_rank2 = false;
};

std::uint64_t resolve_seed(const RunConfig& cfg) {
  if (cfg.seed) return *cfg.seed;
  if (const char* env = std::getenv("DETAVG_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const unsigned long long value = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      return value;
    } catch (const std::exception&) {
      throw ValidationError(std::string("DETAVG_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) parts.push_back(item);
  return parts;
}

std::vector<std::size_t> parse_m_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const std::string& part : split(text, ',')) {
    try {
      std::size_t used = 0;
      const long long value = std::stoll(part, &used);
      if (used != part.size() || value < 1) throw std::invalid_argument(part);
      out.push_back(static_cast<std::size_t>(value));
    } catch (const std::exception&) {
      throw ValidationError("invalid machine count '" + part + "' in --m");
    }
  }
  if (out.empty()) throw ValidationError("--m needs at least one machine count");
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] <= out[i - 1]) throw ValidationError("--m must be strictly ascending");
  }
  return out;
}

detavg::LossKind loss_kind(const RunConfig& cfg) { return detavg::parse_loss_kind(cfg.loss); }

detavg::Dataset load_dataset(const RunConfig& cfg, std::uint64_t seed, detavg::LossKind loss) {
  if (!cfg.dataset_path.empty() && !cfg.synth.empty()) {
    throw ValidationError("--dataset and --synth are mutually exclusive");
  }
  std::optional<detavg::Dataset> data;
  if (!cfg.dataset_path.empty()) {
    std::ifstream in(cfg.dataset_path);
    if (!in) throw ValidationError("cannot open dataset " + cfg.dataset_path);
    data = detavg::parse_libsvm(in);
  } else {
    const std::string spec = cfg.synth.empty() ? "2000,10,0.5" : cfg.synth;
    const auto parts = split(spec, ',');
    if (parts.size() != 3) throw ValidationError("--synth expects n,d,noise");
    long long n = 0, d = 0;
    double noise = 0.0;
    try {
      n = std::stoll(parts[0]);
      d = std::stoll(parts[1]);
      noise = std::stod(parts[2]);
    } catch (const std::exception&) {
      throw ValidationError("--synth expects n,d,noise");
    }
    data = loss == detavg::LossKind::Logistic ? detavg::synth_classification(n, d, seed)
                                              : detavg::synth_regression(n, d, noise, seed);
  }
  if (cfg.degree2) data = detavg::expand_degree2(*data);
  if (cfg.standardize) data = detavg::standardize(*data);
  return std::move(*data);
}

double resolve_lambda(const RunConfig& cfg, const detavg::Dataset& data) {
  if (cfg.lambda == "auto") return 1.0 / static_cast<double>(data.n());
  try {
    std::size_t used = 0;
    const double value = std::stod(cfg.lambda, &used);
    if (used != cfg.lambda.size()) throw std::invalid_argument(cfg.lambda);
    return value;
  } catch (const std::exception&) {
    throw ValidationError("--lambda expects a number or 'auto'");
  }
}

std::vector<detavg::Scheme> resolve_schemes(const std::string& scheme) {
  if (scheme == "both") return {detavg::Scheme::Uniform, detavg::Scheme::Determinantal};
  return {detavg::parse_scheme(scheme)};
}

json config_json(const RunConfig& cfg, const std::string& command, std::uint64_t seed) {
  json j;
  j["command"] = command;
  j["dataset"] = cfg.dataset_path.empty() ? json(nullptr) : json(cfg.dataset_path);
  j["synth"] = cfg.dataset_path.empty() ? json(cfg.synth.empty() ? "2000,10,0.5" : cfg.synth) : json(nullptr);
  j["standardize"] = cfg.standardize;
  j["degree2"] = cfg.degree2;
  j["loss"] = cfg.loss;
  j["lambda"] = cfg.lambda;
  j["k"] = cfg.k;
  j["m"] = cfg.m_list;
  j["trials"] = cfg.trials;
  j["eta"] = cfg.eta;
  j["statistic"] = cfg.statistic;
  j["seed"] = seed;
  j["scheme"] = cfg.scheme;
  j["threads"] = cfg.threads;
  j["iters"] = cfg.iters;
  j["out"] = cfg.out;
  return j;
}

// CSV goes to --out (plus a .json sidecar) or to stdout.
void emit(const RunConfig& cfg, const std::string& csv, const json& meta) {
  if (cfg.out.empty()) {
    std::cout << csv;
    return;
  }
  std::ofstream out(cfg.out, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + cfg.out);
  out << csv;
  std::ofstream side(cfg.out + ".json", std::ios::binary);
  if (!side) throw ValidationError("cannot write " + cfg.out + ".json");
  side << meta.dump(2) << '\n';
}

void check_common(const RunConfig& cfg) {
  if (cfg.threads < 1) throw ValidationError("--threads must be at least 1");
  if (cfg.trials < 1) throw ValidationError("--trials must be at least 1");
}

int cmd_newton_sweep(const RunConfig& cfg) {
  check_common(cfg);
  const std::uint64_t seed = resolve_seed(cfg);
  const auto loss = loss_kind(cfg);
  detavg::Dataset data = load_dataset(cfg, seed, loss);
  const double lambda = resolve_lambda(cfg, data);
  const detavg::Objective obj(std::move(data), loss, lambda);
  const auto m_list = parse_m_list(cfg.m_list);
  const auto schemes = resolve_schemes(cfg.scheme);
  const detavg::Vector w = detavg::Vector::Zero(obj.d());

  const auto rows = detavg::error_sweep(obj, w, cfg.k, m_list, cfg.trials, schemes, seed, cfg.threads);

  const detavg::SymMatrix h = detavg::hessian(obj, w);
  const detavg::Vector p = detavg::solve_psd(h, detavg::gradient(obj, w));
  json meta;
  meta["config"] = config_json(cfg, "newton-sweep", seed);
  meta["n"] = obj.n();
  meta["d"] = obj.d();
  meta["lambda_value"] = lambda;
  meta["coherence"] = detavg::coherence(obj, w);
  meta["exact_step_norm"] = p.norm();
  meta["exact_step_hnorm"] = detavg::mahalanobis_norm(p, h);
  meta["rows"] = rows.size();
  emit(cfg, detavg::newton_csv(rows), meta);
  return kExitOk;
}

int cmd_uq_sweep(const RunConfig& cfg) {
  check_common(cfg);
  const std::uint64_t seed = resolve_seed(cfg);
  const detavg::Dataset data = load_dataset(cfg, seed, detavg::LossKind::Square);
  const auto m_list = parse_m_list(cfg.m_list);
  const auto statistic = detavg::parse_statistic(cfg.statistic);

  const auto rows = detavg::uq_sweep(data, cfg.k, cfg.eta, m_list, cfg.trials, statistic, seed, cfg.threads);

  json meta;
  meta["config"] = config_json(cfg, "uq-sweep", seed);
  meta["n"] = data.n();
  meta["d"] = data.d();
  json ridges = json::array();
  for (const std::size_t m : m_list) ridges.push_back(detavg::ridge_for(cfg.eta, m));
  meta["ridge_by_m"] = ridges;
  const detavg::Vector exact = detavg::precision_statistic(data, statistic);
  meta["exact"] = std::vector<double>(exact.data(), exact.data() + exact.size());
  meta["rows"] = rows.size();
  emit(cfg, detavg::uq_csv(rows), meta);
  return kExitOk;
}

int cmd_newton_converge(const RunConfig& cfg) {
  check_common(cfg);
  if (cfg.iters < 1) throw ValidationError("--iters must be at least 1");
  const std::uint64_t seed = resolve_seed(cfg);
  const auto loss = loss_kind(cfg);
  detavg::Dataset data = load_dataset(cfg, seed, loss);
  const double lambda = resolve_lambda(cfg, data);
  const detavg::Objective obj(std::move(data), loss, lambda);
  const auto m_list = parse_m_list(cfg.m_list);
  if (m_list.size() != 1) throw ValidationError("newton-converge takes a single --m value");
  const detavg::Vector w0 = detavg::Vector::Zero(obj.d());

  std::vector<std::string> names;
  if (cfg.scheme == "exact") {
    names = {"exact"};
  } else {
    for (const auto s : resolve_schemes(cfg.scheme)) names.emplace_back(detavg::to_string(s));
  }

  std::string csv(detavg::kTrajectoryHeader);
  csv += '\n';
  json finals = json::object();
  detavg::Vector optimum;
  for (const std::string& name : names) {
    const detavg::Trajectory traj =
        name == "exact" ? detavg::run_exact_newton(obj, w0, cfg.iters)
                        : detavg::run_distributed_newton(
                              obj, w0, cfg.iters, {m_list.front(), cfg.k, detavg::parse_scheme(name)}, seed,
                              cfg.threads);
    const std::string body = detavg::trajectory_csv(traj, name);
    csv += body.substr(body.find('\n') + 1);
    finals[name] = traj.dist_to_opt.back();
    optimum = traj.optimum;
  }

  json meta;
  meta["config"] = config_json(cfg, "newton-converge", seed);
  meta["n"] = obj.n();
  meta["d"] = obj.d();
  meta["lambda_value"] = lambda;
  meta["optimum_loss"] = detavg::loss_value(obj, optimum);
  meta["final_dist_to_opt"] = finals;
  emit(cfg, csv, meta);
  return kExitOk;
}

int cmd_verify_identities(const IdentityFlags& flags) {
  detavg::oracle::IdentitySuiteOptions options;
  options.models = flags.models;
  options.max_components = flags.max_n;
  options.max_dim = flags.max_d;
  options.seed = flags.seed;
  options.include_rank2_counterexample = !flags.no_rank2;
  const auto checks = detavg::oracle::run_identity_suite(options);
  bool ok = true;
  for (const auto& c : checks) {
    const char* status = c.passed() ? (c.expect_failure ? "EXPECTED-FAIL" : "PASS") : "FAIL";
    std::cout << c.name << " max_deviation=" << c.max_deviation << (c.expect_failure ? " (>= " : " (<= ")
              << c.tolerance << ") " << status << '\n';
    ok = ok && c.passed();
  }
  return ok ? kExitOk : kExitNumerical;
}

void add_data_options(CLI::App& sub, RunConfig& cfg) {
  sub.add_option("--dataset", cfg.dataset_path, "libsvm-format data file");
  sub.add_option("--synth", cfg.synth, "synthetic Gaussian data as n,d,noise (default 2000,10,0.5)");
  sub.add_flag("--standardize", cfg.standardize, "standardize columns after loading");
  sub.add_flag("--degree2", cfg.degree2, "expand features to degree-2 monomials");
  sub.add_option("--k", cfg.k, "expected local sample size")->capture_default_str();
  sub.add_option("--m", cfg.m_list, "comma-separated ascending machine counts")->capture_default_str();
  sub.add_option("--seed", cfg.seed, "master seed (falls back to DETAVG_SEED, then 0)");
  sub.add_option("--out", cfg.out, "output CSV path; a .json sidecar is written next to it");
  sub.add_option("--threads", cfg.threads, "worker threads; results do not depend on it")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Determinantal averaging experiments"};
  app.require_subcommand(1);

  RunConfig cfg;
  IdentityFlags id_flags;

  auto* newton = app.add_subcommand("newton-sweep", "Newton-step error versus number of machines");
  add_data_options(*newton, cfg);
  newton->add_option("--loss", cfg.loss, "square|logistic")->capture_default_str();
  newton->add_option("--lambda", cfg.lambda, "ridge parameter, or auto for 1/n")->capture_default_str();
  newton->add_option("--trials", cfg.trials, "repetitions per machine count")->capture_default_str();
  newton->add_option("--scheme", cfg.scheme, "uniform|determinantal|both")->capture_default_str();

  auto* uq = app.add_subcommand("uq-sweep", "precision-matrix trace/diagonal error versus machines");
  add_data_options(*uq, cfg);
  uq->add_option("--trials", cfg.trials, "repetitions per machine count")->capture_default_str();
  uq->add_option("--eta", cfg.eta, "ridge scale; machines use eta/sqrt(m)")->capture_default_str();
  uq->add_option("--statistic", cfg.statistic, "trace|diagonal")->capture_default_str();

  auto* converge = app.add_subcommand("newton-converge", "distributed Newton trajectory");
  add_data_options(*converge, cfg);
  converge->add_option("--loss", cfg.loss, "square|logistic")->capture_default_str();
  converge->add_option("--lambda", cfg.lambda, "ridge parameter, or auto for 1/n")->capture_default_str();
  converge->add_option("--scheme", cfg.scheme, "uniform|determinantal|both|exact")->capture_default_str();
  converge->add_option("--iters", cfg.iters, "Newton iterations")->capture_default_str();

  auto* verify = app.add_subcommand("verify-identities", "check determinant/adjugate expectation identities");
  verify->add_option("--models", id_flags.models, "random models to enumerate")->capture_default_str();
  verify->add_option("--max-n", id_flags.max_n, "largest number of random components")->capture_default_str();
  verify->add_option("--max-d", id_flags.max_d, "largest matrix dimension")->capture_default_str();
  verify->add_option("--seed", id_flags.seed, "seed for the random models")->capture_default_str();
  verify->add_flag("--no-rank2", id_flags.no_rank2, "skip the rank-2 counterexample");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*newton) return cmd_newton_sweep(cfg);
    if (*uq) return cmd_uq_sweep(cfg);
    if (*converge) return cmd_newton_converge(cfg);
    if (*verify) return cmd_verify_identities(id_flags);
  } catch (const detavg::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const detavg::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitValidation;
}
