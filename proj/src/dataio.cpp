#include "detavg/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "detavg/errors.hpp"
#include "detavg/sketch.hpp"

namespace detavg {

namespace {

double parse_double(std::string_view token, std::size_t line_number, const char* what) {
  // from_chars for double is not available everywhere yet; strtod needs a
  // terminated copy
  const std::string copy(token);
  char* end = nullptr;
  const double value = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size()) {
    throw ParseError(line_number, fmt::format("invalid {} '{}'", what, copy));
  }
  if (!std::isfinite(value)) throw ParseError(line_number, fmt::format("non-finite {} '{}'", what, copy));
  return value;
}

std::size_t parse_index(std::string_view token, std::size_t line_number) {
  std::size_t index = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), index);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    throw ParseError(line_number, fmt::format("invalid feature index '{}'", token));
  }
  if (index == 0) throw ParseError(line_number, "feature indices start at 1");
  return index;
}

}  // namespace

bool parse_libsvm_line(const std::string& raw, std::size_t line_number, SparseRow& row) {
  std::string_view line(raw);
  if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    if (end > pos) tokens.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  if (tokens.empty()) return false;

  row.label = parse_double(tokens[0], line_number, "label");
  row.pairs.clear();
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const auto colon = tokens[t].find(':');
    if (colon == std::string_view::npos) {
      throw ParseError(line_number, fmt::format("expected idx:val, got '{}'", tokens[t]));
    }
    const std::size_t index = parse_index(tokens[t].substr(0, colon), line_number);
    const double value = parse_double(tokens[t].substr(colon + 1), line_number, "feature value");
    if (!row.pairs.empty() && index <= row.pairs.back().first) {
      throw ParseError(line_number, fmt::format("feature index {} does not increase", index));
    }
    row.pairs.emplace_back(index, value);
  }
  return true;
}

Dataset parse_libsvm(std::istream& in) {
  std::vector<SparseRow> rows;
  std::size_t d = 0;
  std::string line;
  std::size_t line_number = 0;
  SparseRow row;
  while (std::getline(in, line)) {
    ++line_number;
    if (!parse_libsvm_line(line, line_number, row)) continue;
    if (!row.pairs.empty()) d = std::max(d, row.pairs.back().first);
    rows.push_back(row);
  }
  if (rows.empty()) throw EmptyDataset();
  if (d == 0) throw ValidationError("dataset has no features");

  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    y(r) = rows[i].label;
    for (const auto& [index, value] : rows[i].pairs) x(r, static_cast<Eigen::Index>(index - 1)) = value;
  }
  return Dataset(std::move(x), std::move(y));
}

void write_libsvm(const Dataset& data, std::ostream& out) {
  const Eigen::Index last = data.d() - 1;
  const bool last_column_empty = (data.features().col(last).array() == 0.0).all();
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    std::string line = fmt::format("{}", data.labels()(i));
    for (Eigen::Index j = 0; j < data.d(); ++j) {
      const double v = data.features()(i, j);
      if (v != 0.0 || (i == 0 && j == last && last_column_empty)) line += fmt::format(" {}:{}", j + 1, v);
    }
    out << line << '\n';
  }
}

Dataset expand_degree2(const Dataset& data) {
  const Matrix& x = data.features();
  const Eigen::Index d = data.d();
  std::vector<Vector> columns;
  columns.reserve(static_cast<std::size_t>(d + d * (d + 1) / 2));
  for (Eigen::Index j = 0; j < d; ++j) columns.emplace_back(x.col(j));
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index l = j; l < d; ++l) columns.emplace_back(x.col(j).cwiseProduct(x.col(l)));
  }

  std::vector<const Vector*> kept;
  for (const Vector& col : columns) {
    const bool constant = (col.array() == col(0)).all();
    if (constant) continue;
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const Vector* k) { return *k == col; });
    if (!duplicate) kept.push_back(&col);
  }
  if (kept.empty()) throw ValidationError("degree-2 expansion left no informative columns");

  Matrix out(data.n(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = *kept[c];
  return Dataset(std::move(out), data.labels());
}

Dataset standardize(const Dataset& data) {
  Matrix x = data.features();
  const auto n = static_cast<double>(data.n());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    x.col(j).array() -= x.col(j).mean();
    const double sd = std::sqrt(x.col(j).squaredNorm() / n);
    if (sd > 0.0) x.col(j) /= sd;
  }
  return Dataset(std::move(x), data.labels());
}

Vector planted_weights(Eigen::Index d) {
  Vector w(d);
  for (Eigen::Index j = 0; j < d; ++j) w(j) = (j % 2 == 0 ? 1.0 : -1.0) * (1.0 - 0.5 * static_cast<double>(j) / static_cast<double>(d));
  return w;
}

namespace {

Matrix gaussian_rows(std::mt19937_64& engine, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> gauss;
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = gauss(engine);
  }
  return x;
}

void check_shape(Eigen::Index n, Eigen::Index d) {
  if (n < 1 || d < 1) throw ValidationError("synthetic data needs n >= 1 and d >= 1");
}

}  // namespace

Dataset synth_regression(Eigen::Index n, Eigen::Index d, double noise_sd, std::uint64_t seed) {
  check_shape(n, d);
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ValidationError("noise level must be >= 0");
  std::mt19937_64 engine = make_engine(SeedSpec{seed, 0, 0});
  Matrix x = gaussian_rows(engine, n, d);
  Vector y = x * planted_weights(d);
  if (noise_sd > 0.0) {
    std::normal_distribution<double> gauss(0.0, noise_sd);
    for (Eigen::Index i = 0; i < n; ++i) y(i) += gauss(engine);
  }
  return Dataset(std::move(x), std::move(y));
}

Dataset synth_classification(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  check_shape(n, d);
  std::mt19937_64 engine = make_engine(SeedSpec{seed, 0, 0});
  Matrix x = gaussian_rows(engine, n, d);
  const Vector z = x * planted_weights(d);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-z(i)));
    y(i) = uniform01(engine) < p ? 1.0 : 0.0;
  }
  return Dataset(std::move(x), std::move(y));
}

}  // namespace detavg
