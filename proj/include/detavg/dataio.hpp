#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "detavg/objective.hpp"

namespace detavg {

// One libsvm line: a label followed by 1-based (index, value) pairs with
// strictly increasing indices.
struct SparseRow {
  double label = 0.0;
  std::vector<std::pair<std::size_t, double>> pairs;
};

// Parses "label idx:val idx:val ..." lines into a dense dataset with
// d = largest index seen. Text after '#' is ignored, blank lines are skipped,
// LF and CRLF endings are accepted. Throws ParseError (with line number) or
// EmptyDataset.
Dataset parse_libsvm(std::istream& in);

// Parses one line; returns false for blank/comment-only lines.
bool parse_libsvm_line(const std::string& line, std::size_t line_number, SparseRow& row);

// Writes nonzero entries with round-trip precision. If the last column is
// entirely zero, an explicit zero entry is written so d survives a reparse.
void write_libsvm(const Dataset& data, std::ostream& out);

// Appends all degree-2 monomials x_j x_l (j <= l) after the original
// columns, then drops constant columns and exact duplicates of an earlier
// column. Column order is otherwise preserved.
Dataset expand_degree2(const Dataset& data);

// Centers each column and scales it to unit (population) variance. Columns
// with zero variance are only centered.
Dataset standardize(const Dataset& data);

// Coefficients of the planted linear model used by the synthetic generators.
Vector planted_weights(Eigen::Index d);

// Standard Gaussian rows, y = X w_planted + noise_sd * N(0, 1).
Dataset synth_regression(Eigen::Index n, Eigen::Index d, double noise_sd, std::uint64_t seed);

// Standard Gaussian rows, y ~ Bernoulli(sigmoid(x . w_planted)) in {0, 1}.
Dataset synth_classification(Eigen::Index n, Eigen::Index d, std::uint64_t seed);

}  // namespace detavg
