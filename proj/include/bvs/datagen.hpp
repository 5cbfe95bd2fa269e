#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "bvs/dataset.hpp"
#include "bvs/rng.hpp"

namespace bvs {

//! Simulated-data recipe: AR(1)-correlated Gaussian design, ten fixed signal
//! coefficients scaled by the signal-to-noise ratio.
struct SimSpec {
  int n = 500;
  int p = 500;
  double snr = 2.0;
  double sigma2 = 1.0;
  double rho = 0.6;
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 2) throw std::invalid_argument("sim: n must be >= 2");
    if (p < 10) throw std::invalid_argument("sim: p must be >= 10 (ten signal coefficients)");
    if (!(snr >= 0.0)) throw std::invalid_argument("sim: snr must be non-negative");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sim: sigma2 must be positive");
    if (!(rho > -1.0 && rho < 1.0)) throw std::invalid_argument("sim: rho must lie in (-1,1)");
  }
};

//! Draws X with rows from N(0, Sigma), Sigma_ij = rho^|i-j|, via the exact
//! sequential AR(1) construction, sets beta* = snr * beta0 * sqrt(sigma2
//! log(p)/n) on the ten leading coefficients, and returns the centered data
//! together with beta*.
inline std::pair<Dataset, Eigen::VectorXd> generate_yang(const SimSpec& spec) {
  spec.validate();
  static const double beta0[10] = {2, -3, 2, 2, -3, 3, -2, 3, -2, 3};

  Rng rng(spec.seed);
  Eigen::MatrixXd x(spec.n, spec.p);
  const double carry = std::sqrt(1.0 - spec.rho * spec.rho);
  for (int i = 0; i < spec.n; ++i) {
    x(i, 0) = rng.normal();
    for (int j = 1; j < spec.p; ++j) x(i, j) = spec.rho * x(i, j - 1) + carry * rng.normal();
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(spec.p);
  const double scale = spec.snr * std::sqrt(spec.sigma2 * std::log(static_cast<double>(spec.p)) /
                                            static_cast<double>(spec.n));
  for (int j = 0; j < 10; ++j) beta[j] = beta0[j] * scale;

  Eigen::VectorXd y = x * beta;
  const double sd = std::sqrt(spec.sigma2);
  for (int i = 0; i < spec.n; ++i) y[i] += sd * rng.normal();

  std::vector<std::string> names(static_cast<std::size_t>(spec.p));
  for (int j = 0; j < spec.p; ++j) names[static_cast<std::size_t>(j)] = "x" + std::to_string(j + 1);
  return {center_data(std::move(y), std::move(x), std::move(names)), std::move(beta)};
}

namespace detail {

inline double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw std::invalid_argument("csv: non-numeric cell '" + cell + "' at row " +
                                std::to_string(row) + ", column " + col);
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string shortest_repr(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace detail

//! Loads a headed CSV, takes `response` as y and every other column as X.
//! Optional expansion appends squares and pairwise interactions (originals,
//! then squares, then upper-triangle products) before centering; optional
//! standardization rescales columns to unit sample variance.
inline Dataset load_csv(const std::string& path, const std::string& response,
                        bool standardize = false, bool expand = false) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);

  int y_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == response) y_col = static_cast<int>(c);
  if (y_col < 0)
    throw std::invalid_argument("csv: response column '" + response + "' not found in " + path);

  std::vector<double> yv;
  std::vector<std::vector<double>> cols(header.size() - 1);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw std::invalid_argument("csv: row " + std::to_string(row) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
    int xi = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = detail::parse_cell(cells[c], row, header[c]);
      if (static_cast<int>(c) == y_col)
        yv.push_back(v);
      else
        cols[static_cast<std::size_t>(xi++)].push_back(v);
    }
  }
  if (yv.size() < 2) throw std::invalid_argument("csv: need at least two data rows");

  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (static_cast<int>(c) != y_col) names.push_back(header[c]);

  const auto n = static_cast<Eigen::Index>(yv.size());
  auto p = static_cast<Eigen::Index>(cols.size());
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = yv[static_cast<std::size_t>(i)];

  if (expand) {
    const auto base = cols;
    const auto base_names = names;
    for (Eigen::Index j = 0; j < p; ++j) {
      std::vector<double> sq(base[static_cast<std::size_t>(j)]);
      for (auto& v : sq) v *= v;
      cols.push_back(std::move(sq));
      names.push_back(base_names[static_cast<std::size_t>(j)] + "^2");
    }
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = a + 1; b < p; ++b) {
        std::vector<double> prod(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i)
          prod[static_cast<std::size_t>(i)] = base[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] *
                                              base[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)];
        cols.push_back(std::move(prod));
        names.push_back(base_names[static_cast<std::size_t>(a)] + ":" + base_names[static_cast<std::size_t>(b)]);
      }
    p = static_cast<Eigen::Index>(cols.size());
  }

  Eigen::MatrixXd x(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];

  if (standardize) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double mean = x.col(j).mean();
      const double var = (x.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
      if (var > 0.0) x.col(j) /= std::sqrt(var);
    }
  }
  return center_data(std::move(y), std::move(x), std::move(names));
}

//! Writes a dataset back to CSV with shortest round-trip decimal doubles.
inline void write_csv(const Dataset& data, const std::string& path,
                      const std::string& response_name = "y") {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write " + path);
  out << response_name;
  for (Eigen::Index j = 0; j < data.p; ++j) {
    out << ',';
    out << (data.column_names.empty() ? "x" + std::to_string(j + 1)
                                      : data.column_names[static_cast<std::size_t>(j)]);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < data.n; ++i) {
    out << detail::shortest_repr(data.y[i]);
    for (Eigen::Index j = 0; j < data.p; ++j) out << ',' << detail::shortest_repr(data.X(i, j));
    out << '\n';
  }
}

}  // namespace bvs
