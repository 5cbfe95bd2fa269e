#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bvs {

// Gram matrix X'X is cached up to this dimension; above it, cross products
// with single columns are formed on the fly.
inline constexpr int kGramCacheMaxP = 2000;

//! Centered regression data. y and every column of X have zero mean, so the
//! intercept is integrated out of all marginal likelihood computations.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  std::vector<std::string> column_names;  // empty when unnamed

  double yty = 0.0;
  Eigen::VectorXd xty;       // X'y, length p
  Eigen::VectorXd col_norm2; // squared column norms, length p
  Eigen::MatrixXd gram;      // X'X when p <= kGramCacheMaxP, else 0x0

  bool has_gram() const { return gram.size() > 0; }

  // X_A' x_j for an ordered active set A.
  Eigen::VectorXd cross(const std::vector<int>& active, int j) const {
    Eigen::VectorXd c(static_cast<Eigen::Index>(active.size()));
    if (has_gram()) {
      for (std::size_t q = 0; q < active.size(); ++q) c[static_cast<Eigen::Index>(q)] = gram(active[q], j);
    } else {
      const auto xj = X.col(j);
      for (std::size_t q = 0; q < active.size(); ++q) c[static_cast<Eigen::Index>(q)] = X.col(active[q]).dot(xj);
    }
    return c;
  }
};

//! Centers the response and every design column to zero mean.
//! Constant columns are kept (they become all-zero) with a warning.
inline Dataset center_data(Eigen::VectorXd raw_y, Eigen::MatrixXd raw_X,
                           std::vector<std::string> column_names = {}) {
  if (raw_y.size() != raw_X.rows())
    throw std::invalid_argument("center_data: y length " + std::to_string(raw_y.size()) +
                                " does not match X rows " + std::to_string(raw_X.rows()));
  if (raw_X.rows() < 2 || raw_X.cols() < 1)
    throw std::invalid_argument("center_data: need n >= 2 and p >= 1");
  if (!raw_y.allFinite() || !raw_X.allFinite())
    throw std::invalid_argument("center_data: non-finite entries in input");
  if (!column_names.empty() && static_cast<Eigen::Index>(column_names.size()) != raw_X.cols())
    throw std::invalid_argument("center_data: column_names length mismatch");

  Dataset d;
  d.n = raw_X.rows();
  d.p = raw_X.cols();
  d.y = std::move(raw_y);
  d.X = std::move(raw_X);
  d.column_names = std::move(column_names);

  d.y.array() -= d.y.mean();
  for (Eigen::Index j = 0; j < d.p; ++j) {
    d.X.col(j).array() -= d.X.col(j).mean();
    if (d.X.col(j).squaredNorm() == 0.0) {
      const std::string name = d.column_names.empty() ? ("column " + std::to_string(j + 1))
                                                      : d.column_names[static_cast<std::size_t>(j)];
      std::cerr << "warning: " << name << " is constant after centering; retained\n";
    }
  }

  d.yty = d.y.squaredNorm();
  d.xty = d.X.transpose() * d.y;
  d.col_norm2 = d.X.colwise().squaredNorm();
  if (d.p <= kGramCacheMaxP) d.gram = d.X.transpose() * d.X;
  return d;
}

}  // namespace bvs
