#pragma once

// Numerical-integration oracle for the marginal likelihood of one-variable
// models under the independent prior: the (beta, log sigma^2) integral is
// evaluated by two nested Simpson rules, with the inner grid centered and
// scaled per outer point. Independent of the Cholesky-based implementation.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "bvs/math.hpp"

namespace bvs::testing {

namespace detail {

// Simpson weights on a uniform grid with an odd number of points.
inline std::vector<double> simpson_weights(int points, double step) {
  std::vector<double> w(static_cast<std::size_t>(points), 0.0);
  for (int i = 0; i < points; ++i) {
    double c = (i == 0 || i == points - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    w[static_cast<std::size_t>(i)] = c * step / 3.0;
  }
  return w;
}

}  // namespace detail

// log integral of exp(-((n-1)/2)(log 2pi + u) - y'y e^-u / 2) du  (empty model).
inline double quadrature_log_ml_empty(const Eigen::VectorXd& y, int u_points = 4001) {
  const auto n = static_cast<double>(y.size());
  const double yty = y.squaredNorm();
  const double u0 = std::log(yty / (n - 1.0));
  const double lo = u0 - 25.0, hi = u0 + 40.0;
  const double step = (hi - lo) / (u_points - 1);
  const auto w = detail::simpson_weights(u_points, step);
  std::vector<double> terms(static_cast<std::size_t>(u_points));
  for (int i = 0; i < u_points; ++i) {
    const double u = lo + i * step;
    terms[static_cast<std::size_t>(i)] =
        -0.5 * (n - 1.0) * (std::log(2.0 * M_PI) + u) - 0.5 * yty * std::exp(-u) +
        std::log(w[static_cast<std::size_t>(i)]);
  }
  return logsumexp(terms);
}

// log of the 2-D integral over (beta, u) for a single active column x with
// slab variance g sigma^2.
inline double quadrature_log_ml_single(const Eigen::VectorXd& y, const Eigen::VectorXd& x, double g,
                                       int u_points = 2001, int b_points = 801) {
  const auto n = static_cast<double>(y.size());
  const double yty = y.squaredNorm();
  const double xtx = x.squaredNorm();
  const double xty = x.dot(y);
  const double f = xtx + 1.0 / g;
  const double beta_center = xty / f;  // conditional mean, u-independent
  const double resid = yty - xty * xty / f;
  const double u0 = std::log(std::max(resid, 1e-12) / (n - 1.0));

  const double u_lo = u0 - 25.0, u_hi = u0 + 40.0;
  const double u_step = (u_hi - u_lo) / (u_points - 1);
  const auto uw = detail::simpson_weights(u_points, u_step);

  std::vector<double> outer(static_cast<std::size_t>(u_points));
  std::vector<double> inner(static_cast<std::size_t>(b_points));
  for (int i = 0; i < u_points; ++i) {
    const double u = u_lo + i * u_step;
    const double sig2 = std::exp(u);
    // Conditional on u the integrand is Gaussian in beta with sd s_u.
    const double s_u = std::sqrt(sig2 / f);
    const double b_lo = beta_center - 10.0 * s_u;
    const double b_hi = beta_center + 10.0 * s_u;
    const double b_step = (b_hi - b_lo) / (b_points - 1);
    const auto bw = detail::simpson_weights(b_points, b_step);
    for (int k = 0; k < b_points; ++k) {
      const double beta = b_lo + k * b_step;
      const double rss = yty - 2.0 * beta * xty + beta * beta * xtx;
      inner[static_cast<std::size_t>(k)] =
          -0.5 * (n - 1.0) * (std::log(2.0 * M_PI) + u) - 0.5 * rss / sig2 -
          0.5 * (std::log(2.0 * M_PI) + std::log(g) + u) - 0.5 * beta * beta / (g * sig2) +
          std::log(bw[static_cast<std::size_t>(k)]);
    }
    outer[static_cast<std::size_t>(i)] = logsumexp(inner) + std::log(uw[static_cast<std::size_t>(i)]);
  }
  return logsumexp(outer);
}

}  // namespace bvs::testing
