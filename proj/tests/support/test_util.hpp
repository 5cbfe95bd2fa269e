#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bvs/bvs.hpp"

namespace bvs::testing {

// Small random regression problem with a couple of genuine signals.
inline Dataset toy_dataset(int n, int p, std::uint64_t seed, double signal = 1.0) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = rng.normal();
    y[i] += signal * x(i, 0);
    if (p > 2) y[i] -= signal * x(i, 2);
  }
  return center_data(std::move(y), std::move(x));
}

inline GammaVector gamma_from_mask(int p, std::uint64_t mask) {
  GammaVector g(p);
  for (int j = 0; j < p; ++j)
    if (mask & (std::uint64_t{1} << j)) g.set(j, true);
  return g;
}

inline GammaVector random_gamma(int p, double incl, Rng& rng) {
  GammaVector g(p);
  for (int j = 0; j < p; ++j)
    if (rng.uniform() < incl) g.set(j, true);
  return g;
}

inline PriorSpec identity_prior(double g = 9.0, double h = 0.25) {
  PriorSpec prior;
  prior.g = g;
  prior.v_form = VForm::identity;
  prior.gamma_prior = GammaPrior::fixed(h);
  return prior;
}

inline PriorSpec g_prior(double g = 9.0, double h = 0.25) {
  PriorSpec prior;
  prior.g = g;
  prior.v_form = VForm::gprior;
  prior.gamma_prior = GammaPrior::fixed(h);
  return prior;
}

// All 2^p log posteriors by direct from-scratch evaluation (no Gray code).
inline std::vector<double> naive_log_posts(const Dataset& data, const PriorSpec& prior) {
  const int p = static_cast<int>(data.p);
  std::vector<double> out(std::size_t{1} << p, kNegInf);
  for (std::uint64_t mask = 0; mask < out.size(); ++mask) {
    try {
      out[mask] = make_model_state(data, prior, gamma_from_mask(p, mask)).log_post();
    } catch (const SingularModelError&) {
    }
  }
  return out;
}

}  // namespace bvs::testing
