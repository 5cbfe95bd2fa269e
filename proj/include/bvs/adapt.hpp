#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "bvs/math.hpp"
#include "bvs/proposals.hpp"
#include "bvs/step_result.hpp"

namespace bvs {

struct AdaptTargets {
  double tau = 0.65;  // target mean acceptance probability
  double s = 5.0;     // target neighbourhood size for the xi update
};

//! Adaptive parameters shared by all chains: Rao-Blackwellised PIP running
//! means, the shrunk version feeding the rates, and the scalar tuning
//! parameters kept on the logit_eps scale.
struct AdaptState {
  Eigen::VectorXd pip_hat;
  Eigen::VectorXd pip_tilde;
  RateVector rates;
  double zeta_logit = 0.0;
  double xi_logit = 0.0;
  double omega_logit = 0.0;
  long iter = 0;      // adaptation iterations applied
  long rb_count = 0;  // iterations absorbed into the running mean
  double pi0 = 1e-3;
  double eps = 1e-3;
  AdaptTargets targets;

  double zeta() const { return inv_logit_eps(zeta_logit, eps); }
  double xi() const { return inv_logit_eps(xi_logit, eps); }
  double omega() const { return inv_logit_eps(omega_logit, eps); }

  void refresh_rates() {
    pip_tilde = (pi0 + (1.0 - 2.0 * pi0) * pip_hat.array()).matrix();
    rates = optimal_rates(pip_tilde, eps);
  }

  static AdaptState init(int p, double pi0, double eps, double initial_pip, AdaptTargets targets,
                         double zeta0 = 0.5, double xi0 = 0.5, double omega0 = 0.5) {
    if (!(pi0 > 0.0 && pi0 < 0.5)) throw std::invalid_argument("adapt: pi0 must lie in (0, 1/2)");
    AdaptState a;
    a.pi0 = pi0;
    a.eps = eps;
    a.targets = targets;
    a.pip_hat = Eigen::VectorXd::Constant(p, std::clamp(initial_pip, 0.0, 1.0));
    const auto into_domain = [eps](double x) { return std::clamp(x, 2.0 * eps, 1.0 - 2.0 * eps); };
    a.zeta_logit = logit_eps(into_domain(zeta0), eps);
    a.xi_logit = logit_eps(into_domain(xi0), eps);
    a.omega_logit = logit_eps(into_domain(omega0), eps);
    a.refresh_rates();
    return a;
  }
};

//! Folds one iteration of flip logits (one row per chain) into the exact
//! running mean pip_hat and refreshes pi_tilde and the rates.
inline void rb_update(AdaptState& adapt, const Eigen::MatrixXd& flip_logits) {
  const Eigen::Index l_chains = flip_logits.rows();
  Eigen::VectorXd mean_prob = Eigen::VectorXd::Zero(flip_logits.cols());
  for (Eigen::Index l = 0; l < l_chains; ++l)
    for (Eigen::Index j = 0; j < flip_logits.cols(); ++j)
      mean_prob[j] += logistic(flip_logits(l, j));
  mean_prob /= static_cast<double>(l_chains);
  const double n_new = static_cast<double>(adapt.rb_count + 1);
  adapt.pip_hat += (mean_prob - adapt.pip_hat) / n_new;
  adapt.rb_count += 1;
  adapt.refresh_rates();
}

//! Estimator-only accumulation used once proposal adaptation has frozen:
//! pip_hat keeps averaging, the rates and pi_tilde stay fixed.
inline void rb_accumulate(AdaptState& adapt, const Eigen::MatrixXd& flip_logits) {
  const Eigen::Index l_chains = flip_logits.rows();
  Eigen::VectorXd mean_prob = Eigen::VectorXd::Zero(flip_logits.cols());
  for (Eigen::Index l = 0; l < l_chains; ++l)
    for (Eigen::Index j = 0; j < flip_logits.cols(); ++j)
      mean_prob[j] += logistic(flip_logits(l, j));
  mean_prob /= static_cast<double>(l_chains);
  adapt.pip_hat += (mean_prob - adapt.pip_hat) / static_cast<double>(adapt.rb_count + 1);
  adapt.rb_count += 1;
}

inline void reset_rb_mean(AdaptState& adapt) {
  adapt.pip_hat.setZero();
  adapt.rb_count = 0;
}

//! Robbins-Monro step on the logit_eps scale: value + phi_i (signal - target).
inline double rm_update(double logit_val, double signal, double target, double phi_i) {
  return logit_val + phi_i * (signal - target);
}

//! One Kiefer-Wolfowitz round: chain batches, the perturbed omegas they used,
//! their realized squared-jump averages, and the step/width pair (a_i, c_i).
struct KWBatch {
  std::vector<int> plus_ids;
  std::vector<int> minus_ids;
  double omega_plus = 0.0;
  double omega_minus = 0.0;
  double asjd_plus = 0.0;
  double asjd_minus = 0.0;
  double a_i = 0.0;
  double c_i = 0.0;
};

//! Finite-difference ascent on the squared-jump objective:
//! logit omega += a_i (ASJD+ - ASJD-) / (2 c_i).
inline void kw_update(AdaptState& adapt, const KWBatch& batch) {
  if (!(batch.c_i > 0.0)) throw std::invalid_argument("kw_update: c_i must be positive");
  adapt.omega_logit += batch.a_i * (batch.asjd_plus - batch.asjd_minus) / (2.0 * batch.c_i);
}

//! Average squared jumping distance: mean of proposal Hamming distance
//! squared, weighted by the acceptance probability.
inline double asjd(std::span<const StepResult> results) {
  if (results.empty()) throw std::invalid_argument("asjd: empty step list");
  double acc = 0.0;
  for (const auto& r : results) {
    const double jump = static_cast<double>(r.hamming_jump);
    acc += jump * jump * std::exp(std::min(0.0, r.log_accept_prob));
  }
  return acc / static_cast<double>(results.size());
}

}  // namespace bvs
