#pragma once

#include <cmath>
#include <stdexcept>

#include "bvs/gamma.hpp"

namespace bvs {

// Slab covariance: g * V_gamma with V either (X'X)^-1 (Zellner g-prior) or
// the identity (independent prior).
enum class VForm { identity, gprior };

// Prior on the inclusion indicator: independent Bernoulli(h), or h integrated
// out against Beta(a, b) giving a beta-binomial law on the model size.
struct GammaPrior {
  enum class Kind { fixed, betabinomial };
  Kind kind = Kind::fixed;
  double h = 0.5;
  double a = 1.0;
  double b = 1.0;

  static GammaPrior fixed(double h) { return {Kind::fixed, h, 0.0, 0.0}; }
  static GammaPrior betabinomial(double a, double b) { return {Kind::betabinomial, 0.0, a, b}; }
};

struct PriorSpec {
  double g = 9.0;
  VForm v_form = VForm::identity;
  GammaPrior gamma_prior;

  void validate() const {
    if (!(g > 0.0)) throw std::invalid_argument("prior: g must be positive");
    if (gamma_prior.kind == GammaPrior::Kind::fixed) {
      if (!(gamma_prior.h > 0.0 && gamma_prior.h < 1.0))
        throw std::invalid_argument("prior: fixed h must lie in (0,1)");
    } else {
      if (!(gamma_prior.a > 0.0 && gamma_prior.b > 0.0))
        throw std::invalid_argument("prior: beta-binomial a, b must be positive");
    }
  }

  // Prior inclusion probability of a single variable.
  double inclusion_mean() const {
    if (gamma_prior.kind == GammaPrior::Kind::fixed) return gamma_prior.h;
    return gamma_prior.a / (gamma_prior.a + gamma_prior.b);
  }
};

inline double log_model_prior(const PriorSpec& prior, int p_gamma, int p) {
  const auto& gp = prior.gamma_prior;
  if (gp.kind == GammaPrior::Kind::fixed)
    return p_gamma * std::log(gp.h) + (p - p_gamma) * std::log1p(-gp.h);
  // log B(a + p_gamma, b + p - p_gamma) - log B(a, b)
  auto log_beta = [](double x, double y) { return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y); };
  return log_beta(gp.a + p_gamma, gp.b + p - p_gamma) - log_beta(gp.a, gp.b);
}

inline double log_model_prior(const PriorSpec& prior, const GammaVector& gamma, int p) {
  return log_model_prior(prior, gamma.count(), p);
}

// log prior(model with variable added) - log prior(model without it), where
// p_gamma_others counts the active variables among the remaining positions.
inline double log_prior_add_delta(const PriorSpec& prior, int p_gamma_others, int p) {
  const auto& gp = prior.gamma_prior;
  if (gp.kind == GammaPrior::Kind::fixed) return std::log(gp.h) - std::log1p(-gp.h);
  return std::log(gp.a + p_gamma_others) - std::log(gp.b + p - p_gamma_others - 1);
}

}  // namespace bvs
