#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bvs/gamma.hpp"
#include "bvs/math.hpp"
#include "bvs/rng.hpp"

namespace bvs {

// logit restricted to (eps, 1-eps); keeps adaptive scalars bounded away from
// 0 and 1 however far the stochastic-approximation updates drift.
inline double logit_eps(double x, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("logit_eps: eps must lie in (0, 1/2)");
  if (!(x > eps && x < 1.0 - eps))
    throw std::invalid_argument("logit_eps: x outside (eps, 1-eps)");
  return std::log(x - eps) - std::log(1.0 - x - eps);
}

inline double inv_logit_eps(double t, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("inv_logit_eps: eps must lie in (0, 1/2)");
  return eps + (1.0 - 2.0 * eps) * logistic(t);
}

//! Per-variable addition/deletion rates eta = (A, D), clipped into
//! [eps, 1-eps].
struct RateVector {
  Eigen::VectorXd A;
  Eigen::VectorXd D;

  double rate(int j, bool active) const { return active ? D[j] : A[j]; }
  // log(D_j/A_j) when turning j on, log(A_j/D_j) when turning it off.
  double log_flip_ratio(int j, bool currently_active) const {
    return currently_active ? std::log(A[j]) - std::log(D[j]) : std::log(D[j]) - std::log(A[j]);
  }
};

//! A_j = min{1, pi_j/(1-pi_j)}, D_j = min{1, (1-pi_j)/pi_j}, then clipped.
inline RateVector optimal_rates(const Eigen::VectorXd& pi_tilde, double eps) {
  const auto clip = [eps](double x) { return std::clamp(x, eps, 1.0 - eps); };
  RateVector r;
  r.A.resize(pi_tilde.size());
  r.D.resize(pi_tilde.size());
  for (Eigen::Index j = 0; j < pi_tilde.size(); ++j) {
    const double pi = pi_tilde[j];
    r.A[j] = clip(std::min(1.0, pi / (1.0 - pi)));
    r.D[j] = clip(std::min(1.0, (1.0 - pi) / pi));
  }
  return r;
}

//! Neighbourhood indicator k with the randomly ordered index list K used by
//! the position-wise proposal.
struct NeighbourhoodIndicator {
  std::vector<std::uint8_t> k;
  std::vector<int> K;  // random permutation of {j : k_j = 1}
  int p_k = 0;
};

//! k_j ~ Bernoulli(xi A_j) for inactive j, Bernoulli(xi D_j) for active j,
//! independently; K is a uniform random permutation of the set positions.
inline NeighbourhoodIndicator sample_k(const RateVector& rates, double xi, const GammaVector& gamma,
                                       Rng& rng) {
  const int p = gamma.size();
  NeighbourhoodIndicator out;
  out.k.assign(static_cast<std::size_t>(p), 0);
  for (int j = 0; j < p; ++j) {
    if (rng.bernoulli(xi * rates.rate(j, gamma.test(j)))) {
      out.k[static_cast<std::size_t>(j)] = 1;
      out.K.push_back(j);
    }
  }
  out.p_k = static_cast<int>(out.K.size());
  for (int i = out.p_k - 1; i > 0; --i) {
    const auto r = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(out.K[static_cast<std::size_t>(i)], out.K[static_cast<std::size_t>(r)]);
  }
  return out;
}

inline double logpmf_k(const RateVector& rates, double xi, const GammaVector& gamma,
                       const std::vector<std::uint8_t>& k) {
  double lp = 0.0;
  for (int j = 0; j < gamma.size(); ++j) {
    const double r = xi * rates.rate(j, gamma.test(j));
    lp += k[static_cast<std::size_t>(j)] ? std::log(r) : std::log1p(-r);
  }
  return lp;
}

inline double logpmf_k(const RateVector& rates, double xi, const GammaVector& gamma,
                       const NeighbourhoodIndicator& k) {
  return logpmf_k(rates, xi, gamma, k.k);
}

//! Independently flips each position with k_j = 1 with probability omega.
inline GammaVector thin_sample(double omega, const NeighbourhoodIndicator& k, const GammaVector& gamma,
                               Rng& rng) {
  GammaVector out = gamma;
  for (int j = 0; j < gamma.size(); ++j)
    if (k.k[static_cast<std::size_t>(j)] && rng.bernoulli(omega)) out.flip(j);
  return out;
}

//! log q_thin = d_H log(omega) + (p_k - d_H) log(1-omega); -inf outside the
//! neighbourhood N(gamma, k).
inline double thin_logpmf(double omega, const NeighbourhoodIndicator& k, const GammaVector& gamma,
                          const GammaVector& gamma_prime) {
  int flips = 0;
  for (int j = 0; j < gamma.size(); ++j) {
    if (gamma.test(j) != gamma_prime.test(j)) {
      if (!k.k[static_cast<std::size_t>(j)]) return kNegInf;
      ++flips;
    }
  }
  return flips * std::log(omega) + (k.p_k - flips) * std::log1p(-omega);
}

enum class Balancing { hastings, barker, sqrt };

//! log g(t) for log-scale input; all three choices satisfy g(t) = t g(1/t).
inline double log_balance(Balancing fn, double log_t) {
  switch (fn) {
    case Balancing::hastings:
      return std::min(0.0, log_t);
    case Balancing::barker:
      if (log_t == kNegInf) return kNegInf;
      return log_t > 0.0 ? -log1p_exp(-log_t) : log_t - log1p_exp(log_t);
    case Balancing::sqrt:
      return 0.5 * log_t;
  }
  return kNegInf;
}

}  // namespace bvs
