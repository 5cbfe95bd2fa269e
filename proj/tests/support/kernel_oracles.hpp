#pragma once

// Exact transition-matrix builders for the step kernels on small p, by
// enumerating neighbourhood indicators, orderings and paths. Proposal masses
// come from the library's pmf functions and acceptance helpers, so detailed
// balance and kernel-identity checks exercise the production formulas.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "bvs/bvs.hpp"
#include "support/test_util.hpp"

namespace bvs::testing {

inline NeighbourhoodIndicator indicator_from_mask(int p, std::uint64_t mask) {
  NeighbourhoodIndicator k;
  k.k.assign(static_cast<std::size_t>(p), 0);
  for (int j = 0; j < p; ++j)
    if (mask & (std::uint64_t{1} << j)) {
      k.k[static_cast<std::size_t>(j)] = 1;
      k.K.push_back(j);
    }
  k.p_k = static_cast<int>(k.K.size());
  return k;
}

// Independent-flip proposal mass q_{zeta eta}(from -> to).
inline double asi_log_proposal(const GammaVector& from, const GammaVector& to,
                               const RateVector& rates, double zeta) {
  double lp = 0.0;
  for (int j = 0; j < from.size(); ++j) {
    const double r = zeta * rates.rate(j, from.test(j));
    lp += from.test(j) != to.test(j) ? std::log(r) : std::log1p(-r);
  }
  return lp;
}

inline Eigen::MatrixXd asi_kernel(const std::vector<double>& log_post, int p,
                                  const RateVector& rates, double zeta) {
  const auto m = static_cast<Eigen::Index>(log_post.size());
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const GammaVector ga = gamma_from_mask(p, static_cast<std::uint64_t>(a));
    double out_mass = 0.0;
    for (Eigen::Index b = 0; b < m; ++b) {
      if (b == a) continue;
      const GammaVector gb = gamma_from_mask(p, static_cast<std::uint64_t>(b));
      const double q = std::exp(asi_log_proposal(ga, gb, rates, zeta));
      const double alpha = std::exp(std::min(
          0.0, asi_log_ratio(ga, gb, log_post[static_cast<std::size_t>(a)],
                             log_post[static_cast<std::size_t>(b)], rates)));
      kernel(a, b) = q * alpha;
      out_mass += q * alpha;
    }
    kernel(a, a) = 1.0 - out_mass;
  }
  return kernel;
}

inline Eigen::MatrixXd arn_kernel(const std::vector<double>& log_post, int p,
                                  const RateVector& rates, double xi, double omega) {
  const auto m = static_cast<Eigen::Index>(log_post.size());
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const GammaVector ga = gamma_from_mask(p, static_cast<std::uint64_t>(a));
    double out_mass = 0.0;
    for (Eigen::Index b = 0; b < m; ++b) {
      if (b == a) continue;
      const GammaVector gb = gamma_from_mask(p, static_cast<std::uint64_t>(b));
      double prob = 0.0;
      for (std::uint64_t km = 0; km < (std::uint64_t{1} << p); ++km) {
        const NeighbourhoodIndicator k = indicator_from_mask(p, km);
        const double thin = thin_logpmf(omega, k, ga, gb);
        if (thin == kNegInf) continue;
        const double alpha = std::exp(std::min(
            0.0, arn_log_ratio(ga, gb, log_post[static_cast<std::size_t>(a)],
                               log_post[static_cast<std::size_t>(b)], rates, xi, omega, k)));
        prob += std::exp(logpmf_k(rates, xi, ga, k) + thin) * alpha;
      }
      kernel(a, b) = prob;
      out_mass += prob;
    }
    kernel(a, a) = 1.0 - out_mass;
  }
  return kernel;
}

// Forward/reverse machinery for one ARNI sub-kernel, from the production
// enumeration helpers.
inline Eigen::MatrixXd arni_kernel(const Dataset& data, const PriorSpec& prior, int p,
                                   const RateVector& rates, double xi, double omega, Balancing fn) {
  const auto m = static_cast<Eigen::Index>(std::uint64_t{1} << p);
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const GammaVector ga = gamma_from_mask(p, static_cast<std::uint64_t>(a));
    const ModelState sa = make_model_state(data, prior, ga);
    double out_mass = 0.0;
    for (std::uint64_t km = 0; km < (std::uint64_t{1} << p); ++km) {
      const NeighbourhoodIndicator k = indicator_from_mask(p, km);
      const double pk_mass = std::exp(logpmf_k(rates, xi, ga, k));
      if (k.p_k == 0) continue;  // proposal stays, contributes to diagonal
      const auto e = detail::arni_enumerate(sa, k, rates, omega, fn, data, prior);
      for (std::uint32_t t = 1; t < e.log_weight.size(); ++t) {
        const double q = std::exp(e.log_weight[t] - e.log_z);
        if (q == 0.0) continue;
        const double log_z_rev = detail::arni_reverse_log_z(e, t, k.p_k, omega, fn);
        const int d_back = std::popcount(t);
        const double thin_back =
            d_back * std::log(omega) + (k.p_k - d_back) * std::log1p(-omega);
        const double lw_back = log_balance(fn, (e.log_post[0] - e.log_post[t]) - e.rn_delta[t]) + thin_back;
        const double log_alpha =
            std::min(0.0, (e.log_post[t] + e.rn_delta[t] + lw_back - log_z_rev) -
                              (e.log_post[0] + e.log_weight[t] - e.log_z));
        std::uint64_t target = static_cast<std::uint64_t>(a);
        for (int bit = 0; bit < k.p_k; ++bit)
          if (t & (std::uint32_t{1} << bit)) target ^= std::uint64_t{1} << k.K[static_cast<std::size_t>(bit)];
        const double mass = pk_mass * q * std::exp(log_alpha);
        kernel(a, static_cast<Eigen::Index>(target)) += mass;
        out_mass += mass;
      }
    }
    kernel(a, a) += 1.0 - out_mass;
  }
  return kernel;
}

// Scripted chooser: replays a fixed flip/stay pattern.
struct ScriptedChooser {
  std::uint32_t pattern = 0;
  int pos = 0;
  bool operator()(double) { return (pattern >> pos++) & 1; }
};

// PARNI kernel enumerated over k, all orderings of K, and all 2^p_k paths.
inline Eigen::MatrixXd parni_kernel(const Dataset& data, const PriorSpec& prior, int p,
                                    const RateVector& rates, double omega, Balancing fn) {
  const auto m = static_cast<Eigen::Index>(std::uint64_t{1} << p);
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const GammaVector ga = gamma_from_mask(p, static_cast<std::uint64_t>(a));
    const ModelState sa = make_model_state(data, prior, ga);
    double out_mass = 0.0;
    for (std::uint64_t km = 0; km < (std::uint64_t{1} << p); ++km) {
      NeighbourhoodIndicator k = indicator_from_mask(p, km);
      if (k.p_k == 0) continue;
      const double pk_mass = std::exp(logpmf_k(rates, 1.0, ga, k));
      std::vector<int> order = k.K;
      std::sort(order.begin(), order.end());
      double n_orderings = 1.0;
      for (int i = 2; i <= k.p_k; ++i) n_orderings *= i;
      do {
        NeighbourhoodIndicator kk = k;
        kk.K = order;
        for (std::uint32_t path = 0; path < (std::uint32_t{1} << k.p_k); ++path) {
          ScriptedChooser chooser{path, 0};
          auto [fin, trace] =
              detail::parni_path(sa, kk, rates, omega, fn, data, prior, chooser, nullptr);
          const double alpha =
              std::exp(std::min(0.0, trace.sum_log_z_fwd - trace.sum_log_z_rev));
          std::uint64_t target = 0;
          for (int j = 0; j < p; ++j)
            if (fin.gamma().test(j)) target |= std::uint64_t{1} << j;
          const double mass =
              pk_mass / n_orderings * std::exp(trace.log_q_path) * alpha;
          if (target != static_cast<std::uint64_t>(a)) {
            kernel(a, static_cast<Eigen::Index>(target)) += mass;
            out_mass += mass;
          }
        }
      } while (std::next_permutation(order.begin(), order.end()));
    }
    kernel(a, a) += 1.0 - out_mass;
  }
  return kernel;
}

inline Eigen::VectorXd stationary_from_log_posts(const std::vector<double>& log_post) {
  std::vector<double> lp = log_post;
  const double lse = logsumexp(lp);
  Eigen::VectorXd pi(static_cast<Eigen::Index>(lp.size()));
  for (std::size_t i = 0; i < lp.size(); ++i) pi[static_cast<Eigen::Index>(i)] = std::exp(lp[i] - lse);
  return pi;
}

inline double max_detailed_balance_violation(const Eigen::MatrixXd& kernel,
                                             const Eigen::VectorXd& pi) {
  double worst = 0.0;
  for (Eigen::Index a = 0; a < kernel.rows(); ++a)
    for (Eigen::Index b = 0; b < kernel.cols(); ++b)
      worst = std::max(worst, std::abs(pi[a] * kernel(a, b) - pi[b] * kernel(b, a)));
  return worst;
}

// Exact expected squared jumping distance of a kernel at stationarity.
inline double exact_esjd(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& pi, int p) {
  double esjd = 0.0;
  for (Eigen::Index a = 0; a < kernel.rows(); ++a)
    for (Eigen::Index b = 0; b < kernel.cols(); ++b) {
      if (a == b) continue;
      const int d = std::popcount(static_cast<std::uint64_t>(a) ^ static_cast<std::uint64_t>(b));
      (void)p;
      esjd += pi[a] * kernel(a, b) * d * d;
    }
  return esjd;
}

}  // namespace bvs::testing
