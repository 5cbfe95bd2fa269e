#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bvs/adapt.hpp"
#include "bvs/enumerate.hpp"
#include "bvs/math.hpp"
#include "bvs/model_state.hpp"
#include "bvs/proposals.hpp"
#include "bvs/rng.hpp"
#include "bvs/step_result.hpp"

namespace bvs {

//! Tuning-parameter snapshot a step kernel runs against. The driver freezes
//! one per iteration, so concurrent chains see identical values.
struct ProposalParams {
  const RateVector* rates = nullptr;
  double zeta = 0.5;
  double xi = 0.5;
  double omega = 0.5;
  Balancing balancing = Balancing::hastings;
  int max_pk = 12;
};

namespace detail {

// Applies a set of flips, deletions first so every intermediate active set is
// a subset of the start or target set and stays non-singular under the
// g-prior whenever the endpoints are.
inline ModelState apply_flips(const ModelState& state, const std::vector<int>& positions,
                              const Dataset& data, const PriorSpec& prior, long* evals) {
  ModelState cur = state;
  for (int j : positions)
    if (cur.gamma().test(j)) {
      cur = flip_model_state(cur, j, data, prior);
      if (evals) ++*evals;
    }
  for (int j : positions)
    if (!cur.gamma().test(j) && !state.gamma().test(j)) {
      cur = flip_model_state(cur, j, data, prior);
      if (evals) ++*evals;
    }
  return cur;
}

inline std::vector<int> diff_positions(const GammaVector& a, const GammaVector& b) {
  std::vector<int> out;
  for (int j = 0; j < a.size(); ++j)
    if (a.test(j) != b.test(j)) out.push_back(j);
  return out;
}

}  // namespace detail

//! Log MH ratio of the independent-flip proposal. The scaling parameter
//! cancels; only the flipped positions' A/D rates survive.
inline double asi_log_ratio(const GammaVector& from, const GammaVector& to, double lp_from,
                            double lp_to, const RateVector& rates) {
  if (lp_to == kNegInf) return kNegInf;
  double r = lp_to - lp_from;
  for (int j = 0; j < from.size(); ++j)
    if (from.test(j) != to.test(j)) r += rates.log_flip_ratio(j, from.test(j));
  return r;
}

//! Log MH ratio of the random-neighbourhood proposal, computed from the full
//! neighbourhood and thinning mass functions.
inline double arn_log_ratio(const GammaVector& from, const GammaVector& to, double lp_from,
                            double lp_to, const RateVector& rates, double xi, double omega,
                            const NeighbourhoodIndicator& k) {
  if (lp_to == kNegInf) return kNegInf;
  return lp_to + logpmf_k(rates, xi, to, k) + thin_logpmf(omega, k, to, from) -
         (lp_from + logpmf_k(rates, xi, from, k) + thin_logpmf(omega, k, from, to));
}

//! Add-Delete-Swap: uniform strategy, uniform move inside it, with the
//! neighbourhood-size ratio in the acceptance probability. Infeasible
//! strategies propose the current state and count as rejections.
inline StepResult ads_step(ModelState& state, const Dataset& data, const PriorSpec& prior, Rng& rng) {
  const int p = static_cast<int>(data.p);
  const int m = state.p_gamma();
  const int strategy = static_cast<int>(rng.uniform_below(3));  // 0 add, 1 delete, 2 swap

  StepResult res;
  res.proposed = state.gamma();
  const bool infeasible = (strategy == 0 && m == p) || (strategy == 1 && m == 0) ||
                          (strategy == 2 && (m == 0 || m == p));
  if (infeasible) {
    res.log_accept_prob = kNegInf;
    return res;
  }

  auto nth_matching = [&](bool want_active, int nth) {
    for (int j = 0; j < p; ++j)
      if (state.gamma().test(j) == want_active && nth-- == 0) return j;
    return -1;
  };

  std::vector<int> flips;
  double log_size_ratio = 0.0;
  if (strategy == 0) {
    flips = {nth_matching(false, static_cast<int>(rng.uniform_below(p - m)))};
    log_size_ratio = std::log(static_cast<double>(p - m)) - std::log(static_cast<double>(m + 1));
  } else if (strategy == 1) {
    flips = {nth_matching(true, static_cast<int>(rng.uniform_below(m)))};
    log_size_ratio = std::log(static_cast<double>(m)) - std::log(static_cast<double>(p - m + 1));
  } else {
    flips = {nth_matching(true, static_cast<int>(rng.uniform_below(m))),
             nth_matching(false, static_cast<int>(rng.uniform_below(p - m)))};
  }

  double lp_to = kNegInf;
  ModelState cand;
  try {
    cand = detail::apply_flips(state, flips, data, prior, &res.models_evaluated);
    lp_to = cand.log_post();
  } catch (const SingularModelError&) {
  }
  res.proposed = state.gamma();
  for (int j : flips) res.proposed.flip(j);
  res.hamming_jump = static_cast<int>(flips.size());
  res.log_accept_prob = std::min(0.0, lp_to - state.log_post() + log_size_ratio);
  if (lp_to == kNegInf) res.log_accept_prob = kNegInf;
  if (rng.log_uniform() < res.log_accept_prob) {
    res.accepted = true;
    state = std::move(cand);
  }
  return res;
}

//! Adaptively scaled individual-adaptation kernel: independent per-variable
//! flips at rates zeta*A_j / zeta*D_j.
inline StepResult asi_step(ModelState& state, const ProposalParams& params, const Dataset& data,
                           const PriorSpec& prior, Rng& rng) {
  const int p = static_cast<int>(data.p);
  std::vector<int> flips;
  for (int j = 0; j < p; ++j)
    if (rng.bernoulli(params.zeta * params.rates->rate(j, state.gamma().test(j)))) flips.push_back(j);

  StepResult res;
  res.proposed = state.gamma();
  for (int j : flips) res.proposed.flip(j);
  res.hamming_jump = static_cast<int>(flips.size());

  double lp_to = kNegInf;
  ModelState cand;
  try {
    cand = detail::apply_flips(state, flips, data, prior, &res.models_evaluated);
    lp_to = cand.log_post();
  } catch (const SingularModelError&) {
  }
  res.log_accept_prob =
      std::min(0.0, asi_log_ratio(state.gamma(), res.proposed, state.log_post(), lp_to, *params.rates));
  if (rng.log_uniform() < res.log_accept_prob) {
    res.accepted = true;
    state = std::move(cand);
  }
  return res;
}

//! Adaptive random neighbourhood kernel: Bernoulli neighbourhood indicator at
//! rates xi*eta, then an omega-thinned flip proposal inside it.
inline StepResult arn_step(ModelState& state, const ProposalParams& params, const Dataset& data,
                           const PriorSpec& prior, Rng& rng) {
  const NeighbourhoodIndicator k = sample_k(*params.rates, params.xi, state.gamma(), rng);
  const GammaVector proposal = thin_sample(params.omega, k, state.gamma(), rng);

  StepResult res;
  res.proposed = proposal;
  res.k_size = k.p_k;
  res.hamming_jump = hamming_distance(state.gamma(), proposal);

  double lp_to = kNegInf;
  ModelState cand;
  try {
    cand = detail::apply_flips(state, detail::diff_positions(state.gamma(), proposal), data, prior,
                               &res.models_evaluated);
    lp_to = cand.log_post();
  } catch (const SingularModelError&) {
  }
  res.log_accept_prob =
      std::min(0.0, arn_log_ratio(state.gamma(), proposal, state.log_post(), lp_to, *params.rates,
                                  params.xi, params.omega, k));
  if (rng.log_uniform() < res.log_accept_prob) {
    res.accepted = true;
    state = std::move(cand);
  }
  return res;
}

namespace detail {

//! All 2^p_k models of N(gamma, k), visited by Gray code from the base model.
//! Index t encodes which positions of K are flipped relative to the base.
struct ArniEnumeration {
  std::vector<double> log_post;    // posterior of model t
  std::vector<double> rn_delta;    // log p_rn(k | model t) - log p_rn(k | base)
  std::vector<double> log_weight;  // unnormalized forward log-weights
  double log_z = kNegInf;
  long models_evaluated = 0;
};

inline ArniEnumeration arni_enumerate(const ModelState& base, const NeighbourhoodIndicator& k,
                                      const RateVector& rates, double omega, Balancing fn,
                                      const Dataset& data, const PriorSpec& prior) {
  const int pk = k.p_k;
  const std::uint32_t n_models = std::uint32_t{1} << pk;
  ArniEnumeration e;
  e.log_post.assign(n_models, kNegInf);
  e.rn_delta.assign(n_models, 0.0);
  e.log_weight.assign(n_models, kNegInf);

  // Per-position contributions to the neighbourhood-mass ratio; xi cancels.
  std::vector<double> flip_ratio(static_cast<std::size_t>(pk));
  for (int b = 0; b < pk; ++b)
    flip_ratio[static_cast<std::size_t>(b)] =
        rates.log_flip_ratio(k.K[static_cast<std::size_t>(b)], base.gamma().test(k.K[static_cast<std::size_t>(b)]));

  e.log_post[0] = base.log_post();
  ModelState held = base;
  std::uint32_t held_mask = 0;
  std::uint32_t gray = 0;
  for (std::uint32_t i = 1; i < n_models; ++i) {
    const int bit = std::countr_zero(i);
    gray ^= std::uint32_t{1} << bit;
    try {
      if ((held_mask ^ gray) == (std::uint32_t{1} << bit)) {
        held = flip_model_state(held, k.K[static_cast<std::size_t>(bit)], data, prior);
        ++e.models_evaluated;
      } else {
        std::vector<int> flips;
        for (int b = 0; b < pk; ++b)
          if ((held_mask ^ gray) & (std::uint32_t{1} << b)) flips.push_back(k.K[static_cast<std::size_t>(b)]);
        held = apply_flips(held, flips, data, prior, &e.models_evaluated);
      }
      held_mask = gray;
      e.log_post[gray] = held.log_post();
    } catch (const SingularModelError&) {
      e.log_post[gray] = kNegInf;
    }
  }

  const double log_omega = std::log(omega);
  const double log_1momega = std::log1p(-omega);
  for (std::uint32_t t = 0; t < n_models; ++t) {
    double rn = 0.0;
    for (int b = 0; b < pk; ++b)
      if (t & (std::uint32_t{1} << b)) rn += flip_ratio[static_cast<std::size_t>(b)];
    e.rn_delta[t] = rn;
    const int d = std::popcount(t);
    const double thin = d * log_omega + (pk - d) * log_1momega;
    const double log_t = e.log_post[t] == kNegInf ? kNegInf : (e.log_post[t] - e.log_post[0]) + rn;
    e.log_weight[t] = log_balance(fn, log_t) + thin;
  }
  e.log_z = logsumexp(e.log_weight);
  return e;
}

// Normalising constant of the informed proposal re-centered at model `from`.
inline double arni_reverse_log_z(const ArniEnumeration& e, std::uint32_t from, int pk, double omega,
                                 Balancing fn) {
  const double log_omega = std::log(omega);
  const double log_1momega = std::log1p(-omega);
  std::vector<double> lw(e.log_post.size(), kNegInf);
  for (std::uint32_t t = 0; t < e.log_post.size(); ++t) {
    const int d = std::popcount(t ^ from);
    const double thin = d * log_omega + (pk - d) * log_1momega;
    const double log_t = e.log_post[t] == kNegInf
                             ? kNegInf
                             : (e.log_post[t] - e.log_post[from]) + (e.rn_delta[t] - e.rn_delta[from]);
    lw[t] = log_balance(fn, log_t) + thin;
  }
  return logsumexp(lw);
}

}  // namespace detail

//! Fully informed random-neighbourhood kernel: enumerates N(gamma, k) by Gray
//! code, proposes proportionally to the balanced weights, and uses a second
//! (re-weighted) enumeration from the proposal for the reverse constant.
//! Oversized neighbourhoods are resampled once, then the step is abandoned as
//! a rejection.
inline StepResult arni_step(ModelState& state, const ProposalParams& params, const Dataset& data,
                            const PriorSpec& prior, Rng& rng) {
  NeighbourhoodIndicator k = sample_k(*params.rates, params.xi, state.gamma(), rng);
  if (k.p_k > params.max_pk) k = sample_k(*params.rates, params.xi, state.gamma(), rng);
  StepResult res;
  res.proposed = state.gamma();
  res.k_size = k.p_k;
  if (k.p_k > params.max_pk) {
    res.log_accept_prob = kNegInf;
    return res;
  }
  if (k.p_k == 0) {
    res.accepted = true;
    res.log_accept_prob = 0.0;
    return res;
  }

  const auto e = detail::arni_enumerate(state, k, *params.rates, params.omega, params.balancing,
                                        data, prior);
  res.models_evaluated = e.models_evaluated;

  // Categorical draw over the neighbourhood.
  std::uint32_t chosen = 0;
  {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::uint32_t t = 0; t < e.log_weight.size(); ++t) {
      acc += std::exp(e.log_weight[t] - e.log_z);
      if (u < acc) {
        chosen = t;
        break;
      }
      if (t + 1 == e.log_weight.size()) chosen = t;
    }
  }

  GammaVector proposal = state.gamma();
  for (int b = 0; b < k.p_k; ++b)
    if (chosen & (std::uint32_t{1} << b)) proposal.flip(k.K[static_cast<std::size_t>(b)]);
  res.proposed = proposal;
  res.hamming_jump = std::popcount(chosen);

  if (chosen == 0) {
    res.accepted = true;
    res.log_accept_prob = 0.0;
    return res;
  }

  const double log_z_rev =
      detail::arni_reverse_log_z(e, chosen, k.p_k, params.omega, params.balancing);
  // Reverse weight of coming back to the current model from the proposal.
  const int d_back = std::popcount(chosen);
  const double thin_back =
      d_back * std::log(params.omega) + (k.p_k - d_back) * std::log1p(-params.omega);
  const double log_t_back = (e.log_post[0] - e.log_post[chosen]) - e.rn_delta[chosen];
  const double lw_back = log_balance(params.balancing, log_t_back) + thin_back;

  res.log_accept_prob = std::min(
      0.0, (e.log_post[chosen] + e.rn_delta[chosen] + lw_back - log_z_rev) -
               (e.log_post[0] + e.log_weight[chosen] - e.log_z));
  if (rng.log_uniform() < res.log_accept_prob) {
    res.accepted = true;
    std::vector<int> flips;
    for (int b = 0; b < k.p_k; ++b)
      if (chosen & (std::uint32_t{1} << b)) flips.push_back(k.K[static_cast<std::size_t>(b)]);
    state = detail::apply_flips(state, flips, data, prior, nullptr);
  }
  return res;
}

//! Record of one position-wise pass, sufficient to replay the move.
struct ParniTrace {
  NeighbourhoodIndicator k;
  std::vector<std::uint8_t> flips;   // decision at each position of K
  double sum_log_z_fwd = 0.0;
  double sum_log_z_rev = 0.0;
  double log_q_path = 0.0;           // log probability of the realized path
};

namespace detail {

//! Walks the ordered positions K once, proposing a flip/stay at each from the
//! two-point balanced measure, and accumulates the forward and reverse
//! normalising constants in the same pass (the intermediate models of the
//! reverse move coincide with the forward ones).
template <class Chooser>
std::pair<ModelState, ParniTrace> parni_path(const ModelState& start, NeighbourhoodIndicator k,
                                             const RateVector& rates, double omega, Balancing fn,
                                             const Dataset& data, const PriorSpec& prior,
                                             Chooser&& choose_flip, long* evals) {
  ParniTrace trace;
  const double log_omega = std::log(omega);
  const double log_1momega = std::log1p(-omega);
  const double lw_stay = log_balance(fn, 0.0) + log_1momega;

  ModelState cur = start;
  for (int r = 0; r < k.p_k; ++r) {
    const int j = k.K[static_cast<std::size_t>(r)];
    double lp_flip = kNegInf;
    ModelState cand;
    bool cand_ok = false;
    try {
      cand = flip_model_state(cur, j, data, prior);
      lp_flip = cand.log_post();
      cand_ok = true;
      if (evals) ++*evals;
    } catch (const SingularModelError&) {
    }
    const double ratio_fwd = rates.log_flip_ratio(j, cur.gamma().test(j));
    const double log_t_fwd = lp_flip == kNegInf ? kNegInf : (lp_flip - cur.log_post()) + ratio_fwd;
    const double lw_flip = log_balance(fn, log_t_fwd) + log_omega;
    const double log_z = logsumexp2(lw_stay, lw_flip);
    const bool flip = cand_ok && choose_flip(lw_flip - log_z);

    trace.flips.push_back(flip ? 1 : 0);
    trace.sum_log_z_fwd += log_z;
    trace.log_q_path += flip ? (lw_flip - log_z) : (lw_stay - log_z);
    if (flip) {
      // Reverse pass proposes from the flipped model at the same position.
      const double log_t_rev = (cur.log_post() - lp_flip) - ratio_fwd;
      const double lw_rev = log_balance(fn, log_t_rev) + log_omega;
      trace.sum_log_z_rev += logsumexp2(lw_stay, lw_rev);
      cur = std::move(cand);
    } else {
      trace.sum_log_z_rev += log_z;
    }
  }
  trace.k = std::move(k);
  return {std::move(cur), std::move(trace)};
}

}  // namespace detail

//! Pointwise informed kernel: the neighbourhood is generated at full strength
//! (xi = 1), its positions are visited in random order, and each position is
//! flipped or kept from a two-model balanced measure. The acceptance
//! probability reduces to the product of forward over reverse normalising
//! constants, so at most p_k new posteriors are evaluated.
inline StepResult parni_step(ModelState& state, const ProposalParams& params, const Dataset& data,
                             const PriorSpec& prior, Rng& rng, ParniTrace* trace_out = nullptr) {
  const NeighbourhoodIndicator k = sample_k(*params.rates, 1.0, state.gamma(), rng);

  StepResult res;
  res.proposed = state.gamma();
  res.k_size = k.p_k;
  if (k.p_k == 0) {
    res.accepted = true;
    res.log_accept_prob = 0.0;
    if (trace_out) *trace_out = ParniTrace{k, {}, 0.0, 0.0, 0.0};
    return res;
  }

  auto chooser = [&rng](double log_p_flip) { return rng.log_uniform() < log_p_flip; };
  auto [cand, trace] = detail::parni_path(state, k, *params.rates, params.omega, params.balancing,
                                          data, prior, chooser, &res.models_evaluated);

  res.proposed = cand.gamma();
  res.hamming_jump = hamming_distance(state.gamma(), cand.gamma());
  res.log_accept_prob = std::min(0.0, trace.sum_log_z_fwd - trace.sum_log_z_rev);
  if (rng.log_uniform() < res.log_accept_prob) {
    res.accepted = true;
    state = std::move(cand);
  }
  if (trace_out) *trace_out = std::move(trace);
  return res;
}

}  // namespace bvs
