#pragma once

#include <Eigen/Dense>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bvs/math.hpp"
#include "bvs/model_state.hpp"

namespace bvs {

//! Exact posterior over all 2^p models, normalized in log space.
struct ExactPosterior {
  std::vector<double> log_probs;  // index encodes gamma: bit j == gamma_j
  Eigen::VectorXd pips;
};

//! Visits all 2^p models in binary-reflected Gray-code order so consecutive
//! models differ in one flip, reusing the incremental Cholesky updates.
//! Model indices in log_probs use plain binary encoding.
inline ExactPosterior enumerate_posterior(const Dataset& data, const PriorSpec& prior, int max_p = 20) {
  const int p = static_cast<int>(data.p);
  if (p > max_p)
    throw std::invalid_argument("enumerate_posterior: p = " + std::to_string(p) +
                                " exceeds the enumeration cap " + std::to_string(max_p));
  const std::uint64_t n_models = std::uint64_t{1} << p;

  ExactPosterior out;
  out.log_probs.assign(n_models, kNegInf);

  // Singular models (possible under the g-prior) get zero mass; the walk
  // resumes single-flip updates from the last non-singular state.
  ModelState state = make_model_state(data, prior, GammaVector(p));
  std::uint64_t state_code = 0;
  out.log_probs[0] = state.log_post();
  std::uint64_t gray = 0;
  for (std::uint64_t i = 1; i < n_models; ++i) {
    const int bit = std::countr_zero(i);
    gray ^= std::uint64_t{1} << bit;
    try {
      if ((state_code ^ gray) == (std::uint64_t{1} << bit)) {
        state = flip_model_state(state, bit, data, prior);
      } else {
        GammaVector g(p);
        for (int j = 0; j < p; ++j)
          if (gray & (std::uint64_t{1} << j)) g.set(j, true);
        state = make_model_state(data, prior, g);
      }
      state_code = gray;
      out.log_probs[gray] = state.log_post();
    } catch (const SingularModelError&) {
      out.log_probs[gray] = kNegInf;
    }
  }

  const double lse = logsumexp(out.log_probs);
  for (auto& lp : out.log_probs) lp -= lse;

  out.pips.resize(p);
  for (int j = 0; j < p; ++j) {
    double m = kNegInf;
    for (std::uint64_t idx = 0; idx < n_models; ++idx)
      if (idx & (std::uint64_t{1} << j)) m = std::max(m, out.log_probs[idx]);
    if (m == kNegInf) {
      out.pips[j] = 0.0;
      continue;
    }
    double acc = 0.0;
    for (std::uint64_t idx = 0; idx < n_models; ++idx)
      if (idx & (std::uint64_t{1} << j)) acc += std::exp(out.log_probs[idx] - m);
    out.pips[j] = std::exp(m + std::log(acc));
  }
  return out;
}

}  // namespace bvs
