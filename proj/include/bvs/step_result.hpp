#pragma once

#include "bvs/gamma.hpp"

namespace bvs {

//! Per-step outcome. hamming_jump records the proposal distance whether or
//! not the move was accepted; squared-jump summaries weight it by the
//! acceptance probability.
struct StepResult {
  GammaVector proposed;
  bool accepted = false;
  double log_accept_prob = 0.0;  // <= 0, -inf for impossible moves
  int hamming_jump = 0;
  int k_size = 0;                // 0 for add-delete-swap
  long models_evaluated = 0;
};

}  // namespace bvs
