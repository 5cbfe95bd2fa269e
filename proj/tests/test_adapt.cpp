#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bvs/bvs.hpp"
#include "support/kernel_oracles.hpp"
#include "support/test_util.hpp"

using namespace bvs;

namespace {

AdaptState fresh_adapt(int p, double pi0 = 1e-3, double eps = 1e-3) {
  return AdaptState::init(p, pi0, eps, 0.1, AdaptTargets{});
}

}  // namespace

TEST_CASE("rb_update: single chain, zero logit gives one half") {
  AdaptState a = fresh_adapt(3);
  reset_rb_mean(a);
  Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(1, 3);
  rb_update(a, logits);
  for (int j = 0; j < 3; ++j) REQUIRE(a.pip_hat[j] == Catch::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("rb_update: constant logits leave the mean at the single-step value") {
  AdaptState a = fresh_adapt(2);
  reset_rb_mean(a);
  Eigen::MatrixXd logits(1, 2);
  logits << 1.3, -0.4;
  for (int i = 0; i < 25; ++i) rb_update(a, logits);
  REQUIRE(a.pip_hat[0] == Catch::Approx(logistic(1.3)).epsilon(1e-13));
  REQUIRE(a.pip_hat[1] == Catch::Approx(logistic(-0.4)).epsilon(1e-13));
}

TEST_CASE("rb_update running mean equals batch recomputation") {
  const int p = 4, L = 3, iters = 10;
  AdaptState a = fresh_adapt(p);
  reset_rb_mean(a);
  Rng rng(7);
  Eigen::MatrixXd batch_mean = Eigen::MatrixXd::Zero(1, p);
  std::vector<Eigen::MatrixXd> all;
  for (int i = 0; i < iters; ++i) {
    Eigen::MatrixXd logits(L, p);
    for (int l = 0; l < L; ++l)
      for (int j = 0; j < p; ++j) logits(l, j) = 4.0 * rng.normal();
    all.push_back(logits);
    rb_update(a, logits);
  }
  for (int j = 0; j < p; ++j) {
    double total = 0.0;
    for (const auto& logits : all)
      for (int l = 0; l < L; ++l) total += logistic(logits(l, j));
    REQUIRE(a.pip_hat[j] == Catch::Approx(total / (iters * L)).margin(1e-12));
  }
}

TEST_CASE("pi_tilde is the pi0-shrunk mean and rates stay consistent") {
  AdaptState a = fresh_adapt(5, 0.01);
  reset_rb_mean(a);
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    Eigen::MatrixXd logits(2, 5);
    for (int l = 0; l < 2; ++l)
      for (int j = 0; j < 5; ++j) logits(l, j) = 6.0 * rng.normal();
    rb_update(a, logits);
    for (int j = 0; j < 5; ++j) {
      REQUIRE(a.pip_tilde[j] ==
              Catch::Approx(0.01 + 0.98 * a.pip_hat[j]).margin(1e-14));
      REQUIRE(a.pip_tilde[j] >= 0.01);
      REQUIRE(a.pip_tilde[j] <= 0.99);
    }
    const RateVector expect = optimal_rates(a.pip_tilde, a.eps);
    REQUIRE((a.rates.A - expect.A).lpNorm<Eigen::Infinity>() == 0.0);
    REQUIRE((a.rates.D - expect.D).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("diminishing adaptation: running-mean drift is bounded by 2/(i+1)") {
  AdaptState a = fresh_adapt(3);
  reset_rb_mean(a);
  Rng rng(13);
  Eigen::VectorXd prev = a.pip_hat;
  for (int i = 1; i <= 200; ++i) {
    Eigen::MatrixXd logits(4, 3);
    for (int l = 0; l < 4; ++l)
      for (int j = 0; j < 3; ++j) logits(l, j) = 10.0 * rng.normal();
    rb_update(a, logits);
    REQUIRE((a.pip_hat - prev).lpNorm<Eigen::Infinity>() <= 2.0 / i + 1e-15);
    prev = a.pip_hat;
  }
}

TEST_CASE("rm_update arithmetic") {
  REQUIRE(rm_update(0.37, 0.65, 0.65, 0.2) == Catch::Approx(0.37).margin(1e-16));
  REQUIRE(rm_update(0.0, 1.0, 0.65, 0.1) == Catch::Approx(0.035).epsilon(1e-13));
  // fixed point for any step size sequence
  Rng rng(17);
  double v = -1.2;
  for (int i = 1; i <= 50; ++i) v = rm_update(v, 0.3, 0.3, std::pow(i, -0.7));
  REQUIRE(v == Catch::Approx(-1.2).margin(1e-15));
}

TEST_CASE("scalars stay inside (eps, 1-eps) after arbitrary updates") {
  const double eps = 1e-3;
  AdaptState a = fresh_adapt(2, 1e-3, eps);
  Rng rng(19);
  for (int i = 1; i <= 300; ++i) {
    // acceptance-probability signals in [0,1], size signals in [0,p]
    a.omega_logit = rm_update(a.omega_logit, rng.uniform(), 0.65, std::pow(i, -0.7));
    a.zeta_logit = rm_update(a.zeta_logit, rng.uniform() < 0.8 ? 0.0 : 1.0, 0.65, std::pow(i, -0.7));
    a.xi_logit = rm_update(a.xi_logit, 10.0 * rng.uniform(), 5.0, std::pow(i, -0.7));
    REQUIRE(a.omega() > eps);
    REQUIRE(a.omega() < 1.0 - eps);
    REQUIRE(a.zeta() > eps);
    REQUIRE(a.zeta() < 1.0 - eps);
    REQUIRE(a.xi() >= eps);
    REQUIRE(a.xi() <= 1.0 - eps);
  }
  // drift can saturate the logit in floating point, but never escapes the
  // clipped interval
  a.omega_logit = 1e9;
  REQUIRE(a.omega() <= 1.0 - eps);
  a.omega_logit = -1e9;
  REQUIRE(a.omega() >= eps);
}

TEST_CASE("kw_update: equal batch objectives leave omega unchanged") {
  AdaptState a = fresh_adapt(2);
  const double before = a.omega_logit;
  KWBatch batch;
  batch.asjd_plus = 1.7;
  batch.asjd_minus = 1.7;
  batch.a_i = 0.5;
  batch.c_i = 0.3;
  kw_update(a, batch);
  REQUIRE(a.omega_logit == before);
  batch.asjd_plus = 2.0;
  kw_update(a, batch);
  REQUIRE(a.omega_logit == Catch::Approx(before + 0.5 * 0.3 / 0.6).epsilon(1e-13));
}

TEST_CASE("kw default sequences: sum a_i diverges, sum a_i c_i converges") {
  // a_i = 1/i, c_i = i^-1/2: partial sums of a_i keep growing; partial sums
  // of a_i c_i = i^-3/2 settle.
  double sa_1e4 = 0.0, sa_1e6 = 0.0, sac_1e4 = 0.0, sac_1e6 = 0.0;
  for (int i = 1; i <= 1000000; ++i) {
    const double a = 1.0 / i;
    const double ac = a * std::pow(i, -0.5);
    if (i <= 10000) {
      sa_1e4 += a;
      sac_1e4 += ac;
    }
    sa_1e6 += a;
    sac_1e6 += ac;
  }
  REQUIRE(sa_1e6 - sa_1e4 > 4.0);       // harmonic growth log(100)
  REQUIRE(sac_1e6 - sac_1e4 < 0.02);    // tail of a convergent p-series
}

TEST_CASE("asjd: rejected steps and a single accepted jump") {
  std::vector<StepResult> rejected(5);
  for (auto& r : rejected) {
    r.hamming_jump = 4;
    r.log_accept_prob = kNegInf;
  }
  REQUIRE(asjd(rejected) == 0.0);

  StepResult one;
  one.hamming_jump = 3;
  one.log_accept_prob = 0.0;
  std::vector<StepResult> single{one};
  REQUIRE(asjd(single) == Catch::Approx(9.0));

  std::vector<StepResult> none;
  REQUIRE_THROWS_AS(asjd(none), std::invalid_argument);
}

TEST_CASE("asjd Monte Carlo agrees with exactly enumerated ESJD (ASI, p = 3)") {
  const int p = 3;
  const Dataset data = bvs::testing::toy_dataset(20, p, 211);
  const PriorSpec prior = bvs::testing::identity_prior();
  const ExactPosterior exact = enumerate_posterior(data, prior);

  Eigen::VectorXd pi_tilde(p);
  pi_tilde << 0.3, 0.7, 0.45;
  const RateVector rates = optimal_rates(pi_tilde, 1e-3);
  const double zeta = 0.6;

  std::vector<double> log_post(8);
  for (std::uint64_t mask = 0; mask < 8; ++mask)
    log_post[mask] = make_model_state(data, prior, bvs::testing::gamma_from_mask(p, mask)).log_post();
  const Eigen::MatrixXd kernel = bvs::testing::asi_kernel(log_post, p, rates, zeta);
  const Eigen::VectorXd pi = bvs::testing::stationary_from_log_posts(log_post);
  const double esjd = bvs::testing::exact_esjd(kernel, pi, p);

  // Independent stationary starts, one step each.
  Rng rng(23);
  std::vector<ModelState> states;
  for (std::uint64_t mask = 0; mask < 8; ++mask)
    states.push_back(make_model_state(data, prior, bvs::testing::gamma_from_mask(p, mask)));
  const int draws = 10000;
  std::vector<StepResult> results;
  double sq_sum = 0.0;
  ProposalParams params;
  params.rates = &rates;
  params.zeta = zeta;
  for (int i = 0; i < draws; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    int start = 7;
    for (int s = 0; s < 8; ++s) {
      acc += pi[s];
      if (u < acc) {
        start = s;
        break;
      }
    }
    ModelState st = states[static_cast<std::size_t>(start)];
    results.push_back(asi_step(st, params, data, prior, rng));
    const auto& r = results.back();
    const double v = static_cast<double>(r.hamming_jump) * r.hamming_jump *
                     std::exp(std::min(0.0, r.log_accept_prob));
    sq_sum += v * v;
  }
  const double estimate = asjd(results);
  const double var = sq_sum / draws - estimate * estimate;
  const double se = std::sqrt(var / draws);
  REQUIRE(std::abs(estimate - esjd) < 3.0 * se);
}
