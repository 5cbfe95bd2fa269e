#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bvs/adapt.hpp"
#include "bvs/model_state.hpp"
#include "bvs/rng.hpp"
#include "bvs/samplers.hpp"

namespace bvs {

enum class SamplerKind { ads, asi, arn, arni, parni_rm, parni_kw };

inline const char* sampler_name(SamplerKind s) {
  switch (s) {
    case SamplerKind::ads: return "ads";
    case SamplerKind::asi: return "asi";
    case SamplerKind::arn: return "arn";
    case SamplerKind::arni: return "arni";
    case SamplerKind::parni_rm: return "parni_rm";
    case SamplerKind::parni_kw: return "parni_kw";
  }
  return "?";
}

struct RunConfig {
  SamplerKind sampler = SamplerKind::parni_kw;
  Balancing balancing = Balancing::hastings;
  int chains = 25;
  long iterations = 5000;
  long burn_in = 1000;
  std::uint64_t seed = 1;
  double tau = 0.65;
  double s = 5.0;
  double pi0 = 1e-3;
  double eps = 1e-3;
  int max_pk = 12;
  int threads = 1;
  bool fix_omega = false;
  double omega_init = 0.5;
  double zeta_init = 0.5;
  double xi_init = 0.5;
  double time_budget_s = 0.0;  // 0 disables the wall-clock cutoff

  void validate(int p) const {
    (void)p;
    if (chains < 1) throw std::invalid_argument("run: need at least one chain");
    if (sampler == SamplerKind::parni_kw && (chains < 2 || chains % 2 != 0))
      throw std::invalid_argument("run: Kiefer-Wolfowitz adaptation needs an even number of chains >= 2");
    if (iterations < 1) throw std::invalid_argument("run: iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations)
      throw std::invalid_argument("run: burn_in must satisfy 0 <= burn_in < iterations");
    if (threads < 1) throw std::invalid_argument("run: threads must be >= 1");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("run: tau must lie in (0,1)");
    if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("run: eps must lie in (0,1/2)");
    if (!(pi0 > 0.0 && pi0 < 0.5)) throw std::invalid_argument("run: pi0 must lie in (0,1/2)");
  }
};

struct TraceRecord {
  long iteration = 0;  // 1-based
  int chain = 0;
  double log_post = 0.0;
  int p_gamma = 0;
  bool accepted = false;
  double log_accept_prob = 0.0;
  double omega = 0.0;
  double zeta_or_xi = 0.0;
};

using TraceSink = std::function<void(const TraceRecord&)>;

struct RunOutput {
  Eigen::VectorXd pip_rb;    // Rao-Blackwellised running means
  Eigen::VectorXd pip_freq;  // raw inclusion frequencies
  double acceptance_rate = 0.0;
  double mean_asjd = 0.0;
  double wall_time_s = 0.0;
  long iterations_run = 0;
  double omega_final = 0.0;
  double omega_postburn_sd = 0.0;
  std::vector<double> omega_by_iter;  // shared omega after each iteration
};

namespace detail {

// Fixed-partition fork-join pool. Work items are indexed, each worker owns a
// contiguous block, so results never depend on scheduling.
class WorkerPool {
 public:
  explicit WorkerPool(int n_workers) : n_workers_(n_workers) {
    if (n_workers_ < 2) return;
    workers_.reserve(static_cast<std::size_t>(n_workers_ - 1));
    for (int w = 1; w < n_workers_; ++w)
      workers_.emplace_back([this, w] { worker_loop(w); });
  }

  ~WorkerPool() {
    if (n_workers_ < 2) return;
    {
      std::unique_lock lk(mu_);
      stop_ = true;
      ++generation_;
    }
    cv_go_.notify_all();
    for (auto& t : workers_) t.join();
  }

  // Runs fn(i) for i in [0, n), partitioned contiguously across workers.
  void run(int n, const std::function<void(int)>& fn) {
    if (n_workers_ < 2) {
      for (int i = 0; i < n; ++i) fn(i);
      return;
    }
    {
      std::unique_lock lk(mu_);
      fn_ = &fn;
      n_items_ = n;
      pending_ = n_workers_ - 1;
      ++generation_;
    }
    cv_go_.notify_all();
    run_block(0);
    std::unique_lock lk(mu_);
    cv_done_.wait(lk, [this] { return pending_ == 0; });
    fn_ = nullptr;
  }

 private:
  void run_block(int w) {
    const int lo = static_cast<int>(static_cast<long>(n_items_) * w / n_workers_);
    const int hi = static_cast<int>(static_cast<long>(n_items_) * (w + 1) / n_workers_);
    for (int i = lo; i < hi; ++i) (*fn_)(i);
  }

  void worker_loop(int w) {
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock lk(mu_);
        cv_go_.wait(lk, [this, &seen] { return generation_ != seen; });
        seen = generation_;
        if (stop_) return;
      }
      run_block(w);
      {
        std::unique_lock lk(mu_);
        if (--pending_ == 0) cv_done_.notify_one();
      }
    }
  }

  int n_workers_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_go_, cv_done_;
  const std::function<void(int)>* fn_ = nullptr;
  int n_items_ = 0;
  int pending_ = 0;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

struct Chain {
  ModelState state;
  Rng rng;
  Eigen::VectorXd rb_logits;
  bool rb_valid = false;
  StepResult last;
};

}  // namespace detail

//! Advances L chains with shared adaptive parameters. Within an iteration the
//! chains step concurrently against the frozen AdaptState; the single-writer
//! barrier then folds in the Rao-Blackwell logits (in fixed chain order) and
//! applies the sampler's scalar updates. Adaptation of the proposal
//! parameters stops after burn_in; the PIP running mean restarts there and
//! keeps accumulating, so the reported estimates average post-burn-in
//! conditionals only.
inline RunOutput run_chains(const Dataset& data, const PriorSpec& prior, const RunConfig& cfg,
                            const TraceSink& sink = nullptr) {
  const auto t_start = std::chrono::steady_clock::now();
  const int p = static_cast<int>(data.p);
  cfg.validate(p);
  prior.validate();

  AdaptState adapt = AdaptState::init(p, cfg.pi0, cfg.eps, prior.inclusion_mean(),
                                      AdaptTargets{cfg.tau, cfg.s}, cfg.zeta_init, cfg.xi_init,
                                      cfg.omega_init);

  const int L = cfg.chains;
  std::vector<detail::Chain> chains;
  chains.reserve(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l)
    chains.push_back({make_model_state(data, prior, GammaVector(p)),
                      Rng::for_stream(cfg.seed, static_cast<std::uint64_t>(l)),
                      Eigen::VectorXd(), false, StepResult{}});

  detail::WorkerPool pool(cfg.threads);

  RunOutput out;
  out.pip_freq = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd freq_acc = Eigen::VectorXd::Zero(p);
  long freq_n = 0;
  double acc_sum = 0.0, asjd_sum = 0.0;
  long metric_n = 0;
  std::vector<double> omega_postburn;
  Eigen::MatrixXd logits(L, p);

  const bool is_kw = cfg.sampler == SamplerKind::parni_kw;
  long iter = 0;
  for (iter = 1; iter <= cfg.iterations; ++iter) {
    if (cfg.time_budget_s > 0.0) {
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      if (elapsed >= cfg.time_budget_s) break;
    }
    const bool adapting = iter <= cfg.burn_in;

    double omega_plus = adapt.omega(), omega_minus = adapt.omega(), c_i = 0.0;
    if (is_kw && adapting && !cfg.fix_omega) {
      c_i = std::pow(static_cast<double>(iter), -0.5);
      omega_plus = inv_logit_eps(adapt.omega_logit + c_i, cfg.eps);
      omega_minus = inv_logit_eps(adapt.omega_logit - c_i, cfg.eps);
    }

    pool.run(L, [&](int l) {
      auto& ch = chains[static_cast<std::size_t>(l)];
      ProposalParams params;
      params.rates = &adapt.rates;
      params.zeta = adapt.zeta();
      params.xi = adapt.xi();
      params.omega = is_kw ? (l < L / 2 ? omega_plus : omega_minus) : adapt.omega();
      params.balancing = cfg.balancing;
      params.max_pk = cfg.max_pk;
      switch (cfg.sampler) {
        case SamplerKind::ads: ch.last = ads_step(ch.state, data, prior, ch.rng); break;
        case SamplerKind::asi: ch.last = asi_step(ch.state, params, data, prior, ch.rng); break;
        case SamplerKind::arn: ch.last = arn_step(ch.state, params, data, prior, ch.rng); break;
        case SamplerKind::arni: ch.last = arni_step(ch.state, params, data, prior, ch.rng); break;
        case SamplerKind::parni_rm:
        case SamplerKind::parni_kw: ch.last = parni_step(ch.state, params, data, prior, ch.rng); break;
      }
      if (ch.last.accepted || !ch.rb_valid) {
        ch.rb_logits = rb_flip_logits(ch.state, data, prior);
        ch.rb_valid = true;
      }
    });

    // Barrier: single writer, fixed chain order.
    double alpha_sum = 0.0, pk_sum = 0.0;
    for (int l = 0; l < L; ++l) {
      const auto& ch = chains[static_cast<std::size_t>(l)];
      logits.row(l) = ch.rb_logits;
      alpha_sum += std::exp(std::min(0.0, ch.last.log_accept_prob));
      pk_sum += ch.last.k_size;
      if (sink) {
        TraceRecord rec;
        rec.iteration = iter;
        rec.chain = l;
        rec.log_post = ch.state.log_post();
        rec.p_gamma = ch.state.p_gamma();
        rec.accepted = ch.last.accepted;
        rec.log_accept_prob = ch.last.log_accept_prob;
        rec.omega = is_kw && adapting && !cfg.fix_omega ? (l < L / 2 ? omega_plus : omega_minus)
                                                        : adapt.omega();
        rec.zeta_or_xi = cfg.sampler == SamplerKind::asi
                             ? adapt.zeta()
                             : (cfg.sampler == SamplerKind::arn || cfg.sampler == SamplerKind::arni
                                    ? adapt.xi()
                                    : 1.0);
        sink(rec);
      }
    }
    const double mean_alpha = alpha_sum / L;

    if (!adapting) {
      rb_accumulate(adapt, logits);
      for (int l = 0; l < L; ++l)
        for (int j = 0; j < p; ++j)
          if (chains[static_cast<std::size_t>(l)].state.gamma().test(j)) freq_acc[j] += 1.0;
      freq_n += L;
      acc_sum += mean_alpha;
      double jump_sq = 0.0;
      for (int l = 0; l < L; ++l) {
        const auto& r = chains[static_cast<std::size_t>(l)].last;
        jump_sq += static_cast<double>(r.hamming_jump) * r.hamming_jump *
                   std::exp(std::min(0.0, r.log_accept_prob));
      }
      asjd_sum += jump_sq / L;
      ++metric_n;
      omega_postburn.push_back(adapt.omega());
    } else {
      rb_update(adapt, logits);
      const double phi = std::pow(static_cast<double>(iter), -0.7);
      switch (cfg.sampler) {
        case SamplerKind::ads:
          break;
        case SamplerKind::asi:
          adapt.zeta_logit = rm_update(adapt.zeta_logit, mean_alpha, cfg.tau, phi);
          break;
        case SamplerKind::arn:
        case SamplerKind::arni:
          adapt.xi_logit = rm_update(adapt.xi_logit, pk_sum / L, cfg.s, phi);
          if (!cfg.fix_omega)
            adapt.omega_logit = rm_update(adapt.omega_logit, mean_alpha, cfg.tau, phi);
          break;
        case SamplerKind::parni_rm:
          if (!cfg.fix_omega)
            adapt.omega_logit = rm_update(adapt.omega_logit, mean_alpha, cfg.tau, phi);
          break;
        case SamplerKind::parni_kw:
          if (!cfg.fix_omega) {
            KWBatch batch;
            batch.omega_plus = omega_plus;
            batch.omega_minus = omega_minus;
            batch.a_i = 1.0 / static_cast<double>(iter);
            batch.c_i = c_i;
            std::vector<StepResult> plus, minus;
            for (int l = 0; l < L; ++l) {
              if (l < L / 2) {
                batch.plus_ids.push_back(l);
                plus.push_back(chains[static_cast<std::size_t>(l)].last);
              } else {
                batch.minus_ids.push_back(l);
                minus.push_back(chains[static_cast<std::size_t>(l)].last);
              }
            }
            batch.asjd_plus = asjd(plus);
            batch.asjd_minus = asjd(minus);
            kw_update(adapt, batch);
          }
          break;
      }
      adapt.iter = iter;
      if (iter == cfg.burn_in) reset_rb_mean(adapt);
    }
    out.omega_by_iter.push_back(adapt.omega());
  }

  out.iterations_run = iter > cfg.iterations ? cfg.iterations : iter - 1;
  out.pip_rb = adapt.pip_hat;
  if (freq_n > 0) out.pip_freq = freq_acc / static_cast<double>(freq_n);
  out.acceptance_rate = metric_n > 0 ? acc_sum / metric_n : 0.0;
  out.mean_asjd = metric_n > 0 ? asjd_sum / metric_n : 0.0;
  out.omega_final = adapt.omega();
  if (omega_postburn.size() > 1) {
    double mean = 0.0;
    for (double w : omega_postburn) mean += w;
    mean /= static_cast<double>(omega_postburn.size());
    double var = 0.0;
    for (double w : omega_postburn) var += (w - mean) * (w - mean);
    out.omega_postburn_sd = std::sqrt(var / static_cast<double>(omega_postburn.size()));
  }
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

}  // namespace bvs
