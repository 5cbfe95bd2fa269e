#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "bvs/dataset.hpp"
#include "bvs/gamma.hpp"
#include "bvs/math.hpp"
#include "bvs/prior.hpp"

namespace bvs {

// Thrown when the active design is (numerically) collinear under the g-prior,
// or when p_gamma >= n-1 makes the g-prior marginal undefined.
struct SingularModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr double kSingularRelTol = 1e-12;
inline constexpr double kResidualFloor = 1e-300;
inline constexpr int kRefactorInterval = 1024;

inline void warn_residual_clamped() {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true))
    std::cerr << "warning: residual quadratic form clamped at " << kResidualFloor
              << "; model fits the response almost perfectly\n";
}

// In-place rank-one update: L L' + v v' -> L L', L lower triangular.
inline void chol_rank1_update(Eigen::Ref<Eigen::MatrixXd> L, Eigen::VectorXd v) {
  const Eigen::Index m = L.rows();
  for (Eigen::Index k = 0; k < m; ++k) {
    const double r = std::hypot(L(k, k), v[k]);
    const double c = r / L(k, k);
    const double s = v[k] / L(k, k);
    L(k, k) = r;
    if (k + 1 < m) {
      L.col(k).tail(m - k - 1) = (L.col(k).tail(m - k - 1) + s * v.tail(m - k - 1)) / c;
      v.tail(m - k - 1) = c * v.tail(m - k - 1) - s * L.col(k).tail(m - k - 1);
    }
  }
}

// Removes row/column q from the factor of an m x m matrix: rows above q are
// untouched, the trailing block absorbs the deleted column by a rank-one
// update.
inline Eigen::MatrixXd chol_delete(const Eigen::MatrixXd& L, int q) {
  const Eigen::Index m = L.rows();
  const Eigen::Index t = m - q - 1;  // trailing size
  Eigen::MatrixXd out(m - 1, m - 1);
  out.topLeftCorner(q, q) = L.topLeftCorner(q, q);
  if (t > 0) {
    out.bottomLeftCorner(t, q) = L.block(q + 1, 0, t, q);
    out.bottomRightCorner(t, t) = L.block(q + 1, q + 1, t, t);
    out.topRightCorner(q, t).setZero();
    Eigen::VectorXd v = L.col(q).segment(q + 1, t);
    chol_rank1_update(out.bottomRightCorner(t, t), std::move(v));
  }
  return out;
}

}  // namespace detail

//! Posterior state of one model: gamma plus the Cholesky factor of
//! F = X_g'X_g + (g V_g)^-1, sufficient statistics, and the log posterior.
//! Columns of F follow the insertion order in active(), not index order.
class ModelState {
 public:
  ModelState() = default;

  const GammaVector& gamma() const { return gamma_; }
  const std::vector<int>& active() const { return active_; }
  int p_gamma() const { return gamma_.count(); }
  const Eigen::MatrixXd& chol() const { return L_; }
  const Eigen::VectorXd& xty() const { return xty_; }
  double s_gamma() const { return s_gamma_; }
  double log_ml() const { return log_ml_; }
  double log_prior() const { return log_prior_; }
  double log_post() const { return log_post_; }

  friend ModelState make_model_state(const Dataset&, const PriorSpec&, const GammaVector&);
  friend ModelState flip_model_state(const ModelState&, int, const Dataset&, const PriorSpec&);
  friend Eigen::VectorXd rb_flip_logits(const ModelState&, const Dataset&, const PriorSpec&);

 private:
  GammaVector gamma_;
  std::vector<int> active_;
  Eigen::MatrixXd L_;
  Eigen::VectorXd xty_;
  Eigen::VectorXd w_;  // L^-1 xty
  double s_gamma_ = 0.0;
  double log_det_f_ = 0.0;
  double log_ml_ = 0.0;
  double log_prior_ = 0.0;
  double log_post_ = 0.0;
  int ops_since_refactor_ = 0;

  static double gram_scale(const PriorSpec& prior) {
    return prior.v_form == VForm::gprior ? (1.0 + prior.g) / prior.g : 1.0;
  }

  double diag_entry(const Dataset& data, const PriorSpec& prior, int j) const {
    if (prior.v_form == VForm::gprior) return gram_scale(prior) * data.col_norm2[j];
    return data.col_norm2[j] + 1.0 / prior.g;
  }

  void finalize(const Dataset& data, const PriorSpec& prior) {
    const int m = static_cast<int>(active_.size());
    s_gamma_ = data.yty - w_.squaredNorm();
    if (s_gamma_ < detail::kResidualFloor) {
      s_gamma_ = detail::kResidualFloor;
      detail::warn_residual_clamped();
    }
    log_det_f_ = 0.0;
    for (int q = 0; q < m; ++q) log_det_f_ += 2.0 * std::log(L_(q, q));
    const double half_nm1 = 0.5 * static_cast<double>(data.n - 1);
    if (prior.v_form == VForm::gprior)
      log_ml_ = -0.5 * m * std::log1p(prior.g) - half_nm1 * std::log(s_gamma_);
    else
      log_ml_ = -0.5 * (m * std::log(prior.g) + log_det_f_) - half_nm1 * std::log(s_gamma_);
    log_prior_ = log_model_prior(prior, m, static_cast<int>(data.p));
    log_post_ = log_ml_ + log_prior_;
  }

  void build(const Dataset& data, const PriorSpec& prior) {
    const int m = static_cast<int>(active_.size());
    if (prior.v_form == VForm::gprior && m >= data.n - 1)
      throw SingularModelError("g-prior marginal undefined for p_gamma >= n-1");
    Eigen::MatrixXd f(m, m);
    const double scale = gram_scale(prior);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c <= r; ++c) {
        double v = data.has_gram() ? data.gram(active_[r], active_[c])
                                   : data.X.col(active_[r]).dot(data.X.col(active_[c]));
        v *= scale;
        if (r == c && prior.v_form == VForm::identity) v = data.col_norm2[active_[r]] + 1.0 / prior.g;
        f(r, c) = v;
        f(c, r) = v;
      }
    xty_.resize(m);
    for (int q = 0; q < m; ++q) xty_[q] = data.xty[active_[q]];
    if (m > 0) {
      Eigen::LLT<Eigen::MatrixXd> llt(f);
      if (llt.info() != Eigen::Success)
        throw SingularModelError("active design is collinear");
      L_ = llt.matrixL();
      w_ = L_.triangularView<Eigen::Lower>().solve(xty_);
    } else {
      L_.resize(0, 0);
      w_.resize(0);
    }
    ops_since_refactor_ = 0;
    finalize(data, prior);
  }

  void add_column(int j, const Dataset& data, const PriorSpec& prior) {
    const int m = static_cast<int>(active_.size());
    if (prior.v_form == VForm::gprior && m + 1 >= data.n - 1)
      throw SingularModelError("g-prior marginal undefined for p_gamma >= n-1");
    const double scale = gram_scale(prior);
    const double fjj = diag_entry(data, prior, j);
    Eigen::VectorXd l;
    double d2 = fjj;
    if (m > 0) {
      Eigen::VectorXd c = scale * data.cross(active_, j);
      l = L_.triangularView<Eigen::Lower>().solve(c);
      d2 = fjj - l.squaredNorm();
    }
    if (!(d2 > detail::kSingularRelTol * fjj))
      throw SingularModelError("adding variable " + std::to_string(j) + " makes the active design collinear");
    const double d = std::sqrt(d2);
    L_.conservativeResize(m + 1, m + 1);
    L_.row(m).head(m) = l.transpose();
    L_.col(m).head(m).setZero();
    L_(m, m) = d;
    const double wnew = (data.xty[j] - (m > 0 ? l.dot(w_) : 0.0)) / d;
    xty_.conservativeResize(m + 1);
    xty_[m] = data.xty[j];
    w_.conservativeResize(m + 1);
    w_[m] = wnew;
    active_.push_back(j);
    gamma_.set(j, true);
    if (++ops_since_refactor_ >= detail::kRefactorInterval) {
      build(data, prior);
    } else {
      finalize(data, prior);
    }
  }

  void remove_column(int j, const Dataset& data, const PriorSpec& prior) {
    const int m = static_cast<int>(active_.size());
    int q = -1;
    for (int i = 0; i < m; ++i)
      if (active_[i] == j) { q = i; break; }
    if (q < 0) throw std::logic_error("remove_column: variable not active");
    gamma_.set(j, false);
    active_.erase(active_.begin() + q);
    if (m == 1) {
      L_.resize(0, 0);
      xty_.resize(0);
      w_.resize(0);
      ops_since_refactor_ = 0;
      finalize(data, prior);
      return;
    }
    if (m > 64) {
      // Stability guard: refactor large problems from scratch.
      build(data, prior);
      return;
    }
    L_ = detail::chol_delete(L_, q);
    Eigen::VectorXd xty_new(m - 1);
    xty_new.head(q) = xty_.head(q);
    xty_new.tail(m - 1 - q) = xty_.tail(m - 1 - q);
    xty_ = std::move(xty_new);
    w_ = L_.triangularView<Eigen::Lower>().solve(xty_);
    if (++ops_since_refactor_ >= detail::kRefactorInterval) {
      build(data, prior);
    } else {
      finalize(data, prior);
    }
  }
};

inline ModelState make_model_state(const Dataset& data, const PriorSpec& prior, const GammaVector& gamma) {
  ModelState s;
  s.gamma_ = gamma;
  s.active_ = gamma.active();
  s.build(data, prior);
  return s;
}

inline ModelState flip_model_state(const ModelState& state, int j, const Dataset& data, const PriorSpec& prior) {
  ModelState s = state;
  if (s.gamma().test(j))
    s.remove_column(j, data, prior);
  else
    s.add_column(j, data, prior);
  return s;
}

//! log p(y|gamma) + const, built from scratch.
inline double log_marginal_likelihood(const Dataset& data, const PriorSpec& prior, const GammaVector& gamma) {
  return make_model_state(data, prior, gamma).log_ml();
}

//! Rao-Blackwell flip logits: d_j = log pi(gamma_j=1, gamma_-j | y)
//!                                - log pi(gamma_j=0, gamma_-j | y) for all j.
//! One shared back-solve serves every deletion; additions go through a single
//! batched triangular solve against the cached Gram columns.
inline Eigen::VectorXd rb_flip_logits(const ModelState& state, const Dataset& data, const PriorSpec& prior) {
  const int p = static_cast<int>(data.p);
  const int m = state.p_gamma();
  const double half_nm1 = 0.5 * static_cast<double>(data.n - 1);
  const double scale = prior.v_form == VForm::gprior ? (1.0 + prior.g) / prior.g : 1.0;
  const double log_g_term =
      prior.v_form == VForm::gprior ? std::log1p(prior.g) : std::log(prior.g);
  const double s_cur = state.s_gamma();
  const bool gp = prior.v_form == VForm::gprior;

  Eigen::VectorXd d(p);

  Eigen::MatrixXd linv;
  Eigen::VectorXd w;            // L^-1 X'y
  Eigen::VectorXd beta_tilde;   // F^-1 X'y
  Eigen::VectorXd finv_diag;
  if (m > 0) {
    linv = Eigen::MatrixXd::Identity(m, m);
    state.chol().triangularView<Eigen::Lower>().solveInPlace(linv);
    w = state.chol().triangularView<Eigen::Lower>().solve(state.xty());
    beta_tilde = state.chol().transpose().triangularView<Eigen::Upper>().solve(w);
    finv_diag = linv.array().square().colwise().sum();
  }

  // Deletions: O(1) per active variable given diag(F^-1) and F^-1 X'y.
  // det(F_-q) = det(F) (F^-1)_qq and S_-q = S + beta_q^2 / (F^-1)_qq.
  for (int q = 0; q < m; ++q) {
    const int j = state.active()[static_cast<std::size_t>(q)];
    const double gqq = finv_diag[q];
    const double s_del = s_cur + beta_tilde[q] * beta_tilde[q] / gqq;
    const double dll = 0.5 * log_g_term - (gp ? 0.0 : 0.5 * std::log(gqq)) -
                       half_nm1 * std::log(s_del / s_cur);
    d[j] = -dll + log_prior_add_delta(prior, m - 1, p);
  }

  // Additions: batched L^-1 solve over the inactive cross-product columns.
  std::vector<int> inactive;
  inactive.reserve(static_cast<std::size_t>(p - m));
  for (int j = 0; j < p; ++j)
    if (!state.gamma().test(j)) inactive.push_back(j);
  if (!inactive.empty()) {
    const int q = static_cast<int>(inactive.size());
    Eigen::MatrixXd wsolve;
    if (m > 0) {
      Eigen::MatrixXd c(m, q);
      if (data.has_gram()) {
        for (int t = 0; t < q; ++t)
          for (int r = 0; r < m; ++r) c(r, t) = data.gram(state.active()[static_cast<std::size_t>(r)], inactive[static_cast<std::size_t>(t)]);
      } else {
        Eigen::MatrixXd xa(data.n, m);
        for (int r = 0; r < m; ++r) xa.col(r) = data.X.col(state.active()[static_cast<std::size_t>(r)]);
        Eigen::MatrixXd xi(data.n, q);
        for (int t = 0; t < q; ++t) xi.col(t) = data.X.col(inactive[static_cast<std::size_t>(t)]);
        c = xa.transpose() * xi;
      }
      c *= scale;
      wsolve = state.chol().triangularView<Eigen::Lower>().solve(c);
    }
    for (int t = 0; t < q; ++t) {
      const int j = inactive[static_cast<std::size_t>(t)];
      const double fjj = gp ? scale * data.col_norm2[j] : data.col_norm2[j] + 1.0 / prior.g;
      double d2 = fjj;
      double lw = 0.0;
      if (m > 0) {
        d2 -= wsolve.col(t).squaredNorm();
        lw = wsolve.col(t).dot(w);
      }
      const bool singular = !(d2 > detail::kSingularRelTol * fjj) ||
                            (gp && m + 1 >= data.n - 1);
      if (singular) {
        d[j] = kNegInf;  // g-prior: zero mass on collinear extensions
        continue;
      }
      const double wnew = (data.xty[j] - lw) / std::sqrt(d2);
      double s_add = s_cur - wnew * wnew;
      if (s_add < detail::kResidualFloor) s_add = detail::kResidualFloor;
      const double dll = -0.5 * log_g_term - (gp ? 0.0 : 0.5 * std::log(d2)) -
                         half_nm1 * std::log(s_add / s_cur);
      d[j] = dll + log_prior_add_delta(prior, m, p);
    }
  }
  return d;
}

}  // namespace bvs
