#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bvs/math.hpp"
#include "bvs/run.hpp"

namespace bvs {

//! Mean squared error split at `threshold` of the reference PIPs. A group
//! with no members is reported as absent rather than zero.
struct PipMse {
  std::optional<double> important;
  std::optional<double> unimportant;
};

inline PipMse pip_mse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference,
                      double threshold = 0.01) {
  if (estimate.size() != reference.size())
    throw std::invalid_argument("pip_mse: estimate and reference lengths differ");
  double imp = 0.0, unimp = 0.0;
  long n_imp = 0, n_unimp = 0;
  for (Eigen::Index j = 0; j < estimate.size(); ++j) {
    const double e2 = (estimate[j] - reference[j]) * (estimate[j] - reference[j]);
    if (reference[j] > threshold) {
      imp += e2;
      ++n_imp;
    } else {
      unimp += e2;
      ++n_unimp;
    }
  }
  PipMse out;
  if (n_imp > 0) out.important = imp / static_cast<double>(n_imp);
  if (n_unimp > 0) out.unimportant = unimp / static_cast<double>(n_unimp);
  return out;
}

//! log10(candidate/baseline); negative means the candidate is better.
inline double relative_log10_mse(double candidate_mse, double baseline_mse) {
  if (!(baseline_mse > 0.0)) throw std::invalid_argument("relative_log10_mse: baseline must be positive");
  if (candidate_mse == 0.0) return kNegInf;
  if (!(candidate_mse > 0.0)) throw std::invalid_argument("relative_log10_mse: candidate must be non-negative");
  return std::log10(candidate_mse / baseline_mse);
}

namespace detail {

inline std::string json_double(double v) {
  if (v == kNegInf) return "-1e999";  // parses back as -inf
  if (std::isnan(v)) return "null";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace detail

//! Streams one JSON object per (iteration, chain) record.
class JsonlTraceWriter {
 public:
  explicit JsonlTraceWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("trace: cannot write " + path);
  }

  void operator()(const TraceRecord& r) {
    out_ << "{\"iteration\":" << r.iteration << ",\"chain\":" << r.chain
         << ",\"log_post\":" << detail::json_double(r.log_post) << ",\"p_gamma\":" << r.p_gamma
         << ",\"accepted\":" << (r.accepted ? "true" : "false")
         << ",\"log_accept_prob\":" << detail::json_double(r.log_accept_prob)
         << ",\"omega\":" << detail::json_double(r.omega)
         << ",\"zeta_or_xi\":" << detail::json_double(r.zeta_or_xi) << "}\n";
  }

  void close() { out_.close(); }

 private:
  std::ofstream out_;
};

//! pips.csv: one row per variable, RB estimate next to the raw frequency.
inline void write_pips_csv(const std::string& path, const RunOutput& out,
                           const std::vector<std::string>& names) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("pips: cannot write " + path);
  f << "variable,pip_rb,pip_freq\n";
  for (Eigen::Index j = 0; j < out.pip_rb.size(); ++j) {
    const std::string name = names.empty() ? "x" + std::to_string(j + 1)
                                           : names[static_cast<std::size_t>(j)];
    f << name << ',' << detail::json_double(out.pip_rb[j]) << ','
      << detail::json_double(out.pip_freq[j]) << '\n';
  }
}

}  // namespace bvs
