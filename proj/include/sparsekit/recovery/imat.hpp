#pragma once

#include <chrono>
#include <cmath>

#include "sparsekit/recovery/iterative.hpp"

namespace sparsekit {

struct ImatConfig {
  double beta = 0.0;  // 0 selects max |transform of the zero-filled samples|
  double alpha = 0.3;
  std::size_t max_iters = 100;
  double relax = 1.0;
  // Iteration stops once the threshold falls below floor_ratio * beta.
  double floor_ratio = 1e-12;
  // Least-squares re-fit of the coefficients on the detected support: never, once after the loop,
  // or after every thresholding step.
  enum class Refine { none, final, each };
  Refine refine = Refine::each;
  // Early exit once the sample residual is below this fraction of |y| and the support is stable; 0 disables.
  double stop_residual = 1e-12;
  double support_tol = 1e-6;

  void validate() const {
    require(beta >= 0.0, errc::invalid_argument, "ImatConfig: beta must be non-negative");
    require(alpha > 0.0, errc::invalid_argument, "ImatConfig: alpha must be positive");
    require(max_iters >= 1, errc::invalid_argument, "ImatConfig: max_iters must be >= 1");
    require(relax > 0.0 && relax < 2.0, errc::invalid_argument, "ImatConfig: relaxation must lie in (0, 2)");
  }

  double threshold(double b, std::size_t i) const { return b * std::exp(-alpha * static_cast<double>(i)); }
};

namespace detail {

inline SupportSet significant(const CVec& X, double rel_tol) {
  const double mx = X.cwiseAbs().maxCoeff();
  std::vector<std::size_t> idx;
  if (mx > 0.0)
    for (Eigen::Index i = 0; i < X.size(); ++i)
      if (std::abs(X[i]) > rel_tol * mx) idx.push_back(static_cast<std::size_t>(i));
  return SupportSet(std::move(idx), static_cast<std::size_t>(X.size()));
}

// Least-squares coefficients on `support` that best explain the samples.
inline CMat support_columns(const SupportSet& samples, const SupportSet& support, Eigen::Index n, Transform t);

inline CVec refit(const CVec& observed, const SupportSet& samples, const SupportSet& support, Transform t) {
  const auto n = observed.size();
  const CMat phi = support_columns(samples, support, n, t);
  const CVec coef = pseudo_inverse_solve(phi, gather(observed, samples));
  CVec X = CVec::Zero(n);
  scatter(X, support, coef);
  return X;
}

inline CMat support_columns(const SupportSet& samples, const SupportSet& support, Eigen::Index n, Transform t) {
  CMat phi(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(support.size()));
  for (std::size_t c = 0; c < support.size(); ++c) {
    CVec e = CVec::Zero(n);
    e[static_cast<Eigen::Index>(support[c])] = 1.0;
    phi.col(static_cast<Eigen::Index>(c)) = gather(inverse(t, e), samples);
  }
  return phi;
}

// When the columns on `support` are linearly dependent the least-squares fit is not unique; return the
// smallest subset that still explains the samples exactly, or `support` itself if the search budget is exceeded.
inline SupportSet sparsest_exact_subset(const CVec& observed, const SupportSet& samples, const SupportSet& support,
                                        Transform t, double budget = 1e5) {
  const CMat phi = support_columns(samples, support, observed.size(), t);
  Eigen::JacobiSVD<CMat> svd(phi);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv[i] > pinv_cutoff * sv[0];
  if (rank >= static_cast<Eigen::Index>(support.size())) return support;
  const CVec y = gather(observed, samples);
  const double tol = 1e-9 * std::max(y.norm(), 1e-300);
  for (std::size_t k = 1; k <= static_cast<std::size_t>(rank); ++k) {
    if (binomial(static_cast<int>(support.size()), static_cast<int>(k)) > budget) break;
    SupportSet found;
    bool ok = false;
    for_each_subset(support.size(), k, [&](const std::vector<std::size_t>& pick) {
      if (ok) return;
      CMat sub(phi.rows(), static_cast<Eigen::Index>(k));
      std::vector<std::size_t> idx;
      for (std::size_t c = 0; c < k; ++c) {
        sub.col(static_cast<Eigen::Index>(c)) = phi.col(static_cast<Eigen::Index>(pick[c]));
        idx.push_back(support[pick[c]]);
      }
      if ((sub * pseudo_inverse_solve(sub, y) - y).norm() <= tol) {
        ok = true;
        found = SupportSet(std::move(idx), support.ambient());
      }
    });
    if (ok) return found;
  }
  return support;
}

}  // namespace detail

struct ImatResult {
  CVec estimate;  // information (time) domain
  CVec coefficients;  // sparsity domain
  SupportSet support;
  Report report;
};

// Alternates sample replacement in the time domain with hard thresholding of the transform at beta*exp(-alpha*i).
inline ImatResult imat(const CVec& observed, const MaskSpec& sample_mask, Transform transform, const ImatConfig& cfg,
                       const CVec* reference = nullptr) {
  cfg.validate();
  check_signal(observed, "imat");
  require(sample_mask.kind == MaskSpec::Kind::time_sample, errc::invalid_argument, "imat: needs a time-sample mask");
  require(static_cast<std::size_t>(observed.size()) == sample_mask.n(), errc::invalid_argument,
          "imat: observed length does not match mask");
  const auto t0 = std::chrono::steady_clock::now();
  const auto& S = sample_mask.support;
  const Eigen::Index n = observed.size();

  ImatResult out;
  Report& rep = out.report;
  rep.solver = "imat";
  rep.params = {{"alpha", cfg.alpha}, {"relax", cfg.relax}, {"max_iters", static_cast<double>(cfg.max_iters)}};

  if (S.size() == static_cast<std::size_t>(n)) {
    out.coefficients = forward(transform, observed);
    out.estimate = observed;
    out.support = detail::significant(out.coefficients, cfg.support_tol);
    rep.iterations = 1;
    rep.converged = true;
    rep.residual_trace.push_back(0.0);
    if (reference) rep.snr_trace.push_back(snr_db(*reference, observed));
  } else {
    const CVec y = masked(observed, S);
    const double beta = cfg.beta > 0.0 ? cfg.beta : forward(transform, y).cwiseAbs().maxCoeff();
    rep.params["beta"] = beta;
    CVec X = CVec::Zero(n);
    CVec x = CVec::Zero(n);
    SupportSet prev;
    const double ynorm = y.norm();
    for (std::size_t i = 1; i <= cfg.max_iters; ++i) {
      const double thr = cfg.threshold(beta, i);
      const CVec xr = x + cfg.relax * (y - masked(x, S));
      X = forward(transform, xr);
      for (Eigen::Index j = 0; j < n; ++j)
        if (std::abs(X[j]) < thr) X[j] = 0.0;
      SupportSet cur = detail::significant(X, 0.0);
      if (cfg.refine == ImatConfig::Refine::each && !cur.empty() && cur.size() <= S.size())
        X = detail::refit(observed, S, cur, transform);
      x = inverse(transform, X);
      const double residual = (y - masked(x, S)).norm();
      rep.iterations = i;
      rep.threshold_trace.push_back(thr);
      rep.residual_trace.push_back(residual);
      if (reference) rep.snr_trace.push_back(snr_db(*reference, x));
      const bool stable = cur == prev;
      prev = std::move(cur);
      if (thr < cfg.floor_ratio * beta || beta == 0.0 ||
          (cfg.stop_residual > 0.0 && stable && residual <= cfg.stop_residual * ynorm)) {
        rep.converged = true;
        break;
      }
    }
    if (beta == 0.0) rep.converged = true;
    out.support = detail::significant(X, cfg.support_tol);
    if (cfg.refine != ImatConfig::Refine::none && !out.support.empty() && out.support.size() <= S.size()) {
      const SupportSet narrowed = detail::sparsest_exact_subset(observed, S, out.support, transform);
      if (narrowed.size() < out.support.size()) rep.params["narrowed_from"] = static_cast<double>(out.support.size());
      X = detail::refit(observed, S, narrowed, transform);
      x = inverse(transform, X);
      out.support = detail::significant(X, cfg.support_tol);
      rep.residual_trace.push_back((y - masked(x, S)).norm());
      if (reference) rep.snr_trace.push_back(snr_db(*reference, x));
    }
    if (!rep.converged) rep.nonconvergence = true;
    out.coefficients = X;
    out.estimate = x;
  }
  rep.estimate = out.estimate;
  rep.support = out.support;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace sparsekit
