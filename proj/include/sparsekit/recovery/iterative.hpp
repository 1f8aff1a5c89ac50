#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "sparsekit/core/fft.hpp"
#include "sparsekit/core/linalg.hpp"
#include "sparsekit/core/metrics.hpp"
#include "sparsekit/core/types.hpp"

namespace sparsekit {

struct MaskSpec {
  enum class Kind { frequency_support, time_sample };
  Kind kind = Kind::time_sample;
  SupportSet support;
  // Amplitude of the sampling pulses; n/m turns uniform Nyquist-rate sampling into a one-step projection.
  double gain = 1.0;

  std::size_t n() const { return support.ambient(); }

  static MaskSpec time_samples(SupportSet s, double gain = 1.0) { return {Kind::time_sample, std::move(s), gain}; }
  static MaskSpec frequency(SupportSet s) { return {Kind::frequency_support, std::move(s), 1.0}; }
};

struct IterationConfig {
  std::size_t max_iters = 500;
  double relax = 1.0;
  double eps = 1e-10;
  double A = 0.0;  // frame bounds, Chebyshev only
  double B = 0.0;
  Transform transform = Transform::DFT;
  // When false, an infeasible sample count runs anyway and is flagged instead of rejected.
  bool enforce_sample_count = true;

  void validate() const {
    require(max_iters >= 1, errc::invalid_argument, "IterationConfig: max_iters must be >= 1");
    require(relax > 0.0 && relax < 2.0, errc::invalid_argument, "IterationConfig: relaxation must lie in (0, 2)");
    require(eps > 0.0, errc::invalid_argument, "IterationConfig: eps must be positive");
  }
};

// Linear operator x -> P(S(x)) on the bandlimited subspace: sample, then project onto the known support.
class BandlimitedOperator {
 public:
  BandlimitedOperator(const MaskSpec& sample_mask, const MaskSpec& sparsity_mask, Transform t)
      : samples_(sample_mask), band_(sparsity_mask), t_(t) {
    require(samples_.kind == MaskSpec::Kind::time_sample, errc::invalid_argument, "sample mask must be a time-sample mask");
    require(band_.kind == MaskSpec::Kind::frequency_support, errc::invalid_argument,
            "sparsity mask must be a frequency-support mask");
    require(samples_.n() == band_.n(), errc::invalid_argument, "sample and sparsity masks differ in length");
    require(samples_.gain > 0.0, errc::invalid_argument, "sample gain must be positive");
  }

  std::size_t n() const { return samples_.n(); }

  CVec sample(const CVec& x) const { return masked(x, samples_.support) * samples_.gain; }

  CVec project(const CVec& x) const { return inverse(t_, masked(forward(t_, x), band_.support)); }

  CVec apply(const CVec& x) const { return project(sample(x)); }

  // Coefficient-space matrix of the operator: Phi^H Phi * gain with Phi = inverse transform rows S, cols F.
  CMat gram() const {
    const auto nn = static_cast<Eigen::Index>(n());
    const auto f = static_cast<Eigen::Index>(band_.support.size());
    CMat phi(static_cast<Eigen::Index>(samples_.support.size()), f);
    for (Eigen::Index c = 0; c < f; ++c) {
      CVec e = CVec::Zero(nn);
      e[static_cast<Eigen::Index>(band_.support[static_cast<std::size_t>(c)])] = 1.0;
      phi.col(c) = gather(inverse(t_, e), samples_.support);
    }
    return phi.adjoint() * phi * samples_.gain;
  }

  const MaskSpec& samples() const { return samples_; }
  const MaskSpec& band() const { return band_; }

 private:
  MaskSpec samples_;
  MaskSpec band_;
  Transform t_;
};

struct FrameBounds {
  double A;
  double B;
};

// Extreme eigenvalues of the masked operator on the bandlimited subspace.
inline FrameBounds estimate_frame_bounds(const MaskSpec& sample_mask, const MaskSpec& sparsity_mask,
                                         Transform t = Transform::DFT) {
  const BandlimitedOperator op(sample_mask, sparsity_mask, t);
  const auto e = hermitian_eig(op.gram());
  return {e.values[e.values.size() - 1], e.values[0]};
}

namespace detail {

struct IterTracker {
  Report& rep;
  const CVec* reference;
  // Semi-iterative methods have non-monotone residuals; for them growth only counts once the residual
  // has risen well above the best value seen so far.
  double blowup = 1.0;
  int growth = 0;
  double last_residual = std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();

  void record(const CVec& x, double residual) {
    rep.residual_trace.push_back(residual);
    if (reference) rep.snr_trace.push_back(snr_db(*reference, x));
    growth = residual > last_residual ? growth + 1 : 0;
    last_residual = residual;
    best = std::min(best, residual);
    if (growth >= 3 && residual > blowup * best) rep.diverged = true;
  }
};

inline void check_feasible(const BandlimitedOperator& op, const IterationConfig& cfg, Report& rep, const char* who) {
  const bool feasible = op.band().support.size() <= op.samples().support.size();
  if (!feasible) {
    require(!cfg.enforce_sample_count, errc::precondition_violation,
            std::string(who) + ": " + std::to_string(op.band().support.size()) + " coefficients but only " +
                std::to_string(op.samples().support.size()) + " samples");
    rep.nonconvergence = true;
  }
}

inline void finish(Report& rep, const CVec& x, std::chrono::steady_clock::time_point t0) {
  rep.estimate = x;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!rep.converged) rep.nonconvergence = true;
}

}  // namespace detail

// Plain relaxed iteration x <- x + lambda (PS{x_true} - PS{x}); `observed` holds the true values at the sample positions.
inline Report iterative_reconstruct(const CVec& observed, const MaskSpec& sample_mask, const MaskSpec& sparsity_mask,
                                    const IterationConfig& cfg, const CVec* reference = nullptr) {
  cfg.validate();
  check_signal(observed, "iterative_reconstruct");
  const auto t0 = std::chrono::steady_clock::now();
  const BandlimitedOperator op(sample_mask, sparsity_mask, cfg.transform);
  require(static_cast<std::size_t>(observed.size()) == op.n(), errc::invalid_argument,
          "iterative_reconstruct: observed length does not match masks");
  Report rep;
  rep.solver = "iterative";
  rep.params = {{"relax", cfg.relax}, {"eps", cfg.eps}, {"max_iters", static_cast<double>(cfg.max_iters)}};
  detail::check_feasible(op, cfg, rep, "iterative_reconstruct");

  const CVec target = op.apply(observed);
  CVec x = CVec::Zero(observed.size());
  detail::IterTracker track{rep, reference};
  for (std::size_t i = 0; i < cfg.max_iters; ++i) {
    const CVec step = cfg.relax * (target - op.apply(x));
    x += step;
    rep.iterations = i + 1;
    track.record(x, (op.sample(observed) - op.sample(x)).norm());
    if (step.norm() < cfg.eps) {
      rep.converged = true;
      break;
    }
    if (rep.diverged) break;
  }
  detail::finish(rep, x, t0);
  return rep;
}

// Chebyshev semi-iteration; lambda_1 = 2 seeds the weight recursion.
inline Report chebyshev_accelerate(const CVec& observed, const MaskSpec& sample_mask, const MaskSpec& sparsity_mask,
                                   const IterationConfig& cfg, const CVec* reference = nullptr) {
  cfg.validate();
  require(cfg.A > 0.0 && cfg.B >= cfg.A, errc::invalid_argument, "chebyshev_accelerate: need 0 < A <= B");
  check_signal(observed, "chebyshev_accelerate");
  const auto t0 = std::chrono::steady_clock::now();
  const BandlimitedOperator op(sample_mask, sparsity_mask, cfg.transform);
  require(static_cast<std::size_t>(observed.size()) == op.n(), errc::invalid_argument,
          "chebyshev_accelerate: observed length does not match masks");
  Report rep;
  rep.solver = "chebyshev";
  rep.params = {{"A", cfg.A}, {"B", cfg.B}, {"eps", cfg.eps}, {"max_iters", static_cast<double>(cfg.max_iters)}};
  detail::check_feasible(op, cfg, rep, "chebyshev_accelerate");

  const double g = 2.0 / (cfg.A + cfg.B);
  const double rho = (cfg.B - cfg.A) / (cfg.B + cfg.A);
  const CVec target = op.apply(observed);
  CVec prev = CVec::Zero(observed.size());
  CVec x = g * target;
  double lambda = 2.0;
  detail::IterTracker track{rep, reference, 1e3};
  rep.iterations = 1;
  track.record(x, (op.sample(observed) - op.sample(x)).norm());
  if (x.norm() < cfg.eps) rep.converged = true;
  for (std::size_t i = 1; i < cfg.max_iters && !rep.converged; ++i) {
    lambda = 1.0 / (1.0 - rho * rho * lambda / 4.0);
    CVec next = prev + lambda * (x - prev + g * (target - op.apply(x)));
    const double step = (next - x).norm();
    prev = std::move(x);
    x = std::move(next);
    rep.iterations = i + 1;
    track.record(x, (op.sample(observed) - op.sample(x)).norm());
    if (step < cfg.eps) rep.converged = true;
    if (rep.diverged) break;
  }
  detail::finish(rep, x, t0);
  return rep;
}

// Conjugate gradients on the self-adjoint operator PSP.
inline Report cg_accelerate(const CVec& observed, const MaskSpec& sample_mask, const MaskSpec& sparsity_mask,
                            const IterationConfig& cfg, const CVec* reference = nullptr) {
  cfg.validate();
  check_signal(observed, "cg_accelerate");
  const auto t0 = std::chrono::steady_clock::now();
  const BandlimitedOperator op(sample_mask, sparsity_mask, cfg.transform);
  require(static_cast<std::size_t>(observed.size()) == op.n(), errc::invalid_argument,
          "cg_accelerate: observed length does not match masks");
  Report rep;
  rep.solver = "cg";
  rep.params = {{"eps", cfg.eps}, {"max_iters", static_cast<double>(cfg.max_iters)}};
  detail::check_feasible(op, cfg, rep, "cg_accelerate");

  CVec x = CVec::Zero(observed.size());
  CVec r = op.apply(observed);
  CVec p = r;
  const double r0 = r.norm();
  detail::IterTracker track{rep, reference};
  if (r0 == 0.0) rep.converged = true;
  for (std::size_t i = 0; i < cfg.max_iters && !rep.converged; ++i) {
    const CVec Ap = op.apply(p);
    const cplx pAp = p.dot(Ap);
    if (std::abs(pAp) <= 1e-300 || std::abs(pAp) <= 1e-28 * r0 * r0) {
      rep.breakdown = true;
      break;
    }
    const cplx lambda = p.dot(r) / pAp;
    const double step = std::abs(lambda) * p.norm();
    x += lambda * p;
    r -= lambda * Ap;
    const cplx beta = Ap.dot(r) / pAp;
    p = r - beta * p;
    rep.iterations = i + 1;
    track.record(x, r.norm());
    if (step < cfg.eps || r.norm() <= 1e-14 * r0) rep.converged = true;
  }
  detail::finish(rep, x, t0);
  return rep;
}

// Generic CG for a self-adjoint positive semidefinite operator, used by the convolutional decoder.
template <class Vec, class Op>
Vec conjugate_gradient(const Op& apply, const Vec& rhs, std::size_t iters, double tol, bool* breakdown = nullptr) {
  Vec x = Vec::Zero(rhs.size());
  Vec r = rhs;
  Vec p = r;
  double rr = r.squaredNorm();
  const double stop = tol * tol * std::max(rr, 1e-300);
  for (std::size_t i = 0; i < iters && rr > stop; ++i) {
    const Vec Ap = apply(p);
    const double pAp = std::real(p.dot(Ap));
    if (!(pAp > 0.0)) {
      if (breakdown) *breakdown = true;
      break;
    }
    const double alpha = rr / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return x;
}

}  // namespace sparsekit
