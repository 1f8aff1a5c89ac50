#pragma once

#include <chrono>
#include <cmath>
#include <string>

#include "sparsekit/core/linalg.hpp"
#include "sparsekit/core/types.hpp"
#include "sparsekit/recovery/imat.hpp"
#include "sparsekit/recovery/iterative.hpp"

namespace sparsekit {

// Rate-1/2 feed-forward code. Blocks of N inputs are flushed with a zero tail, so each branch emits
// M = N + L - 1 samples and the interleaved stream has 2M entries.
class ConvCode {
 public:
  ConvCode(RVec h1, RVec h2) : h1_(std::move(h1)), h2_(std::move(h2)) {
    require(h1_.size() > 0 && h1_.size() == h2_.size(), errc::invalid_argument,
            "ConvCode: taps must be non-empty and of equal length");
    require(h1_.allFinite() && h2_.allFinite(), errc::invalid_argument, "ConvCode: non-finite tap");
  }

  static ConvCode example() {
    RVec a(6), b(6);
    a << 1, 2, 3, 4, 5, 16;
    b << 16, 5, 4, 3, 2, 1;
    return ConvCode(a, b);
  }

  const RVec& h1() const { return h1_; }
  const RVec& h2() const { return h2_; }
  Eigen::Index taps() const { return h1_.size(); }
  Eigen::Index outputs(Eigen::Index N) const { return 2 * (N + taps() - 1); }
  Eigen::Index checks(Eigen::Index N) const { return N + 2 * taps() - 2; }

  Eigen::Index input_length(Eigen::Index stream) const {
    require(stream % 2 == 0 && stream / 2 - taps() + 1 >= 1, errc::invalid_argument,
            "ConvCode: stream length " + std::to_string(stream) + " is not a whole encoded block");
    return stream / 2 - taps() + 1;
  }

 private:
  RVec h1_, h2_;
};

namespace detail {

inline RVec full_convolution(const RVec& a, const RVec& b) {
  RVec out = RVec::Zero(a.size() + b.size() - 1);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

}  // namespace detail

inline RVec conv_encode(const RVec& input, const ConvCode& code) {
  require(input.size() > 0, errc::invalid_argument, "conv_encode: empty input");
  const RVec y1 = detail::full_convolution(code.h1(), input);
  const RVec y2 = detail::full_convolution(code.h2(), input);
  RVec out(2 * y1.size());
  for (Eigen::Index t = 0; t < y1.size(); ++t) {
    out[2 * t] = y1[t];
    out[2 * t + 1] = y2[t];
  }
  return out;
}

// Column j holds the interleaved taps shifted down by 2j.
inline RMat conv_generator(const ConvCode& code, Eigen::Index N) {
  require(N >= 1, errc::invalid_argument, "conv_generator: block length must be positive");
  RMat G = RMat::Zero(code.outputs(N), N);
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index s = 0; s < code.taps(); ++s) {
      G(2 * (j + s), j) = code.h1()[s];
      G(2 * (j + s) + 1, j) = code.h2()[s];
    }
  return G;
}

// Checks c: h2 * y1 - h1 * y2 = 0, scaled so the leading entry is -1. Column c of H carries the
// coefficients of check c.
inline RMat conv_parity_check(const ConvCode& code, Eigen::Index N) {
  const Eigen::Index M = code.outputs(N) / 2;
  const Eigen::Index L = code.taps();
  double scale = code.h2()[0];
  if (std::abs(scale) < 1e-300) scale = code.h2().cwiseAbs().maxCoeff();
  require(scale != 0.0, errc::invalid_argument, "conv_parity_check: h2 is identically zero");
  RMat H = RMat::Zero(2 * M, code.checks(N));
  for (Eigen::Index c = 0; c < H.cols(); ++c)
    for (Eigen::Index t = std::max<Eigen::Index>(0, c - L + 1); t <= std::min(c, M - 1); ++t) {
      H(2 * t, c) = -code.h2()[c - t] / scale;
      H(2 * t + 1, c) = code.h1()[c - t] / scale;
    }
  const RMat G = conv_generator(code, N);
  const double defect = (H.transpose() * G).cwiseAbs().maxCoeff();
  require(defect <= 1e-9 * std::max(1.0, G.cwiseAbs().maxCoeff()), errc::inconsistency,
          "conv_parity_check: H^T G defect " + std::to_string(defect));
  return H;
}

// Least-squares fit of the input to the surviving outputs by CG on G^T M G; cfg.max_iters caps the CG steps.
inline RealReport conv_erasure_decode(const RVec& received, const SupportSet& erasures, const ConvCode& code,
                                      const IterationConfig& cfg) {
  cfg.validate();
  require(received.allFinite(), errc::invalid_argument, "conv_erasure_decode: non-finite sample");
  const Eigen::Index N = code.input_length(received.size());
  require(erasures.ambient() == static_cast<std::size_t>(received.size()), errc::invalid_argument,
          "conv_erasure_decode: erasure mask length mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  const RMat G = conv_generator(code, N);
  RVec keep = RVec::Ones(received.size());
  for (auto i : erasures) keep[static_cast<Eigen::Index>(i)] = 0.0;

  RealReport rep;
  rep.solver = "conv_erasure_cg";
  rep.params = {{"erasures", static_cast<double>(erasures.size())}, {"max_iters", static_cast<double>(cfg.max_iters)}};
  const RMat GK = keep.asDiagonal() * G;
  if (erasures.empty()) {
    rep.estimate = G.colPivHouseholderQr().solve(received);
    rep.iterations = 1;
    rep.converged = true;
  } else {
    Eigen::JacobiSVD<RMat> svd(GK);
    const auto& sv = svd.singularValues();
    const bool identifiable = sv[sv.size() - 1] > 1e-10 * sv[0];
    const RVec rhs = GK.transpose() * received;
    std::size_t steps = 0;
    auto apply = [&](const RVec& v) {
      ++steps;
      return RVec(GK.transpose() * (GK * v));
    };
    bool breakdown = false;
    rep.estimate = conjugate_gradient<RVec>(apply, rhs, cfg.max_iters, cfg.eps, &breakdown);
    rep.iterations = steps;
    rep.breakdown = breakdown;
    rep.converged = identifiable && !breakdown;
    rep.nonconvergence = !identifiable;
    rep.params["sigma_min_ratio"] = sv[sv.size() - 1] / sv[0];
  }
  rep.residual_trace.push_back((keep.asDiagonal() * (G * rep.estimate - received)).norm());
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

struct ConvImpulsiveResult {
  RVec input;
  RVec impulses;
  SupportSet support;
  RealReport report;
};

// The parity projector exposes the impulses (P y = P nu); IMAT then recovers the sparse nu from P nu.
inline ConvImpulsiveResult conv_impulsive_decode(const RVec& received, const ConvCode& code, const ImatConfig& cfg) {
  cfg.validate();
  require(received.allFinite(), errc::invalid_argument, "conv_impulsive_decode: non-finite sample");
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index N = code.input_length(received.size());
  const Eigen::Index n = received.size();
  const RMat G = conv_generator(code, N);
  const RMat H = conv_parity_check(code, N);
  const RMat HtH = H.transpose() * H;
  Eigen::SelfAdjointEigenSolver<RMat> es(HtH);
  const double lo = es.eigenvalues()[0], hi = es.eigenvalues()[es.eigenvalues().size() - 1];
  require(lo > 1e-12 * hi, errc::numeric,
          "conv_impulsive_decode: H^T H is rank deficient (eigenvalues " + std::to_string(lo) + " .. " +
              std::to_string(hi) + "); the taps share a common zero");
  const RMat P = H * HtH.ldlt().solve(H.transpose());
  const RVec v0 = P * received;

  ConvImpulsiveResult out;
  RealReport& rep = out.report;
  rep.solver = "conv_impulsive_imat";
  rep.params = {{"alpha", cfg.alpha}, {"relax", cfg.relax}};
  RVec nu = RVec::Zero(n);
  std::vector<std::size_t> prev;
  if (v0.norm() > 1e-12 * received.norm()) {
    const double beta = cfg.beta > 0.0 ? cfg.beta : v0.cwiseAbs().maxCoeff();
    rep.params["beta"] = beta;
    for (std::size_t i = 1; i <= cfg.max_iters; ++i) {
      const double thr = cfg.threshold(beta, i);
      nu += cfg.relax * (v0 - P * nu);
      std::vector<std::size_t> cur;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (std::abs(nu[j]) < thr) nu[j] = 0.0;
        else cur.push_back(static_cast<std::size_t>(j));
      }
      if (cfg.refine == ImatConfig::Refine::each && !cur.empty() && cur.size() <= static_cast<std::size_t>(H.cols())) {
        RMat cols(n, static_cast<Eigen::Index>(cur.size()));
        for (std::size_t c = 0; c < cur.size(); ++c) cols.col(static_cast<Eigen::Index>(c)) = P.col(static_cast<Eigen::Index>(cur[c]));
        const RVec coef = pseudo_inverse_solve(cols, v0);
        nu.setZero();
        for (std::size_t c = 0; c < cur.size(); ++c) nu[static_cast<Eigen::Index>(cur[c])] = coef[static_cast<Eigen::Index>(c)];
      }
      const double residual = (v0 - P * nu).norm();
      rep.iterations = i;
      rep.threshold_trace.push_back(thr);
      rep.residual_trace.push_back(residual);
      const bool stable = cur == prev;
      prev = std::move(cur);
      if (thr < cfg.floor_ratio * beta ||
          (cfg.stop_residual > 0.0 && stable && residual <= cfg.stop_residual * v0.norm())) {
        rep.converged = true;
        break;
      }
    }
    rep.nonconvergence = !rep.converged;
  } else {
    rep.converged = true;
  }
  std::vector<std::size_t> sup;
  const double mx = nu.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < n; ++j)
    if (mx > 0.0 && std::abs(nu[j]) > cfg.support_tol * mx) sup.push_back(static_cast<std::size_t>(j));
  out.support = SupportSet(std::move(sup), static_cast<std::size_t>(n));
  out.impulses = nu;
  out.input = G.colPivHouseholderQr().solve(received - nu);
  rep.estimate = out.input;
  rep.support = out.support;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace sparsekit
