#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sparsekit/core/fft.hpp"
#include "sparsekit/core/linalg.hpp"
#include "sparsekit/core/types.hpp"

namespace sparsekit {

// Which transform carries the syndrome: q = 1 is the plain DFT, other q coprime with n the sorted DFT.
struct CodeKernel {
  long q = 1;
  static CodeKernel dft() { return {1}; }
  static CodeKernel sdft(long q) { return {q}; }
};

class DftBlockCode {
 public:
  DftBlockCode(std::size_t l, std::size_t p) : l_(l), p_(p) {
    require(l >= 1, errc::invalid_argument, "DftBlockCode: message length must be positive");
  }

  std::size_t l() const { return l_; }
  std::size_t p() const { return p_; }
  std::size_t n() const { return l_ + p_; }
  // First syndrome bin; the zeros occupy [first, first + p).
  std::size_t first() const { return (l_ + 1) / 2; }

  SupportSet theta() const {
    std::vector<std::size_t> v(p_);
    std::iota(v.begin(), v.end(), first());
    return SupportSet(std::move(v), n());
  }

  // Codewords of real messages are real only when l is odd (even l leaves an unpaired Nyquist bin).
  bool real_codewords() const { return p_ == 0 || l_ % 2 == 1; }

 private:
  std::size_t l_, p_;
};

struct ElpPolynomial {
  std::vector<cplx> h;  // h[0] = 1
  std::size_t degree() const { return h.empty() ? 0 : h.size() - 1; }
  cplx operator()(cplx y) const {
    cplx acc = 0.0;
    for (std::size_t t = h.size(); t-- > 0;) acc = acc * y + h[t];
    return acc;
  }
  std::vector<cplx> roots() const {
    if (h.size() < 2) return {};
    return polynomial_roots(std::vector<cplx>(h.rbegin(), h.rend()));
  }
};

namespace detail {

inline cplx unit_root(long num, long n) { return std::polar(1.0, -2.0 * pi * static_cast<double>(num) / static_cast<double>(n)); }

inline long mod(long a, long n) { return ((a % n) + n) % n; }

inline void check_kernel(const DftBlockCode& code, CodeKernel k) {
  const long n = static_cast<long>(code.n());
  require(std::gcd(mod(k.q, n), n) == 1, errc::invalid_argument, "DFT code: q must be coprime with n");
}

inline CVec code_forward(const CVec& x, CodeKernel k) { return k.q == 1 ? dft(x) : sorted_dft(x, k.q); }
inline CVec code_inverse(const CVec& X, CodeKernel k) { return k.q == 1 ? idft(X) : sorted_dft(X, k.q, true); }

inline CVec strip_message(const CVec& codeword, const DftBlockCode& code, CodeKernel k) {
  const CVec Y = code_forward(codeword, k);
  const auto l = static_cast<Eigen::Index>(code.l());
  const auto a = static_cast<Eigen::Index>(code.first());
  CVec X(l);
  X.head(a) = Y.head(a);
  X.tail(l - a) = Y.tail(l - a);
  return idft(X) * std::sqrt(static_cast<double>(code.l()) / static_cast<double>(code.n()));
}

}  // namespace detail

inline CVec dft_block_encode(const CVec& message, const DftBlockCode& code, CodeKernel kernel = {}) {
  require(static_cast<std::size_t>(message.size()) == code.l(), errc::invalid_argument,
          "dft_block_encode: message length does not match the code");
  detail::check_kernel(code, kernel);
  if (code.p() == 0) return message;
  const CVec X = dft(message);
  const auto l = static_cast<Eigen::Index>(code.l());
  const auto n = static_cast<Eigen::Index>(code.n());
  const auto a = static_cast<Eigen::Index>(code.first());
  CVec Y = CVec::Zero(n);
  Y.head(a) = X.head(a);
  Y.tail(l - a) = X.tail(l - a);
  return detail::code_inverse(Y, kernel) * std::sqrt(static_cast<double>(n) / static_cast<double>(l));
}

// Locator whose zeros sit at y = exp(+2 pi j q i / n) for each position i, built from the spectrum of
// the root product by an inverse FFT.
inline ElpPolynomial elp_from_positions(const SupportSet& positions, std::size_t n, CodeKernel kernel = {}) {
  const long nn = static_cast<long>(n);
  const std::size_t k = positions.size();
  CVec Hf(nn);
  for (long j = 0; j < nn; ++j) {
    cplx prod = 1.0;
    for (auto i : positions) prod *= 1.0 - detail::unit_root(kernel.q * static_cast<long>(i) + j, nn);
    Hf[j] = prod;
  }
  const CVec h = idft(Hf) / std::sqrt(static_cast<double>(nn));
  ElpPolynomial out;
  out.h.assign(h.data(), h.data() + k + 1);
  return out;
}

namespace detail {

// Fills E outside the syndrome window from E on the window: sum_t h_t E[r - t] = 0.
inline double elp_extend(CVec& E, const ElpPolynomial& elp, const DftBlockCode& code) {
  const long n = static_cast<long>(code.n());
  const long a = static_cast<long>(code.first());
  const long p = static_cast<long>(code.p());
  const auto& h = elp.h;
  const long k = static_cast<long>(elp.degree());
  double peak = 0.0;
  for (long r = a + p; r < a + n; ++r) {
    cplx acc = 0.0;
    for (long t = 1; t <= k; ++t) acc += h[static_cast<std::size_t>(t)] * E[mod(r - t, n)];
    E[mod(r, n)] = -acc / h[0];
    peak = std::max(peak, std::abs(E[mod(r, n)]));
  }
  return peak;
}

}  // namespace detail

struct ErasureDecode {
  CVec message;
  CVec codeword;
  ElpPolynomial elp;
};

inline ErasureDecode elp_erasure_decode(const CVec& received, const SupportSet& erasures, const DftBlockCode& code,
                                        CodeKernel kernel = {}) {
  check_signal(received, "elp_erasure_decode");
  require(static_cast<std::size_t>(received.size()) == code.n() && erasures.ambient() == code.n(),
          errc::invalid_argument, "elp_erasure_decode: lengths do not match the code");
  require(erasures.size() <= code.p(), errc::capacity_exceeded,
          "elp_erasure_decode: " + std::to_string(erasures.size()) + " erasures exceed the " +
              std::to_string(code.p()) + " syndrome positions");
  detail::check_kernel(code, kernel);
  ErasureDecode out;
  if (erasures.empty()) {
    out.codeword = received;
    out.message = code.p() == 0 ? received : detail::strip_message(received, code, kernel);
    out.elp.h = {1.0};
    return out;
  }
  CVec r = received;
  for (auto i : erasures) r[static_cast<Eigen::Index>(i)] = 0.0;
  const CVec D = detail::code_forward(r, kernel);
  out.elp = elp_from_positions(erasures, code.n(), kernel);
  CVec E = CVec::Zero(D.size());
  for (auto j : code.theta()) E[static_cast<Eigen::Index>(j)] = -D[static_cast<Eigen::Index>(j)];
  const double peak = detail::elp_extend(E, out.elp, code);
  require(std::isfinite(peak) && peak <= 1e12 * std::max(D.norm(), 1e-300), errc::instability,
          "elp_erasure_decode: locator recursion blew up; try the sorted DFT kernel (q coprime with n)");
  CVec X = D + E;
  for (auto j : code.theta()) X[static_cast<Eigen::Index>(j)] = 0.0;
  out.codeword = detail::code_inverse(X, kernel);
  out.message = detail::strip_message(out.codeword, code, kernel);
  return out;
}

struct ImpulsiveOptions {
  double threshold_ratio = 0.1;  // |H_i| <= ratio * median |H_i| marks an error location
  // Soft decision: weight candidates by |H_i| and keep the ones a least-squares fit of the syndrome supports.
  bool soft = false;
  double syndrome_tol = 1e-10;
  // Candidates whose recovered value is below prune_ratio * max value are dropped and the values re-solved.
  double prune_ratio = 1e-6;
};

struct ImpulsiveDecode {
  CVec clean;
  SupportSet error_positions;
  CVec error_values;  // aligned with error_positions
  ElpPolynomial elp;
  std::vector<double> locator_magnitude;  // |H_i|
  double syndrome_residual = 0.0;  // relative syndrome left after correction
  double confidence = 1.0;
  bool overrun = false;
};

inline ImpulsiveDecode elp_impulsive_decode(const CVec& received, const DftBlockCode& code, CodeKernel kernel = {},
                                            const ImpulsiveOptions& opt = {}) {
  check_signal(received, "elp_impulsive_decode");
  require(static_cast<std::size_t>(received.size()) == code.n(), errc::invalid_argument,
          "elp_impulsive_decode: length does not match the code");
  detail::check_kernel(code, kernel);
  const long n = static_cast<long>(code.n());
  const long p = static_cast<long>(code.p());
  const long k = p / 2;
  const SupportSet theta = code.theta();

  ImpulsiveDecode out;
  out.clean = received;
  out.error_positions = SupportSet({}, code.n());
  out.elp.h = {1.0};
  const CVec D = detail::code_forward(received, kernel);
  const CVec S = gather(D, theta);
  if (k == 0 || S.norm() <= opt.syndrome_tol * std::max(D.norm(), 1e-300)) return out;

  // Annihilation rows r = a+k .. a+p-1, unknowns h_1..h_k.
  CMat A(p - k, k);
  CVec b(p - k);
  for (long row = 0; row < p - k; ++row) {
    const long r = k + row;  // offset inside the window
    for (long t = 1; t <= k; ++t) A(row, t - 1) = S[r - t];
    b[row] = -S[r];
  }
  const CVec hk = pseudo_inverse_solve(A, b);
  out.elp.h.resize(static_cast<std::size_t>(k) + 1);
  for (long t = 1; t <= k; ++t) out.elp.h[static_cast<std::size_t>(t)] = hk[t - 1];

  std::vector<double> mag(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) mag[static_cast<std::size_t>(i)] = std::abs(out.elp(detail::unit_root(-kernel.q * i, n)));
  out.locator_magnitude = mag;
  std::vector<double> sorted = mag;
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  const double median = sorted[static_cast<std::size_t>(n / 2)];

  std::vector<std::size_t> pos;
  if (!opt.soft) {
    for (long i = 0; i < n; ++i)
      if (mag[static_cast<std::size_t>(i)] <= opt.threshold_ratio * median) pos.push_back(static_cast<std::size_t>(i));
  } else {
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return mag[x] < mag[y]; });
    std::vector<std::size_t> cand;
    for (auto i : order)
      if (mag[i] <= 0.5 * median && cand.size() < static_cast<std::size_t>(p)) cand.push_back(i);
    if (!cand.empty()) {
      CMat F(p, static_cast<Eigen::Index>(cand.size()));
      for (std::size_t c = 0; c < cand.size(); ++c) {
        CVec e = CVec::Zero(n);
        e[static_cast<Eigen::Index>(cand[c])] = 1.0;
        F.col(static_cast<Eigen::Index>(c)) = gather(detail::code_forward(e, kernel), theta);
      }
      const CVec v = pseudo_inverse_solve(F, S);
      const double vmax = v.cwiseAbs().maxCoeff();
      for (std::size_t c = 0; c < cand.size(); ++c)
        if (std::abs(v[static_cast<Eigen::Index>(c)]) > 1e-6 * vmax) pos.push_back(cand[c]);
    }
  }
  std::sort(pos.begin(), pos.end());
  if (pos.size() > static_cast<std::size_t>(p) || pos.empty()) {
    out.overrun = true;
    out.confidence = 0.0;
    out.syndrome_residual = 1.0;
    return out;
  }
  out.overrun = pos.size() > static_cast<std::size_t>(k);
  out.error_positions = SupportSet(pos, code.n());

  auto values_at = [&](const SupportSet& where) {
    CVec E = CVec::Zero(n);
    scatter(E, theta, S);
    detail::elp_extend(E, elp_from_positions(where, code.n(), kernel), code);
    return gather(detail::code_inverse(E, kernel), where);
  };
  out.error_values = values_at(out.error_positions);
  const double vmax = out.error_values.cwiseAbs().maxCoeff();
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < pos.size(); ++c)
    if (std::abs(out.error_values[static_cast<Eigen::Index>(c)]) > opt.prune_ratio * vmax) kept.push_back(pos[c]);
  if (kept.size() < pos.size()) {
    pos = kept;
    out.error_positions = SupportSet(pos, code.n());
    out.error_values = values_at(out.error_positions);
    out.overrun = pos.size() > static_cast<std::size_t>(k);
  }
  for (std::size_t c = 0; c < pos.size(); ++c)
    out.clean[static_cast<Eigen::Index>(pos[c])] -= out.error_values[static_cast<Eigen::Index>(c)];
  out.syndrome_residual = gather(detail::code_forward(out.clean, kernel), theta).norm() / S.norm();
  // One decade of syndrome left over per unit of lost confidence, starting at 1e-8.
  const double decades = std::log10(std::max(out.syndrome_residual, 1e-300) / 1e-8);
  out.confidence = std::clamp(1.0 - decades / 8.0, 0.0, 1.0);
  if (out.overrun) out.confidence = std::min(out.confidence, 0.5);
  return out;
}

}  // namespace sparsekit
