#pragma once

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

#include "sparsekit/core/types.hpp"

namespace sparsekit {

namespace detail {

// FFTW planning is not thread-safe; execution with the new-array API is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlan {
  fftw_plan plan = nullptr;
  ~FftwPlan() {
    if (plan) fftw_destroy_plan(plan);
  }
};

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : p(static_cast<double*>(fftw_malloc(sizeof(double) * 2 * std::max<std::size_t>(n, 1)))) {
    if (!p) throw Error(errc::internal, "fftw_malloc failed");
  }
  ~FftwBuffer() { fftw_free(p); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* p;
};

enum class PlanKind { dft_forward, dft_backward, dct2, dct3 };

inline fftw_plan cached_plan(PlanKind kind, int n) {
  static std::map<std::pair<int, int>, std::shared_ptr<FftwPlan>> cache;
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  auto key = std::make_pair(static_cast<int>(kind), n);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second->plan;
  auto holder = std::make_shared<FftwPlan>();
  FftwBuffer in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
  switch (kind) {
    case PlanKind::dft_forward:
    case PlanKind::dft_backward:
      holder->plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(in.p), reinterpret_cast<fftw_complex*>(out.p),
                                      kind == PlanKind::dft_forward ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
      break;
    case PlanKind::dct2:
      holder->plan = fftw_plan_r2r_1d(n, in.p, out.p, FFTW_REDFT10, FFTW_ESTIMATE);
      break;
    case PlanKind::dct3:
      holder->plan = fftw_plan_r2r_1d(n, in.p, out.p, FFTW_REDFT01, FFTW_ESTIMATE);
      break;
  }
  if (!holder->plan) throw Error(errc::internal, "FFTW planning failed");
  cache.emplace(key, holder);
  return holder->plan;
}

inline CVec run_dft(const CVec& x, bool inverse) {
  const int n = static_cast<int>(x.size());
  fftw_plan plan = cached_plan(inverse ? PlanKind::dft_backward : PlanKind::dft_forward, n);
  FftwBuffer in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
  auto* ci = reinterpret_cast<cplx*>(in.p);
  auto* co = reinterpret_cast<cplx*>(out.p);
  for (int i = 0; i < n; ++i) ci[i] = x[i];
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in.p), reinterpret_cast<fftw_complex*>(out.p));
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  CVec y(n);
  for (int i = 0; i < n; ++i) y[i] = co[i] * s;
  return y;
}

inline RVec run_r2r(const RVec& x, PlanKind kind) {
  const int n = static_cast<int>(x.size());
  fftw_plan plan = cached_plan(kind, n);
  FftwBuffer in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) in.p[i] = x[i];
  fftw_execute_r2r(plan, in.p, out.p);
  RVec y(n);
  for (int i = 0; i < n; ++i) y[i] = out.p[i];
  return y;
}

}  // namespace detail

// Unitary DFT, X[k] = n^{-1/2} sum_i x[i] exp(-2 pi j i k / n); the inverse flips the sign.
inline CVec dft(const CVec& x, bool inverse = false) {
  require(x.size() > 0, errc::invalid_argument, "dft: empty input");
  return detail::run_dft(x, inverse);
}

inline CVec idft(const CVec& x) { return dft(x, true); }

// Sorted DFT: bin k carries DFT bin (q k mod n), i.e. kernel exp(-2 pi j i q k / n).
inline CVec sorted_dft(const CVec& x, long q, bool inverse = false) {
  const long n = static_cast<long>(x.size());
  require(n > 0, errc::invalid_argument, "sorted_dft: empty input");
  const long qm = ((q % n) + n) % n;
  require(std::gcd(qm, n) == 1, errc::invalid_argument, "sorted_dft: q must be coprime with n");
  if (!inverse) {
    const CVec X = dft(x);
    CVec Y(n);
    for (long k = 0; k < n; ++k) Y[k] = X[(qm * k) % n];
    return Y;
  }
  CVec X(n);
  for (long k = 0; k < n; ++k) X[(qm * k) % n] = x[k];
  return idft(X);
}

// Orthonormal DCT-II (inverse = DCT-III), applied separately to real and imaginary parts.
inline CVec dct(const CVec& x, bool inverse = false) {
  const Eigen::Index n = x.size();
  require(n > 0, errc::invalid_argument, "dct: empty input");
  const double scale = std::sqrt(2.0 / static_cast<double>(n)) / 2.0;
  auto one = [&](const RVec& v) {
    if (!inverse) {
      RVec y = detail::run_r2r(v, detail::PlanKind::dct2) * scale;
      y[0] /= std::sqrt(2.0);
      return y;
    }
    RVec z = v;
    z[0] *= std::sqrt(2.0);
    return RVec(detail::run_r2r(z, detail::PlanKind::dct3) * scale);
  };
  const RVec re = one(x.real());
  const RVec im = one(x.imag());
  CVec y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = cplx(re[i], im[i]);
  return y;
}

inline CVec idct(const CVec& x) { return dct(x, true); }

enum class Transform { DFT, DCT };

inline CVec forward(Transform t, const CVec& x) { return t == Transform::DFT ? dft(x) : dct(x); }
inline CVec inverse(Transform t, const CVec& x) { return t == Transform::DFT ? idft(x) : idct(x); }

}  // namespace sparsekit
