#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sparsekit/core/linalg.hpp"
#include "sparsekit/core/types.hpp"

namespace sparsekit {

// One line of a line spectrum. A positive imaginary part of `frequency` is damping: z = exp(j 2 pi f).
struct Tone {
  cplx frequency = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;

  cplx z() const { return std::exp(cplx(0.0, 2.0 * pi) * frequency); }
  cplx b() const { return std::polar(amplitude, phase); }
};

struct SpectralModel {
  std::vector<Tone> tones;
  double noise_variance = 0.0;
  bool ambiguous = false;  // smallest noise eigenvalue was repeated
  bool shortfall = false;  // fewer distinct peaks than requested

  std::size_t k() const { return tones.size(); }

  std::vector<double> frequencies() const {
    std::vector<double> f;
    for (const auto& t : tones) f.push_back(t.frequency.real());
    return f;
  }

  void validate(double min_gap = 0.0) const {
    require(!tones.empty(), errc::invalid_argument, "SpectralModel: needs at least one tone");
    for (std::size_t i = 0; i < tones.size(); ++i) {
      require(tones[i].amplitude >= 0.0, errc::invalid_argument, "SpectralModel: negative amplitude");
      for (std::size_t j = 0; j < i; ++j) {
        const double d = std::abs(tones[i].frequency - tones[j].frequency);
        require(d > min_gap, errc::invalid_argument, "SpectralModel: frequencies too close");
      }
    }
  }
};

inline double wrap_unit(double f) {
  f -= std::floor(f);
  return f >= 1.0 ? 0.0 : f;
}

inline double circular_distance(double a, double b) {
  const double d = wrap_unit(a - b);
  return std::min(d, 1.0 - d);
}

inline Tone tone_from(cplx z, cplx b) {
  Tone t;
  const cplx lz = std::log(z);
  t.frequency = cplx(wrap_unit(lz.imag() / (2.0 * pi)), -lz.real() / (2.0 * pi));
  t.amplitude = std::abs(b);
  t.phase = std::arg(b);
  return t;
}

inline CVec generate(const SpectralModel& model, Eigen::Index m) {
  CVec x = CVec::Zero(m);
  for (const auto& t : model.tones) {
    const cplx z = t.z();
    cplx zr = t.b();
    for (Eigen::Index r = 0; r < m; ++r, zr *= z) x[r] += zr;
  }
  return x;
}

inline std::vector<double> uniform_grid(std::size_t points = 2048) {
  require(points >= 1, errc::invalid_argument, "uniform_grid: needs at least one point");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = static_cast<double>(i) / static_cast<double>(points);
  return g;
}

inline std::vector<double> periodogram(const CVec& x, double Ts, const std::vector<double>& grid) {
  require(x.size() >= 1, errc::invalid_argument, "periodogram: empty signal");
  require(Ts > 0.0, errc::invalid_argument, "periodogram: sampling interval must be positive");
  require(!grid.empty(), errc::invalid_argument, "periodogram: empty frequency grid");
  const double m = static_cast<double>(x.size());
  std::vector<double> out;
  out.reserve(grid.size());
  for (double f : grid) {
    const cplx step = std::polar(1.0, -2.0 * pi * f * Ts);
    cplx w = 1.0, acc = 0.0;
    for (Eigen::Index r = 0; r < x.size(); ++r, w *= step) acc += x[r] * w;
    out.push_back(std::norm(Ts * acc) / (m * Ts));
  }
  return out;
}

// Fits b_i to x_r = sum_i b_i z_i^r over the first `rows` samples.
inline CVec vandermonde_fit(const CVec& x, const std::vector<cplx>& z, Eigen::Index rows) {
  CMat V(rows, static_cast<Eigen::Index>(z.size()));
  for (std::size_t i = 0; i < z.size(); ++i) {
    cplx p = 1.0;
    for (Eigen::Index r = 0; r < rows; ++r, p *= z[i]) V(r, static_cast<Eigen::Index>(i)) = p;
  }
  return pseudo_inverse_solve(V, x.head(rows));
}

inline void sort_by_frequency(SpectralModel& m) {
  std::sort(m.tones.begin(), m.tones.end(),
            [](const Tone& a, const Tone& b) { return a.frequency.real() < b.frequency.real(); });
}

inline SpectralModel prony(const CVec& x, std::size_t k) {
  require(k >= 1, errc::invalid_argument, "prony: k must be positive");
  require(static_cast<std::size_t>(x.size()) >= 2 * k, errc::invalid_argument, "prony: needs at least 2k samples");
  check_signal(x, "prony");
  const auto K = static_cast<Eigen::Index>(k);
  // x_r + h_1 x_{r-1} + ... + h_k x_{r-k} = 0 for r = k .. 2k-1
  CMat A(K, K);
  CVec rhs(K);
  for (Eigen::Index row = 0; row < K; ++row) {
    for (Eigen::Index i = 1; i <= K; ++i) A(row, i - 1) = x[K + row - i];
    rhs[row] = -x[K + row];
  }
  Eigen::JacobiSVD<CMat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  require(sv[0] > 0.0 && sv[K - 1] > 1e-12 * sv[0], errc::degenerate_model,
          "prony: recursion matrix is singular; the data hold fewer than k effective tones");
  const CVec h = svd.solve(rhs);
  std::vector<cplx> poly(k + 1);
  poly[0] = 1.0;
  for (std::size_t i = 1; i <= k; ++i) poly[i] = h[static_cast<Eigen::Index>(i - 1)];
  const std::vector<cplx> z = polynomial_roots(poly);
  const CVec b = vandermonde_fit(x, z, 2 * K);
  SpectralModel out;
  for (std::size_t i = 0; i < k; ++i) out.tones.push_back(tone_from(z[i], b[static_cast<Eigen::Index>(i)]));
  sort_by_frequency(out);
  return out;
}

struct CovarianceEstimate {
  CMat R;
  std::size_t m = 0;  // snapshots or samples behind the estimate

  Eigen::Index dim() const { return R.rows(); }

  void validate() const {
    require(R.rows() == R.cols() && R.rows() >= 1, errc::invalid_argument, "covariance must be square");
    const double scale = std::max(R.cwiseAbs().maxCoeff(), 1e-300);
    require((R - R.adjoint()).cwiseAbs().maxCoeff() <= 1e-10 * scale, errc::invalid_argument,
            "covariance is not Hermitian");
    const double tr = std::abs(R.trace().real());
    const double lo = hermitian_eig(R).values.minCoeff();
    require(lo >= -1e-8 * std::max(tr, 1e-300), errc::invalid_argument, "covariance is not positive semidefinite");
  }
};

// Forward-only averaging over the m - p + 1 sliding windows [x_r, ..., x_{r+p-1}].
inline CovarianceEstimate sample_covariance(const CVec& x, Eigen::Index p) {
  require(p >= 1 && x.size() >= p, errc::invalid_argument, "sample_covariance: need p <= sample count");
  CMat R = CMat::Zero(p, p);
  const Eigen::Index w = x.size() - p + 1;
  for (Eigen::Index r = 0; r < w; ++r) {
    const auto y = x.segment(r, p);
    R.noalias() += y * y.adjoint();
  }
  R /= static_cast<double>(w);
  R = 0.5 * (R + R.adjoint()).eval();
  return {R, static_cast<std::size_t>(x.size())};
}

// Toeplitz matrix of biased lag estimates, R(i, j) = r(i - j) with r(t) = (1/m) sum x_{s+t} conj(x_s).
inline CovarianceEstimate lag_covariance(const CVec& x, Eigen::Index p) {
  require(p >= 1 && x.size() >= p, errc::invalid_argument, "lag_covariance: need p <= sample count");
  const Eigen::Index m = x.size();
  CVec r(p);
  for (Eigen::Index t = 0; t < p; ++t) {
    cplx acc = 0.0;
    for (Eigen::Index s = 0; s + t < m; ++s) acc += x[s + t] * std::conj(x[s]);
    r[t] = acc / static_cast<double>(m);
  }
  CMat R(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) R(i, j) = i >= j ? r[i - j] : std::conj(r[j - i]);
  return {R, static_cast<std::size_t>(m)};
}

inline CVec steering(double f, Eigen::Index p) {
  CVec e(p);
  for (Eigen::Index i = 0; i < p; ++i) e[i] = std::polar(1.0, 2.0 * pi * f * static_cast<double>(i));
  return e;
}

// sum_i |b_i|^2 e_i e_i^H + sigma^2 I for undamped tones.
inline CovarianceEstimate exact_covariance(const SpectralModel& model, Eigen::Index p, double noise_variance) {
  CMat R = noise_variance * CMat::Identity(p, p);
  for (const auto& t : model.tones) {
    const CVec e = steering(t.frequency.real(), p);
    R.noalias() += t.amplitude * t.amplitude * e * e.adjoint();
  }
  return {R, 0};
}

struct PisarenkoResult {
  SpectralModel model;
  CVec h;  // noise eigenvector, used as descending polynomial coefficients
};

inline PisarenkoResult pisarenko(const CovarianceEstimate& cov, std::size_t k) {
  require(k >= 1, errc::invalid_argument, "pisarenko: k must be positive");
  require(cov.dim() == static_cast<Eigen::Index>(k) + 1, errc::invalid_argument,
          "pisarenko: covariance must be (k+1) x (k+1)");
  cov.validate();
  const auto eig = hermitian_eig(cov.R);
  const auto last = static_cast<Eigen::Index>(k);
  PisarenkoResult out;
  out.h = eig.vectors.col(last);
  out.model.noise_variance = eig.values[last];
  const double spread = std::max(std::abs(eig.values[0]), 1e-300);
  out.model.ambiguous = eig.values[last - 1] - eig.values[last] <= 1e-8 * spread;
  std::vector<cplx> poly(out.h.data(), out.h.data() + out.h.size());
  for (const cplx& z : polynomial_roots(poly)) {
    Tone t;
    t.frequency = wrap_unit(std::arg(z) / (2.0 * pi));
    out.model.tones.push_back(t);
  }
  // Tone powers from the first column of R: r(i) = sum_t P_t z_t^i for i = 1..k.
  CMat V(last, last);
  CVec rc(last);
  for (Eigen::Index i = 0; i < last; ++i) {
    for (Eigen::Index t = 0; t < last; ++t)
      V(i, t) = std::polar(1.0, 2.0 * pi * out.model.tones[static_cast<std::size_t>(t)].frequency.real() * static_cast<double>(i + 1));
    rc[i] = cov.R(i + 1, 0);
  }
  const CVec power = pseudo_inverse_solve(V, rc);
  for (Eigen::Index t = 0; t < last; ++t)
    out.model.tones[static_cast<std::size_t>(t)].amplitude = std::sqrt(std::max(power[t].real(), 0.0));
  sort_by_frequency(out.model);
  return out;
}

inline PisarenkoResult pisarenko(const CVec& x, std::size_t k, bool lag_window = false) {
  const auto p = static_cast<Eigen::Index>(k) + 1;
  return pisarenko(lag_window ? lag_covariance(x, p) : sample_covariance(x, p), k);
}

struct MusicResult {
  std::vector<double> grid;
  std::vector<double> pseudospectrum;
  std::vector<double> denominator;  // e^H Pi e
  std::vector<double> frequencies;  // selected peaks, ascending
  bool shortfall = false;
};

// Local maxima on the circular grid, taken greedily by height at least `min_sep` bins apart.
inline std::vector<std::size_t> pick_peaks(const std::vector<double>& v, std::size_t count, std::size_t min_sep = 2) {
  const std::size_t n = v.size();
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < n; ++i) {
    const double l = v[(i + n - 1) % n], r = v[(i + 1) % n];
    if (n == 1 || (v[i] > l && v[i] >= r)) cand.push_back(i);
  }
  std::sort(cand.begin(), cand.end(), [&](auto a, auto b) { return v[a] > v[b]; });
  std::vector<std::size_t> out;
  for (auto c : cand) {
    if (out.size() == count) break;
    bool ok = true;
    for (auto o : out) {
      const std::size_t d = c > o ? c - o : o - c;
      if (std::min(d, n - d) < min_sep) ok = false;
    }
    if (ok) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// With k = 0 the whole space counts as noise and the pseudospectrum is flat.
inline MusicResult music(const CovarianceEstimate& cov, std::size_t k, std::vector<double> grid = uniform_grid()) {
  const Eigen::Index p = cov.dim();
  require(static_cast<Eigen::Index>(k) < p, errc::invalid_argument, "music: k must be smaller than the covariance dimension");
  require(!grid.empty(), errc::invalid_argument, "music: empty frequency grid");
  cov.validate();
  const auto eig = hermitian_eig(cov.R);
  const CMat En = eig.vectors.rightCols(p - static_cast<Eigen::Index>(k));
  MusicResult out;
  out.grid = std::move(grid);
  for (double f : out.grid) {
    const double d = (En.adjoint() * steering(f, p)).squaredNorm();
    out.denominator.push_back(d);
    out.pseudospectrum.push_back(1.0 / std::max(d, 1e-300));
  }
  if (k > 0) {
    const auto idx = pick_peaks(out.pseudospectrum, k);
    for (auto i : idx) out.frequencies.push_back(out.grid[i]);
    out.shortfall = idx.size() < k;
  }
  return out;
}

// Mean circular distance between estimated and true frequencies under the best one-to-one pairing.
inline double frequency_error(std::vector<double> est, const std::vector<double>& truth) {
  require(!truth.empty(), errc::invalid_argument, "frequency_error: empty truth");
  if (est.size() != truth.size()) return 0.5;
  std::sort(est.begin(), est.end());
  double best = 1e300;
  do {
    double acc = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) acc += circular_distance(est[i], truth[i]);
    best = std::min(best, acc / static_cast<double>(est.size()));
  } while (std::next_permutation(est.begin(), est.end()));
  return best;
}

}  // namespace sparsekit
