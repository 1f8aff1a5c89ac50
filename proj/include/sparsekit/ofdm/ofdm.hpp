#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sparsekit/core/fft.hpp"
#include "sparsekit/core/linalg.hpp"
#include "sparsekit/core/metrics.hpp"
#include "sparsekit/core/random.hpp"
#include "sparsekit/core/types.hpp"

namespace sparsekit {

enum class Modulation { qam16, qpsk };

inline std::size_t constellation_size(Modulation m) { return m == Modulation::qam16 ? 16 : 4; }

// Unit average energy. Index = (in-phase level) * side + (quadrature level).
inline cplx constellation_point(Modulation m, int index) {
  if (m == Modulation::qpsk) {
    const double a = 1.0 / std::sqrt(2.0);
    return {(index / 2) ? a : -a, (index % 2) ? a : -a};
  }
  static constexpr std::array<double, 4> lv{-3.0, -1.0, 1.0, 3.0};
  const double s = 1.0 / std::sqrt(10.0);
  return {lv[static_cast<std::size_t>(index / 4)] * s, lv[static_cast<std::size_t>(index % 4)] * s};
}

inline int nearest_point(Modulation m, cplx z) {
  if (m == Modulation::qpsk) return (z.real() > 0.0 ? 2 : 0) + (z.imag() > 0.0 ? 1 : 0);
  const double s = std::sqrt(10.0);
  auto level = [](double v) { return v < -2.0 ? 0 : v < 0.0 ? 1 : v < 2.0 ? 2 : 3; };
  return level(z.real() * s) * 4 + level(z.imag() * s);
}

struct OfdmConfig {
  Eigen::Index n = 256;
  Eigen::Index cp_len = 64;
  Eigen::Index guard_low = 0;
  Eigen::Index guard_high = 0;
  SupportSet pilots;
  cplx pilot_value = 1.0;
  Modulation modulation = Modulation::qam16;
  double subcarrier_spacing = 4464.0;  // Hz

  double sample_interval() const { return 1.0 / subcarrier_spacing; }
  double symbol_length() const { return sample_interval() * static_cast<double>(n + cp_len) / static_cast<double>(n); }
  bool is_active(Eigen::Index i) const { return i >= guard_low && i < n - guard_high; }

  std::vector<std::size_t> data_carriers() const {
    std::vector<std::size_t> out;
    for (Eigen::Index i = guard_low; i < n - guard_high; ++i)
      if (!pilots.contains(static_cast<std::size_t>(i))) out.push_back(static_cast<std::size_t>(i));
    return out;
  }

  void validate() const {
    require(n >= 4 && cp_len >= 1 && cp_len <= n, errc::invalid_argument, "OfdmConfig: bad size or cyclic prefix");
    require(guard_low >= 0 && guard_high >= 0 && guard_low + guard_high < n, errc::invalid_argument,
            "OfdmConfig: guard bands leave no active carriers");
    require(pilots.ambient() == static_cast<std::size_t>(n), errc::invalid_argument, "OfdmConfig: pilot set size mismatch");
    require(pilots.size() >= 2, errc::invalid_argument, "OfdmConfig: need at least two pilots");
    for (auto p : pilots)
      require(is_active(static_cast<Eigen::Index>(p)), errc::invalid_argument, "OfdmConfig: pilot on a guard carrier");
    require(std::abs(pilot_value) > 0.0, errc::invalid_argument, "OfdmConfig: zero pilot value");
  }

  // Comb pilots every `spacing` active carriers, starting at the first active one.
  static SupportSet comb(Eigen::Index n, Eigen::Index guard_low, Eigen::Index guard_high, Eigen::Index spacing) {
    std::vector<std::size_t> p;
    for (Eigen::Index i = guard_low; i < n - guard_high; i += spacing) p.push_back(static_cast<std::size_t>(i));
    return SupportSet(std::move(p), static_cast<std::size_t>(n));
  }

  static OfdmConfig desk() {
    OfdmConfig c;
    c.pilots = comb(256, 0, 0, 4);
    return c;
  }

  // 2048 carriers with 1705 active, pilots every 4th active carrier.
  static OfdmConfig mode_2k() {
    OfdmConfig c;
    c.n = 2048;
    c.cp_len = 512;
    c.guard_low = 172;
    c.guard_high = 171;
    c.pilots = comb(2048, 172, 171, 4);
    c.subcarrier_spacing = 4464.0;
    return c;
  }
};

struct ChannelTap {
  Eigen::Index delay = 0;
  cplx gain = 0.0;
};

struct ChannelProfile {
  std::vector<ChannelTap> taps;

  std::size_t k() const { return taps.size(); }

  double power() const {
    double p = 0.0;
    for (const auto& t : taps) p += std::norm(t.gain);
    return p;
  }

  void validate(Eigen::Index n) const {
    for (std::size_t i = 0; i < taps.size(); ++i) {
      require(taps[i].delay >= 0, errc::invalid_argument, "ChannelProfile: negative delay");
      require(taps[i].delay < n, errc::invalid_argument, "ChannelProfile: delay not below the carrier count");
      require(i == 0 || taps[i].delay > taps[i - 1].delay, errc::invalid_argument,
              "ChannelProfile: delays must be unique and sorted");
    }
  }

  CVec impulse(Eigen::Index n) const {
    validate(n);
    CVec h = CVec::Zero(n);
    for (const auto& t : taps) h[t.delay] = t.gain;
    return h;
  }

  // Six integer-delay taps standing in for the Brazil D profile; unit total power.
  static ChannelProfile brazil_d_standin() {
    static constexpr std::array<int, 6> delay{0, 2, 7, 9, 17, 18};
    static constexpr std::array<double, 6> gain_db{-0.1, -3.8, -2.6, -1.3, 0.0, -2.8};
    static constexpr std::array<double, 6> phase{0.0, 1.1, -2.0, 0.4, 2.7, -0.9};
    ChannelProfile p;
    double total = 0.0;
    for (double g : gain_db) total += std::pow(10.0, g / 10.0);
    for (std::size_t i = 0; i < 6; ++i)
      p.taps.push_back({delay[i], std::polar(std::sqrt(std::pow(10.0, gain_db[i] / 10.0) / total), phase[i])});
    return p;
  }
};

// H[i] = sum_l h[l] exp(-2 pi j i l / n).
inline CVec channel_frequency_response(const ChannelProfile& profile, const OfdmConfig& cfg) {
  return std::sqrt(static_cast<double>(cfg.n)) * dft(profile.impulse(cfg.n));
}

struct TxBlock {
  CVec X;
  std::vector<std::size_t> carriers;  // data carriers in increasing order
  std::vector<int> symbols;           // constellation index per data carrier
};

inline TxBlock make_tx_block(const OfdmConfig& cfg, RandomSource& rng) {
  cfg.validate();
  TxBlock b;
  b.X = CVec::Zero(cfg.n);
  for (auto p : cfg.pilots) b.X[static_cast<Eigen::Index>(p)] = cfg.pilot_value;
  b.carriers = cfg.data_carriers();
  b.symbols.resize(b.carriers.size());
  const auto M = constellation_size(cfg.modulation);
  for (std::size_t i = 0; i < b.carriers.size(); ++i) {
    b.symbols[i] = static_cast<int>(rng.below(M));
    b.X[static_cast<Eigen::Index>(b.carriers[i])] = constellation_point(cfg.modulation, b.symbols[i]);
  }
  return b;
}

// Noise variance per carrier for a carrier-to-noise ratio relative to unit-energy
// symbols through a channel of the given power.
inline double cnr_noise_variance(double cnr_db, double channel_power) {
  if (std::isinf(cnr_db) && cnr_db > 0) return 0.0;
  return channel_power / db_to_linear(cnr_db);
}

inline void add_carrier_noise(CVec& Y, const OfdmConfig& cfg, double noise_var, RandomSource& rng) {
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    if (!cfg.is_active(i)) {
      Y[i] = 0.0;
      continue;
    }
    if (noise_var > 0.0) Y[i] += rng.complex_normal(noise_var);
  }
}

inline CVec ofdm_link(const CVec& X, const CVec& H, const OfdmConfig& cfg, double noise_var, RandomSource& rng) {
  require(X.size() == cfg.n && H.size() == cfg.n, errc::invalid_argument, "ofdm_link: block length mismatch");
  CVec Y = H.cwiseProduct(X);
  add_carrier_noise(Y, cfg, noise_var, rng);
  return Y;
}

inline CVec ofdm_link(const CVec& X, const ChannelProfile& profile, const OfdmConfig& cfg, double cnr_db,
                      RandomSource& rng) {
  return ofdm_link(X, channel_frequency_response(profile, cfg), cfg, cnr_noise_variance(cnr_db, profile.power()), rng);
}

// Each symbol starts from the profile gains; every tap then follows a complex AR(1)
// sample by sample, pole J0(2 pi nu / n) for normalised Doppler nu = f_d / subcarrier spacing.
struct DriftingChannel {
  ChannelProfile profile;
  double normalized_doppler = 0.0;

  double pole(Eigen::Index n) const { return std::cyl_bessel_j(0.0, 2.0 * pi * normalized_doppler / static_cast<double>(n)); }
};

// Time-domain transmission with cyclic prefix; `H_mean` receives the per-symbol average response.
inline CVec ofdm_link_drifting(const CVec& X, const DriftingChannel& ch, const OfdmConfig& cfg, double cnr_db,
                               RandomSource& rng, CVec* H_mean = nullptr) {
  require(X.size() == cfg.n, errc::invalid_argument, "ofdm_link_drifting: block length mismatch");
  ch.profile.validate(cfg.n);
  const Eigen::Index n = cfg.n;
  const double rho = ch.pole(n);
  const double innov = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  const CVec x = idft(X);
  std::vector<cplx> g(ch.profile.k());
  for (std::size_t l = 0; l < g.size(); ++l) g[l] = ch.profile.taps[l].gain;
  auto step = [&]() {
    if (innov == 0.0) return;
    for (std::size_t l = 0; l < g.size(); ++l)
      g[l] = rho * g[l] + innov * std::abs(ch.profile.taps[l].gain) * rng.complex_normal(1.0);
  };
  for (Eigen::Index t = 0; t < cfg.cp_len; ++t) step();
  CVec y = CVec::Zero(n);
  std::vector<cplx> mean(g.size(), 0.0);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (std::size_t l = 0; l < g.size(); ++l) {
      y[t] += g[l] * x[(t - ch.profile.taps[l].delay + n) % n];
      mean[l] += g[l] / static_cast<double>(n);
    }
    step();
  }
  CVec Y = dft(y);
  if (H_mean) {
    ChannelProfile avg = ch.profile;
    for (std::size_t l = 0; l < g.size(); ++l) avg.taps[l].gain = mean[l];
    *H_mean = channel_frequency_response(avg, cfg);
  }
  add_carrier_noise(Y, cfg, cnr_noise_variance(cnr_db, ch.profile.power()), rng);
  return Y;
}

inline CVec pilot_ls(const CVec& Y, const OfdmConfig& cfg) {
  CVec out(static_cast<Eigen::Index>(cfg.pilots.size()));
  for (std::size_t i = 0; i < cfg.pilots.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = Y[static_cast<Eigen::Index>(cfg.pilots[i])] / cfg.pilot_value;
  return out;
}

// LS at pilots, linear in between, nearest pilot beyond the outermost pilots.
inline CVec estimate_linear(const CVec& Y, const OfdmConfig& cfg) {
  require(cfg.pilots.size() >= 2, errc::invalid_argument, "estimate_linear: need at least two pilots");
  require(Y.size() == cfg.n, errc::invalid_argument, "estimate_linear: block length mismatch");
  const CVec hp = pilot_ls(Y, cfg);
  CVec H = CVec::Zero(cfg.n);
  const auto& p = cfg.pilots.indices();
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if (iu <= p.front()) { H[i] = hp[0]; continue; }
    if (iu >= p.back()) { H[i] = hp[hp.size() - 1]; continue; }
    const auto hi = static_cast<std::size_t>(std::upper_bound(p.begin(), p.end(), iu) - p.begin());
    const double w = static_cast<double>(iu - p[hi - 1]) / static_cast<double>(p[hi] - p[hi - 1]);
    H[i] = (1.0 - w) * hp[static_cast<Eigen::Index>(hi - 1)] + w * hp[static_cast<Eigen::Index>(hi)];
  }
  return H;
}

struct MimatConfig {
  double beta = 0.0;          // <= 0 selects beta_factor * max|h0|
  double beta_factor = 0.1;
  double alpha = 0.5;
  std::size_t max_iters = 10;
  double snr = std::numeric_limits<double>::infinity();  // linear; infinity gives least squares

  void validate() const {
    require(alpha > 0.0, errc::invalid_argument, "MimatConfig: growth must be positive");
    require(beta > 0.0 || beta_factor > 0.0, errc::invalid_argument, "MimatConfig: threshold base must be positive");
    require(max_iters >= 1, errc::invalid_argument, "MimatConfig: need at least one iteration");
    require(snr > 0.0, errc::invalid_argument, "MimatConfig: snr must be positive");
  }
};

struct MimatResult {
  ChannelProfile profile;
  CVec taps;      // length cp_len
  CVec response;  // length n
  std::vector<double> thresholds;
  std::vector<std::size_t> support_sizes;
  std::size_t iterations = 0;
  bool converged = false;
  bool fallback = false;
  bool regularized = false;
};

namespace detail {

inline CMat pilot_dft_columns(const OfdmConfig& cfg, const std::vector<std::size_t>& cols) {
  CMat F(static_cast<Eigen::Index>(cfg.pilots.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < cfg.pilots.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto prod = (cfg.pilots[r] * cols[c]) % static_cast<std::size_t>(cfg.n);
      F(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          std::polar(1.0, -2.0 * pi * static_cast<double>(prod) / static_cast<double>(cfg.n));
    }
  return F;
}

}  // namespace detail

inline MimatResult estimate_mimat(const CVec& Y, const OfdmConfig& cfg, const MimatConfig& mc = {}) {
  cfg.validate();
  mc.validate();
  const Eigen::Index L = cfg.cp_len;
  const CVec h0 = idft(estimate_linear(Y, cfg)) / std::sqrt(static_cast<double>(cfg.n));
  CVec h = h0.head(L);
  const CVec Hp = pilot_ls(Y, cfg);
  const double beta = mc.beta > 0.0 ? mc.beta : mc.beta_factor * h.cwiseAbs().maxCoeff();

  MimatResult out;
  std::vector<std::size_t> prev_support;
  for (std::size_t i = 1; i <= mc.max_iters; ++i) {
    const double thr = beta * std::exp(mc.alpha * static_cast<double>(i));
    std::vector<std::size_t> t;
    for (Eigen::Index l = 0; l < L; ++l)
      if (std::abs(h[l]) >= thr) t.push_back(static_cast<std::size_t>(l));
    if (t.empty()) {
      Eigen::Index best;
      h.cwiseAbs().maxCoeff(&best);
      t.push_back(static_cast<std::size_t>(best));
      out.fallback = true;
    }
    const CMat F = detail::pilot_dft_columns(cfg, t);
    CMat G = F.adjoint() * F;
    if (std::isfinite(mc.snr)) G += CMat::Identity(G.rows(), G.cols()) / mc.snr;
    Eigen::SelfAdjointEigenSolver<CMat> eig(G, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues()[0] <= 1e-12 * eig.eigenvalues()[G.rows() - 1]) {
      G += 1e-10 * G.trace().real() * CMat::Identity(G.rows(), G.cols());
      out.regularized = true;
    }
    const CVec ht = G.ldlt().solve(F.adjoint() * Hp);
    CVec next = CVec::Zero(L);
    for (std::size_t c = 0; c < t.size(); ++c) next[static_cast<Eigen::Index>(t[c])] = ht[static_cast<Eigen::Index>(c)];

    out.thresholds.push_back(thr);
    out.support_sizes.push_back(t.size());
    out.iterations = i;
    const bool same = t == prev_support && (next - h).norm() <= 1e-12 * std::max(next.norm(), 1e-300);
    h = next;
    prev_support = t;
    if (same) {
      out.converged = true;
      break;
    }
  }
  out.taps = h;
  for (Eigen::Index l = 0; l < L; ++l)
    if (h[l] != cplx(0.0)) out.profile.taps.push_back({l, h[l]});
  CVec full = CVec::Zero(cfg.n);
  full.head(L) = h;
  out.response = std::sqrt(static_cast<double>(cfg.n)) * dft(full);
  return out;
}

enum class Equalizer { zf, mmse };

struct Equalized {
  CVec symbols;
  std::vector<bool> erased;
};

// MMSE uses the per-carrier Wiener weight conj(H) / (|H|^2 + 1/snr).
inline Equalized equalize(const CVec& Y, const CVec& H, Equalizer method, double snr = 0.0) {
  require(Y.size() == H.size(), errc::invalid_argument, "equalize: length mismatch");
  require(method == Equalizer::zf || snr > 0.0, errc::invalid_argument, "equalize: MMSE needs a positive snr");
  Equalized e;
  e.symbols = CVec::Zero(Y.size());
  e.erased.assign(static_cast<std::size_t>(Y.size()), false);
  for (Eigen::Index i = 0; i < Y.size(); ++i) {
    if (method == Equalizer::zf) {
      if (std::abs(H[i]) < 1e-12) {
        e.erased[static_cast<std::size_t>(i)] = true;
        continue;
      }
      e.symbols[i] = Y[i] / H[i];
    } else {
      e.symbols[i] = std::conj(H[i]) * Y[i] / (std::norm(H[i]) + 1.0 / snr);
    }
  }
  return e;
}

inline std::vector<int> decide(const Equalized& eq, const std::vector<std::size_t>& carriers, Modulation m) {
  std::vector<int> out(carriers.size());
  for (std::size_t i = 0; i < carriers.size(); ++i)
    out[i] = eq.erased[carriers[i]] ? -1 : nearest_point(m, eq.symbols[static_cast<Eigen::Index>(carriers[i])]);
  return out;
}

struct SerResult {
  double rate = 0.0;
  double ci_halfwidth = 0.0;  // 95% Wilson score interval
  std::size_t errors = 0;
  std::size_t count = 0;
};

inline SerResult ser_from_counts(std::size_t errors, std::size_t count) {
  SerResult r;
  r.errors = errors;
  r.count = count;
  if (count == 0) return r;
  const double N = static_cast<double>(count), p = static_cast<double>(errors) / N, z = 1.96;
  r.rate = p;
  r.ci_halfwidth = z * std::sqrt(p * (1.0 - p) / N + z * z / (4.0 * N * N)) / (1.0 + z * z / N);
  return r;
}

inline SerResult ser_measure(const std::vector<int>& tx, const std::vector<int>& rx) {
  require(tx.size() == rx.size(), errc::invalid_argument, "ser_measure: length mismatch");
  std::size_t err = 0;
  for (std::size_t i = 0; i < tx.size(); ++i) err += tx[i] != rx[i];
  return ser_from_counts(err, tx.size());
}

struct OfdmSweepConfig {
  OfdmConfig ofdm = OfdmConfig::desk();
  ChannelProfile profile = ChannelProfile::brazil_d_standin();
  std::vector<double> cnr_db{15, 17.5, 20, 22.5, 25, 27.5, 30};
  std::size_t blocks = 200;
  std::uint64_t seed = 1;
  Equalizer equalizer = Equalizer::zf;
  double normalized_doppler = 0.0;
  MimatConfig mimat{};
  bool mimat_uses_snr = true;
};

struct SerRow {
  double cnr_db = 0.0;
  std::string estimator;
  double ser = 0.0;
  double ci_halfwidth = 0.0;
  std::size_t blocks = 0;
  std::size_t errors = 0;
  std::size_t symbols = 0;
  double mean_mimat_iterations = 0.0;
};

// Ideal, linear and MIMAT estimators see the same transmitted and received blocks.
inline std::vector<SerRow> ofdm_ser_sweep(const OfdmSweepConfig& cfg) {
  cfg.ofdm.validate();
  std::vector<SerRow> rows;
  const RandomSource root(cfg.seed);
  const CVec H_static = channel_frequency_response(cfg.profile, cfg.ofdm);
  for (std::size_t pi_ = 0; pi_ < cfg.cnr_db.size(); ++pi_) {
    const double cnr = cfg.cnr_db[pi_];
    const double nv = cnr_noise_variance(cnr, cfg.profile.power());
    std::array<std::size_t, 3> err{0, 0, 0};
    std::size_t total = 0, mimat_iters = 0;
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
      RandomSource rng = root.fork(pi_ * 1000003ULL + b);
      const TxBlock tx = make_tx_block(cfg.ofdm, rng);
      CVec H_true = H_static;
      CVec Y;
      if (cfg.normalized_doppler > 0.0)
        Y = ofdm_link_drifting(tx.X, DriftingChannel{cfg.profile, cfg.normalized_doppler}, cfg.ofdm, cnr, rng, &H_true);
      else
        Y = ofdm_link(tx.X, H_static, cfg.ofdm, nv, rng);
      MimatConfig mc = cfg.mimat;
      if (cfg.mimat_uses_snr && nv > 0.0) mc.snr = 1.0 / nv;
      const MimatResult mim = estimate_mimat(Y, cfg.ofdm, mc);
      mimat_iters += mim.iterations;
      const std::array<const CVec*, 3> est{&H_true, nullptr, &mim.response};
      const CVec lin = estimate_linear(Y, cfg.ofdm);
      const double snr = nv > 0.0 ? 1.0 / nv : 1e12;
      for (std::size_t e = 0; e < 3; ++e) {
        const CVec& H = e == 1 ? lin : *est[e];
        const auto rx = decide(equalize(Y, H, cfg.equalizer, snr), tx.carriers, cfg.ofdm.modulation);
        for (std::size_t i = 0; i < rx.size(); ++i) err[e] += rx[i] != tx.symbols[i];
      }
      total += tx.symbols.size();
    }
    static const std::array<const char*, 3> names{"ideal", "linear", "mimat"};
    for (std::size_t e = 0; e < 3; ++e) {
      const SerResult r = ser_from_counts(err[e], total);
      SerRow row;
      row.cnr_db = cnr;
      row.estimator = names[e];
      row.ser = r.rate;
      row.ci_halfwidth = r.ci_halfwidth;
      row.blocks = cfg.blocks;
      row.errors = err[e];
      row.symbols = total;
      row.mean_mimat_iterations = static_cast<double>(mimat_iters) / static_cast<double>(cfg.blocks);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace sparsekit
