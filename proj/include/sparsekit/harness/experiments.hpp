#pragma once

// Desk-scale scenarios behind the registered experiments. Each study returns plain rows; the registry turns them
// into CSV tables and the acceptance checks read the same rows.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "sparsekit/array/array.hpp"
#include "sparsekit/codes/convolutional.hpp"
#include "sparsekit/codes/dft_code.hpp"
#include "sparsekit/core/csv.hpp"
#include "sparsekit/core/metrics.hpp"
#include "sparsekit/core/random.hpp"
#include "sparsekit/ofdm/ofdm.hpp"
#include "sparsekit/recovery/imat.hpp"
#include "sparsekit/recovery/iterative.hpp"
#include "sparsekit/recovery/phase_transition.hpp"
#include "sparsekit/sca/benchmark.hpp"
#include "sparsekit/spectral/spectral.hpp"

namespace sparsekit {

inline double median_of(std::vector<double> v) {
  require(!v.empty(), errc::invalid_argument, "median_of: empty sample");
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// ---- acceleration (bandpass random sampling) --------------------------------------------------------------

struct AccelerationConfig {
  std::size_t n = 256;
  std::size_t band_lo = 24;
  std::size_t band_width = 16;
  // Average sample count relative to the lowpass Nyquist count band_lo + band_width.
  double osr = 1.0;
  double target_snr_db = 40.0;
  std::size_t max_iters = 2000;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
};

struct AccelerationTrial {
  std::size_t trial = 0;
  double condition = 0.0;
  // Iterations to reach the target SNR; 0 when the budget ran out first.
  std::size_t plain = 0, chebyshev = 0, cg = 0;
  double fixed_point_gap = 0.0;  // largest pairwise distance between the three converged estimates
  std::vector<double> plain_trace, chebyshev_trace, cg_trace;
};

inline std::size_t iterations_to(const std::vector<double>& snr, double target) {
  for (std::size_t i = 0; i < snr.size(); ++i)
    if (snr[i] >= target) return i + 1;
  return 0;
}

inline std::vector<AccelerationTrial> acceleration_study(const AccelerationConfig& cfg) {
  require(cfg.band_lo + cfg.band_width <= cfg.n && cfg.band_width >= 1, errc::invalid_argument,
          "acceleration_study: band outside the frame");
  const auto m = static_cast<std::size_t>(std::lround(cfg.osr * static_cast<double>(cfg.band_lo + cfg.band_width)));
  require(m >= cfg.band_width && m <= cfg.n, errc::invalid_argument, "acceleration_study: sample count out of range");
  std::vector<std::size_t> band(cfg.band_width);
  std::iota(band.begin(), band.end(), cfg.band_lo);
  const SupportSet F(band, cfg.n);
  RandomSource root(cfg.seed);
  std::vector<AccelerationTrial> out;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    RandomSource rng = root.fork(t);
    CVec X = CVec::Zero(static_cast<Eigen::Index>(cfg.n));
    for (auto k : F) X[static_cast<Eigen::Index>(k)] = rng.complex_normal();
    const CVec x = idft(X);
    const auto sm = MaskSpec::time_samples(rng.support(cfg.n, m));
    const auto fm = MaskSpec::frequency(F);
    const CVec y = masked(x, sm.support);
    const auto fb = estimate_frame_bounds(sm, fm);
    AccelerationTrial tr;
    tr.trial = t;
    tr.condition = fb.A > 0.0 ? fb.B / fb.A : std::numeric_limits<double>::infinity();
    if (!(fb.A > 1e-12 * fb.B)) {
      out.push_back(tr);
      continue;
    }
    IterationConfig c;
    c.A = fb.A;
    c.B = fb.B;
    c.eps = 1e-14;
    c.max_iters = cfg.max_iters;
    IterationConfig plain = c;
    plain.relax = std::min(1.99, 2.0 / (fb.A + fb.B));
    const auto a = iterative_reconstruct(y, sm, fm, plain, &x);
    const auto b = chebyshev_accelerate(y, sm, fm, c, &x);
    const auto g = cg_accelerate(y, sm, fm, c, &x);
    tr.plain = iterations_to(a.snr_trace, cfg.target_snr_db);
    tr.chebyshev = iterations_to(b.snr_trace, cfg.target_snr_db);
    tr.cg = iterations_to(g.snr_trace, cfg.target_snr_db);
    tr.plain_trace = a.snr_trace;
    tr.chebyshev_trace = b.snr_trace;
    tr.cg_trace = g.snr_trace;
    plain.max_iters = c.max_iters = 200000;
    const CVec fa = iterative_reconstruct(y, sm, fm, plain).estimate;
    const CVec fc = chebyshev_accelerate(y, sm, fm, c).estimate;
    const CVec fg = cg_accelerate(y, sm, fm, c).estimate;
    tr.fixed_point_gap = std::max({(fa - fc).norm(), (fa - fg).norm(), (fc - fg).norm()});
    out.push_back(std::move(tr));
  }
  return out;
}

// ---- IMAT convergence trace ---------------------------------------------------------------------------------

struct ImatTraceConfig {
  std::size_t n = 256;
  std::size_t k = 8;
  std::size_t m = 32;
  std::size_t trials = 40;
  std::uint64_t seed = 1;
  ImatConfig imat;
};

struct ImatTraceTrial {
  std::vector<double> snr;
  double peak_db = 0.0;
  std::size_t settle = 0;  // 1-based iteration from which the trace stays on its plateau
  bool support_ok = false;
};

// First iteration after which the SNR never again drops below min(peak - 3 dB, 100 dB).
inline std::size_t settle_iteration(const std::vector<double>& snr) {
  if (snr.empty()) return 0;
  const double level = std::min(*std::max_element(snr.begin(), snr.end()) - 3.0, 100.0);
  std::size_t i = snr.size();
  while (i > 0 && snr[i - 1] >= level) --i;
  return i + 1;
}

inline std::vector<ImatTraceTrial> imat_trace_study(const ImatTraceConfig& cfg) {
  require(cfg.k >= 1 && cfg.k < cfg.n && cfg.m >= 1 && cfg.m <= cfg.n, errc::invalid_argument,
          "imat_trace_study: bad sizes");
  RandomSource root(cfg.seed);
  std::vector<ImatTraceTrial> out;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    RandomSource rng = root.fork(t);
    const auto F = rng.support(cfg.n, cfg.k);
    const CVec x = sparse_transform_signal(rng, cfg.n, F, Transform::DFT);
    const auto S = rng.support(cfg.n, cfg.m);
    const auto r = imat(masked(x, S), MaskSpec::time_samples(S), Transform::DFT, cfg.imat, &x);
    ImatTraceTrial tr;
    tr.snr = r.report.snr_trace;
    tr.peak_db = tr.snr.empty() ? 0.0 : *std::max_element(tr.snr.begin(), tr.snr.end());
    tr.settle = settle_iteration(tr.snr);
    tr.support_ok = r.support == F;
    out.push_back(std::move(tr));
  }
  return out;
}

// Mean SNR per iteration; a trace that stopped early keeps its last value.
inline std::vector<double> mean_trace(const std::vector<ImatTraceTrial>& trials) {
  std::size_t len = 0;
  for (const auto& t : trials) len = std::max(len, t.snr.size());
  std::vector<double> mean(len, 0.0);
  for (const auto& t : trials)
    for (std::size_t i = 0; i < len; ++i) mean[i] += t.snr.empty() ? 0.0 : t.snr[std::min(i, t.snr.size() - 1)];
  for (auto& v : mean) v /= static_cast<double>(trials.size());
  return mean;
}

// ---- DFT-code erasures ----------------------------------------------------------------------------------------

struct ErasureStudyConfig {
  std::size_t message = 16;
  std::size_t parity = 16;
  std::size_t burst_start = 1;
  std::size_t burst_length = 16;
  std::size_t scattered_max = 8;
  std::size_t trials = 20;
  std::uint64_t seed = 1;
};

struct ErasureRow {
  std::string pattern;
  std::size_t erasures = 0;
  std::size_t trial = 0;
  double snr_db = 0.0;
};

struct ErasureExample {
  CVec original, received, recovered;
};

inline std::vector<ErasureRow> erasure_study(const ErasureStudyConfig& cfg, ErasureExample* example = nullptr) {
  const DftBlockCode code(cfg.message, cfg.parity);
  require(cfg.burst_length <= cfg.parity && cfg.scattered_max <= cfg.parity, errc::invalid_argument,
          "erasure_study: more erasures than parity");
  RandomSource root(cfg.seed);
  std::vector<ErasureRow> rows;
  auto run = [&](const std::string& pattern, const SupportSet& e, std::size_t t, RandomSource& rng, bool keep) {
    CVec msg(static_cast<Eigen::Index>(cfg.message));
    for (auto& v : msg) v = rng.normal();
    const CVec c = dft_block_encode(msg, code);
    CVec r = c;
    for (auto i : e) r[static_cast<Eigen::Index>(i)] = 0.0;
    const auto d = elp_erasure_decode(r, e, code);
    rows.push_back({pattern, e.size(), t, snr_db(msg, d.message)});
    if (keep && example) *example = {c, r, d.codeword};
  };
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    RandomSource rng = root.fork(t);
    std::vector<std::size_t> b;
    for (std::size_t i = 0; i < cfg.burst_length; ++i) b.push_back((cfg.burst_start + i) % code.n());
    run("burst", SupportSet(b, code.n()), t, rng, t == 0);
    for (std::size_t k = 1; k <= cfg.scattered_max; ++k) run("scattered", rng.support(code.n(), k), t, rng, false);
  }
  return rows;
}

// ---- convolutional code: erasures and impulses ----------------------------------------------------------------

struct ConvErasureConfig {
  std::vector<double> rates{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t input_length = 50;
  std::size_t cg_iters = 30;
  std::size_t trials = 30;
  std::uint64_t seed = 1;
};

struct ConvErasureRow {
  double rate = 0.0;
  std::size_t erasures = 0;
  double mean_snr_db = 0.0;
};

// Erasure rate is relative to the full capacity of the rate-1/2 code, i.e. half the encoded length.
inline std::vector<ConvErasureRow> conv_erasure_study(const ConvErasureConfig& cfg) {
  const auto code = ConvCode::example();
  IterationConfig ic;
  ic.max_iters = cfg.cg_iters;
  RandomSource root(cfg.seed);
  std::vector<ConvErasureRow> rows;
  for (std::size_t ri = 0; ri < cfg.rates.size(); ++ri) {
    const double rate = cfg.rates[ri];
    require(rate >= 0.0 && rate <= 1.0, errc::invalid_argument, "conv_erasure_study: rate outside [0, 1]");
    RandomSource rng = root.fork(ri);
    ConvErasureRow row{rate, 0, 0.0};
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      RVec x(static_cast<Eigen::Index>(cfg.input_length));
      for (auto& v : x) v = rng.uniform();
      RVec y = conv_encode(x, code);
      const auto len = static_cast<std::size_t>(y.size());
      row.erasures = static_cast<std::size_t>(std::lround(rate * static_cast<double>(len) / 2.0));
      const SupportSet e(rng.choose(len, row.erasures), len);
      for (auto i : e) y[static_cast<Eigen::Index>(i)] = 0.0;
      row.mean_snr_db += snr_db(x, conv_erasure_decode(y, e, code, ic).estimate);
    }
    row.mean_snr_db /= static_cast<double>(cfg.trials);
    rows.push_back(row);
  }
  return rows;
}

struct ConvImpulseConfig {
  std::vector<double> variances{1.0, 2.0, 5.0, 10.0};  // multiples of the code-stream variance
  std::size_t input_length = 50;
  std::size_t impulses = 2;
  double background = 0.01;  // background noise std relative to the code-stream std
  double relax = 1.9;
  std::size_t iters = 300;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
};

struct ConvImpulseRow {
  double variance = 0.0;
  std::size_t hits = 0;
  std::size_t trials = 0;
  double rate = 0.0;
  double mean_snr_db = 0.0;
};

inline std::vector<ConvImpulseRow> conv_impulse_study(const ConvImpulseConfig& cfg) {
  const auto code = ConvCode::example();
  ImatConfig ic;
  ic.relax = cfg.relax;
  ic.max_iters = cfg.iters;
  ic.floor_ratio = cfg.background > 0.0 ? 0.1 : ic.floor_ratio;
  RandomSource root(cfg.seed);
  std::vector<ConvImpulseRow> rows;
  for (std::size_t vi = 0; vi < cfg.variances.size(); ++vi) {
    // Every variance level sees the same inputs, positions and background noise.
    RandomSource rng = root.fork(0);
    ConvImpulseRow row{cfg.variances[vi], 0, cfg.trials, 0.0, 0.0};
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      RVec x(static_cast<Eigen::Index>(cfg.input_length));
      for (auto& v : x) v = rng.uniform();
      const RVec y = conv_encode(x, code);
      const double var = (y.array() - y.mean()).square().mean();
      const auto len = static_cast<std::size_t>(y.size());
      const SupportSet where(rng.choose(len, cfg.impulses), len);
      RVec r = y;
      for (auto i : where) r[static_cast<Eigen::Index>(i)] += rng.normal() * std::sqrt(cfg.variances[vi] * var);
      for (auto& v : r) v += cfg.background * std::sqrt(var) * rng.normal();
      const auto d = conv_impulsive_decode(r, code, ic);
      row.hits += d.support == where;
      row.mean_snr_db += snr_db(x, d.input);
    }
    row.rate = static_cast<double>(row.hits) / static_cast<double>(cfg.trials);
    row.mean_snr_db /= static_cast<double>(cfg.trials);
    rows.push_back(row);
  }
  return rows;
}

// ---- spectral estimation at the noisy operating point -------------------------------------------------------------

struct SpectralStudyConfig {
  std::vector<double> tones{0.1, 0.2, 0.3, 0.4};
  double snr_db = 5.0;
  std::size_t samples = 1024;
  std::size_t covariance_order = 16;
  std::size_t grid_points = 2048;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
};

struct SpectralTrial {
  double music = 0.0, pisarenko = 0.0, prony = 0.0;  // mean frequency error, cycles/sample
  bool music_within_bin = false;
};

struct SpectralExample {
  std::vector<double> grid, music_db, periodogram_db;
};

inline SpectralModel unit_tones(const std::vector<double>& freqs, RandomSource& rng) {
  SpectralModel m;
  for (double f : freqs) {
    Tone t;
    t.frequency = f;
    t.amplitude = 1.0;
    t.phase = rng.uniform(-pi, pi);
    m.tones.push_back(t);
  }
  return m;
}

inline std::vector<SpectralTrial> spectral_study(const SpectralStudyConfig& cfg, SpectralExample* example = nullptr) {
  const double sigma2 = std::pow(10.0, -cfg.snr_db / 10.0);
  const auto grid = uniform_grid(cfg.grid_points);
  const std::size_t k = cfg.tones.size();
  RandomSource root(cfg.seed);
  std::vector<SpectralTrial> out;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    RandomSource rng = root.fork(t);
    const auto truth = unit_tones(cfg.tones, rng);
    const auto m = static_cast<Eigen::Index>(cfg.samples);
    const CVec x = generate(truth, m) + rng.complex_normal_vector(m, sigma2);
    const auto mu = music(sample_covariance(x, static_cast<Eigen::Index>(cfg.covariance_order)), k, grid);
    SpectralTrial tr;
    tr.music = frequency_error(mu.frequencies, truth.frequencies());
    tr.pisarenko = frequency_error(pisarenko(x, k).model.frequencies(), truth.frequencies());
    tr.prony = frequency_error(prony(x, k).frequencies(), truth.frequencies());
    tr.music_within_bin = mu.frequencies.size() == k;
    const double bin = 1.0 / static_cast<double>(cfg.grid_points);
    for (double f : mu.frequencies) {
      double d = 1.0;
      for (double g : cfg.tones) d = std::min(d, circular_distance(f, g));
      tr.music_within_bin = tr.music_within_bin && d <= bin + 1e-12;
    }
    if (t == 0 && example) {
      example->grid = grid;
      const auto pg = periodogram(x, 1.0, grid);
      const double top_mu = *std::max_element(mu.pseudospectrum.begin(), mu.pseudospectrum.end());
      const double top_pg = *std::max_element(pg.begin(), pg.end());
      for (std::size_t i = 0; i < grid.size(); ++i) {
        example->music_db.push_back(10.0 * std::log10(mu.pseudospectrum[i] / top_mu));
        example->periodogram_db.push_back(10.0 * std::log10(std::max(pg[i], 1e-300) / top_pg));
      }
    }
    out.push_back(tr);
  }
  return out;
}

// ---- MDL source enumeration -----------------------------------------------------------------------------------

struct MdlStudyConfig {
  Eigen::Index sensors = 6;
  std::vector<double> doas_deg{20.0, 25.0};
  Eigen::Index snapshots = 1000;
  std::vector<double> snr_db{-10.0, -5.0, 0.0, 5.0, 10.0};
  std::size_t trials = 100;
  std::uint64_t seed = 1;
};

struct MdlRateRow {
  double snr_db = 0.0;
  std::size_t under = 0, exact = 0, over = 0, trials = 0;
};

inline std::vector<MdlRateRow> mdl_study(const MdlStudyConfig& cfg, MdlReport* example = nullptr) {
  std::vector<double> doas;
  for (double d : cfg.doas_deg) doas.push_back(d * pi / 180.0);
  const std::size_t k = doas.size();
  RandomSource root(cfg.seed);
  std::vector<MdlRateRow> rows;
  for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
    const auto s = UlaScenario::uncorrelated(cfg.sensors, doas, cfg.snr_db[si], cfg.snapshots);
    RandomSource rng = root.fork(si);
    MdlRateRow row{cfg.snr_db[si], 0, 0, 0, cfg.trials};
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const auto rep = mdl_enumerate(snapshot_covariance(simulate_snapshots(s, rng)));
      row.under += rep.k_hat < k;
      row.exact += rep.k_hat == k;
      row.over += rep.k_hat > k;
      if (example && t == 0 && si + 1 == cfg.snr_db.size()) *example = rep;
    }
    rows.push_back(row);
  }
  return rows;
}

// ---- sparse component analysis ------------------------------------------------------------------------------

struct ScaSummaryRow {
  std::string solver;
  Eigen::Index n = 0;
  double sigma_noise = 0.0;
  std::size_t trials = 0;
  double support_ok_rate = 0.0;
  double mean_mse = 0.0;
  double mean_seconds = 0.0;
};

// One row per (solver, n, sigma) in the order the benchmark visited them.
inline std::vector<ScaSummaryRow> summarize_sca(const std::vector<ScaBenchmarkRow>& rows) {
  std::vector<ScaSummaryRow> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ScaSummaryRow& s) {
      return s.solver == r.solver && s.n == r.n && s.sigma_noise == r.sigma_noise;
    });
    if (it == out.end()) {
      out.push_back({r.solver, r.n, r.sigma_noise, 0, 0.0, 0.0, 0.0});
      it = out.end() - 1;
    }
    ++it->trials;
    it->support_ok_rate += r.support_ok;
    it->mean_mse += r.mse;
    it->mean_seconds += r.seconds;
  }
  for (auto& s : out) {
    const auto c = static_cast<double>(s.trials);
    s.support_ok_rate /= c;
    s.mean_mse /= c;
    s.mean_seconds /= c;
  }
  return out;
}

// ---- OFDM under tap drift -------------------------------------------------------------------------------------

struct DopplerRow {
  double normalized_doppler = 0.0;
  SerRow ser;
};

inline std::vector<DopplerRow> doppler_study(OfdmSweepConfig cfg, const std::vector<double>& dopplers) {
  std::vector<DopplerRow> out;
  for (double nu : dopplers) {
    cfg.normalized_doppler = nu;
    for (auto& r : ofdm_ser_sweep(cfg))
      if (r.estimator == "mimat") out.push_back({nu, r});
  }
  return out;
}

}  // namespace sparsekit
