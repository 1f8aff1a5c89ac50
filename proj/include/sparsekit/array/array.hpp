#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "sparsekit/core/linalg.hpp"
#include "sparsekit/core/random.hpp"
#include "sparsekit/core/types.hpp"
#include "sparsekit/spectral/spectral.hpp"

namespace sparsekit {

struct UlaScenario {
  Eigen::Index n = 6;
  double d_over_lambda = 0.5;
  std::vector<double> doas;  // radians from broadside
  CMat P;  // k x k source covariance
  double noise_variance = 1.0;
  Eigen::Index m = 1000;

  Eigen::Index k() const { return static_cast<Eigen::Index>(doas.size()); }

  void validate() const {
    require(n >= 1 && m >= 1, errc::invalid_argument, "UlaScenario: n and m must be positive");
    require(d_over_lambda > 0.0 && d_over_lambda <= 0.5, errc::invalid_argument,
            "UlaScenario: spacing must lie in (0, lambda/2]");
    require(k() < n, errc::invalid_argument, "UlaScenario: needs fewer sources than sensors");
    for (double p : doas) require(std::abs(p) < pi / 2, errc::invalid_argument, "UlaScenario: DOA outside (-pi/2, pi/2)");
    require(P.rows() == k() && P.cols() == k(), errc::invalid_argument, "UlaScenario: source covariance must be k x k");
    require(noise_variance >= 0.0, errc::invalid_argument, "UlaScenario: negative noise variance");
    if (k() > 0) {
      require((P - P.adjoint()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, P.cwiseAbs().maxCoeff()),
              errc::invalid_argument, "UlaScenario: source covariance is not Hermitian");
      require(hermitian_eig(P).values.minCoeff() >= -1e-10 * std::max(1.0, std::abs(P.trace())),
              errc::invalid_argument, "UlaScenario: source covariance is not positive semidefinite");
    }
  }

  // Uncorrelated sources at a common per-source SNR.
  static UlaScenario uncorrelated(Eigen::Index n, std::vector<double> doas, double snr_db, Eigen::Index m,
                                  double noise_variance = 1.0) {
    UlaScenario s;
    s.n = n;
    s.doas = std::move(doas);
    s.noise_variance = noise_variance;
    s.m = m;
    s.P = CMat::Identity(s.k(), s.k()) * noise_variance * std::pow(10.0, snr_db / 10.0);
    return s;
  }
};

inline CVec ula_steering(double doa, Eigen::Index n, double d_over_lambda) {
  CVec a(n);
  const double psi = 2.0 * pi * d_over_lambda * std::sin(doa);
  for (Eigen::Index i = 0; i < n; ++i) a[i] = std::polar(1.0, psi * static_cast<double>(i));
  return a;
}

inline CMat ula_manifold(const UlaScenario& s) {
  CMat A(s.n, s.k());
  for (Eigen::Index j = 0; j < s.k(); ++j) A.col(j) = ula_steering(s.doas[static_cast<std::size_t>(j)], s.n, s.d_over_lambda);
  return A;
}

inline CMat theory_covariance(const UlaScenario& s) {
  const CMat A = ula_manifold(s);
  return A * s.P * A.adjoint() + s.noise_variance * CMat::Identity(s.n, s.n);
}

// Columns are snapshots x[i] = A s[i] + noise.
inline CMat simulate_snapshots(const UlaScenario& s, RandomSource& rng) {
  s.validate();
  CMat X(s.n, s.m);
  CMat L;
  if (s.k() > 0) {
    const auto eig = hermitian_eig(s.P);
    L = eig.vectors * eig.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  const CMat A = ula_manifold(s);
  for (Eigen::Index t = 0; t < s.m; ++t) {
    CVec x = rng.complex_normal_vector(s.n, s.noise_variance);
    if (s.k() > 0) x += A * (L * rng.complex_normal_vector(s.k(), 1.0));
    X.col(t) = x;
  }
  return X;
}

inline CovarianceEstimate snapshot_covariance(const CMat& X) {
  require(X.cols() >= 1, errc::invalid_argument, "snapshot_covariance: no snapshots");
  CMat R = X * X.adjoint() / static_cast<double>(X.cols());
  R = 0.5 * (R + R.adjoint()).eval();
  return {R, static_cast<std::size_t>(X.cols())};
}

struct MdlReport {
  std::size_t k_hat = 0;
  std::vector<double> criterion;  // ratio form, k = 0 .. n-1
  std::vector<double> loglik_criterion;  // eigenvalue log-likelihood form; differs by a k-independent constant
  std::vector<double> kappa;  // free parameters k(2n-k) + 1
  std::vector<double> eigenvalues;  // descending
  double trace_identity_error = 0.0;  // max_k |tr(R_ML^-1 R) - n|
};

inline double mdl_free_parameters(std::size_t n, std::size_t k) {
  return static_cast<double>(k) * (2.0 * static_cast<double>(n) - static_cast<double>(k)) + 1.0;
}

inline MdlReport mdl_enumerate(const CovarianceEstimate& cov) {
  cov.validate();
  require(cov.m >= 1, errc::invalid_argument, "mdl_enumerate: snapshot count not recorded");
  const Eigen::Index n = cov.dim();
  const double m = static_cast<double>(cov.m);
  const auto eig = hermitian_eig(cov.R);
  RVec lam = eig.values;
  const double clip = 1e-12 * std::abs(cov.R.trace().real());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lam[i] < 0.0 && lam[i] > -clip) lam[i] = 0.0;
    require(lam[i] > 0.0, errc::numeric, "mdl_enumerate: eigenvalue " + std::to_string(i) + " is not positive");
  }
  MdlReport rep;
  rep.eigenvalues.assign(lam.data(), lam.data() + n);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index rest = n - k;
    const double am = lam.tail(rest).mean();
    const double log_gm = lam.tail(rest).array().log().mean();
    const double kappa = mdl_free_parameters(static_cast<std::size_t>(n), static_cast<std::size_t>(k));
    const double penalty = 0.5 * (kappa - 1.0) * std::log(m);
    const double value = m * static_cast<double>(rest) * (std::log(am) - log_gm) + penalty;
    const double loglik = m * (lam.head(k).array().log().sum() + static_cast<double>(rest) * std::log(am)) + penalty;
    rep.criterion.push_back(value);
    rep.loglik_criterion.push_back(loglik);
    rep.kappa.push_back(kappa);
    if (value < best) {
      best = value;
      rep.k_hat = static_cast<std::size_t>(k);
    }
    // Maximum-likelihood covariance under k sources; its inverse against R should trace to n.
    RVec ml = lam;
    ml.tail(rest).setConstant(am);
    const CMat Rml_inv = eig.vectors * ml.cwiseInverse().asDiagonal() * eig.vectors.adjoint();
    const double tr = (Rml_inv * cov.R).trace().real();
    rep.trace_identity_error = std::max(rep.trace_identity_error, std::abs(tr - static_cast<double>(n)));
  }
  require(rep.trace_identity_error <= 1e-8 * static_cast<double>(n), errc::inconsistency,
          "mdl_enumerate: maximum-likelihood trace identity failed by " + std::to_string(rep.trace_identity_error));
  return rep;
}

struct ArrayLayout {
  std::vector<double> positions;  // units of the element spacing d, strictly increasing
  std::vector<double> weights;

  static ArrayLayout full(std::size_t n) {
    ArrayLayout a;
    for (std::size_t i = 0; i < n; ++i) a.positions.push_back(static_cast<double>(i));
    a.weights.assign(n, 1.0);
    return a;
  }

  static ArrayLayout from_indices(const std::vector<std::size_t>& idx) {
    ArrayLayout a;
    for (auto i : idx) a.positions.push_back(static_cast<double>(i));
    a.weights.assign(idx.size(), 1.0);
    return a;
  }

  // Extent in units of d, counting one cell per element as for a filled array.
  double aperture() const { return positions.empty() ? 0.0 : positions.back() - positions.front() + 1.0; }

  void validate() const {
    require(!positions.empty() && positions.size() == weights.size(), errc::invalid_argument,
            "ArrayLayout: positions and weights must be non-empty and of equal length");
    for (std::size_t i = 0; i < positions.size(); ++i) {
      require(std::isfinite(positions[i]) && std::isfinite(weights[i]), errc::invalid_argument, "ArrayLayout: non-finite entry");
      require(i == 0 || positions[i] > positions[i - 1], errc::invalid_argument, "ArrayLayout: positions must increase");
    }
  }
};

inline std::vector<cplx> aperture_pattern(const ArrayLayout& layout, double d_over_lambda, const std::vector<double>& u_grid) {
  layout.validate();
  std::vector<cplx> W;
  W.reserve(u_grid.size());
  for (double u : u_grid) {
    require(std::abs(u) <= 1.0 + 1e-12, errc::invalid_argument, "aperture_pattern: |u| must not exceed 1");
    cplx acc = 0.0;
    for (std::size_t i = 0; i < layout.positions.size(); ++i)
      acc += layout.weights[i] * std::polar(1.0, -2.0 * pi * layout.positions[i] * u * d_over_lambda);
    W.push_back(acc);
  }
  return W;
}

inline std::vector<double> u_grid(std::size_t points, double lo = -1.0, double hi = 1.0) {
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

struct SidelobeMetrics {
  double mean_ratio = 0.0;  // average sidelobe power / mainlobe peak power
  double peak_ratio = 0.0;  // largest sidelobe power / mainlobe peak power
  double near_ratio = 0.0;  // average over mainlobe_edge < |u| < near_edge
};

// Power metrics on a grid over u in [0, 1] (|W| is even in u for real weights).
inline SidelobeMetrics sidelobe_metrics(const ArrayLayout& layout, double d_over_lambda, double mainlobe_edge,
                                        double near_edge, const std::vector<double>& grid) {
  const auto W = aperture_pattern(layout, d_over_lambda, grid);
  const double main = std::norm(aperture_pattern(layout, d_over_lambda, {0.0})[0]);
  SidelobeMetrics s;
  double sum = 0.0, near = 0.0;
  std::size_t cnt = 0, near_cnt = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double u = std::abs(grid[i]);
    if (u <= mainlobe_edge) continue;
    const double p = std::norm(W[i]);
    sum += p;
    ++cnt;
    s.peak_ratio = std::max(s.peak_ratio, p);
    if (u < near_edge) {
      near += p;
      ++near_cnt;
    }
  }
  s.mean_ratio = cnt ? sum / static_cast<double>(cnt) / main : 0.0;
  s.peak_ratio /= main;
  s.near_ratio = near_cnt ? near / static_cast<double>(near_cnt) / main : 0.0;
  return s;
}

// uniform: k distinct slots of the n-element grid. binned: one grid slot drawn in each of k equal bins.
// independent: k positions drawn independently and uniformly over the continuous aperture [0, n).
enum class Thinning { uniform, binned, independent };

struct ThinnedStats {
  double mean_ratio = 0.0;  // Monte-Carlo mean of per-trial average sidelobe ratio
  std::vector<double> ratios;
  std::vector<double> peak_db;  // per-trial peak sidelobe level, dB
  std::vector<double> near_ratios;  // per-trial average over the near-mainlobe band
  double peak_heuristic_db = 0.0;  // amplitude sqrt(k ln k) relative to the mainlobe k
};

inline ArrayLayout draw_thinning(std::size_t n, std::size_t k, Thinning kind, RandomSource& rng) {
  if (kind == Thinning::uniform) return ArrayLayout::from_indices(rng.choose(n, k));
  if (kind == Thinning::binned) {
    std::vector<std::size_t> idx;
    for (std::size_t b = 0; b < k; ++b) {
      const std::size_t lo = b * n / k, hi = (b + 1) * n / k;
      idx.push_back(lo + static_cast<std::size_t>(rng.below(hi - lo)));
    }
    return ArrayLayout::from_indices(idx);
  }
  ArrayLayout a;
  for (std::size_t i = 0; i < k; ++i) a.positions.push_back(rng.uniform(0.0, static_cast<double>(n)));
  std::sort(a.positions.begin(), a.positions.end());
  a.weights.assign(k, 1.0);
  return a;
}

// Mainlobe region |u| <= lambda/L with L the full n-element aperture; the near band extends to k lambda/L.
inline ThinnedStats thinned_array_stats(std::size_t n, std::size_t k, std::size_t trials, RandomSource& rng,
                                        Thinning kind = Thinning::uniform, double d_over_lambda = 0.5,
                                        std::size_t grid_points = 2001) {
  require(k >= 1 && k <= n, errc::invalid_argument, "thinned_array_stats: need 1 <= k <= n");
  require(trials >= 1, errc::invalid_argument, "thinned_array_stats: trials must be positive");
  const double L = static_cast<double>(n) * d_over_lambda;  // in wavelengths
  const double edge = 1.0 / L;
  const auto grid = u_grid(grid_points, 0.0, 1.0);
  ThinnedStats st;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto layout = draw_thinning(n, k, kind, rng);
    const auto m = sidelobe_metrics(layout, d_over_lambda, edge, static_cast<double>(k) * edge, grid);
    st.ratios.push_back(m.mean_ratio);
    st.peak_db.push_back(10.0 * std::log10(m.peak_ratio));
    st.near_ratios.push_back(m.near_ratio);
  }
  st.mean_ratio = std::accumulate(st.ratios.begin(), st.ratios.end(), 0.0) / static_cast<double>(trials);
  const double kk = static_cast<double>(k);
  st.peak_heuristic_db = k > 1 ? 20.0 * std::log10(std::sqrt(kk * std::log(kk)) / kk) : 0.0;
  return st;
}

enum class LayoutObjective { peak_sidelobe, sidelobe_energy };

struct LayoutSearchResult {
  ArrayLayout layout;
  std::vector<std::size_t> indices;
  double objective = 0.0;
  double mainlobe_width = 0.0;  // first null, in u
  double peak_ratio = 0.0;
  double energy_ratio = 0.0;
  std::size_t candidates = 0;
};

namespace detail {

struct PatternScore {
  double first_null;
  double peak;
  double energy;
};

inline PatternScore score_pattern(const std::vector<double>& power, const std::vector<double>& grid) {
  std::size_t i = 1;
  while (i + 1 < power.size() && !(power[i] <= power[i - 1] && power[i] <= power[i + 1])) ++i;
  PatternScore s{grid[i], 0.0, 0.0};
  std::size_t cnt = 0;
  for (std::size_t j = i; j < power.size(); ++j) {
    s.peak = std::max(s.peak, power[j] / power[0]);
    s.energy += power[j] / power[0];
    ++cnt;
  }
  if (cnt) s.energy /= static_cast<double>(cnt);
  return s;
}

}  // namespace detail

// Every k-of-n thinning is scored on u in [0, 1]; ties go to the lexicographically first layout.
inline LayoutSearchResult layout_search_exhaustive(std::size_t n, std::size_t k, LayoutObjective objective,
                                                   double max_mainlobe_width = 1.0, double d_over_lambda = 0.5,
                                                   std::size_t grid_points = 513, double budget = 1e6) {
  require(k >= 1 && k <= n, errc::invalid_argument, "layout_search_exhaustive: need 1 <= k <= n");
  const double count = binomial(static_cast<int>(n), static_cast<int>(k));
  require(count <= budget, errc::budget_exceeded,
          "layout_search_exhaustive: C(" + std::to_string(n) + "," + std::to_string(k) + ") = " +
              std::to_string(static_cast<long long>(count)) + " layouts exceed the budget");
  const auto grid = u_grid(grid_points, 0.0, 1.0);
  // Precomputed phasors per (position, grid point).
  CMat phase(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t g = 0; g < grid.size(); ++g)
      phase(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(g)) =
          std::polar(1.0, -2.0 * pi * static_cast<double>(p) * grid[g] * d_over_lambda);
  LayoutSearchResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<double> power(grid.size());
  for_each_subset(n, k, [&](const std::vector<std::size_t>& pick) {
    ++best.candidates;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      cplx acc = 0.0;
      for (auto p : pick) acc += phase(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(g));
      power[g] = std::norm(acc);
    }
    const auto s = detail::score_pattern(power, grid);
    if (s.first_null > max_mainlobe_width) return;
    const double obj = objective == LayoutObjective::peak_sidelobe ? s.peak : s.energy;
    if (obj < best.objective) {
      best.objective = obj;
      best.indices = pick;
      best.mainlobe_width = s.first_null;
      best.peak_ratio = s.peak;
      best.energy_ratio = s.energy;
    }
  });
  require(!best.indices.empty(), errc::invalid_argument, "layout_search_exhaustive: no layout meets the mainlobe cap");
  best.layout = ArrayLayout::from_indices(best.indices);
  return best;
}

}  // namespace sparsekit
