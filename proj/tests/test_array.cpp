#include <gtest/gtest.h>

#include <algorithm>

#include "sparsekit/array/array.hpp"
#include "sparsekit/core/fft.hpp"

using namespace sparsekit;

namespace {

constexpr double deg = pi / 180.0;

CovarianceEstimate random_covariance(RandomSource& rng, Eigen::Index n, std::size_t m) {
  CMat X(n, static_cast<Eigen::Index>(m));
  for (Eigen::Index c = 0; c < X.cols(); ++c) X.col(c) = rng.complex_normal_vector(n);
  const CMat mix = CMat::Identity(n, n) + 0.5 * CMat(rng.complex_normal_vector(n * n).reshaped(n, n));
  return snapshot_covariance(mix * X);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(Snapshots, NoiseOnlyCovarianceIsScaledIdentity) {
  RandomSource rng(1);
  auto s = UlaScenario::uncorrelated(6, {}, 0.0, 4000, 0.7);
  const auto R = snapshot_covariance(simulate_snapshots(s, rng)).R;
  EXPECT_LT((R - 0.7 * CMat::Identity(6, 6)).norm(), 6.0 * 0.7 * 3.0 / std::sqrt(4000.0));
}

TEST(Snapshots, BroadsideSourceIsAlongAllOnes) {
  RandomSource rng(2);
  auto s = UlaScenario::uncorrelated(5, {0.0}, 0.0, 50, 0.0);
  s.P(0, 0) = 2.0;
  const CMat X = simulate_snapshots(s, rng);
  for (Eigen::Index c = 0; c < X.cols(); ++c)
    for (Eigen::Index i = 1; i < 5; ++i) EXPECT_LT(std::abs(X(i, c) - X(0, c)), 1e-12);
  const auto eig = hermitian_eig(snapshot_covariance(X).R);
  EXPECT_LT(eig.values[1], 1e-10 * eig.values[0]);
}

TEST(Snapshots, SampleCovarianceApproachesModel) {
  RandomSource rng(3);
  auto s = UlaScenario::uncorrelated(6, {-10 * deg, 30 * deg}, 5.0, 100000);
  s.P(0, 1) = s.P(1, 0) = 0.5;
  const CMat Rt = theory_covariance(s);
  const CMat Rh = snapshot_covariance(simulate_snapshots(s, rng)).R;
  EXPECT_LT((Rh - Rt).norm() / Rt.norm(), 0.02);
}

TEST(Snapshots, RejectsIndefiniteSourceCovariance) {
  RandomSource rng(4);
  auto s = UlaScenario::uncorrelated(6, {0.1, 0.4}, 0.0, 10);
  s.P(0, 1) = s.P(1, 0) = 5.0;
  EXPECT_THROW(simulate_snapshots(s, rng), Error);
  s = UlaScenario::uncorrelated(6, {0.1}, 0.0, 10);
  s.d_over_lambda = 0.8;
  EXPECT_THROW(simulate_snapshots(s, rng), Error);
}

TEST(Mdl, SphericalCovarianceHasNoSources) {
  const auto rep = mdl_enumerate(CovarianceEstimate{2.0 * CMat::Identity(5, 5), 100});
  EXPECT_EQ(rep.k_hat, 0u);
  EXPECT_NEAR(rep.criterion[0], 0.0, 1e-9);
}

TEST(Mdl, FreeParameterCount) {
  for (std::size_t n = 2; n <= 10; ++n)
    for (std::size_t k = 0; k < n; ++k) {
      double direct = 1.0 + static_cast<double>(k);
      for (std::size_t i = 1; i <= k; ++i) direct += 2.0 * static_cast<double>(n - i);
      EXPECT_EQ(mdl_free_parameters(n, k), direct);
    }
}

TEST(Mdl, MaximumLikelihoodTraceIdentity) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RandomSource rng(seed);
    const Eigen::Index n = 3 + static_cast<Eigen::Index>(seed % 6);
    const auto cov = random_covariance(rng, n, 200);
    const auto rep = mdl_enumerate(cov);
    EXPECT_LT(rep.trace_identity_error, 1e-10);
    // Independent route: rebuild R_ML for each k and invert it with LU.
    Eigen::ComplexEigenSolver<CMat> ces(cov.R);
    std::vector<std::pair<double, CVec>> pairs;
    for (Eigen::Index i = 0; i < n; ++i) pairs.emplace_back(ces.eigenvalues()[i].real(), ces.eigenvectors().col(i).normalized());
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (Eigen::Index k = 0; k < n; ++k) {
      double noise = 0.0;
      for (Eigen::Index i = k; i < n; ++i) noise += pairs[static_cast<std::size_t>(i)].first;
      noise /= static_cast<double>(n - k);
      CMat Rml = CMat::Zero(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& [lam, v] = pairs[static_cast<std::size_t>(i)];
        Rml += (i < k ? lam : noise) * v * v.adjoint();
      }
      EXPECT_NEAR((Rml.partialPivLu().inverse() * cov.R).trace().real(), static_cast<double>(n), 1e-10);
    }
  }
}

TEST(Mdl, CriterionFormsDifferByAConstant) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RandomSource rng(100 + seed);
    const auto rep = mdl_enumerate(random_covariance(rng, 6, 500));
    double logdet = 0.0;
    for (double l : rep.eigenvalues) logdet += std::log(l);
    for (std::size_t k = 0; k < rep.criterion.size(); ++k) {
      const double shift = rep.criterion[k] - rep.loglik_criterion[k];
      EXPECT_NEAR(shift, -500.0 * logdet, 1e-8 * std::max(1.0, std::abs(500.0 * logdet)));
    }
  }
}

TEST(Mdl, DetectsTwoSourcesAtTenDecibels) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomSource rng(seed);
    const auto s = UlaScenario::uncorrelated(6, {20 * deg, 25 * deg}, 10.0, 1000);
    hits += mdl_enumerate(snapshot_covariance(simulate_snapshots(s, rng))).k_hat == 2;
  }
  EXPECT_GE(hits, 90);
}

TEST(Mdl, UnderestimatesAtLowSnr) {
  int under = 0, over = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RandomSource rng(seed);
    const auto s = UlaScenario::uncorrelated(6, {20 * deg, 25 * deg}, -10.0, 1000);
    const auto k = mdl_enumerate(snapshot_covariance(simulate_snapshots(s, rng))).k_hat;
    under += k < 2;
    over += k > 2;
  }
  EXPECT_GT(under, over);
}

TEST(Mdl, ConsistentOnExactCovariance) {
  const std::vector<std::vector<double>> cases = {{0.0}, {-30 * deg, 10 * deg}, {-40 * deg, 0.0, 35 * deg}, {5 * deg, 15 * deg}};
  for (const auto& doas : cases)
    for (double snr : {0.0, 10.0, 20.0}) {
      const auto s = UlaScenario::uncorrelated(8, doas, snr, 1);
      EXPECT_EQ(mdl_enumerate(CovarianceEstimate{theory_covariance(s), 1000000}).k_hat, doas.size());
    }
}

TEST(Mdl, SingularCovarianceIsNumericError) {
  const CVec a = CVec::Ones(4);
  try {
    mdl_enumerate(CovarianceEstimate{a * a.adjoint(), 100});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::numeric);
  }
}

TEST(Aperture, SingleElementIsFlat) {
  ArrayLayout a;
  a.positions = {3.0};
  a.weights = {-0.4};
  for (const cplx& w : aperture_pattern(a, 0.5, u_grid(101))) EXPECT_NEAR(std::abs(w), 0.4, 1e-15);
}

TEST(Aperture, FullArrayIsDirichletKernel) {
  const std::size_t n = 64;
  const auto grid = u_grid(4001);
  const auto W = aperture_pattern(ArrayLayout::full(n), 0.5, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double psi = grid[i] * 0.5;
    const cplx expect = std::abs(std::sin(pi * psi)) < 1e-14
                            ? cplx(static_cast<double>(n))
                            : std::polar(1.0, -pi * psi * (n - 1.0)) * std::sin(pi * psi * static_cast<double>(n)) / std::sin(pi * psi);
    EXPECT_LT(std::abs(W[i] - expect), 1e-10);
  }
}

TEST(Aperture, FirstSidelobeOfUniformArray) {
  const std::size_t n = 64;
  const auto grid = u_grid(20001, 0.0, 0.2);
  const auto W = aperture_pattern(ArrayLayout::full(n), 0.5, grid);
  double peak = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] > 2.0 / static_cast<double>(n)) peak = std::max(peak, std::abs(W[i]));
  EXPECT_NEAR(20.0 * std::log10(peak / static_cast<double>(n)), -13.26, 0.1);
}

TEST(Aperture, PatternIsFirFrequencyResponse) {
  RandomSource rng(5);
  ArrayLayout a = ArrayLayout::full(16);
  for (auto& w : a.weights) w = rng.normal();
  const Eigen::Index N = 256;
  CVec padded = CVec::Zero(N);
  for (Eigen::Index i = 0; i < 16; ++i) padded[i] = a.weights[static_cast<std::size_t>(i)];
  const CVec H = dft(padded) * std::sqrt(static_cast<double>(N));
  std::vector<double> grid;
  for (Eigen::Index k = 0; k <= N / 2; ++k) grid.push_back(2.0 * static_cast<double>(k) / static_cast<double>(N));
  const auto W = aperture_pattern(a, 0.5, grid);
  for (Eigen::Index k = 0; k <= N / 2; ++k) EXPECT_LT(std::abs(W[static_cast<std::size_t>(k)] - H[k]), 1e-10);
}

TEST(Aperture, RealWeightsGiveConjugateSymmetry) {
  ArrayLayout a;
  a.positions = {-3, -1, 0, 1, 3};
  a.weights = {0.5, 1.0, 2.0, 1.0, 0.5};
  const auto grid = u_grid(201);
  const auto W = aperture_pattern(a, 0.5, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_LT(std::abs(W[i] - std::conj(W[grid.size() - 1 - i])), 1e-12);
    EXPECT_NEAR(std::abs(W[i]), std::abs(W[grid.size() - 1 - i]), 1e-12);
  }
  EXPECT_THROW(aperture_pattern(a, 0.5, {1.5}), Error);
}

TEST(Thinning, NoThinningMatchesFullArray) {
  RandomSource rng(6);
  const auto st = thinned_array_stats(40, 40, 3, rng);
  const auto full = sidelobe_metrics(ArrayLayout::full(40), 0.5, 1.0 / 20.0, 40.0 / 20.0, u_grid(2001, 0.0, 1.0));
  for (double r : st.ratios) EXPECT_NEAR(r, full.mean_ratio, 1e-15);
}

TEST(Thinning, IndependentPositionsGiveOneOverK) {
  RandomSource rng(7);
  const auto st = thinned_array_stats(101, 25, 500, rng, Thinning::independent);
  EXPECT_NEAR(st.mean_ratio * 25.0, 1.0, 0.2);
}

TEST(Thinning, GridThinningMatchesFinitePopulationExpectation) {
  const std::size_t n = 101, k = 25;
  RandomSource rng(8);
  const auto st = thinned_array_stats(n, k, 500, rng, Thinning::uniform);
  // E|W|^2 = k + q (|F|^2 - n) for k distinct slots, q = k(k-1)/(n(n-1)), F the full-array pattern.
  const auto grid = u_grid(2001, 0.0, 1.0);
  const auto F = aperture_pattern(ArrayLayout::full(n), 0.5, grid);
  const double q = static_cast<double>(k * (k - 1)) / static_cast<double>(n * (n - 1));
  const double edge = 1.0 / (0.5 * static_cast<double>(n));
  double acc = 0.0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] > edge) {
      acc += static_cast<double>(k) + q * (std::norm(F[i]) - static_cast<double>(n));
      ++cnt;
    }
  const double expect = acc / static_cast<double>(cnt) / static_cast<double>(k * k);
  EXPECT_NEAR(st.mean_ratio / expect, 1.0, 0.05);
}

TEST(Thinning, BinnedArraysAreQuieterNearTheMainlobe) {
  RandomSource a(9), b(9);
  const auto uni = thinned_array_stats(101, 25, 300, a, Thinning::uniform);
  const auto bin = thinned_array_stats(101, 25, 300, b, Thinning::binned);
  EXPECT_LT(median(bin.near_ratios), median(uni.near_ratios));
}

TEST(Thinning, SidelobeEnergyRisesWhilePeakStaysComparable) {
  RandomSource rng(10);
  const auto st = thinned_array_stats(101, 25, 200, rng);
  const auto full = sidelobe_metrics(ArrayLayout::full(101), 0.5, 2.0 / 101.0, 1.0, u_grid(2001, 0.0, 1.0));
  EXPECT_GT(st.mean_ratio, 10.0 * full.mean_ratio);
  const double full_peak_db = 10.0 * std::log10(full.peak_ratio);
  EXPECT_LT(std::abs(median(st.peak_db) - full_peak_db), 6.0);
}

TEST(LayoutSearch, FullArrayIsTheOnlyCandidate) {
  const auto r = layout_search_exhaustive(7, 7, LayoutObjective::peak_sidelobe);
  EXPECT_EQ(r.candidates, 1u);
  EXPECT_EQ(r.indices.size(), 7u);
}

TEST(LayoutSearch, BeatsTypicalRandomThinning) {
  const auto best = layout_search_exhaustive(12, 6, LayoutObjective::peak_sidelobe);
  EXPECT_EQ(best.candidates, 924u);
  RandomSource rng(11);
  const auto grid = u_grid(513, 0.0, 1.0);
  std::vector<double> peaks;
  for (int t = 0; t < 101; ++t) {
    const auto layout = ArrayLayout::from_indices(rng.choose(12, 6));
    std::vector<double> power;
    for (const auto& w : aperture_pattern(layout, 0.5, grid)) power.push_back(std::norm(w));
    peaks.push_back(detail::score_pattern(power, grid).peak);
  }
  EXPECT_LE(best.peak_ratio, median(peaks));
}

TEST(LayoutSearch, DeterministicAndBudgeted) {
  const auto a = layout_search_exhaustive(16, 8, LayoutObjective::sidelobe_energy);
  const auto b = layout_search_exhaustive(16, 8, LayoutObjective::sidelobe_energy);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_EQ(a.objective, b.objective);
  try {
    layout_search_exhaustive(40, 20, LayoutObjective::peak_sidelobe);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::budget_exceeded);
    EXPECT_NE(std::string(e.what()).find("137846528820"), std::string::npos);
  }
}
