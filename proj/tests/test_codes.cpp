#include <gtest/gtest.h>

#include <algorithm>

#include "sparsekit/codes/convolutional.hpp"
#include "sparsekit/codes/dft_code.hpp"
#include "sparsekit/core/metrics.hpp"
#include "sparsekit/core/random.hpp"

using namespace sparsekit;

namespace {

CVec gaussian_message(RandomSource& rng, std::size_t l) {
  CVec m(static_cast<Eigen::Index>(l));
  for (auto& v : m) v = rng.normal();
  return m;
}

CVec erase(CVec c, const SupportSet& e) {
  for (auto i : e) c[static_cast<Eigen::Index>(i)] = 0.0;
  return c;
}

SupportSet burst(std::size_t from, std::size_t count, std::size_t n) {
  std::vector<std::size_t> v;
  for (std::size_t i = 0; i < count; ++i) v.push_back((from + i) % n);
  return SupportSet(v, n);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(DftCode, CodewordSpectrumVanishesOnSyndromeBins) {
  DftBlockCode code(16, 16);
  EXPECT_EQ(code.n(), 32u);
  RandomSource rng(1);
  const CVec c = dft_block_encode(gaussian_message(rng, 16), code);
  const CVec C = dft(c);
  for (auto j : code.theta()) EXPECT_LT(std::abs(C[static_cast<Eigen::Index>(j)]), 1e-12);
  EXPECT_EQ(code.theta().size(), 16u);
}

TEST(DftCode, NoParityIsIdentity) {
  DftBlockCode code(9, 0);
  RandomSource rng(2);
  const CVec m = gaussian_message(rng, 9);
  EXPECT_EQ(dft_block_encode(m, code), m);
}

TEST(DftCode, RealMessagesGiveRealCodewordsForOddLength) {
  for (std::size_t l : {15u, 9u, 21u}) {
    DftBlockCode code(l, 16);
    ASSERT_TRUE(code.real_codewords());
    RandomSource rng(l);
    const CVec c = dft_block_encode(gaussian_message(rng, l), code);
    EXPECT_LT(c.imag().cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(dft_block_encode(gaussian_message(rng, l), code, CodeKernel::sdft(7)).imag().cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_FALSE(DftBlockCode(16, 16).real_codewords());
}

TEST(DftCode, RejectsBadArguments) {
  DftBlockCode code(16, 16);
  try {
    dft_block_encode(CVec::Ones(15), code);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::invalid_argument);
  }
  try {
    elp_erasure_decode(CVec::Ones(32), burst(0, 17, 32), code);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::capacity_exceeded);
  }
  EXPECT_THROW(dft_block_encode(CVec::Ones(16), code, CodeKernel::sdft(4)), Error);
}

TEST(DftCode, BurstOfSixteenErasures) {
  DftBlockCode code(16, 16);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomSource rng(seed);
    const CVec m = gaussian_message(rng, 16);
    const SupportSet e = burst(1, 16, 32);
    const auto d = elp_erasure_decode(erase(dft_block_encode(m, code), e), e, code);
    EXPECT_GE(snr_db(m, d.message), 40.0) << seed;
  }
}

TEST(DftCode, NoErasuresReturnsReceived) {
  DftBlockCode code(16, 16);
  RandomSource rng(3);
  const CVec m = gaussian_message(rng, 16);
  const CVec c = dft_block_encode(m, code);
  const auto d = elp_erasure_decode(c, SupportSet({}, 32), code);
  EXPECT_EQ(d.codeword, c);
  EXPECT_LT((d.message - m).norm(), 1e-12 * m.norm());
}

TEST(DftCode, ScatteredErasuresMatchDirectSolve) {
  DftBlockCode code(8, 8);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RandomSource rng(seed);
    const CVec c = dft_block_encode(gaussian_message(rng, 8), code);
    const SupportSet e(rng.choose(16, 3), 16);
    const CVec r = erase(c, e);
    // Oracle: choose the erased values so that the spectrum vanishes on the syndrome bins.
    CMat F(8, 3);
    for (Eigen::Index j = 0; j < 8; ++j)
      for (Eigen::Index m = 0; m < 3; ++m)
        F(j, m) = std::polar(1.0 / 4.0, -2.0 * pi * static_cast<double>((code.first() + j) * e[m]) / 16.0);
    const CVec D = gather(dft(r), code.theta());
    const CVec u = F.colPivHouseholderQr().solve(-D);
    CVec expect = r;
    scatter(expect, e, u);
    const auto d = elp_erasure_decode(r, e, code);
    EXPECT_LT((d.codeword - expect).cwiseAbs().maxCoeff(), 1e-8) << seed;
  }
}

TEST(DftCode, RoundTripProperty) {
  const std::vector<std::pair<std::size_t, std::size_t>> shapes = {{16, 16}, {8, 8}, {15, 10}, {24, 8}, {11, 20}};
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    RandomSource rng(seed);
    const auto [l, p] = shapes[seed % shapes.size()];
    DftBlockCode code(l, p);
    const std::size_t k = 1 + rng.below(p / 2);
    const CVec m = gaussian_message(rng, l);
    const SupportSet e(rng.choose(code.n(), k), code.n());
    const auto d = elp_erasure_decode(erase(dft_block_encode(m, code), e), e, code);
    ASSERT_LT((d.message - m).norm(), 1e-6 * m.norm()) << "seed " << seed;
  }
}

TEST(DftCode, SyndromeIdentityHoldsForBothKernels) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomSource rng(seed);
    DftBlockCode code(13 + seed % 5, 6 + seed % 7);
    const long n = static_cast<long>(code.n());
    long q = 1 + static_cast<long>(rng.below(static_cast<std::uint64_t>(n - 1)));
    while (std::gcd(q, n) != 1) ++q;
    const CVec c = dft_block_encode(gaussian_message(rng, code.l()), code, CodeKernel::sdft(q));
    const CVec C = sorted_dft(c, q);
    for (auto j : code.theta()) ASSERT_LT(std::abs(C[static_cast<Eigen::Index>(j)]), 1e-10);
  }
}

TEST(DftCode, LocatorRootsMarkErasurePositions) {
  for (long q : {1L, 15L}) {
    RandomSource rng(7);
    const SupportSet e(rng.choose(32, 6), 32);
    const ElpPolynomial elp = elp_from_positions(e, 32, CodeKernel::sdft(q));
    EXPECT_NEAR(std::abs(elp.h[0] - 1.0), 0.0, 1e-12);
    const auto roots = elp.roots();
    ASSERT_EQ(roots.size(), e.size());
    std::vector<std::size_t> matched;
    for (const auto& z : roots) {
      EXPECT_NEAR(std::abs(z), 1.0, 1e-9);
      EXPECT_LT(std::abs(elp(z)), 1e-6);
      const double turns = std::arg(z) / (2.0 * pi) * 32.0;
      const long bin = detail::mod(std::lround(turns), 32);
      // Root angle is 2 pi q i / n; undo the q scaling.
      long pos = 0;
      while (detail::mod(q * pos, 32) != bin) ++pos;
      matched.push_back(static_cast<std::size_t>(pos));
    }
    EXPECT_EQ(SupportSet(matched, 32), e);
  }
}

TEST(DftCode, SortedKernelBreaksUpBursts) {
  DftBlockCode code(16, 16);
  std::vector<double> err_dft, err_sdft;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomSource rng(seed);
    const CVec m = gaussian_message(rng, 16);
    const SupportSet e = burst(rng.below(32), 16, 32);
    const auto a = elp_erasure_decode(erase(dft_block_encode(m, code), e), e, code);
    const auto b = elp_erasure_decode(erase(dft_block_encode(m, code, CodeKernel::sdft(15)), e), e, code,
                                      CodeKernel::sdft(15));
    err_dft.push_back((a.message - m).norm());
    err_sdft.push_back((b.message - m).norm());
  }
  EXPECT_LE(median(err_sdft), median(err_dft));
}

TEST(DftCode, ImpulsiveCleanInputIsUntouched) {
  DftBlockCode code(16, 16);
  RandomSource rng(4);
  const CVec c = dft_block_encode(gaussian_message(rng, 16), code);
  const auto d = elp_impulsive_decode(c, code);
  EXPECT_EQ(d.clean, c);
  EXPECT_TRUE(d.error_positions.empty());
}

TEST(DftCode, ImpulsiveDecodeFindsInjectedErrors) {
  DftBlockCode code(16, 16);
  for (bool soft : {false, true}) {
    ImpulsiveOptions opt;
    opt.soft = soft;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      RandomSource rng(seed);
      const CVec c = dft_block_encode(gaussian_message(rng, 16), code);
      const SupportSet where(rng.choose(32, 4), 32);
      CVec v(4);
      for (auto& x : v) x = 3.0 * rng.normal();
      CVec r = c;
      for (std::size_t i = 0; i < 4; ++i) r[static_cast<Eigen::Index>(where[i])] += v[static_cast<Eigen::Index>(i)];
      const auto d = elp_impulsive_decode(r, code, {}, opt);
      ASSERT_EQ(d.error_positions, where) << "seed " << seed << " soft " << soft;
      EXPECT_LT((d.error_values - v).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_LT((d.clean - c).norm(), 1e-6 * c.norm());
      EXPECT_GT(d.confidence, 0.9);
    }
  }
}

TEST(DftCode, ImpulsiveOverrunLowersConfidence) {
  DftBlockCode code(16, 16);
  int flagged = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RandomSource rng(seed);
    const CVec c = dft_block_encode(gaussian_message(rng, 16), code);
    CVec r = c;
    for (auto i : rng.choose(32, 12)) r[static_cast<Eigen::Index>(i)] += 3.0 * rng.normal();
    const auto d = elp_impulsive_decode(r, code);
    flagged += d.overrun || d.confidence < 0.5;
  }
  EXPECT_GE(flagged, 45);
}

TEST(DftCode, StrongImpulsesAreDetectedMoreReliably) {
  DftBlockCode code(15, 16);
  auto rate = [&](double variance) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      RandomSource rng(seed);
      const CVec c = dft_block_encode(gaussian_message(rng, 15), code);
      const SupportSet where(rng.choose(31, 3), 31);
      CVec r = c;
      for (auto i : where) r[static_cast<Eigen::Index>(i)] += std::sqrt(variance) * rng.normal();
      for (auto& x : r) x += 0.02 * rng.normal();
      hits += elp_impulsive_decode(r, code).error_positions == where;
    }
    return hits;
  };
  const int weak = rate(1.0), strong = rate(10.0);
  EXPECT_GT(strong, weak) << weak << " vs " << strong;
}

TEST(ConvCode, ImpulseResponseInterleavesTaps) {
  const auto code = ConvCode::example();
  RVec x = RVec::Zero(1);
  x[0] = 1.0;
  const RVec y = conv_encode(x, code);
  RVec expect(12);
  expect << 1, 16, 2, 5, 3, 4, 4, 3, 5, 2, 16, 1;
  EXPECT_EQ(y, expect);
  EXPECT_EQ(conv_encode(RVec::Zero(7), code), RVec::Zero(24));
}

TEST(ConvCode, MatrixAndFilterPathsAgree) {
  const auto code = ConvCode::example();
  RandomSource rng(5);
  const RVec x = rng.normal_vector(50);
  EXPECT_LT((conv_generator(code, 50) * x - conv_encode(x, code)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ConvCode, ParityCheckEntries) {
  const auto code = ConvCode::example();
  const RMat H = conv_parity_check(code, 20);
  RVec first(7);
  first << -1, -0.3125, -0.25, -0.1875, -0.125, -0.0625, 0;
  EXPECT_LT((H.row(0).head(7).transpose() - first).cwiseAbs().maxCoeff(), 1e-15);
  // Interleaved reading of the first two rows.
  const std::vector<double> lead = {-1, 0.0625, -0.3125, 0.125};
  EXPECT_DOUBLE_EQ(H(0, 0), lead[0]);
  EXPECT_DOUBLE_EQ(H(1, 0), lead[1]);
  EXPECT_DOUBLE_EQ(H(0, 1), lead[2]);
  EXPECT_DOUBLE_EQ(H(1, 1), lead[3]);
  const RMat G = conv_generator(code, 20);
  EXPECT_LT((H.transpose() * G).cwiseAbs().maxCoeff(), 1e-9);
  RandomSource rng(6);
  EXPECT_LT((H.transpose() * (G * rng.normal_vector(20))).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ConvCode, ParityCheckSpansTheNullSpace) {
  RandomSource rng(8);
  const ConvCode code(rng.normal_vector(4), rng.normal_vector(4));
  const Eigen::Index N = 12;
  const RMat G = conv_generator(code, N);
  const RMat H = conv_parity_check(code, N);
  // Oracle: left null space of G from a full SVD.
  Eigen::JacobiSVD<RMat> svd(G, Eigen::ComputeFullU);
  const RMat U0 = svd.matrixU().rightCols(G.rows() - N);
  const RMat P_null = U0 * U0.transpose();
  const RMat P_H = H * (H.transpose() * H).inverse() * H.transpose();
  EXPECT_EQ(H.cols(), G.rows() - N);
  EXPECT_LT((P_null - P_H).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ConvCode, ErasureDecodeWithoutErasuresIsExact) {
  const auto code = ConvCode::example();
  RandomSource rng(9);
  const RVec x = rng.normal_vector(50);
  const RVec y = conv_encode(x, code);
  const auto rep = conv_erasure_decode(y, SupportSet({}, static_cast<std::size_t>(y.size())), code, IterationConfig{});
  EXPECT_EQ(rep.iterations, 1u);
  EXPECT_LT((rep.estimate - x).norm(), 1e-10 * x.norm());
}

TEST(ConvCode, ErasureDecodeMatchesLeastSquares) {
  const auto code = ConvCode::example();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomSource rng(seed);
    const RVec x = rng.normal_vector(8);
    RVec y = conv_encode(x, code) + 0.1 * rng.normal_vector(26);
    const SupportSet e(rng.choose(26, 9), 26);
    for (auto i : e) y[static_cast<Eigen::Index>(i)] = 0.0;
    const SupportSet keep = e.complement();
    const RMat G = conv_generator(code, 8);
    RMat GK(static_cast<Eigen::Index>(keep.size()), 8);
    RVec yK(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r) {
      GK.row(static_cast<Eigen::Index>(r)) = G.row(static_cast<Eigen::Index>(keep[r]));
      yK[static_cast<Eigen::Index>(r)] = y[static_cast<Eigen::Index>(keep[r])];
    }
    const RVec oracle = GK.completeOrthogonalDecomposition().solve(yK);
    IterationConfig cfg;
    cfg.max_iters = 200;
    cfg.eps = 1e-14;
    const auto rep = conv_erasure_decode(y, e, code, cfg);
    EXPECT_LT((rep.estimate - oracle).cwiseAbs().maxCoeff(), 1e-6) << seed;
    EXPECT_TRUE(rep.converged);
  }
}

TEST(ConvCode, ErasureSnrFallsWithRate) {
  const auto code = ConvCode::example();
  IterationConfig cfg;
  cfg.max_iters = 30;
  std::vector<double> curve;
  for (double rate : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      RandomSource rng(seed);
      RVec x(50);
      for (auto& v : x) v = rng.uniform();
      RVec y = conv_encode(x, code);
      const auto count = static_cast<std::size_t>(std::lround(rate * static_cast<double>(y.size()) / 2.0));
      const SupportSet e(rng.choose(static_cast<std::size_t>(y.size()), count), static_cast<std::size_t>(y.size()));
      for (auto i : e) y[static_cast<Eigen::Index>(i)] = 0.0;
      acc += snr_db(x, conv_erasure_decode(y, e, code, cfg).estimate);
    }
    curve.push_back(acc / 30.0);
  }
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_LT(curve[i], curve[i - 1]);
}

TEST(ConvCode, TooManyErasuresAreFlagged) {
  const auto code = ConvCode::example();
  RandomSource rng(10);
  RVec y = conv_encode(rng.normal_vector(20), code);
  const SupportSet e(rng.choose(50, 35), 50);
  for (auto i : e) y[static_cast<Eigen::Index>(i)] = 0.0;
  const auto rep = conv_erasure_decode(y, e, code, IterationConfig{});
  EXPECT_TRUE(rep.nonconvergence);
  EXPECT_FALSE(rep.converged);
}

TEST(ConvCode, ImpulsiveDecodeOnCleanStream) {
  const auto code = ConvCode::example();
  RandomSource rng(11);
  const RVec x = rng.normal_vector(50);
  const RVec y = conv_encode(x, code);
  ImatConfig cfg;
  cfg.relax = 1.9;
  const auto d = conv_impulsive_decode(y, code, cfg);
  EXPECT_LT(d.impulses.norm(), 1e-8 * y.norm());
  EXPECT_LT((d.input - x).norm(), 1e-8 * x.norm());
}

TEST(ConvCode, ImpulsiveDecodeLocatesTwoImpulses) {
  const auto code = ConvCode::example();
  ImatConfig cfg;
  cfg.relax = 1.9;
  cfg.max_iters = 300;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RandomSource rng(seed);
    const RVec x = rng.normal_vector(50);
    const RVec y = conv_encode(x, code);
    const SupportSet where(rng.choose(110, 2), 110);
    RVec r = y;
    for (auto i : where) r[static_cast<Eigen::Index>(i)] += 20.0 * (rng.bernoulli(0.5) ? 1.0 : -1.0);
    const auto d = conv_impulsive_decode(r, code, cfg);
    ASSERT_EQ(d.support, where) << seed;
    EXPECT_LT((d.input - x).norm(), 1e-6 * x.norm());
  }
}

TEST(ConvCode, ImpulsiveDetectionImprovesWithVariance) {
  const auto code = ConvCode::example();
  ImatConfig cfg;
  cfg.relax = 1.9;
  cfg.max_iters = 300;
  cfg.floor_ratio = 0.1;
  std::vector<int> hits;
  for (double variance : {1.0, 10.0}) {
    int h = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      RandomSource rng(1000 + seed);
      RVec x(50);
      for (auto& v : x) v = rng.uniform();
      const RVec y = conv_encode(x, code);
      const double var = (y.array() - y.mean()).square().mean();
      const SupportSet where(rng.choose(110, 2), 110);
      RVec r = y;
      for (auto i : where) r[static_cast<Eigen::Index>(i)] += rng.normal() * std::sqrt(variance * var);
      for (auto& v : r) v += 0.01 * std::sqrt(var) * rng.normal();
      h += conv_impulsive_decode(r, code, cfg).support == where;
    }
    hits.push_back(h);
  }
  EXPECT_GT(hits[1], hits[0]);
}

TEST(ConvCode, CommonZeroInTapsIsRejected) {
  RVec t(2);
  t << 1, 1;
  const ConvCode code(t, t);
  try {
    conv_impulsive_decode(RVec::Ones(2 * (10 + 1)), code, ImatConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::numeric);
  }
}
