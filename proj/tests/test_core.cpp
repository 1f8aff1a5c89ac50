#include <gtest/gtest.h>

#include <sstream>

#include "sparsekit/core/csv.hpp"
#include "sparsekit/core/fft.hpp"
#include "sparsekit/core/linalg.hpp"
#include "sparsekit/core/metrics.hpp"
#include "sparsekit/core/random.hpp"

using namespace sparsekit;

namespace {

CVec direct_dft(const CVec& x, double sign = -1.0) {
  const Eigen::Index n = x.size();
  CVec y = CVec::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      y[k] += x[i] * std::polar(1.0, sign * 2.0 * pi * static_cast<double>(i * k % n) / static_cast<double>(n));
  return y / std::sqrt(static_cast<double>(n));
}

CMat random_hermitian(RandomSource& rng, Eigen::Index n) {
  CMat B(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) B(i, j) = rng.complex_normal();
  return (B + B.adjoint()) / 2.0;
}

}  // namespace

TEST(Dft, ImpulseHasFlatUnitarySpectrum) {
  CVec d = CVec::Zero(4);
  d[0] = 1.0;
  const CVec X = dft(d);
  for (Eigen::Index k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(X[k] - cplx(0.5, 0.0)), 0.0, 1e-15);
}

TEST(Dft, RoundTripAndDirectSumOracle) {
  RandomSource rng(11);
  for (Eigen::Index n : {1, 2, 3, 7, 8, 12, 64, 100}) {
    const CVec x = rng.complex_normal_vector(n);
    EXPECT_LT((idft(dft(x)) - x).cwiseAbs().maxCoeff(), 1e-12) << n;
    EXPECT_LT((dft(x) - direct_dft(x)).cwiseAbs().maxCoeff(), 1e-12) << n;
    EXPECT_LT((idft(x) - direct_dft(x, +1.0)).cwiseAbs().maxCoeff(), 1e-12) << n;
  }
}

TEST(Dft, EmptyInputRejected) {
  EXPECT_THROW(dft(CVec()), Error);
}

TEST(Dft, ParsevalOverManySizes) {
  RandomSource rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng.below(253));
    const CVec x = rng.complex_normal_vector(n);
    EXPECT_NEAR(dft(x).squaredNorm(), x.squaredNorm(), 1e-10 * std::max(1.0, x.squaredNorm()));
  }
}

TEST(SortedDft, QOneIsPlainDft) {
  RandomSource rng(3);
  const CVec x = rng.complex_normal_vector(16);
  EXPECT_LT((sorted_dft(x, 1) - dft(x)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SortedDft, BinPermutationForQ3) {
  RandomSource rng(4);
  const CVec x = rng.complex_normal_vector(8);
  const CVec X = direct_dft(x);
  const CVec S = sorted_dft(x, 3);
  const int perm[8] = {0, 3, 6, 1, 4, 7, 2, 5};
  for (int k = 0; k < 8; ++k) EXPECT_LT(std::abs(S[k] - X[perm[k]]), 1e-12) << k;
}

TEST(SortedDft, UnitaryAndInvertible) {
  RandomSource rng(5);
  const CVec x = rng.complex_normal_vector(32);
  for (long q : {1, 3, 5, 15, 31}) {
    const CVec S = sorted_dft(x, q);
    EXPECT_NEAR(S.norm(), x.norm(), 1e-12);
    EXPECT_LT((sorted_dft(S, q, true) - x).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SortedDft, MirrorQGivesConjugateSpectrumForRealInput) {
  RandomSource rng(6);
  CVec x(32);
  for (Eigen::Index i = 0; i < 32; ++i) x[i] = rng.normal();
  const CVec a = sorted_dft(x, 3);
  const CVec b = sorted_dft(x, 29);
  EXPECT_LT((a - b.conjugate()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SortedDft, NonCoprimeRejected) {
  EXPECT_THROW(sorted_dft(CVec::Ones(8), 2), Error);
}

TEST(Dct, OrthonormalRoundTripAndBasis) {
  RandomSource rng(7);
  for (Eigen::Index n : {1, 5, 16, 33}) {
    const CVec x = rng.complex_normal_vector(n);
    EXPECT_LT((idct(dct(x)) - x).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(dct(x).norm(), x.norm(), 1e-12);
  }
  // Direct DCT-II definition as oracle.
  const Eigen::Index n = 9;
  const CVec x = rng.complex_normal_vector(n);
  const CVec X = dct(x);
  for (Eigen::Index k = 0; k < n; ++k) {
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) acc += x[i] * std::cos(pi * (i + 0.5) * k / n);
    acc *= std::sqrt(2.0 / n) * (k == 0 ? 1.0 / std::sqrt(2.0) : 1.0);
    EXPECT_LT(std::abs(acc - X[k]), 1e-12);
  }
}

TEST(PseudoInverse, IdentityAndInvertible) {
  const CVec b = CVec::LinSpaced(4, 1.0, 4.0);
  EXPECT_LT((pseudo_inverse_solve(CMat::Identity(4, 4), b) - b).norm(), 1e-14);

  RMat A(3, 3);
  A << 4, 1, 2, 1, 5, 3, 2, 3, 6;
  RVec r(3);
  r << 1, -2, 0.5;
  const RVec ref = A.fullPivLu().solve(r);
  EXPECT_LT((pseudo_inverse_solve(A, r) - ref).norm(), 1e-10);
}

TEST(PseudoInverse, MinimumNormOnRankDeficient) {
  RMat A(2, 3);
  A << 1, 0, 0, 1, 0, 0;
  RVec b(2);
  b << 1, 1;
  const RVec x = pseudo_inverse_solve(A, b);
  EXPECT_NEAR(x[0], 1.0, 1e-14);
  EXPECT_NEAR(x[1], 0.0, 1e-14);
  EXPECT_NEAR(x[2], 0.0, 1e-14);
}

TEST(PseudoInverse, ConsistentFullColumnRankIsExact) {
  RandomSource rng(8);
  for (int t = 0; t < 20; ++t) {
    CMat A(12, 5);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = rng.complex_normal();
    const CVec s = rng.complex_normal_vector(5);
    EXPECT_LT((pseudo_inverse_solve(A, CVec(A * s)) - s).norm(), 1e-9);
  }
}

TEST(PseudoInverse, DimensionMismatchRejected) {
  EXPECT_THROW(pseudo_inverse_solve(RMat::Identity(3, 3), RVec::Ones(2)), Error);
}

TEST(HermitianEig, DiagonalAndSpherical) {
  CMat D = CMat::Zero(3, 3);
  D(0, 0) = 3.0;
  D(1, 1) = 1.0;
  D(2, 2) = 2.0;
  const auto e = hermitian_eig(D);
  EXPECT_NEAR(e.values[0], 3.0, 1e-14);
  EXPECT_NEAR(e.values[1], 2.0, 1e-14);
  EXPECT_NEAR(e.values[2], 1.0, 1e-14);

  const auto s = hermitian_eig(CMat::Identity(4, 4) * 0.7);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(s.values[i], 0.7, 1e-14);
}

TEST(HermitianEig, ReconstructionAndOrthonormality) {
  RandomSource rng(9);
  const CMat A = random_hermitian(rng, 6);
  const auto e = hermitian_eig(A);
  const CMat R = e.vectors * e.values.cast<cplx>().asDiagonal() * e.vectors.adjoint();
  EXPECT_LT((R - A).norm(), 1e-8);
  EXPECT_LT((e.vectors.adjoint() * e.vectors - CMat::Identity(6, 6)).norm(), 1e-10);
  for (Eigen::Index i = 0; i < 6; ++i) {
    EXPECT_LT((A * e.vectors.col(i) - e.values[i] * e.vectors.col(i)).norm(), 1e-8 * A.norm());
    if (i) EXPECT_GE(e.values[i - 1], e.values[i]);
  }
}

TEST(HermitianEig, NonSquareRejected) {
  EXPECT_THROW(hermitian_eig(CMat::Zero(2, 3)), Error);
}

TEST(HermitianEig, MatchesCharacteristicPolynomialRoots) {
  RandomSource rng(10);
  for (int t = 0; t < 10; ++t) {
    RMat B(3, 3);
    for (Eigen::Index i = 0; i < 9; ++i) B.data()[i] = rng.normal();
    const RMat A = (B + B.transpose()) / 2.0;
    // det(zI - A) = z^3 - tr z^2 + c1 z - det
    const double tr = A.trace();
    const double c1 = A(0, 0) * A(1, 1) + A(0, 0) * A(2, 2) + A(1, 1) * A(2, 2) - A(0, 1) * A(1, 0) -
                      A(0, 2) * A(2, 0) - A(1, 2) * A(2, 1);
    auto roots = polynomial_roots({1.0, -tr, c1, -A.determinant()});
    std::vector<double> rr;
    for (auto z : roots) rr.push_back(z.real());
    std::sort(rr.rbegin(), rr.rend());
    const auto e = hermitian_eig(A.cast<cplx>());
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(rr[static_cast<std::size_t>(i)], e.values[i], 1e-6);
  }
}

TEST(PolynomialRoots, LinearQuadraticAndExpanded) {
  auto r1 = polynomial_roots({1.0, -0.5});
  ASSERT_EQ(r1.size(), 1u);
  EXPECT_NEAR(std::abs(r1[0] - cplx(0.5, 0)), 0.0, 1e-15);

  auto r2 = polynomial_roots({1.0, 0.0, 1.0});
  std::sort(r2.begin(), r2.end(), [](cplx a, cplx b) { return a.imag() > b.imag(); });
  EXPECT_NEAR(std::abs(r2[0] - cplx(0, 1)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(r2[1] - cplx(0, -1)), 0.0, 1e-14);

  const cplx t1 = std::polar(1.0, pi / 4), t2 = std::polar(1.0, pi / 3);
  auto r3 = polynomial_roots({1.0, -(t1 + t2), t1 * t2});
  std::sort(r3.begin(), r3.end(), [](cplx a, cplx b) { return std::arg(a) < std::arg(b); });
  EXPECT_LT(std::abs(r3[0] - t1), 1e-10);
  EXPECT_LT(std::abs(r3[1] - t2), 1e-10);
}

TEST(PolynomialRoots, ResidualBoundAndLeadingZeroRejected) {
  RandomSource rng(12);
  std::vector<cplx> h(9);
  for (auto& c : h) c = rng.complex_normal();
  double hmax = 0;
  for (auto c : h) hmax = std::max(hmax, std::abs(c));
  for (auto z : polynomial_roots(h)) EXPECT_LT(std::abs(polyval(h, z)), 1e-6 * hmax);
  EXPECT_THROW(polynomial_roots({0.0, 1.0}), Error);
}

TEST(Random, DeterministicFrozenDraws) {
  // mt19937_64 default-seed 10000th output is fixed by the C++ standard.
  std::mt19937_64 ref;
  ref.discard(9999);
  EXPECT_EQ(ref(), 9981545732273789042ULL);
  RandomSource a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.normal(), b.normal());
  RandomSource c(5489);  // std::mt19937_64 default seed
  EXPECT_EQ(c.next_u64(), 14514284786278117030ULL);
}

TEST(Random, UniformAndNormalMoments) {
  RandomSource rng(1);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.normal();
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
  auto idx = rng.choose(10, 10);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(idx[i], i);
}

TEST(Snr, ExactSentinelAndValue) {
  const CVec x = CVec::Ones(4);
  auto r = snr(x, x);
  EXPECT_TRUE(r.exact);
  EXPECT_TRUE(std::isinf(r.snr_db));
  CVec y = x;
  y[0] += 0.1;
  EXPECT_NEAR(snr_db(x, y), 10.0 * std::log10(4.0 / 0.01), 1e-12);
}

TEST(SupportSet, ValidationAndComplement) {
  EXPECT_THROW(SupportSet({1, 1}, 4), Error);
  EXPECT_THROW(SupportSet({4}, 4), Error);
  SupportSet s({3, 0}, 5);
  EXPECT_EQ(s.indices(), (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(s.complement().indices(), (std::vector<std::size_t>{1, 2, 4}));
}

TEST(SignalCsv, RoundTripIsBitExact) {
  RandomSource rng(13);
  const CVec x = rng.complex_normal_vector(17);
  std::stringstream ss;
  write_signal_csv(ss, x);
  const CVec y = read_signal_csv(ss);
  ASSERT_EQ(y.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]);
}

TEST(Signal, HermitianSymmetryImpliesRealInverse) {
  RandomSource rng(14);
  const Eigen::Index n = 16;
  CVec X(n);
  X[0] = rng.normal();
  X[n / 2] = rng.normal();
  for (Eigen::Index j = 1; j < n / 2; ++j) {
    X[j] = rng.complex_normal();
    X[n - j] = std::conj(X[j]);
  }
  ASSERT_TRUE(is_hermitian_symmetric(X));
  EXPECT_LT(idft(X).imag().cwiseAbs().maxCoeff(), 1e-10);
  CVec bad = CVec::Ones(3);
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(check_signal(bad, "t"), Error);
}
