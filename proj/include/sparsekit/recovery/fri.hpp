#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sparsekit/core/linalg.hpp"
#include "sparsekit/core/types.hpp"

namespace sparsekit {

// Stream of k Diracs sum_i c_i delta(t - t_i). Instants are expressed in the frame the moments were taken in.
struct FriModel {
  std::vector<double> instants;
  std::vector<cplx> amplitudes;
  double window = 0.0;  // observation window length, for the rate of innovation only

  std::size_t k() const { return instants.size(); }
  double rate_of_innovation() const { return window > 0.0 ? 2.0 * static_cast<double>(k()) / window : 0.0; }

  void validate() const {
    require(!instants.empty(), errc::invalid_argument, "FriModel: k must be at least 1");
    require(instants.size() == amplitudes.size(), errc::invalid_argument, "FriModel: instants/amplitudes mismatch");
    for (std::size_t i = 1; i < instants.size(); ++i)
      require(instants[i] > instants[i - 1], errc::invalid_argument, "FriModel: instants must be strictly increasing");
  }
};

// tau_r = sum_i c_i t_i^r for r = 0..count-1.
inline CVec fri_forward_moments(const FriModel& m, std::size_t count) {
  CVec tau = CVec::Zero(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < m.k(); ++i) {
    double p = 1.0;
    for (std::size_t r = 0; r < count; ++r) {
      tau[static_cast<Eigen::Index>(r)] += m.amplitudes[i] * p;
      p *= m.instants[i];
    }
  }
  return tau;
}

// Centered cardinal B-spline of degree d, support [-(d+1)/2, (d+1)/2].
class BsplineKernel {
 public:
  explicit BsplineKernel(int degree) : d_(degree) {
    require(degree >= 0, errc::invalid_argument, "BsplineKernel: negative degree");
  }

  int degree() const { return d_; }
  double half_support() const { return (d_ + 1) / 2.0; }

  double operator()(double t) const {
    const double x = t + half_support();  // shift to the causal spline on [0, d+1]
    if (x <= 0.0 || x >= d_ + 1.0) return 0.0;
    // b[j] holds B_p(x - j); Cox-de Boor raises p from 0 to d.
    std::vector<double> b(static_cast<std::size_t>(d_ + 1), 0.0);
    const int cell = static_cast<int>(std::floor(x));
    if (cell >= 0 && cell <= d_) b[static_cast<std::size_t>(cell)] = 1.0;
    for (int p = 1; p <= d_; ++p)
      for (int j = 0; j + p <= d_; ++j) {
        const double u = x - j;
        b[static_cast<std::size_t>(j)] =
            (u * b[static_cast<std::size_t>(j)] + (p + 1 - u) * b[static_cast<std::size_t>(j + 1)]) / p;
      }
    return b[0];
  }

 private:
  int d_;
};

struct ReproductionFit {
  RMat coeffs;  // rows: monomial order r, columns: sample positions
  double max_residual;
};

namespace detail {

inline std::vector<double> verification_grid(double lo, double hi, std::size_t points) {
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

inline RMat kernel_matrix(const BsplineKernel& phi, const std::vector<double>& positions, const std::vector<double>& grid) {
  RMat K(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(positions.size()));
  for (std::size_t g = 0; g < grid.size(); ++g)
    for (std::size_t j = 0; j < positions.size(); ++j)
      K(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(j)) = phi(grid[g] - positions[j]);
  return K;
}

inline double reproduction_residual(const RMat& alpha, const BsplineKernel& phi, const std::vector<double>& positions,
                                    double lo, double hi) {
  const auto grid = verification_grid(lo, hi, 257);
  const RMat K = kernel_matrix(phi, positions, grid);
  double worst = 0.0;
  for (Eigen::Index r = 0; r < alpha.rows(); ++r) {
    const RVec fit = K * alpha.row(r).transpose();
    for (std::size_t g = 0; g < grid.size(); ++g)
      worst = std::max(worst, std::abs(fit[static_cast<Eigen::Index>(g)] - std::pow(grid[g], static_cast<double>(r))));
  }
  return worst;
}

}  // namespace detail

// Least-squares coefficients alpha_{r,j} with sum_j alpha_{r,j} phi(t - n_j) ~ t^r on [lo, hi].
inline ReproductionFit fit_reproduction(const BsplineKernel& phi, const std::vector<double>& positions, std::size_t orders,
                                        double lo, double hi) {
  require(!positions.empty() && orders >= 1, errc::invalid_argument, "fit_reproduction: empty problem");
  require(hi > lo, errc::invalid_argument, "fit_reproduction: empty interval");
  const auto grid = detail::verification_grid(lo, hi, std::max<std::size_t>(8 * positions.size(), 400));
  const RMat K = detail::kernel_matrix(phi, positions, grid);
  ReproductionFit out{RMat(static_cast<Eigen::Index>(orders), static_cast<Eigen::Index>(positions.size())), 0.0};
  for (std::size_t r = 0; r < orders; ++r) {
    RVec target(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t g = 0; g < grid.size(); ++g) target[static_cast<Eigen::Index>(g)] = std::pow(grid[g], static_cast<double>(r));
    out.coeffs.row(static_cast<Eigen::Index>(r)) = pseudo_inverse_solve(K, target).transpose();
  }
  out.max_residual = detail::reproduction_residual(out.coeffs, phi, positions, lo, hi);
  return out;
}

// Samples y_j = sum_i c_i phi(t_i - n_j) of a Dirac stream through the kernel.
inline CVec fri_sample(const FriModel& m, const BsplineKernel& phi, const std::vector<double>& positions) {
  CVec y = CVec::Zero(static_cast<Eigen::Index>(positions.size()));
  for (std::size_t j = 0; j < positions.size(); ++j)
    for (std::size_t i = 0; i < m.k(); ++i) y[static_cast<Eigen::Index>(j)] += m.amplitudes[i] * phi(m.instants[i] - positions[j]);
  return y;
}

inline constexpr double fri_reproduction_tol = 1e-8;

// tau_r = sum_j alpha_{r,j} y_j, after checking the coefficients reproduce monomials on [lo, hi].
inline CVec fri_moments(const CVec& samples, const RMat& alpha, const BsplineKernel& phi,
                        const std::vector<double>& positions, double lo, double hi) {
  require(alpha.cols() == samples.size() && positions.size() == static_cast<std::size_t>(samples.size()),
          errc::invalid_argument, "fri_moments: coefficient matrix does not match sample count");
  const double res = detail::reproduction_residual(alpha, phi, positions, lo, hi);
  require(res < fri_reproduction_tol, errc::precondition_violation,
          "fri_moments: reproduction residual " + std::to_string(res) + " exceeds tolerance");
  return alpha.cast<cplx>() * samples;
}

namespace detail {

inline double moment_misfit(const std::vector<double>& t, const CVec& c, const CVec& tau) {
  const FriModel m{t, std::vector<cplx>(c.data(), c.data() + c.size())};
  return (fri_forward_moments(m, static_cast<std::size_t>(tau.size())) - tau).norm();
}

inline CVec vandermonde_amplitudes(const std::vector<double>& t, const CVec& tau) {
  const Eigen::Index R = tau.size();
  CMat V(R, static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) {
    double p = 1.0;
    for (Eigen::Index r = 0; r < R; ++r) {
      V(r, static_cast<Eigen::Index>(i)) = p;
      p *= t[i];
    }
  }
  return pseudo_inverse_solve(V, tau);
}

// Gauss-Newton on the real unknowns (Re c, Im c, t) of tau_r = sum c_i t_i^r.
inline void polish(std::vector<double>& t, CVec& c, const CVec& tau, int iters) {
  const Eigen::Index k = static_cast<Eigen::Index>(t.size());
  const Eigen::Index R = tau.size();
  double best = moment_misfit(t, c, tau);
  for (int it = 0; it < iters && best > 0.0; ++it) {
    RMat J(2 * R, 3 * k);
    RVec res(2 * R);
    CVec model = CVec::Zero(R);
    for (Eigen::Index i = 0; i < k; ++i) {
      double p = 1.0, dp = 0.0;
      const double ti = t[static_cast<std::size_t>(i)];
      for (Eigen::Index r = 0; r < R; ++r) {
        const cplx d = c[i] * dp;
        J(r, i) = p;
        J(R + r, i) = 0.0;
        J(r, k + i) = 0.0;
        J(R + r, k + i) = p;
        J(r, 2 * k + i) = d.real();
        J(R + r, 2 * k + i) = d.imag();
        model[r] += c[i] * p;
        dp = dp * ti + p;  // d/dt t^{r+1} = (r+1) t^r, built incrementally
        p *= ti;
      }
    }
    for (Eigen::Index r = 0; r < R; ++r) {
      res[r] = (tau[r] - model[r]).real();
      res[R + r] = (tau[r] - model[r]).imag();
    }
    const RVec delta = pseudo_inverse_solve(J, res);
    std::vector<double> tn = t;
    CVec cn = c;
    for (Eigen::Index i = 0; i < k; ++i) {
      cn[i] += cplx(delta[i], delta[k + i]);
      tn[static_cast<std::size_t>(i)] += delta[2 * k + i];
    }
    const double m = moment_misfit(tn, cn, tau);
    if (!(m < best)) break;
    t = std::move(tn);
    c = std::move(cn);
    best = m;
  }
}

}  // namespace detail

// Annihilating-filter recovery of a k-Dirac stream from moments tau_0..tau_{R-1}, R >= 2k.
inline FriModel annihilating_recover(const CVec& tau, std::size_t k) {
  require(k >= 1, errc::invalid_argument, "annihilating_recover: k must be >= 1");
  require(static_cast<std::size_t>(tau.size()) >= 2 * k, errc::invalid_argument,
          "annihilating_recover: need at least 2k moments");
  check_signal(tau, "annihilating_recover");
  const double scale = tau.cwiseAbs().maxCoeff();
  require(scale > 0.0, errc::degenerate_model, "annihilating_recover: all moments are zero");
  const auto K = static_cast<Eigen::Index>(k);
  const Eigen::Index rows = tau.size() - K;

  // sum_{i=0..k} h_i tau_{r+k-i} = 0 with h_0 = 1.
  CMat T(rows, K);
  CVec rhs(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index i = 1; i <= K; ++i) T(r, i - 1) = tau[r + K - i];
    rhs[r] = -tau[r + K];
  }
  const CVec h = pseudo_inverse_solve(T, rhs);
  std::vector<cplx> poly(k + 1);
  poly[0] = 1.0;
  for (std::size_t i = 1; i <= k; ++i) poly[i] = h[static_cast<Eigen::Index>(i - 1)];
  const auto roots = polynomial_roots(poly);

  std::vector<double> t(k);
  for (std::size_t i = 0; i < k; ++i) t[i] = roots[i].real();
  std::sort(t.begin(), t.end());
  CVec c = detail::vandermonde_amplitudes(t, tau);
  detail::polish(t, c, tau, 30);

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t[a] < t[b]; });
  FriModel out;
  for (auto i : order) {
    out.instants.push_back(t[i]);
    out.amplitudes.push_back(c[static_cast<Eigen::Index>(i)]);
  }

  double cmax = 0.0;
  for (auto a : out.amplitudes) cmax = std::max(cmax, std::abs(a));
  for (std::size_t i = 0; i < k; ++i) {
    require(std::abs(out.amplitudes[i]) > 1e-8 * cmax, errc::degenerate_model,
            "annihilating_recover: vanishing amplitude (fewer than k Diracs?)");
    if (i)
      require(out.instants[i] - out.instants[i - 1] > 1e-9 * (1.0 + std::abs(out.instants[i])), errc::degenerate_model,
              "annihilating_recover: coincident instants");
  }
  const double misfit = (fri_forward_moments(out, static_cast<std::size_t>(tau.size())) - tau).norm();
  require(misfit <= 1e-6 * tau.norm(), errc::degenerate_model,
          "annihilating_recover: recovered model does not reproduce the moments (relative misfit " +
              std::to_string(misfit / tau.norm()) + ")");
  return out;
}

}  // namespace sparsekit
