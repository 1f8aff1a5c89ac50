#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "sparsekit/core/linalg.hpp"
#include "sparsekit/core/random.hpp"
#include "sparsekit/core/types.hpp"

namespace sparsekit {

// x = A s + noise, with A m x n and m <= n.
struct SparseProblem {
  RMat A;
  RVec x;
  double noise_sigma = 0.0;
  std::optional<RVec> s;
  SupportSet active;  // generator-side record of the "on" sources, when known

  Eigen::Index m() const { return A.rows(); }
  Eigen::Index n() const { return A.cols(); }

  void validate() const {
    require(A.rows() > 0 && A.cols() > 0, errc::invalid_argument, "SparseProblem: empty mixing matrix");
    require(A.rows() <= A.cols(), errc::invalid_argument, "SparseProblem: needs m <= n");
    require(x.size() == A.rows(), errc::invalid_argument, "SparseProblem: observation length must equal m");
    require(A.allFinite() && x.allFinite(), errc::invalid_argument, "SparseProblem: non-finite entry");
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      require(A.col(j).norm() > 0.0, errc::invalid_argument,
              "SparseProblem: column " + std::to_string(j) + " is zero");
    if (s) require(s->size() == A.cols(), errc::invalid_argument, "SparseProblem: source length must equal n");
    require(noise_sigma >= 0.0, errc::invalid_argument, "SparseProblem: negative noise level");
  }
};

inline constexpr double sca_support_tol = 1e-6;

inline SupportSet significant_support(const RVec& s, double rel_tol = sca_support_tol) {
  std::vector<std::size_t> idx;
  const double top = s.size() ? s.cwiseAbs().maxCoeff() : 0.0;
  if (top > 0.0)
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (std::abs(s[i]) > rel_tol * top) idx.push_back(static_cast<std::size_t>(i));
  return SupportSet(std::move(idx), static_cast<std::size_t>(s.size()));
}

namespace detail {

using sca_clock = std::chrono::steady_clock;

inline void finish_sca(RealReport& rep, const sca_clock::time_point& t0) {
  rep.support = significant_support(rep.estimate);
  rep.iterations = rep.residual_trace.size();
  rep.seconds = std::chrono::duration<double>(sca_clock::now() - t0).count();
  rep.params["support_tol"] = sca_support_tol;
}

inline RMat columns(const RMat& A, const std::vector<std::size_t>& idx) {
  RMat out(A.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = A.col(static_cast<Eigen::Index>(idx[c]));
  return out;
}

}  // namespace detail

// Greedy atom selection on unit-normalised columns. With `orthogonal` set the
// amplitudes are re-fitted by least squares on the whole selected set each step.
inline RealReport matching_pursuit(const SparseProblem& prob, std::size_t k_max, double residual_tol = 1e-10,
                                   bool orthogonal = false) {
  prob.validate();
  const auto t0 = detail::sca_clock::now();
  const Eigen::Index n = prob.n();
  RealReport rep;
  rep.solver = orthogonal ? "omp" : "mp";
  rep.params["k_max"] = static_cast<double>(k_max);
  rep.params["residual_tol"] = residual_tol;
  rep.estimate = RVec::Zero(n);

  const RVec norms = prob.A.colwise().norm().transpose();
  const double xnorm = prob.x.norm();
  RVec r = prob.x;
  std::vector<std::size_t> chosen;
  for (std::size_t it = 0; it < k_max && r.norm() > residual_tol * xnorm; ++it) {
    const RVec corr = (prob.A.transpose() * r).cwiseQuotient(norms);
    Eigen::Index g;
    corr.cwiseAbs().maxCoeff(&g);
    const auto gi = static_cast<std::size_t>(g);
    if (std::find(chosen.begin(), chosen.end(), gi) == chosen.end()) chosen.push_back(gi);
    if (orthogonal) {
      const RVec coef = pseudo_inverse_solve(detail::columns(prob.A, chosen), prob.x);
      rep.estimate.setZero();
      for (std::size_t c = 0; c < chosen.size(); ++c)
        rep.estimate[static_cast<Eigen::Index>(chosen[c])] = coef[static_cast<Eigen::Index>(c)];
      r = prob.x - prob.A * rep.estimate;
    } else {
      const double amp = corr[g] / norms[g];
      rep.estimate[g] += amp;
      r -= amp * prob.A.col(g);
    }
    rep.residual_trace.push_back(r.norm());
  }
  rep.converged = r.norm() <= residual_tol * xnorm;
  rep.shortfall = !rep.converged;
  detail::finish_sca(rep, t0);
  return rep;
}

inline RealReport orthogonal_matching_pursuit(const SparseProblem& prob, std::size_t k_max,
                                              double residual_tol = 1e-10) {
  return matching_pursuit(prob, k_max, residual_tol, true);
}

struct LpSolution {
  RVec x;
  std::vector<std::size_t> basis;  // one column index per retained row
  std::vector<std::size_t> rows;   // retained (non-redundant) constraint rows
  double objective = 0.0;
  std::size_t pivots = 0;
};

// min c'x s.t. A x = b, x >= 0. Two-phase tableau simplex with Bland's rule.
inline LpSolution simplex_standard_form(const RMat& A, const RVec& b, const RVec& c,
                                        std::size_t max_pivots = 100000, double tol = 1e-10) {
  const Eigen::Index m = A.rows(), N = A.cols();
  require(b.size() == m && c.size() == N, errc::invalid_argument, "simplex: dimension mismatch");
  require(A.allFinite() && b.allFinite() && c.allFinite(), errc::invalid_argument, "simplex: non-finite input");

  // Columns [0, N) structural, [N, N+m) artificial, last column is the right-hand side.
  RMat T = RMat::Zero(m, N + m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sgn = b[i] < 0.0 ? -1.0 : 1.0;
    T.row(i).head(N) = sgn * A.row(i);
    T(i, N + i) = 1.0;
    T(i, N + m) = sgn * b[i];
  }
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = N + i;
  std::vector<bool> live(static_cast<std::size_t>(m), true);
  std::size_t pivots = 0;

  auto pivot = [&](Eigen::Index row, Eigen::Index col) {
    T.row(row) /= T(row, col);
    for (Eigen::Index i = 0; i < m; ++i)
      if (i != row && live[static_cast<std::size_t>(i)] && T(i, col) != 0.0) T.row(i) -= T(i, col) * T.row(row);
    basis[static_cast<std::size_t>(row)] = col;
    ++pivots;
  };

  auto reduced = [&](const RVec& cost) {
    RVec r = cost;
    for (Eigen::Index i = 0; i < m; ++i)
      if (live[static_cast<std::size_t>(i)]) r -= cost[basis[static_cast<std::size_t>(i)]] * T.row(i).head(N + m).transpose();
    return r;
  };

  auto run = [&](const RVec& cost, Eigen::Index entering_limit) {
    while (true) {
      require(pivots < max_pivots, errc::budget_exceeded, "simplex: pivot budget exhausted");
      const RVec r = reduced(cost);
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < entering_limit; ++j)
        if (r[j] < -tol) { enter = j; break; }
      if (enter < 0) return;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i)
        if (live[static_cast<std::size_t>(i)] && T(i, enter) > tol) best = std::min(best, T(i, N + m) / T(i, enter));
      Eigen::Index leave = -1;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (!live[static_cast<std::size_t>(i)] || T(i, enter) <= tol) continue;
        if (T(i, N + m) / T(i, enter) > best + tol) continue;
        if (leave < 0 || basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]) leave = i;
      }
      require(leave >= 0, errc::degenerate_model, "simplex: objective unbounded below");
      pivot(leave, enter);
    }
  };

  RVec phase1 = RVec::Zero(N + m);
  phase1.tail(m).setOnes();
  run(phase1, N + m);
  double infeas = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[static_cast<std::size_t>(i)] >= N) infeas += T(i, N + m);
  require(infeas <= 1e-9 * (1.0 + b.cwiseAbs().sum()), errc::inconsistency,
          "simplex: constraints are infeasible (phase-one objective " + std::to_string(infeas) + ")");

  // Push remaining zero-level artificials out; rows with no structural pivot are redundant.
  for (Eigen::Index i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] < N) continue;
    Eigen::Index col = -1;
    for (Eigen::Index j = 0; j < N && col < 0; ++j)
      if (std::abs(T(i, j)) > 1e-9) col = j;
    if (col >= 0) pivot(i, col);
    else live[static_cast<std::size_t>(i)] = false;
  }

  RVec phase2 = RVec::Zero(N + m);
  phase2.head(N) = c;
  run(phase2, N);

  LpSolution out;
  out.x = RVec::Zero(N);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!live[static_cast<std::size_t>(i)]) continue;
    out.rows.push_back(static_cast<std::size_t>(i));
    out.basis.push_back(static_cast<std::size_t>(basis[static_cast<std::size_t>(i)]));
    out.x[basis[static_cast<std::size_t>(i)]] = T(i, N + m);
  }
  out.objective = c.dot(out.x);
  out.pivots = pivots;
  return out;
}

// Recomputes the basic solution and the dual from the original data (not the tableau)
// and returns the most negative reduced cost; >= -tol certifies optimality.
struct LpCertificate {
  RVec x;
  RVec reduced_costs;
  double min_reduced_cost = 0.0;
};

inline LpCertificate verify_basis(const RMat& A, const RVec& b, const RVec& c, const LpSolution& sol) {
  const auto k = static_cast<Eigen::Index>(sol.basis.size());
  RMat B(k, k);
  RVec bb(k), cb(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto row = static_cast<Eigen::Index>(sol.rows[static_cast<std::size_t>(r)]);
    bb[r] = b[row];
    for (Eigen::Index q = 0; q < k; ++q) B(r, q) = A(row, static_cast<Eigen::Index>(sol.basis[static_cast<std::size_t>(q)]));
    cb[r] = c[static_cast<Eigen::Index>(sol.basis[static_cast<std::size_t>(r)])];
  }
  LpCertificate cert;
  cert.x = RVec::Zero(A.cols());
  if (k > 0) {
    Eigen::FullPivLU<RMat> lu(B);
    const RVec xb = lu.solve(bb);
    for (Eigen::Index q = 0; q < k; ++q) cert.x[static_cast<Eigen::Index>(sol.basis[static_cast<std::size_t>(q)])] = xb[q];
    const RVec y = Eigen::FullPivLU<RMat>(B.transpose()).solve(cb);
    RMat Ar(k, A.cols());
    for (Eigen::Index r = 0; r < k; ++r) Ar.row(r) = A.row(static_cast<Eigen::Index>(sol.rows[static_cast<std::size_t>(r)]));
    cert.reduced_costs = c - Ar.transpose() * y;
  } else {
    cert.reduced_costs = c;
  }
  cert.min_reduced_cost = cert.reduced_costs.size() ? cert.reduced_costs.minCoeff() : 0.0;
  return cert;
}

inline constexpr Eigen::Index basis_pursuit_max_n = 200;

// min ||s||_1 s.t. A s = x via s = u - v, u, v >= 0.
inline RealReport basis_pursuit(const SparseProblem& prob) {
  prob.validate();
  require(prob.n() <= basis_pursuit_max_n, errc::capacity_exceeded, "basis_pursuit: n above the dense-simplex cap");
  const auto t0 = detail::sca_clock::now();
  const Eigen::Index n = prob.n();
  RMat L(prob.m(), 2 * n);
  L << prob.A, -prob.A;
  const RVec cost = RVec::Ones(2 * n);
  const LpSolution sol = simplex_standard_form(L, prob.x, cost);
  const LpCertificate cert = verify_basis(L, prob.x, cost, sol);
  require(cert.min_reduced_cost >= -1e-8, errc::internal,
          "basis_pursuit: optimality certificate failed (reduced cost " + std::to_string(cert.min_reduced_cost) + ")");

  RealReport rep;
  rep.solver = "bp";
  rep.estimate = cert.x.head(n) - cert.x.tail(n);
  const double res = (prob.A * rep.estimate - prob.x).norm();
  rep.residual_trace.push_back(res);
  rep.converged = true;
  rep.params["lp_variables"] = static_cast<double>(2 * n);
  rep.params["pivots"] = static_cast<double>(sol.pivots);
  rep.params["min_reduced_cost"] = cert.min_reduced_cost;
  rep.params["objective"] = rep.estimate.lpNorm<1>();
  detail::finish_sca(rep, t0);
  return rep;
}

inline RealReport focuss(const SparseProblem& prob, std::size_t iters = 20) {
  prob.validate();
  const auto t0 = detail::sca_clock::now();
  RealReport rep;
  rep.solver = "focuss";
  rep.params["iters"] = static_cast<double>(iters);
  RVec s = RVec::Zero(prob.n());
  if (prob.x.norm() > 0.0) s = pseudo_inverse_solve(prob.A, prob.x);
  for (std::size_t it = 0; it < iters; ++it) {
    if (s.cwiseAbs().maxCoeff() == 0.0) {
      rep.breakdown = true;
      rep.params["zero_iterate"] = 1.0;
      break;
    }
    const RMat AW = prob.A * s.asDiagonal();
    s = s.cwiseProduct(pseudo_inverse_solve(AW, prob.x));
    rep.residual_trace.push_back((prob.A * s - prob.x).norm());
  }
  rep.estimate = s;
  rep.converged = !rep.breakdown;
  detail::finish_sca(rep, t0);
  return rep;
}

// eps^l = eps0 * ratio^l with eps0 = factor * max|A'x| over unit-norm columns.
inline std::vector<double> ide_schedule(const SparseProblem& prob, std::size_t iters = 20, double factor = 0.5,
                                        double ratio = 0.7) {
  const RVec norms = prob.A.colwise().norm().transpose();
  const double eps0 = factor * (prob.A.transpose() * prob.x).cwiseQuotient(norms).cwiseAbs().maxCoeff();
  std::vector<double> eps(iters);
  for (std::size_t l = 0; l < iters; ++l) eps[l] = eps0 * std::pow(ratio, static_cast<double>(l));
  return eps;
}

// Detection and estimation run on unit-norm columns (the detection statistic then
// reduces to the normalised amplitude); the estimate is mapped back at the end.
inline RealReport ide(const SparseProblem& prob, const std::vector<double>& schedule) {
  prob.validate();
  const auto t0 = detail::sca_clock::now();
  const Eigen::Index m = prob.m(), n = prob.n();
  RealReport rep;
  rep.solver = "ide";
  rep.params["iters"] = static_cast<double>(schedule.size());
  rep.estimate = RVec::Zero(n);
  if (prob.x.cwiseAbs().maxCoeff() == 0.0) {
    rep.converged = true;
    detail::finish_sca(rep, t0);
    return rep;
  }
  for (double e : schedule) require(e > 0.0, errc::invalid_argument, "ide: threshold schedule must be positive");

  const RVec norms = prob.A.colwise().norm().transpose();
  const RMat A = prob.A * norms.cwiseInverse().asDiagonal();
  const RMat G = A.transpose() * A;
  const RVec Ax = A.transpose() * prob.x;
  RVec s = pseudo_inverse_solve(A, prob.x);
  for (double eps : schedule) {
    const RVec stat = Ax - G * s + G.diagonal().cwiseProduct(s);
    std::vector<std::size_t> inactive, act;
    for (Eigen::Index i = 0; i < n; ++i)
      (std::abs(stat[i]) < eps ? inactive : act).push_back(static_cast<std::size_t>(i));

    if (inactive.empty()) {
      s -= pseudo_inverse_solve(A, RVec(A * s - prob.x));
    } else {
      const RMat Ai = detail::columns(A, inactive);
      RMat M = Ai * Ai.transpose();
      Eigen::SelfAdjointEigenSolver<RMat> eig(M, Eigen::EigenvaluesOnly);
      if (eig.eigenvalues()[0] <= 1e-12 * std::max(eig.eigenvalues()[m - 1], 1e-300)) {
        M += 1e-10 * M.trace() * RMat::Identity(m, m);
        rep.regularized = true;
      }
      const Eigen::LDLT<RMat> P(M);
      RVec sa;
      RVec rhs = prob.x;
      if (!act.empty()) {
        const RMat Aa = detail::columns(A, act);
        const RMat PAa = P.solve(Aa);
        sa = pseudo_inverse_solve(RMat(Aa.transpose() * PAa), RVec(PAa.transpose() * prob.x));
        rhs -= Aa * sa;
      }
      const RVec si = Ai.transpose() * P.solve(rhs);
      for (std::size_t c = 0; c < inactive.size(); ++c) s[static_cast<Eigen::Index>(inactive[c])] = si[static_cast<Eigen::Index>(c)];
      for (std::size_t c = 0; c < act.size(); ++c) s[static_cast<Eigen::Index>(act[c])] = sa[static_cast<Eigen::Index>(c)];
    }
    rep.threshold_trace.push_back(eps);
    rep.residual_trace.push_back((A * s - prob.x).norm());
  }
  rep.estimate = s.cwiseQuotient(norms);
  rep.converged = true;
  detail::finish_sca(rep, t0);
  return rep;
}

inline RealReport ide(const SparseProblem& prob, std::size_t iters = 20) {
  if (prob.x.cwiseAbs().maxCoeff() == 0.0) return ide(prob, std::vector<double>{});
  return ide(prob, ide_schedule(prob, iters));
}

// F_sigma(s) = sum_i exp(-s_i^2 / (2 sigma^2)); tends to n - ||s||_0 as sigma -> 0.
inline double sl0_objective(const RVec& s, double sigma) {
  return (-(s.array().square()) / (2.0 * sigma * sigma)).exp().sum();
}

inline std::vector<double> sl0_schedule(double max_abs_start, std::size_t K = 8, double ratio = 0.5,
                                        double first_factor = 2.0) {
  std::vector<double> sig(K);
  for (std::size_t i = 0; i < K; ++i) sig[i] = first_factor * max_abs_start * std::pow(ratio, static_cast<double>(i));
  return sig;
}

// Geometric sequence from sigma1 down to (and including the first value below) sigma_min.
inline std::vector<double> sl0_schedule_until(double sigma1, double sigma_min, double ratio) {
  require(sigma1 > 0.0 && sigma_min > 0.0 && ratio > 0.0 && ratio < 1.0, errc::invalid_argument,
          "sl0_schedule_until: bad schedule parameters");
  std::vector<double> sig{sigma1};
  while (sig.back() > sigma_min) sig.push_back(sig.back() * ratio);
  return sig;
}

inline RealReport sl0(const SparseProblem& prob, const std::vector<double>& sigmas, std::size_t L = 3, double mu = 2.0) {
  prob.validate();
  require(mu > 0.0, errc::invalid_argument, "sl0: step size must be positive");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    require(sigmas[i] > 0.0, errc::invalid_argument, "sl0: sigma sequence must be positive");
    require(i == 0 || sigmas[i] < sigmas[i - 1], errc::invalid_argument, "sl0: sigma sequence must strictly decrease");
  }
  const auto t0 = detail::sca_clock::now();
  RealReport rep;
  rep.solver = "sl0";
  rep.params["K"] = static_cast<double>(sigmas.size());
  rep.params["L"] = static_cast<double>(L);
  rep.params["mu"] = mu;
  const RMat Apinv = pseudo_inverse(prob.A);
  RVec s = Apinv * prob.x;
  for (double sigma : sigmas) {
    for (std::size_t j = 0; j < L; ++j) {
      const RVec delta = s.array() * (-(s.array().square()) / (2.0 * sigma * sigma)).exp();
      s -= mu * delta;
      s -= Apinv * (prob.A * s - prob.x);
      rep.residual_trace.push_back((prob.A * s - prob.x).norm());
      rep.threshold_trace.push_back(sigma);
    }
  }
  rep.estimate = s;
  rep.converged = true;
  detail::finish_sca(rep, t0);
  return rep;
}

inline RealReport sl0(const SparseProblem& prob) {
  const RVec s0 = pseudo_inverse_solve(prob.A, prob.x);
  const double top = s0.cwiseAbs().maxCoeff();
  if (top == 0.0) return sl0(prob, std::vector<double>{});
  return sl0(prob, sl0_schedule(top));
}

struct RipEstimate {
  std::size_t k = 0;
  double delta = 0.0;
  std::string method = "exhaustive";
  std::size_t subsets = 0;
  std::vector<std::size_t> worst_subset;

  bool valid() const { return delta < 1.0; }
};

inline RipEstimate rip_constant(const RMat& A, std::size_t k, double budget = 1e6) {
  const auto n = static_cast<std::size_t>(A.cols());
  require(k >= 1 && k <= n, errc::invalid_argument, "rip_constant: need 1 <= k <= n");
  const double count = binomial(static_cast<int>(n), static_cast<int>(k));
  require(count <= budget, errc::budget_exceeded,
          "rip_constant: C(" + std::to_string(n) + "," + std::to_string(k) + ") subsets exceed the budget");
  RMat U = A;
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    const double nj = U.col(j).norm();
    require(nj > 0.0, errc::invalid_argument, "rip_constant: zero column");
    U.col(j) /= nj;
  }
  const RMat gram = U.transpose() * U;
  RipEstimate out;
  out.k = k;
  RMat sub(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for_each_subset(n, k, [&](const std::vector<std::size_t>& idx) {
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t c = 0; c < k; ++c)
        sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            gram(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(idx[c]));
    Eigen::SelfAdjointEigenSolver<RMat> eig(sub, Eigen::EigenvaluesOnly);
    const double d = std::max(std::abs(eig.eigenvalues().maxCoeff() - 1.0), std::abs(1.0 - eig.eigenvalues().minCoeff()));
    if (d > out.delta || out.worst_subset.empty()) {
      out.delta = std::max(out.delta, d);
      out.worst_subset = idx;
    }
    ++out.subsets;
  });
  return out;
}

inline SparseProblem bernoulli_gaussian_problem(Eigen::Index m, Eigen::Index n, double p, double sigma_on,
                                                double sigma_off, double sigma_noise, RandomSource& rng) {
  require(m >= 1 && m <= n, errc::invalid_argument, "bernoulli_gaussian_problem: need 1 <= m <= n");
  require(p > 0.0 && p < 1.0, errc::invalid_argument, "bernoulli_gaussian_problem: p must lie in (0, 1)");
  require(sigma_on > 0.0 && sigma_off >= 0.0 && sigma_noise >= 0.0, errc::invalid_argument,
          "bernoulli_gaussian_problem: bad standard deviation");
  SparseProblem prob;
  prob.A.resize(m, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) prob.A(i, j) = rng.normal();
  RVec s(n);
  std::vector<bool> on(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    on[static_cast<std::size_t>(i)] = rng.bernoulli(p);
    s[i] = rng.normal() * (on[static_cast<std::size_t>(i)] ? sigma_on : sigma_off);
  }
  prob.x = prob.A * s;
  if (sigma_noise > 0.0) prob.x += sigma_noise * rng.normal_vector(m);
  prob.noise_sigma = sigma_noise;
  prob.s = s;
  prob.active = SupportSet::from_mask(on);
  return prob;
}

struct KSubspaceResult {
  std::vector<RMat> bases;  // orthonormal columns, at most k each
  std::vector<std::size_t> partition;
  double residual = 0.0;
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool reseeded = false;
  bool nonconvergence = false;
};

namespace detail {

inline RMat fit_subspace(const RMat& F, const std::vector<std::size_t>& members, Eigen::Index k) {
  if (members.empty()) return RMat(F.rows(), 0);
  const RMat X = columns(F, members);
  Eigen::JacobiSVD<RMat> svd(X, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  Eigen::Index r = 0;
  while (r < std::min<Eigen::Index>(k, sv.size()) && sv[r] > 1e-14 * std::max(sv[0], 1e-300)) ++r;
  return svd.matrixU().leftCols(r);
}

inline double subspace_distance2(const RVec& f, const RMat& V) {
  return V.cols() ? (f - V * (V.transpose() * f)).squaredNorm() : f.squaredNorm();
}

}  // namespace detail

// F holds one data vector per column.
inline KSubspaceResult ksubspace_fit(const RMat& F, std::size_t l, Eigen::Index k, std::vector<std::size_t> partition,
                                     std::size_t max_iters = 200) {
  const auto count = static_cast<std::size_t>(F.cols());
  require(l >= 1, errc::invalid_argument, "ksubspace_fit: need at least one subspace");
  require(k >= 0 && k < F.rows(), errc::invalid_argument, "ksubspace_fit: need k < n");
  require(count >= l, errc::invalid_argument, "ksubspace_fit: fewer data vectors than classes");
  require(partition.size() == count, errc::invalid_argument, "ksubspace_fit: partition length must match the data");
  for (auto c : partition) require(c < l, errc::invalid_argument, "ksubspace_fit: class label out of range");

  KSubspaceResult out;
  std::vector<double> dist(count);

  auto members = [&](std::size_t cls) {
    std::vector<std::size_t> v;
    for (std::size_t i = 0; i < count; ++i)
      if (partition[i] == cls) v.push_back(i);
    return v;
  };
  // An empty class takes the point that is currently fitted worst.
  auto reseed = [&]() {
    for (std::size_t cls = 0; cls < l; ++cls) {
      if (!members(cls).empty()) continue;
      std::vector<std::size_t> size(l, 0);
      for (auto c : partition) ++size[c];
      std::size_t worst = count;
      for (std::size_t i = 0; i < count; ++i)
        if (size[partition[i]] > 1 && (worst == count || dist[i] > dist[worst])) worst = i;
      partition[worst] = cls;
      out.reseeded = true;
    }
  };
  auto fit_all = [&]() {
    out.bases.assign(l, RMat());
    for (std::size_t cls = 0; cls < l; ++cls) out.bases[cls] = detail::fit_subspace(F, members(cls), k);
    double gamma = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      dist[i] = detail::subspace_distance2(F.col(static_cast<Eigen::Index>(i)), out.bases[partition[i]]);
      gamma += dist[i];
    }
    return gamma;
  };

  std::fill(dist.begin(), dist.end(), 0.0);
  reseed();
  double gamma = fit_all();
  out.objective_trace.push_back(gamma);
  while (true) {
    // Nearest-subspace repartition; ties keep the current label.
    double e_all = 0.0;
    std::vector<std::size_t> next = partition;
    for (std::size_t i = 0; i < count; ++i) {
      double best = dist[i];
      for (std::size_t cls = 0; cls < l; ++cls) {
        const double d = detail::subspace_distance2(F.col(static_cast<Eigen::Index>(i)), out.bases[cls]);
        if (d < best) { best = d; next[i] = cls; }
      }
      e_all += best;
    }
    if (!(gamma > e_all + 1e-12 * (1.0 + gamma))) break;
    if (out.iterations >= max_iters) {
      out.nonconvergence = true;
      break;
    }
    partition = next;
    for (std::size_t i = 0; i < count; ++i)
      dist[i] = detail::subspace_distance2(F.col(static_cast<Eigen::Index>(i)), out.bases[partition[i]]);
    reseed();
    gamma = fit_all();
    out.objective_trace.push_back(gamma);
    ++out.iterations;
  }
  out.partition = partition;
  out.residual = gamma;
  return out;
}

}  // namespace sparsekit
