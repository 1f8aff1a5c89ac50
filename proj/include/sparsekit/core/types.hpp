#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsekit/core/error.hpp"

namespace sparsekit {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;

inline constexpr double pi = 3.14159265358979323846;

// Every entry must be finite; length must be positive.
inline void check_signal(const CVec& x, const char* who) {
  require(x.size() > 0, errc::invalid_argument, std::string(who) + ": empty signal");
  for (Eigen::Index i = 0; i < x.size(); ++i)
    require(std::isfinite(x[i].real()) && std::isfinite(x[i].imag()), errc::invalid_argument,
            std::string(who) + ": non-finite entry at index " + std::to_string(i));
}

inline bool is_hermitian_symmetric(const CVec& x, double tol = 1e-10) {
  const Eigen::Index n = x.size();
  for (Eigen::Index j = 0; j < n; ++j)
    if (std::abs(x[j] - std::conj(x[(n - j) % n])) > tol) return false;
  return true;
}

class SupportSet {
 public:
  SupportSet() = default;

  SupportSet(std::vector<std::size_t> indices, std::size_t n) : idx_(std::move(indices)), n_(n) {
    std::sort(idx_.begin(), idx_.end());
    require(std::adjacent_find(idx_.begin(), idx_.end()) == idx_.end(), errc::invalid_argument,
            "SupportSet: duplicate index");
    require(idx_.empty() || idx_.back() < n_, errc::invalid_argument, "SupportSet: index out of range");
  }

  static SupportSet full(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return SupportSet(std::move(v), n);
  }

  static SupportSet from_mask(const std::vector<bool>& mask) {
    std::vector<std::size_t> v;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) v.push_back(i);
    return SupportSet(std::move(v), mask.size());
  }

  const std::vector<std::size_t>& indices() const { return idx_; }
  std::size_t ambient() const { return n_; }
  std::size_t size() const { return idx_.size(); }
  bool empty() const { return idx_.empty(); }
  std::size_t operator[](std::size_t i) const { return idx_[i]; }
  auto begin() const { return idx_.begin(); }
  auto end() const { return idx_.end(); }

  bool contains(std::size_t i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }

  std::vector<bool> mask() const {
    std::vector<bool> m(n_, false);
    for (auto i : idx_) m[i] = true;
    return m;
  }

  SupportSet complement() const {
    std::vector<std::size_t> v;
    std::size_t j = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (j < idx_.size() && idx_[j] == i) { ++j; continue; }
      v.push_back(i);
    }
    return SupportSet(std::move(v), n_);
  }

  friend bool operator==(const SupportSet& a, const SupportSet& b) {
    return a.n_ == b.n_ && a.idx_ == b.idx_;
  }

 private:
  std::vector<std::size_t> idx_;
  std::size_t n_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const SupportSet& s) {
  os << '{';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  return os << "}/" << s.ambient();
}

// Diagnostics shared by every iterative solver.
template <class Scalar>
struct SolverReport {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> estimate;
  SupportSet support;
  std::size_t iterations = 0;
  double seconds = 0.0;
  std::vector<double> residual_trace;
  std::vector<double> snr_trace;
  std::vector<double> threshold_trace;
  bool converged = false;
  bool diverged = false;
  bool breakdown = false;
  bool nonconvergence = false;
  bool regularized = false;
  bool shortfall = false;
  std::string solver;
  std::map<std::string, double> params;
};

using Report = SolverReport<cplx>;
using RealReport = SolverReport<double>;

inline CVec gather(const CVec& x, const SupportSet& s) {
  CVec out(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) out[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(s[i])];
  return out;
}

inline void scatter(CVec& x, const SupportSet& s, const CVec& v) {
  for (std::size_t i = 0; i < s.size(); ++i) x[static_cast<Eigen::Index>(s[i])] = v[static_cast<Eigen::Index>(i)];
}

inline CVec masked(const CVec& x, const SupportSet& s) {
  CVec out = CVec::Zero(x.size());
  for (auto i : s) out[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(i)];
  return out;
}

}  // namespace sparsekit
