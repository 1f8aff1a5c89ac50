#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "sparsekit/core/types.hpp"

namespace sparsekit {

struct SnrReport {
  double snr_db = 0.0;
  bool exact = false;
  std::string reference_id;
  std::string estimate_id;
};

// 10 log10(|ref|^2 / |ref - est|^2); an exact match yields +inf and sets `exact`.
template <class A, class B>
SnrReport snr(const Eigen::MatrixBase<A>& ref, const Eigen::MatrixBase<B>& est, std::string ref_id = {},
              std::string est_id = {}) {
  require(ref.size() == est.size(), errc::invalid_argument, "snr: length mismatch");
  const double num = ref.squaredNorm();
  const double den = (ref - est).squaredNorm();
  SnrReport r{0.0, false, std::move(ref_id), std::move(est_id)};
  if (den == 0.0) {
    r.exact = true;
    r.snr_db = std::numeric_limits<double>::infinity();
  } else {
    r.snr_db = 10.0 * std::log10(num / den);
  }
  return r;
}

template <class A, class B>
double snr_db(const Eigen::MatrixBase<A>& ref, const Eigen::MatrixBase<B>& est) {
  return snr(ref, est).snr_db;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace sparsekit
