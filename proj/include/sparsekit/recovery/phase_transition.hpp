#pragma once

#include <cmath>
#include <vector>

#include "sparsekit/core/csv.hpp"
#include "sparsekit/core/random.hpp"
#include "sparsekit/recovery/imat.hpp"

namespace sparsekit {

inline double sample_count_law(std::size_t n, std::size_t k, double c = 1.0) {
  require(k >= 1 && k <= n, errc::invalid_argument, "sample_count_law: need 1 <= k <= n");
  return c * static_cast<double>(k) * std::log2(static_cast<double>(n) / static_cast<double>(k));
}

inline CVec sparse_transform_signal(RandomSource& rng, std::size_t n, const SupportSet& F, Transform t) {
  CVec X = CVec::Zero(static_cast<Eigen::Index>(n));
  for (auto k : F) X[static_cast<Eigen::Index>(k)] = t == Transform::DFT ? rng.complex_normal() : cplx(rng.normal());
  return inverse(t, X);
}

struct PhaseTransitionConfig {
  std::size_t n = 1024;
  std::vector<std::size_t> ks{4, 8, 16, 32};
  std::size_t trials = 25;
  double success_rate = 0.8;
  double success_snr_db = 100.0;
  Transform transform = Transform::DFT;
  std::uint64_t seed = 1;
  ImatConfig imat;

  void validate() const {
    require(n >= 2 && !ks.empty() && trials >= 1, errc::invalid_argument, "PhaseTransitionConfig: empty sweep");
    require(success_rate > 0.0 && success_rate <= 1.0, errc::invalid_argument,
            "PhaseTransitionConfig: success rate must lie in (0, 1]");
    for (auto k : ks) require(k >= 1 && k < n, errc::invalid_argument, "PhaseTransitionConfig: need 1 <= k < n");
    imat.validate();
  }
};

struct PhaseTransitionRow {
  std::size_t k = 0;
  std::size_t m_min = 0;
  double law = 0.0;
  double rate_at_m_min = 0.0;
  std::size_t probes = 0;
};

namespace detail {

struct PhaseTrial {
  CVec x;
  std::vector<std::size_t> order;
};

inline double phase_success_rate(const std::vector<PhaseTrial>& trials, std::size_t m, const PhaseTransitionConfig& cfg) {
  std::size_t ok = 0;
  for (const auto& t : trials) {
    std::vector<std::size_t> pick(t.order.begin(), t.order.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(pick.begin(), pick.end());
    const SupportSet S(std::move(pick), cfg.n);
    const auto r = imat(masked(t.x, S), MaskSpec::time_samples(S), cfg.transform, cfg.imat);
    ok += snr_db(t.x, r.estimate) >= cfg.success_snr_db;
  }
  return static_cast<double>(ok) / static_cast<double>(trials.size());
}

}  // namespace detail

// Smallest m reaching the target success rate, by bisection over nested random sample sets: trial t always
// observes the first m entries of its own random ordering, so success is monotone in m per trial.
inline std::vector<PhaseTransitionRow> phase_transition(const PhaseTransitionConfig& cfg) {
  cfg.validate();
  std::vector<PhaseTransitionRow> rows;
  RandomSource root(cfg.seed);
  for (auto k : cfg.ks) {
    RandomSource rng = root.fork(k);
    std::vector<detail::PhaseTrial> trials;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const auto F = rng.support(cfg.n, k);
      trials.push_back({sparse_transform_signal(rng, cfg.n, F, cfg.transform), rng.permutation(cfg.n)});
    }
    PhaseTransitionRow row{k, cfg.n, sample_count_law(cfg.n, k), 1.0, 0};
    std::size_t lo = k, hi = cfg.n;  // rate(lo) < target assumed, rate(hi) = 1
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      const double rate = detail::phase_success_rate(trials, mid, cfg);
      ++row.probes;
      if (rate >= cfg.success_rate) {
        hi = mid;
        row.rate_at_m_min = rate;
      } else {
        lo = mid;
      }
    }
    row.m_min = hi;
    rows.push_back(row);
  }
  return rows;
}

inline CsvTable phase_transition_table(const std::vector<PhaseTransitionRow>& rows) {
  CsvTable t({"k", "m_min", "law_c1", "ratio", "rate_at_m_min"});
  for (const auto& r : rows)
    t.row({std::to_string(r.k), std::to_string(r.m_min), format_double(r.law),
           format_double(static_cast<double>(r.m_min) / r.law), format_double(r.rate_at_m_min)});
  return t;
}

}  // namespace sparsekit
