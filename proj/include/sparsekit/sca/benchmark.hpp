#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "sparsekit/core/csv.hpp"
#include "sparsekit/sca/sca.hpp"

namespace sparsekit {

struct ScaBenchmarkRow {
  std::string solver;
  Eigen::Index n = 0, m = 0;
  std::size_t k_true = 0;
  double sigma_noise = 0.0;
  std::uint64_t seed = 0;
  bool support_ok = false;
  double mse = 0.0;  // ||s_hat - s||^2 / ||s||^2
  double seconds = 0.0;
};

struct ScaBenchmarkConfig {
  std::vector<Eigen::Index> n_values{20};
  double m_ratio = 0.5;
  std::vector<double> noise_values{0.0};
  std::size_t trials = 20;
  std::uint64_t seed = 1;
  double p = 0.1, sigma_on = 1.0, sigma_off = 0.01;
  std::vector<std::string> solvers{"omp", "bp", "focuss", "ide", "sl0"};
  std::size_t ide_iters = 8;
  std::size_t focuss_iters = 20;
};

inline RealReport run_sca_solver(const std::string& name, const SparseProblem& prob, const ScaBenchmarkConfig& cfg) {
  if (name == "omp" || name == "mp") {
    // Stop once the residual reaches the level explained by noise plus the weak sources.
    const double floor = std::sqrt(static_cast<double>(prob.m()) *
                                   (prob.noise_sigma * prob.noise_sigma +
                                    static_cast<double>(prob.n()) * (1.0 - cfg.p) * cfg.sigma_off * cfg.sigma_off));
    const double tol = prob.x.norm() > 0.0 ? floor / prob.x.norm() : 0.0;
    return matching_pursuit(prob, static_cast<std::size_t>(prob.m()), tol, name == "omp");
  }
  if (name == "bp") return basis_pursuit(prob);
  if (name == "focuss") return focuss(prob, cfg.focuss_iters);
  if (name == "ide") return ide(prob, cfg.ide_iters);
  if (name == "sl0") return sl0(prob);
  throw Error(errc::invalid_argument, "run_sca_solver: unknown solver '" + name + "'");
}

// The |active| largest magnitudes of the estimate must be exactly the generator's active set.
inline bool strongest_match(const RVec& est, const SupportSet& active) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(est.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(est[static_cast<Eigen::Index>(a)]) > std::abs(est[static_cast<Eigen::Index>(b)]);
  });
  idx.resize(active.size());
  return SupportSet(idx, active.ambient()) == active;
}

inline std::vector<ScaBenchmarkRow> run_sca_benchmark(const ScaBenchmarkConfig& cfg) {
  std::vector<ScaBenchmarkRow> rows;
  const RandomSource root(cfg.seed);
  std::uint64_t point = 0;
  for (Eigen::Index n : cfg.n_values) {
    const auto m = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::lround(cfg.m_ratio * static_cast<double>(n))));
    for (double sigma : cfg.noise_values) {
      for (std::size_t t = 0; t < cfg.trials; ++t, ++point) {
        RandomSource rng = root.fork(point);
        const SparseProblem prob = bernoulli_gaussian_problem(m, n, cfg.p, cfg.sigma_on, cfg.sigma_off, sigma, rng);
        for (const auto& name : cfg.solvers) {
          const RealReport rep = run_sca_solver(name, prob, cfg);
          ScaBenchmarkRow row;
          row.solver = name;
          row.n = n;
          row.m = m;
          row.k_true = prob.active.size();
          row.sigma_noise = sigma;
          row.seed = rng.seed();
          row.support_ok = strongest_match(rep.estimate, prob.active);
          row.mse = (rep.estimate - *prob.s).squaredNorm() / std::max(prob.s->squaredNorm(), 1e-300);
          row.seconds = rep.seconds;
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

inline CsvTable sca_benchmark_table(const std::vector<ScaBenchmarkRow>& rows) {
  CsvTable tab({"solver", "n", "m", "k_true", "sigma_noise", "seed", "support_ok", "mse", "seconds"});
  for (const auto& r : rows)
    tab.row({r.solver, std::to_string(r.n), std::to_string(r.m), std::to_string(r.k_true), format_double(r.sigma_noise),
                 std::to_string(r.seed), r.support_ok ? "1" : "0", format_double(r.mse), format_double(r.seconds)});
  return tab;
}

}  // namespace sparsekit
