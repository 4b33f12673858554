#pragma once

// Estimator self-test against Gaussian closed forms:
//   h(N(0, σ²I_n)) = (n/2) log(2πeσ²),   I(N(0, σ²I_n)) = n/σ².

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "symentropy/estimators.hpp"
#include "symentropy/fixtures.hpp"
#include "symentropy/heat_flow.hpp"

namespace symentropy {

struct CalibrationRow {
  std::string estimator;
  std::size_t n = 0;
  double variance = 0.0;
  double value = 0.0;
  double std_error = 0.0;
  double truth = 0.0;
  double z = 0.0;  // (value - truth) / std_error
};

struct CalibrationReport {
  std::vector<CalibrationRow> rows;
  double max_abs_z = 0.0;
  bool passed = false;
};

inline constexpr std::size_t kCalibrationMaxDim = 4;
inline const std::vector<double> kCalibrationVariances = {0.25, 1.0, 4.0};
// The nearest-neighbor and heat-flow estimators cost far more per sample;
// their sample count is capped here.
inline constexpr std::size_t kCalibrationCostlyCap = 20000;

// Quadrature is one-dimensional; for n > 1 it is applied to the projection
// onto (1, ..., 1)/√n, whose law is N(0, σ²).
inline CalibrationReport run_calibration(std::size_t samples, std::uint64_t seed,
                                         double tol_sigma) {
  CalibrationReport rep;
  const std::size_t costly = std::min(samples, kCalibrationCostlyCap);
  std::uint64_t stream = 0;
  auto add = [&](const std::string& name, std::size_t n, double var, double value, double se,
                 double truth) {
    CalibrationRow row{name, n, var, value, se, truth, 0.0};
    const double err = value - truth;
    row.z = se > 0.0 ? err / se : (err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    rep.max_abs_z = std::max(rep.max_abs_z, std::abs(row.z));
    rep.rows.push_back(row);
  };
  for (std::size_t n = 1; n <= kCalibrationMaxDim; ++n) {
    const double nn = static_cast<double>(n);
    for (double var : kCalibrationVariances) {
      const GaussianMixture law = standard_gaussian(n, var);
      const double h_true = 0.5 * nn * std::log(2.0 * std::numbers::pi * std::numbers::e * var);
      const double h_line = h_true / nn;

      const auto mc = entropy_mc(law, samples, split_seed(seed, ++stream));
      add("entropy_mc", n, var, mc.value, mc.std_error, h_true);

      const Vector diag = Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / std::sqrt(nn));
      const auto quad = projection_entropy(law, diag);
      add("entropy_quadrature_1d", n, var, quad.value, quad.std_error, h_line);

      const auto knn = entropy_knn(sample(law, costly, split_seed(seed, ++stream)));
      add("entropy_knn", n, var, knn.value, knn.std_error, h_true);

      const auto fisher = fisher_mc(law, samples, split_seed(seed, ++stream));
      add("fisher_mc", n, var, fisher.value, fisher.std_error, nn / var);

      const auto db = entropy_via_debruijn(law, 64, costly, split_seed(seed, ++stream));
      add("entropy_via_debruijn", n, var, db.value, db.std_error, h_true);
    }
  }
  rep.passed = rep.max_abs_z <= tol_sigma;
  return rep;
}

}  // namespace symentropy
