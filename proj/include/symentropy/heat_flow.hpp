#pragma once

// Gaussian smoothing path X_t = X + √t Z and the integral representation
//   h(X) = (n/2) log 2πe - ½ ∫₀^∞ (I(X_t) - n/(1+t)) dt.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symentropy/error.hpp"
#include "symentropy/estimators.hpp"
#include "symentropy/gaussian_mixture.hpp"
#include "symentropy/parallel.hpp"
#include "symentropy/quadrature.hpp"

namespace symentropy {

struct FisherPath {
  std::vector<double> times;
  std::vector<FisherEstimate> values;

  // columns t, value, stderr
  std::string to_csv() const {
    std::ostringstream out;
    out << "t,value,stderr\n";
    char buf[96];
    for (std::size_t i = 0; i < times.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", times[i], values[i].value,
                    values[i].std_error);
      out << buf;
    }
    return out.str();
  }
};

// I(X_t) at each time, each from its own fisher_mc run on a seed split by
// time index.
inline FisherPath fisher_path(const GaussianMixture& mix, const std::vector<double>& times,
                              std::size_t count, std::uint64_t seed) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0)) {
      throw Error(ErrorCode::NegativeTime,
                  "times[" + std::to_string(i) + "] must be >= 0, got " + std::to_string(times[i]));
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "times must be strictly increasing at index " +
                                                  std::to_string(i));
    }
  }
  FisherPath path;
  path.times = times;
  for (std::size_t i = 0; i < times.size(); ++i) {
    path.values.push_back(fisher_mc(convolve_isotropic(mix, times[i]), count, split_seed(seed, i)));
  }
  return path;
}

inline constexpr std::size_t kMinDeBruijnNodes = 16;

struct DeBruijnOptions {
  std::size_t nodes = 64;
  // Subtract the Gaussian with the law's mean and covariance inside the
  // integrand and add its exact integral back. Unbiased either way; the
  // variance vanishes for Gaussian inputs.
  bool control_variate = true;
};

struct DeBruijnResult {
  EntropyEstimate estimate;      // std_error combines both parts below
  double mc_std_error = 0.0;
  double quadrature_std_error = 0.0;  // |full - half-node rule| on the same draws
  double half_rule_value = 0.0;
  FisherPath path;                     // plain I(X_t) means at the full-rule nodes
};

namespace detail {

struct DeBruijnNode {
  double t;
  double weight;  // u-rule weight times dt/du = (1+t)²
  GaussianMixture smoothed;
  Matrix gauss_precision;  // (Σ̄ + tI)⁻¹
};

inline std::vector<DeBruijnNode> debruijn_nodes(const GaussianMixture& mix, std::size_t nodes) {
  const GaussLegendreRule rule = gauss_legendre(nodes);
  const Matrix cov = mixture_covariance(mix);
  const auto n = cov.rows();
  std::vector<DeBruijnNode> out;
  for (std::size_t k = 0; k < nodes; ++k) {
    const double u = 0.5 * (rule.nodes[k] + 1.0);
    const double t = u / (1.0 - u);
    const double jac = 1.0 / ((1.0 - u) * (1.0 - u));
    const Matrix shifted = cov + t * Matrix::Identity(n, n);
    out.push_back({t, 0.5 * rule.weights[k] * jac, convolve_isotropic(mix, t),
                   shifted.llt().solve(Matrix::Identity(n, n))});
  }
  return out;
}

// ∫₀^∞ (tr((Σ̄+tI)⁻¹) - n/(1+t)) dt, the deterministic part added back with
// the control variate, evaluated on the same u-rule. Each eigenvalue λ gives
// (1-λ)/((λ+t)(1+t)), summed in that form to avoid cancellation at large t.
inline double gaussian_reference_sum(const std::vector<DeBruijnNode>& nodes, const Vector& eig,
                                     bool control_variate) {
  double sum = 0.0;
  for (const auto& node : nodes) {
    double term = 0.0;
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
      term += control_variate ? (1.0 - eig(i)) / ((eig(i) + node.t) * (1.0 + node.t))
                              : -1.0 / (1.0 + node.t);
    }
    sum += node.weight * term;
  }
  return sum;
}

struct DeBruijnChunk {
  RunningStats full, half;
  std::vector<RunningStats> fisher;  // per full-rule node, without control variate
};

}  // namespace detail

// Both node rules share every draw (X, Z): X_t = X + √t Z at all times, so the
// integrand is smooth in t and the estimate per draw is a single number whose
// spread gives the Monte Carlo error exactly.
inline DeBruijnResult debruijn_analysis(const GaussianMixture& mix, std::size_t count,
                                        std::uint64_t seed, const DeBruijnOptions& opt = {}) {
  if (opt.nodes < kMinDeBruijnNodes) {
    throw Error(ErrorCode::InvalidArgument,
                "nodes must be >= 16, got " + std::to_string(opt.nodes));
  }
  detail::require_count(count, "entropy_via_debruijn");
  const std::size_t n = mix.dim();
  const Vector mean = mixture_mean(mix);
  const Matrix cov = mixture_covariance(mix);
  const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(cov, Eigen::EigenvaluesOnly).eigenvalues();

  const auto full = detail::debruijn_nodes(mix, opt.nodes);
  const auto half = detail::debruijn_nodes(mix, opt.nodes / 2);
  const double ref_full = detail::gaussian_reference_sum(full, eig, opt.control_variate);
  const double ref_half = detail::gaussian_reference_sum(half, eig, opt.control_variate);

  auto per_draw = [&](const std::vector<detail::DeBruijnNode>& nodes, const std::vector<double>& x,
                      const std::vector<double>& z, std::vector<double>& xt,
                      std::vector<double>& g, RunningStats* fisher) {
    double sum = 0.0;
    Vector centered(static_cast<Eigen::Index>(n)), whitened(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double st = std::sqrt(nodes[k].t);
      for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + st * z[i];
      nodes[k].smoothed.score(xt, g);
      double sq = 0.0;
      for (double gi : g) sq += gi * gi;
      if (!std::isfinite(sq)) {
        throw Error(ErrorCode::NonFiniteScore, "score is not finite along the heat path");
      }
      if (fisher) fisher[k].push(sq);
      double cv = 0.0;
      if (opt.control_variate) {
        for (std::size_t i = 0; i < n; ++i) {
          const auto ii = static_cast<Eigen::Index>(i);
          centered(ii) = xt[i] - mean(ii);
        }
        whitened.noalias() = nodes[k].gauss_precision * centered;
        cv = whitened.squaredNorm();
      }
      sum += nodes[k].weight * (sq - cv);
    }
    return sum;
  };

  const auto chunks = run_chunks(count, seed, [&](const ChunkRange& r, Rng& rng) {
    detail::DeBruijnChunk c;
    c.fisher.resize(full.size());
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x(n), z(n), xt(n), g(n);
    for (std::size_t j = r.begin; j < r.end; ++j) {
      mix.draw(rng, x);
      for (double& zi : z) zi = normal(rng);
      c.full.push(per_draw(full, x, z, xt, g, c.fisher.data()));
      c.half.push(per_draw(half, x, z, xt, g, nullptr));
    }
    return c;
  });

  detail::DeBruijnChunk total;
  total.fisher.resize(full.size());
  for (const auto& c : chunks) {
    total.full.merge(c.full);
    total.half.merge(c.half);
    for (std::size_t k = 0; k < full.size(); ++k) total.fisher[k].merge(c.fisher[k]);
  }

  const double base = static_cast<double>(n) * kHalfLog2PiE;
  const double h_full = base - 0.5 * (total.full.mean() + ref_full);
  const double h_half = base - 0.5 * (total.half.mean() + ref_half);

  DeBruijnResult result;
  result.mc_std_error = 0.5 * total.full.stderr_of_mean();
  // Rounding floor: node sums of O(n) terms are not known better than ~1e-12.
  result.quadrature_std_error = std::max(std::abs(h_full - h_half), 1e-12 * (1.0 + std::abs(h_full)));
  result.half_rule_value = h_half;
  result.estimate = {h_full,
                     std::hypot(result.mc_std_error, result.quadrature_std_error),
                     EntropyMethod::debruijn, count};
  for (std::size_t k = 0; k < full.size(); ++k) {
    result.path.times.push_back(full[k].t);
    result.path.values.push_back(
        {total.fisher[k].mean(), total.fisher[k].stderr_of_mean(), total.fisher[k].count()});
  }
  return result;
}

inline EntropyEstimate entropy_via_debruijn(const GaussianMixture& mix, std::size_t nodes,
                                            std::size_t count, std::uint64_t seed) {
  return debruijn_analysis(mix, count, seed, DeBruijnOptions{nodes, true}).estimate;
}

}  // namespace symentropy
