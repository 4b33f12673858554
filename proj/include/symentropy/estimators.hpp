#pragma once

// Entropy and Fisher-information estimators with reported standard errors,
// plus the numerical checks behind the score and independence lemmas:
// symmetric cross terms E[ρ_i ρ_j], the conditional-expectation identity for
// the score of a linear image, and mixed partials of log f.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <Eigen/Dense>

#include "symentropy/density_model.hpp"
#include "symentropy/error.hpp"
#include "symentropy/gaussian_mixture.hpp"
#include "symentropy/knn.hpp"
#include "symentropy/parallel.hpp"
#include "symentropy/quadrature.hpp"

namespace symentropy {

enum class EntropyMethod { mc_logdensity, quadrature_1d, knn, debruijn };

inline std::string to_string(EntropyMethod m) {
  switch (m) {
    case EntropyMethod::mc_logdensity: return "mc_logdensity";
    case EntropyMethod::quadrature_1d: return "quadrature_1d";
    case EntropyMethod::knn: return "knn";
    case EntropyMethod::debruijn: return "debruijn";
  }
  return "unknown";
}

// Entropy in nats. For Monte Carlo methods std_error is the sample standard
// deviation over √count; for quadrature it is |result - half-resolution result|.
struct EntropyEstimate {
  double value = 0.0;
  double std_error = 0.0;
  EntropyMethod method = EntropyMethod::mc_logdensity;
  std::size_t count = 0;
};

struct FisherEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

// Mean of a per-sample statistic with its standard error.
struct MeanEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

inline constexpr std::size_t kMinMonteCarloCount = 100;

namespace detail {

inline void require_count(std::size_t count, const char* what) {
  if (count < kMinMonteCarloCount) {
    throw Error(ErrorCode::InvalidArgument,
                std::string(what) + " count must be >= 100, got " + std::to_string(count));
  }
}

}  // namespace detail

// -E log f(X) from the law's own samples; the points are exactly
// sample(d, count, seed).
template <DensityModel D>
EntropyEstimate entropy_mc(const D& d, std::size_t count, std::uint64_t seed) {
  detail::require_count(count, "entropy_mc");
  const std::size_t n = d.dim();
  const RunningStats stats = reduce_chunks(count, seed, [&](const ChunkRange& r, Rng& rng) {
    RunningStats s;
    std::vector<double> x(n);
    for (std::size_t i = r.begin; i < r.end; ++i) {
      d.draw(rng, x);
      const double lf = d.log_density(x);
      if (!std::isfinite(lf)) {
        throw Error(ErrorCode::NonFiniteLogDensity,
                    "log density is not finite at sample " + std::to_string(i));
      }
      s.push(-lf);
    }
    return s;
  });
  return {stats.mean(), stats.stderr_of_mean(), EntropyMethod::mc_logdensity, count};
}

struct QuadratureSpec {
  std::optional<double> radius;  // truncation [-R, R]; chosen automatically for mixtures
  std::size_t order = 20;        // Gauss-Legendre points per panel
  std::size_t panels = 16;       // initial panels before adaptive bisection
  double tolerance = 1e-13;      // absolute, split across panels by length
};

inline constexpr double kMaxTailMass = 1e-12;

// Mass of a 1-D mixture outside [-R, R].
inline double mixture_tail_mass(const GaussianMixture& mix, double radius) {
  double mass = 0.0;
  for (const auto& c : mix.components()) {
    const double mu = c.mean(0);
    const double sd = std::sqrt(c.cov(0, 0));
    mass += c.weight * 0.5 *
            (std::erfc((radius - mu) / (sd * std::numbers::sqrt2)) +
             std::erfc((radius + mu) / (sd * std::numbers::sqrt2)));
  }
  return mass;
}

// max |μ| + 10 max σ. At 8σ the mass outside is already below 1e-12, but the
// entropy it carries, -∫ f log f over the tails, is about 4e-14 and larger
// than the quadrature error proxy; at 10σ it is below 1e-20.
inline double mixture_truncation_radius(const GaussianMixture& mix) {
  double max_mean = 0.0, max_sd = 0.0;
  for (const auto& c : mix.components()) {
    max_mean = std::max(max_mean, std::abs(c.mean(0)));
    max_sd = std::max(max_sd, std::sqrt(c.cov(0, 0)));
  }
  return max_mean + 10.0 * max_sd;
}

// -∫ f log f over [-R, R] for a 1-D law; spec.radius is required.
template <DensityModel D>
EntropyEstimate entropy_quadrature_1d(const D& d, const QuadratureSpec& spec) {
  if (d.dim() != 1) {
    throw Error(ErrorCode::NotUnivariate,
                "entropy_quadrature_1d needs a 1-D law, got n=" + std::to_string(d.dim()));
  }
  if (!spec.radius || !(*spec.radius > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "quadrature radius must be given and positive");
  }
  const double R = *spec.radius;
  auto integrand = [&](double x) {
    const double lf = d.log_density(std::span<const double>(&x, 1));
    const double f = std::exp(lf);
    return f > 0.0 ? -f * lf : 0.0;
  };
  const AdaptiveResult res =
      integrate_adaptive(integrand, -R, R, spec.order, spec.tolerance, spec.panels);
  return {res.value, res.error_proxy(), EntropyMethod::quadrature_1d, res.panels * spec.order * 2};
}

inline EntropyEstimate entropy_quadrature_1d(const GaussianMixture& mix,
                                             QuadratureSpec spec = {}) {
  if (mix.dim() != 1) {
    throw Error(ErrorCode::NotUnivariate,
                "entropy_quadrature_1d needs a 1-D law, got n=" + std::to_string(mix.dim()));
  }
  if (spec.radius) {
    const double tail = mixture_tail_mass(mix, *spec.radius);
    if (!(tail < kMaxTailMass)) {
      throw Error(ErrorCode::TruncationInsufficient,
                  "radius " + std::to_string(*spec.radius) + " leaves tail mass " +
                      std::to_string(tail) + " >= 1e-12; need at least " +
                      std::to_string(mixture_truncation_radius(mix)));
    }
  } else {
    spec.radius = mixture_truncation_radius(mix);
  }
  return entropy_quadrature_1d<GaussianMixture>(mix, spec);
}

inline constexpr std::size_t kDefaultKnnK = 4;
inline constexpr double kDuplicateJitter = 1e-12;

namespace detail {

// log volume of the unit Euclidean ball in R^d
inline double log_unit_ball_volume(std::size_t d) {
  const double dd = static_cast<double>(d);
  return 0.5 * dd * std::log(std::numbers::pi) - std::lgamma(0.5 * dd + 1.0);
}

inline double kozachenko_leonenko(std::span<const double> pts, std::size_t dim, std::size_t k) {
  const std::size_t n = pts.size() / dim;
  KdTree tree(pts, dim);
  double sum_log = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_log += 0.5 * std::log(tree.kth_neighbor_sq(i, k));
  }
  const double nn = static_cast<double>(n);
  return boost::math::digamma(nn) - boost::math::digamma(static_cast<double>(k)) +
         log_unit_ball_volume(dim) + static_cast<double>(dim) * sum_log / nn;
}

// Exact duplicate points are moved apart: the r-th repeat of a point has its
// first coordinate shifted by r·1e-12·max(1, |x|).
inline std::vector<double> jitter_duplicates(const Samples& s) {
  std::vector<double> out = s.data;
  const std::size_t n = s.size(), d = s.dim;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto row_less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(out.begin() + static_cast<std::ptrdiff_t>(a * d),
                                        out.begin() + static_cast<std::ptrdiff_t>((a + 1) * d),
                                        out.begin() + static_cast<std::ptrdiff_t>(b * d),
                                        out.begin() + static_cast<std::ptrdiff_t>((b + 1) * d));
  };
  std::sort(order.begin(), order.end(), row_less);
  std::size_t repeat = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t a = order[i - 1], b = order[i];
    const bool same = std::equal(s.data.begin() + static_cast<std::ptrdiff_t>(a * d),
                                 s.data.begin() + static_cast<std::ptrdiff_t>((a + 1) * d),
                                 s.data.begin() + static_cast<std::ptrdiff_t>(b * d));
    repeat = same ? repeat + 1 : 0;
    if (repeat > 0) {
      out[b * d] += static_cast<double>(repeat) * kDuplicateJitter *
                    std::max(1.0, std::abs(out[b * d]));
    }
  }
  return out;
}

}  // namespace detail

// Kozachenko-Leonenko nearest-neighbor entropy,
//   ψ(N) - ψ(k) + log V_d + (d/N) Σ log ε_i
// with ε_i the distance to the k-th neighbor. The error is judged from the
// same estimator on 10 disjoint contiguous folds: their spread over √10 gives
// the sampling part, and the offset of their mean from the full estimate
// gives the finite-sample bias part (the estimator's bias shrinks slowly with
// N in three or more dimensions). The two are combined in quadrature.
inline EntropyEstimate entropy_knn(const Samples& samples, std::size_t k = kDefaultKnnK) {
  const std::size_t n = samples.size();
  const std::size_t d = samples.dim;
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (n < 2 * k + 2) {
    throw Error(ErrorCode::TooFewSamples,
                "need at least 2k+2 = " + std::to_string(2 * k + 2) + " samples, got " +
                    std::to_string(n));
  }
  const std::vector<double> pts = detail::jitter_duplicates(samples);
  const double value = detail::kozachenko_leonenko(pts, d, k);

  constexpr std::size_t kFolds = 10;
  const std::size_t folds = std::min(kFolds, n / (2 * k + 2));
  double std_error = std::numeric_limits<double>::infinity();
  if (folds >= 2) {
    RunningStats spread;
    const std::size_t fold_size = n / folds;
    for (std::size_t f = 0; f < folds; ++f) {
      std::span<const double> part(pts.data() + f * fold_size * d, fold_size * d);
      spread.push(detail::kozachenko_leonenko(part, d, k));
    }
    const double sampling = spread.stddev() / std::sqrt(static_cast<double>(folds));
    std_error = std::hypot(sampling, spread.mean() - value);
  }
  return {value, std_error, EntropyMethod::knn, n};
}

inline void require_unit_vector(const Vector& a) {
  if (!(std::abs(a.norm() - 1.0) <= 1e-10)) {
    throw Error(ErrorCode::NotUnitVector,
                "direction must have unit norm within 1e-10, got norm " + std::to_string(a.norm()));
  }
}

// h(a·X): exact 1-D pushforward, then adaptive quadrature.
inline EntropyEstimate projection_entropy(const GaussianMixture& mix, const Vector& a,
                                          const QuadratureSpec& spec = {}) {
  if (a.size() != static_cast<Eigen::Index>(mix.dim())) {
    throw Error(ErrorCode::DimensionMismatch,
                "direction has length " + std::to_string(a.size()) + ", law has n=" +
                    std::to_string(mix.dim()));
  }
  require_unit_vector(a);
  return entropy_quadrature_1d(push_forward_linear(mix, a.transpose()), spec);
}

// I(X) = E‖ρ(X)‖² on sample(d, count, seed).
template <DensityModel D>
FisherEstimate fisher_mc(const D& d, std::size_t count, std::uint64_t seed) {
  detail::require_count(count, "fisher_mc");
  const std::size_t n = d.dim();
  const RunningStats stats = reduce_chunks(count, seed, [&](const ChunkRange& r, Rng& rng) {
    RunningStats s;
    std::vector<double> x(n), g(n);
    for (std::size_t i = r.begin; i < r.end; ++i) {
      d.draw(rng, x);
      d.score(x, g);
      double sq = 0.0;
      for (double gi : g) sq += gi * gi;
      if (!std::isfinite(sq)) {
        throw Error(ErrorCode::NonFiniteScore,
                    "score is not finite at sample " + std::to_string(i));
      }
      s.push(sq);
    }
    return s;
  });
  return {stats.mean(), stats.stderr_of_mean(), count};
}

// E[ρ_i(X) ρ_j(X)], an off-diagonal entry of the Fisher information matrix.
template <DensityModel D>
MeanEstimate cross_term_mc(const D& d, std::size_t i, std::size_t j, std::size_t count,
                           std::uint64_t seed) {
  const std::size_t n = d.dim();
  if (i >= n || j >= n) {
    throw Error(ErrorCode::IndexOutOfRange,
                "indices (" + std::to_string(i) + ", " + std::to_string(j) +
                    ") must be < n=" + std::to_string(n));
  }
  if (i == j) {
    throw Error(ErrorCode::IndexOutOfRange, "cross term needs i != j, got i = j = " +
                                                std::to_string(i));
  }
  detail::require_count(count, "cross_term_mc");
  const RunningStats stats = reduce_chunks(count, seed, [&](const ChunkRange& r, Rng& rng) {
    RunningStats s;
    std::vector<double> x(n), g(n);
    for (std::size_t t = r.begin; t < r.end; ++t) {
      d.draw(rng, x);
      d.score(x, g);
      const double v = g[i] * g[j];
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteScore, "score is not finite at sample " + std::to_string(t));
      }
      s.push(v);
    }
    return s;
  });
  return {stats.mean(), stats.stderr_of_mean(), count};
}

struct ScoreResidualReport {
  double max_residual = 0.0;  // max over probes of ‖LHS - RHS‖₂
  double std_error = 0.0;     // RHS standard error (norm) at the worst probe
  double max_z = 0.0;         // max over probes of residual / std_error (0 when exact)
  std::size_t probe_count = 0;
  bool analytic = false;      // single Gaussian: RHS computed in closed form
  std::vector<double> residuals;
  std::vector<double> std_errors;
};

// Compares the score of Y = A X, computed from the exact pushforward mixture,
// with E[A ρ_X(X) | Y = y]. Given Y = y each component m is Gaussian-
// conditioned: posterior weight π_m(y) ∝ w_m N(y; Aμ_m, AΣ_mAᵀ), conditional
// law N(μ_m + K_m(y - Aμ_m), Σ_m - K_m A Σ_m) with K_m = Σ_mAᵀ(AΣ_mAᵀ)⁻¹. The
// conditional expectation is Σ_m π_m E_m[...], each term averaged over draws
// from the exact conditional law (draws allotted in proportion to π_m).
// With a single component the score is affine and the expectation is exact.
inline ScoreResidualReport score_projection_residual(const GaussianMixture& mix, const Matrix& A,
                                                     std::size_t probes, std::size_t count,
                                                     std::uint64_t seed) {
  const GaussianMixture projected = push_forward_linear(mix, A);  // RankDeficient on bad A
  const auto k = A.rows();
  const auto n = A.cols();
  if (!((A * A.transpose() - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-10)) {
    throw Error(ErrorCode::InvalidArgument, "A must have orthonormal rows (|AAᵀ - I| <= 1e-10)");
  }
  if (probes < 1) throw Error(ErrorCode::InvalidArgument, "probes must be >= 1");

  struct Conditioner {
    double log_weight;
    Vector y_mean;
    Matrix y_cov_inv;
    double y_log_norm;
    Vector mean;
    Matrix gain;        // K_m
    Matrix noise_map;   // (I - K_m A) L_m
  };
  std::vector<Conditioner> parts;
  for (const auto& c : mix.components()) {
    const Matrix S = A * c.cov * A.transpose();
    Eigen::LLT<Matrix> llt(S);
    const Matrix S_inv = llt.solve(Matrix::Identity(k, k));
    const Matrix L_s = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) log_det += 2.0 * std::log(L_s(i, i));
    const Matrix gain = c.cov * A.transpose() * S_inv;
    const Matrix L = Eigen::LLT<Matrix>(c.cov).matrixL();
    parts.push_back({std::log(c.weight), A * c.mean, S_inv,
                     -0.5 * (static_cast<double>(k) * kLog2Pi + log_det), c.mean, gain,
                     (Matrix::Identity(n, n) - gain * A) * L});
  }

  const Samples ys = sample(projected, probes, split_seed(seed, 0));
  ScoreResidualReport report;
  report.probe_count = probes;
  report.analytic = mix.size() == 1;

  for (std::size_t p = 0; p < probes; ++p) {
    const auto row = ys.row(p);
    const Vector y = Eigen::Map<const Vector>(row.data(), k);
    const Vector lhs = projected.score(y);

    // posterior component weights
    std::vector<double> logpost(parts.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < parts.size(); ++m) {
      const Vector d = y - parts[m].y_mean;
      logpost[m] = parts[m].log_weight + parts[m].y_log_norm - 0.5 * d.dot(parts[m].y_cov_inv * d);
      mx = std::max(mx, logpost[m]);
    }
    double z = 0.0;
    for (double& lp : logpost) {
      lp = std::exp(lp - mx);
      z += lp;
    }

    Vector rhs = Vector::Zero(k);
    Vector var = Vector::Zero(k);
    for (std::size_t m = 0; m < parts.size(); ++m) {
      const double pi_m = logpost[m] / z;
      if (pi_m < 1e-15) continue;
      const auto& part = parts[m];
      const Vector cond_mean = part.mean + part.gain * (y - part.y_mean);
      if (report.analytic) {
        rhs += pi_m * (A * mix.score(cond_mean));
        continue;
      }
      const std::size_t draws = std::max<std::size_t>(
          2, static_cast<std::size_t>(std::llround(pi_m * static_cast<double>(count))));
      Rng rng(split_seed(seed, 1 + p * parts.size() + m));
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<RunningStats> stats(static_cast<std::size_t>(k));
      Vector xi(n), g(n);
      for (std::size_t t = 0; t < draws; ++t) {
        for (Eigen::Index i = 0; i < n; ++i) xi(i) = normal(rng);
        const Vector x = cond_mean + part.noise_map * xi;
        mix.score(std::span<const double>(x.data(), static_cast<std::size_t>(n)),
                  std::span<double>(g.data(), static_cast<std::size_t>(n)));
        const Vector ag = A * g;
        for (Eigen::Index i = 0; i < k; ++i) stats[static_cast<std::size_t>(i)].push(ag(i));
      }
      for (Eigen::Index i = 0; i < k; ++i) {
        const auto& s = stats[static_cast<std::size_t>(i)];
        rhs(i) += pi_m * s.mean();
        var(i) += pi_m * pi_m * s.variance() / static_cast<double>(s.count());
      }
    }
    const double residual = (lhs - rhs).norm();
    const double se = std::sqrt(var.sum());
    report.residuals.push_back(residual);
    report.std_errors.push_back(se);
    // A·ρ(X) can be constant on the fibre (isotropic Gaussians), so floor the
    // standard error at rounding level before forming z.
    const double z_score = residual / std::max(se, 1e-12 * (1.0 + lhs.norm()));
    if (residual > report.max_residual) {
      report.max_residual = residual;
      report.std_error = se;
    }
    report.max_z = std::max(report.max_z, z_score);
  }
  return report;
}

struct IndependenceReport {
  double max_abs = 0.0;        // max over probes and k != i of |∂²log f / ∂x_k∂x_i|
  double effective_tol = 0.0;  // tol plus the rounding guard
  std::size_t worst_k = 0;
  std::size_t probe_count = 0;
  bool verdict = true;         // true: consistent with X_i independent of the rest
};

// Central mixed second differences of log f at probe points drawn from the
// law. The rounding guard added to tol is 8·ε·max|log f|/h², the size of the
// cancellation error in a four-point stencil.
template <DensityModel D>
IndependenceReport mixed_partial_independence(const D& d, std::size_t i, std::size_t probes,
                                              std::uint64_t seed, double h = 1e-4,
                                              double tol = 1e-5) {
  const std::size_t n = d.dim();
  if (i >= n) {
    throw Error(ErrorCode::IndexOutOfRange,
                "index " + std::to_string(i) + " must be < n=" + std::to_string(n));
  }
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "step h must be positive");
  if (probes < 1) throw Error(ErrorCode::InvalidArgument, "probes must be >= 1");
  IndependenceReport report;
  report.probe_count = probes;
  const Samples pts = sample(d, probes, seed);
  std::vector<double> x(n);
  double max_log = 0.0;
  for (std::size_t p = 0; p < probes; ++p) {
    const auto base = pts.row(p);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      double corner[4];
      const double si[4] = {1, 1, -1, -1};
      const double sk[4] = {1, -1, 1, -1};
      for (int c = 0; c < 4; ++c) {
        std::copy(base.begin(), base.end(), x.begin());
        x[i] += si[c] * h;
        x[k] += sk[c] * h;
        corner[c] = d.log_density(x);
        if (!std::isfinite(corner[c])) {
          throw Error(ErrorCode::NonFiniteLogDensity,
                      "log density is not finite near probe " + std::to_string(p));
        }
        max_log = std::max(max_log, std::abs(corner[c]));
      }
      const double mixed = (corner[0] - corner[1] - corner[2] + corner[3]) / (4.0 * h * h);
      if (std::abs(mixed) > report.max_abs) {
        report.max_abs = std::abs(mixed);
        report.worst_k = k;
      }
    }
  }
  report.effective_tol =
      tol + 8.0 * std::numeric_limits<double>::epsilon() * max_log / (h * h);
  report.verdict = report.max_abs <= report.effective_tol;
  return report;
}

}  // namespace symentropy
