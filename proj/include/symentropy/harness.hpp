#pragma once

// Inequality checks assembled from the estimators. Every check produces an
// InequalityReport; a verdict compares the gap against tol_sigma combined
// standard errors.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symentropy/density_model.hpp"
#include "symentropy/error.hpp"
#include "symentropy/estimators.hpp"
#include "symentropy/gaussian_mixture.hpp"
#include "symentropy/linalg_bases.hpp"
#include "symentropy/parallel.hpp"

namespace symentropy {

struct Budget {
  std::size_t samples = 200000;
  std::uint64_t seed = 7;
  double tol_sigma = 3.0;
};

enum class Statement { thm_main, corollary, thm_kdim, fisher_lemma };
enum class Verdict { holds, holds_with_equality, violated, inconclusive };

inline std::string to_string(Statement s) {
  switch (s) {
    case Statement::thm_main: return "thm_main";
    case Statement::corollary: return "corollary";
    case Statement::thm_kdim: return "thm_kdim";
    case Statement::fisher_lemma: return "fisher_lemma";
  }
  return "unknown";
}

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::holds_with_equality: return "holds_with_equality";
    case Verdict::violated: return "violated";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

// One side of an inequality: an entropy or Fisher estimate, or a closed form
// (method "closed_form", std_error 0).
struct Quantity {
  double value = 0.0;
  double std_error = 0.0;
  std::string method;
  std::size_t count = 0;
};

inline Quantity to_quantity(const EntropyEstimate& e) {
  return {e.value, e.std_error, to_string(e.method), e.count};
}
inline Quantity to_quantity(const FisherEstimate& e) {
  return {e.value, e.std_error, "fisher_mc", e.count};
}

struct InequalityReport {
  Statement statement = Statement::thm_main;
  Quantity lhs;
  Quantity rhs;             // rhs.value may be -inf (trivial directional bound)
  double gap = 0.0;         // the inequality holds in the direction gap >= 0
  double sigma = 0.0;
  Verdict verdict = Verdict::inconclusive;
  bool symmetric_law = true;
  bool trivial = false;     // directional bound is -inf
  std::string law_fingerprint;
  Budget budget;
  std::vector<std::string> notes;
};

// Streams of the seed schedule. Reports on the same law and seed draw h(X)
// from the same stream, so their joint-entropy estimates agree exactly.
enum class Stream : std::uint64_t {
  joint_entropy = 1,
  fisher = 2,
  symmetry = 3,
  independence = 4,
  cross_term = 5,
  residual = 6,
};

inline std::uint64_t stream_seed(const Budget& b, Stream s) {
  return split_seed(b.seed, static_cast<std::uint64_t>(s));
}

inline constexpr std::size_t kSymmetryProbes = 64;
inline constexpr double kSymmetryTolerance = 1e-9;
// Added to tol·σ so that closed-form gaps that are zero up to rounding count
// as equality.
inline constexpr double kGapRoundingFloor = 1e-12;

inline Verdict classify(double gap, double sigma, double tol_sigma) {
  if (std::isinf(gap) && gap > 0) return Verdict::holds;
  if (!std::isfinite(gap) || !std::isfinite(sigma)) return Verdict::inconclusive;
  const double band = tol_sigma * sigma + kGapRoundingFloor;
  if (gap > band) return Verdict::holds;
  if (gap >= -band) return Verdict::holds_with_equality;
  return Verdict::violated;
}

// FNV-1a over the dimension and the bit patterns of every weight, mean and
// covariance entry, printed as 16 hex digits.
inline std::string law_fingerprint(const GaussianMixture& mix) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  feed(mix.dim());
  for (const auto& c : mix.components()) {
    feed(std::bit_cast<std::uint64_t>(c.weight));
    for (Eigen::Index i = 0; i < c.mean.size(); ++i) feed(std::bit_cast<std::uint64_t>(c.mean(i)));
    for (Eigen::Index i = 0; i < c.cov.size(); ++i) {
      feed(std::bit_cast<std::uint64_t>(c.cov.data()[i]));
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline void validate_budget(const Budget& b) {
  if (b.samples < kMinMonteCarloCount) {
    throw Error(ErrorCode::InvalidArgument,
                "samples must be >= 100, got " + std::to_string(b.samples));
  }
  if (!(b.tol_sigma > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tol_sigma must be > 0");
  }
}

inline void require_symmetric(const GaussianMixture& mix, const Budget& b) {
  const SymmetryReport s =
      check_symmetry(mix, kSymmetryProbes, stream_seed(b, Stream::symmetry), kSymmetryTolerance);
  if (!s.verdict) {
    throw Error(ErrorCode::NotSymmetric,
                "law is not symmetric under coordinate sign flips (max log-density change " +
                    std::to_string(s.max_violation) +
                    "); use the counterexample path for asymmetric laws");
  }
}

inline InequalityReport make_report(Statement st, const GaussianMixture& mix, const Budget& b,
                                    Quantity lhs, Quantity rhs, double gap, double sigma) {
  InequalityReport r;
  r.statement = st;
  r.lhs = std::move(lhs);
  r.rhs = std::move(rhs);
  r.gap = gap;
  r.sigma = sigma;
  r.verdict = classify(gap, sigma, b.tol_sigma);
  r.law_fingerprint = law_fingerprint(mix);
  r.budget = b;
  return r;
}

inline EntropyEstimate joint_entropy(const GaussianMixture& mix, const Budget& b) {
  return entropy_mc(mix, b.samples, stream_seed(b, Stream::joint_entropy));
}

// h((X_1+...+X_n)/√n) >= h(X)/n.
inline InequalityReport verify_main(const GaussianMixture& mix, const Budget& b = {}) {
  validate_budget(b);
  require_symmetric(mix, b);
  const auto n = static_cast<Eigen::Index>(mix.dim());
  const double nn = static_cast<double>(n);
  const EntropyEstimate lhs = projection_entropy(mix, Vector::Constant(n, 1.0 / std::sqrt(nn)));
  const EntropyEstimate hx = joint_entropy(mix, b);
  Quantity rhs{hx.value / nn, hx.std_error / nn, "mc_logdensity/n", hx.count};
  const double sigma = std::hypot(lhs.std_error, rhs.std_error);
  return make_report(Statement::thm_main, mix, b, to_quantity(lhs), rhs, lhs.value - rhs.value,
                     sigma);
}

// h(a·X) >= h(X)/n + log(n^{n/2} Π|a_i|). The absolute values are used
// because a·X and (±a_1, ..., ±a_n)·X have the same law for symmetric X.
inline InequalityReport verify_directional(const GaussianMixture& mix, const Vector& a,
                                           const Budget& b = {}) {
  validate_budget(b);
  if (a.size() != static_cast<Eigen::Index>(mix.dim())) {
    throw Error(ErrorCode::DimensionMismatch, "direction has length " + std::to_string(a.size()) +
                                                  ", law has n=" + std::to_string(mix.dim()));
  }
  require_unit_vector(a);
  require_symmetric(mix, b);
  const double nn = static_cast<double>(mix.dim());
  const EntropyEstimate lhs = projection_entropy(mix, a);
  const EntropyEstimate hx = joint_entropy(mix, b);

  bool trivial = false;
  double log_term = 0.5 * nn * std::log(nn);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) == 0.0) trivial = true;
    else log_term += std::log(std::abs(a(i)));
  }
  InequalityReport r;
  if (trivial) {
    Quantity rhs{-std::numeric_limits<double>::infinity(), 0.0, "closed_form", 0};
    r = make_report(Statement::corollary, mix, b, to_quantity(lhs), rhs,
                    std::numeric_limits<double>::infinity(), lhs.std_error);
    r.trivial = true;
    r.notes.push_back("direction has a zero coordinate; the bound is -inf and holds trivially");
  } else {
    Quantity rhs{hx.value / nn + log_term, hx.std_error / nn, "mc_logdensity/n+log_term", hx.count};
    const double sigma = std::hypot(lhs.std_error, rhs.std_error);
    // (lhs - hx/n) - log_term keeps the a = 1/√n case bit-identical to verify_main
    const double gap = (lhs.value - hx.value / nn) - log_term;
    r = make_report(Statement::corollary, mix, b, to_quantity(lhs), rhs, gap, sigma);
  }
  r.notes.push_back("bound uses prod |a_i|; valid by sign-flip invariance of symmetric laws");
  return r;
}

// h(AX) >= (k/n) h(X) for balanced A. For k = 1 the left side is computed by
// quadrature and the report coincides with verify_main. For k >= 2 both sides
// are averaged over the same draws X_j, and the gap is the mean of
//   -log f_{AX}(A X_j) + (k/n) log f_X(X_j),
// whose spread gives σ directly; the draws are the joint-entropy stream, so
// the right side equals (k/n)·entropy_mc(mix) exactly.
inline InequalityReport verify_kdim(const GaussianMixture& mix, const Matrix& A,
                                    const Budget& b = {}) {
  validate_budget(b);
  if (A.cols() != static_cast<Eigen::Index>(mix.dim())) {
    throw Error(ErrorCode::DimensionMismatch, "projection has " + std::to_string(A.cols()) +
                                                  " columns, law has n=" + std::to_string(mix.dim()));
  }
  const BalanceReport bal = check_balanced(A);
  if (!bal.balanced) {
    throw Error(ErrorCode::NotBalanced,
                "projection is not balanced: row error " + std::to_string(bal.row_error) +
                    ", column error " + std::to_string(bal.column_error) + " (need <= 1e-12)");
  }
  require_symmetric(mix, b);
  const auto k = A.rows();
  const double ratio = static_cast<double>(k) / static_cast<double>(mix.dim());

  if (k == 1) {
    const Vector a = A.row(0).transpose();
    const EntropyEstimate lhs = projection_entropy(mix, a);
    const EntropyEstimate hx = joint_entropy(mix, b);
    Quantity rhs{hx.value * ratio, hx.std_error * ratio, "mc_logdensity*k/n", hx.count};
    return make_report(Statement::thm_kdim, mix, b, to_quantity(lhs), rhs, lhs.value - rhs.value,
                       std::hypot(lhs.std_error, rhs.std_error));
  }

  const GaussianMixture projected = push_forward_linear(mix, A);
  const std::size_t n = mix.dim();
  struct Acc {
    RunningStats lhs, joint, diff;
  };
  const auto chunks = run_chunks(b.samples, stream_seed(b, Stream::joint_entropy),
                                 [&](const ChunkRange& r, Rng& rng) {
    Acc acc;
    std::vector<double> x(n), y(static_cast<std::size_t>(k));
    for (std::size_t j = r.begin; j < r.end; ++j) {
      mix.draw(rng, x);
      const double lfx = mix.log_density(x);
      const Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(n));
      Eigen::Map<Vector>(y.data(), k) = A * xv;
      const double lfy = projected.log_density(y);
      if (!std::isfinite(lfx) || !std::isfinite(lfy)) {
        throw Error(ErrorCode::NonFiniteLogDensity,
                    "log density is not finite at sample " + std::to_string(j));
      }
      acc.lhs.push(-lfy);
      acc.joint.push(-lfx);
      acc.diff.push(-lfy + ratio * lfx);
    }
    return acc;
  });
  Acc total;
  for (const auto& c : chunks) {
    total.lhs.merge(c.lhs);
    total.joint.merge(c.joint);
    total.diff.merge(c.diff);
  }
  Quantity lhs{total.lhs.mean(), total.lhs.stderr_of_mean(), "mc_logdensity", b.samples};
  Quantity rhs{total.joint.mean() * ratio, total.joint.stderr_of_mean() * ratio,
               "mc_logdensity*k/n", b.samples};
  InequalityReport r = make_report(Statement::thm_kdim, mix, b, lhs, rhs, total.diff.mean(),
                                   total.diff.stderr_of_mean());
  r.notes.push_back("gap and sigma from paired per-sample differences");
  return r;
}

// I(Y) <= I(X)/n for Y = (X_1+...+X_n)/√n. The gap is I(X)/n - I(Y), so the
// same verdict rule applies. Both sides come from the same draws: for each X_j
// the paired difference ‖ρ_X(X_j)‖²/n - ρ_Y(Y_j)² with Y_j = a·X_j.
inline InequalityReport verify_fisher_lemma(const GaussianMixture& mix, const Budget& b = {}) {
  validate_budget(b);
  require_symmetric(mix, b);
  const std::size_t n = mix.dim();
  const double nn = static_cast<double>(n);
  const double scale = 1.0 / std::sqrt(nn);
  const GaussianMixture projected =
      push_forward_linear(mix, Matrix::Constant(1, static_cast<Eigen::Index>(n), scale));
  struct Acc {
    RunningStats iy, ix, diff;
  };
  const auto chunks = run_chunks(b.samples, stream_seed(b, Stream::fisher),
                                 [&](const ChunkRange& r, Rng& rng) {
    Acc acc;
    std::vector<double> x(n), g(n);
    double y = 0.0, gy = 0.0;
    for (std::size_t j = r.begin; j < r.end; ++j) {
      mix.draw(rng, x);
      mix.score(x, g);
      y = 0.0;
      double sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        y += scale * x[i];
        sq += g[i] * g[i];
      }
      projected.score(std::span<const double>(&y, 1), std::span<double>(&gy, 1));
      if (!std::isfinite(sq) || !std::isfinite(gy)) {
        throw Error(ErrorCode::NonFiniteScore, "score is not finite at sample " + std::to_string(j));
      }
      acc.iy.push(gy * gy);
      acc.ix.push(sq / nn);
      acc.diff.push(sq / nn - gy * gy);
    }
    return acc;
  });
  Acc total;
  for (const auto& c : chunks) {
    total.iy.merge(c.iy);
    total.ix.merge(c.ix);
    total.diff.merge(c.diff);
  }
  Quantity lhs{total.iy.mean(), total.iy.stderr_of_mean(), "fisher_mc", b.samples};
  Quantity rhs{total.ix.mean(), total.ix.stderr_of_mean(), "fisher_mc/n", b.samples};
  InequalityReport r = make_report(Statement::fisher_lemma, mix, b, lhs, rhs, total.diff.mean(),
                                   total.diff.stderr_of_mean());
  r.notes.push_back("gap is I(X)/n - I(Y); sigma from paired per-sample differences");
  return r;
}

inline constexpr std::size_t kIndependenceProbes = 64;

struct EqualityDemoReport {
  InequalityReport main;
  IndependenceReport z_independence;  // mixed partials of log f_Z, Z = rotation⁻¹ X
  bool z_symmetric = false;
  bool passed = false;  // |gap| <= tol·σ and the Z checks pass
};

// X = R Z with Z_1, Z_2 i.i.d. from a symmetric 1-D base and R the 45°
// rotation: equality holds with any such base, Gaussian or not.
inline EqualityDemoReport equality_demo_n2(const GaussianMixture& base, const Budget& b = {}) {
  validate_budget(b);
  const GaussianMixture x = rotated_iid_construction(base);
  EqualityDemoReport rep;
  rep.main = verify_main(x, b);
  const GaussianMixture z = push_forward_linear(x, rotation_45().transpose());
  rep.z_independence =
      mixed_partial_independence(z, 0, kIndependenceProbes, stream_seed(b, Stream::independence));
  rep.z_symmetric =
      check_symmetry(z, kSymmetryProbes, stream_seed(b, Stream::symmetry), kSymmetryTolerance)
          .verdict;
  rep.passed = rep.main.verdict == Verdict::holds_with_equality && rep.z_independence.verdict &&
               rep.z_symmetric;
  return rep;
}

struct CrossTermCheck {
  std::size_t j = 0;
  MeanEstimate estimate;
  double z = 0.0;
  bool zero = true;  // |estimate| <= tol·σ
};

struct BasisCheck {
  std::size_t basis = 0;
  IndependenceReport mixed_partial;  // first coordinate against the rest
  std::vector<CrossTermCheck> cross_terms;
  bool passed = true;
};

struct ProbeReport {
  InequalityReport main;
  std::vector<BasisCheck> bases;
  std::size_t independence_failures = 0;
  bool all_checks_pass = false;
};

// For each basis A_i of the proof family, Z = A_iᵀ X must have Z_1
// independent of (Z_2, ..., Z_n) if equality holds. The probe reports the
// main gap and how those relations fail. This is evidence, not proof: the
// characterization cannot be settled numerically.
inline ProbeReport gaussianity_probe(const GaussianMixture& mix, const Budget& b = {}) {
  validate_budget(b);
  const std::size_t n = mix.dim();
  if (n < 3) {
    throw Error(ErrorCode::DimensionTooSmall,
                "gaussianity_probe needs n >= 3, got n=" + std::to_string(n));
  }
  ProbeReport rep;
  rep.main = verify_main(mix, b);
  const ProofBasisFamily family = proof_basis_family(n);
  for (std::size_t i = 0; i < n; ++i) {
    BasisCheck check;
    check.basis = i;
    const GaussianMixture z = push_forward_linear(mix, family.bases[i].columns.transpose());
    check.mixed_partial = mixed_partial_independence(
        z, 0, kIndependenceProbes, split_seed(stream_seed(b, Stream::independence), i));
    check.passed = check.mixed_partial.verdict;
    for (std::size_t j = 1; j < n; ++j) {
      CrossTermCheck ct;
      ct.j = j;
      ct.estimate = cross_term_mc(z, 0, j, b.samples,
                                  split_seed(stream_seed(b, Stream::cross_term), i * n + j));
      ct.z = ct.estimate.std_error > 0.0 ? ct.estimate.value / ct.estimate.std_error : 0.0;
      ct.zero = std::abs(ct.estimate.value) <= b.tol_sigma * ct.estimate.std_error + kGapRoundingFloor;
      check.cross_terms.push_back(ct);
    }
    if (!check.passed) ++rep.independence_failures;
    rep.bases.push_back(std::move(check));
  }
  rep.all_checks_pass = rep.independence_failures == 0;
  return rep;
}

struct ScanRow {
  Vector a;
  double entropy = 0.0;
  double stderr_margin = 0.0;  // combined σ of the margin
  double bound = 0.0;
  double margin = 0.0;
  bool trivial = false;
};

struct ScanTable {
  std::vector<ScanRow> rows;
  std::size_t argmax = 0;
  EntropyEstimate joint;
  std::string law_fingerprint;
  Budget budget;
};

// Directions in the closed positive orthant (sign flips give the rest).
// n = 2: θ_i = i·(π/2)/res for i = 0..res-1. n = 3: an octant Fibonacci
// spiral with z_i = (i + ½)/res and φ_i = frac(i·golden)·π/2.
inline std::vector<Vector> scan_directions(std::size_t n, std::size_t resolution) {
  std::vector<Vector> dirs;
  if (n == 2) {
    for (std::size_t i = 0; i < resolution; ++i) {
      const double th = static_cast<double>(i) * (std::numbers::pi / 2.0) /
                        static_cast<double>(resolution);
      Vector a(2);
      a << std::cos(th), std::sin(th);
      dirs.push_back(a);
    }
  } else {
    for (std::size_t i = 0; i < resolution; ++i) {
      const double z = (static_cast<double>(i) + 0.5) / static_cast<double>(resolution);
      const double frac = std::fmod(static_cast<double>(i) * std::numbers::phi, 1.0);
      const double phi = frac * std::numbers::pi / 2.0;
      const double r = std::sqrt(1.0 - z * z);
      Vector a(3);
      a << r * std::cos(phi), r * std::sin(phi), z;
      dirs.push_back(a.normalized());
    }
  }
  return dirs;
}

inline ScanTable direction_scan(const GaussianMixture& mix, std::size_t resolution,
                                const Budget& b = {}) {
  validate_budget(b);
  const std::size_t n = mix.dim();
  if (n != 2 && n != 3) {
    throw Error(ErrorCode::UnsupportedDimension,
                "direction_scan supports n in {2, 3}, got n=" + std::to_string(n));
  }
  if (resolution < 1) {
    throw Error(ErrorCode::InvalidArgument, "resolution must be >= 1");
  }
  require_symmetric(mix, b);
  ScanTable table;
  table.joint = joint_entropy(mix, b);
  table.law_fingerprint = law_fingerprint(mix);
  table.budget = b;
  const double nn = static_cast<double>(n);
  for (const Vector& a : scan_directions(n, resolution)) {
    ScanRow row;
    row.a = a;
    const EntropyEstimate e = projection_entropy(mix, a);
    row.entropy = e.value;
    double log_term = 0.5 * nn * std::log(nn);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a(i) == 0.0) row.trivial = true;
      else log_term += std::log(std::abs(a(i)));
    }
    if (row.trivial) {
      row.bound = -std::numeric_limits<double>::infinity();
      row.margin = std::numeric_limits<double>::infinity();
      row.stderr_margin = e.std_error;
    } else {
      row.bound = table.joint.value / nn + log_term;
      row.margin = row.entropy - row.bound;
      row.stderr_margin = std::hypot(e.std_error, table.joint.std_error / nn);
    }
    table.rows.push_back(std::move(row));
  }
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    if (table.rows[i].entropy > table.rows[table.argmax].entropy) table.argmax = i;
  }
  return table;
}

inline constexpr double kCounterexampleRho = -0.9;

struct CounterexampleReport {
  InequalityReport report;
  double rho = kCounterexampleRho;
  bool expected = false;  // verdict is violated exactly when ρ < 0
};

// N(0, [[1, ρ], [ρ, 1]]) evaluated in closed form:
//   h((X_1+X_2)/√2) = ½ ln(2πe(1+ρ)),   h(X)/2 = ¼ ln((2πe)²(1-ρ²)).
// With ρ < 0 the law is not symmetric and the inequality fails.
inline CounterexampleReport asymmetric_counterexample(double rho = kCounterexampleRho,
                                                      const Budget& b = {}) {
  if (!(std::abs(rho) < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "rho must lie in (-1, 1), got " + std::to_string(rho));
  }
  Matrix cov(2, 2);
  cov << 1.0, rho, rho, 1.0;
  const GaussianMixture law = make_gaussian(Vector::Zero(2), cov);
  const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
  const double lhs = 0.5 * std::log(two_pi_e * (1.0 + rho));
  const double rhs = 0.25 * std::log(two_pi_e * two_pi_e * (1.0 - rho * rho));
  CounterexampleReport out;
  out.rho = rho;
  out.report = make_report(Statement::thm_main, law, b, {lhs, 0.0, "closed_form", 0},
                           {rhs, 0.0, "closed_form", 0}, lhs - rhs, 0.0);
  out.report.symmetric_law =
      check_symmetry(law, kSymmetryProbes, stream_seed(b, Stream::symmetry), kSymmetryTolerance)
          .verdict;
  // the closed-form gap is ¼ ln((1+ρ)/(1-ρ)), negative exactly when ρ < 0
  out.expected = (rho < 0.0) == (out.report.verdict == Verdict::violated);
  return out;
}

}  // namespace symentropy
