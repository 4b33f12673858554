#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symentropy/error.hpp"
#include "symentropy/parallel.hpp"

namespace symentropy {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kLog2Pi = 1.8378770664093454836;
// ½ log(2πe): entropy of N(0, 1) in nats.
inline constexpr double kHalfLog2PiE = 1.4189385332046727418;
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

// A probability law on R^n with an analytic log-density, its gradient (the
// score), and a seeded sampler.
//
//   log_density(x)       -> log f(x) in nats
//   score(x, grad)       -> writes ∇log f(x) into grad, returns log f(x)
//   draw(rng, out)       -> writes one sample into out
template <class D>
concept DensityModel = requires(const D& d, std::span<const double> x,
                                std::span<double> out, Rng& rng) {
  { d.dim() } -> std::convertible_to<std::size_t>;
  { d.log_density(x) } -> std::convertible_to<double>;
  { d.score(x, out) } -> std::convertible_to<double>;
  d.draw(rng, out);
};

// Row-major block of samples.
struct Samples {
  std::size_t dim = 0;
  std::vector<double> data;

  std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }
  std::span<double> row(std::size_t i) { return {data.data() + i * dim, dim}; }
};

// Deterministic in (d, count, seed). Chunk c of kChunkSize points is drawn from
// stream split_seed(seed, c), so every estimator that consumes the same
// (count, seed) sees exactly these points.
template <DensityModel D>
Samples sample(const D& d, std::size_t count, std::uint64_t seed) {
  if (count < 1) {
    throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  }
  Samples out{d.dim(), std::vector<double>(count * d.dim())};
  run_chunks(count, seed, [&](const ChunkRange& r, Rng& rng) {
    for (std::size_t i = r.begin; i < r.end; ++i) d.draw(rng, out.row(i));
    return 0;
  });
  return out;
}

struct SymmetryReport {
  double max_violation = 0.0;
  std::size_t probe_count = 0;
  double tolerance = 0.0;
  bool verdict = true;
};

// Probe points come from the law's own sampler. For each point x, log f is
// evaluated at every sign pattern of |x| and compared with log f(|x|).
template <DensityModel D>
SymmetryReport check_symmetry(const D& d, std::size_t probes, std::uint64_t seed,
                              double tol) {
  if (probes < 1) {
    throw Error(ErrorCode::InvalidArgument, "probes must be >= 1");
  }
  const std::size_t n = d.dim();
  if (n > 16) {
    throw Error(ErrorCode::DimensionTooLarge,
                "check_symmetry enumerates 2^n sign patterns; n=" +
                    std::to_string(n) + " exceeds 16");
  }
  const Samples pts = sample(d, probes, seed);
  SymmetryReport report{0.0, probes, tol, true};
  std::vector<double> abs_x(n), flipped(n);
  const std::uint64_t patterns = std::uint64_t{1} << n;
  for (std::size_t p = 0; p < probes; ++p) {
    auto x = pts.row(p);
    for (std::size_t j = 0; j < n; ++j) abs_x[j] = std::abs(x[j]);
    const double reference = d.log_density(abs_x);
    for (std::uint64_t s = 1; s < patterns; ++s) {
      for (std::size_t j = 0; j < n; ++j) {
        flipped[j] = ((s >> j) & 1U) ? -abs_x[j] : abs_x[j];
      }
      const double value = d.log_density(flipped);
      double violation;
      if (std::isfinite(value) && std::isfinite(reference)) {
        violation = std::abs(value - reference);
      } else {
        violation = (value == reference) ? 0.0
                                         : std::numeric_limits<double>::infinity();
      }
      report.max_violation = std::max(report.max_violation, violation);
    }
  }
  report.verdict = report.max_violation <= tol;
  return report;
}

// X = A Z with A the 45° rotation (1/√2)[[1,-1],[1,1]] and Z1, Z2 i.i.d. from
// a 1-D base law. Works for any base model; mixtures also have a closed-form
// counterpart in gaussian_mixture.hpp.
template <DensityModel Base>
class RotatedIidModel {
 public:
  explicit RotatedIidModel(Base base) : base_(std::move(base)) {
    if (base_.dim() != 1) {
      throw Error(ErrorCode::NotUnivariate,
                  "rotated i.i.d. base must be 1-D, got n=" +
                      std::to_string(base_.dim()));
    }
  }

  std::size_t dim() const { return 2; }
  const Base& base() const { return base_; }

  double log_density(std::span<const double> x) const {
    const double z1 = (x[0] + x[1]) * kInvSqrt2;
    const double z2 = (x[1] - x[0]) * kInvSqrt2;
    return base_.log_density(std::span<const double>(&z1, 1)) +
           base_.log_density(std::span<const double>(&z2, 1));
  }

  double score(std::span<const double> x, std::span<double> grad) const {
    const double z1 = (x[0] + x[1]) * kInvSqrt2;
    const double z2 = (x[1] - x[0]) * kInvSqrt2;
    double g1 = 0.0, g2 = 0.0;
    const double l1 = base_.score(std::span<const double>(&z1, 1), std::span<double>(&g1, 1));
    const double l2 = base_.score(std::span<const double>(&z2, 1), std::span<double>(&g2, 1));
    // ∇_x = Aᵀ-chain: dz1/dx = (1,1)/√2, dz2/dx = (-1,1)/√2
    grad[0] = (g1 - g2) * kInvSqrt2;
    grad[1] = (g1 + g2) * kInvSqrt2;
    return l1 + l2;
  }

  void draw(Rng& rng, std::span<double> out) const {
    double z1 = 0.0, z2 = 0.0;
    base_.draw(rng, std::span<double>(&z1, 1));
    base_.draw(rng, std::span<double>(&z2, 1));
    out[0] = (z1 - z2) * kInvSqrt2;
    out[1] = (z1 + z2) * kInvSqrt2;
  }

 private:
  Base base_;
};

// Convenience wrappers for code that works with Eigen vectors.
template <DensityModel D>
double log_density_at(const D& d, const Vector& x) {
  return d.log_density(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

template <DensityModel D>
Vector score_at(const D& d, const Vector& x) {
  Vector g(x.size());
  d.score(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
          std::span<double>(g.data(), static_cast<std::size_t>(g.size())));
  return g;
}

}  // namespace symentropy
