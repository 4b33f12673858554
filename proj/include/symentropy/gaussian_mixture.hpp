#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "symentropy/density_model.hpp"
#include "symentropy/error.hpp"

namespace symentropy {

struct MixtureComponent {
  double weight = 1.0;
  Vector mean;
  Matrix cov;
};

// f(x) = Σ w_m N(x; μ_m, Σ_m).
//
// Construction normalizes the weights, symmetrizes every covariance and rejects
// it unless its smallest eigenvalue exceeds 1e-12. Log-density uses a
// max-shifted log-sum-exp; the score is the responsibility-weighted sum of the
// component scores -Σ_m⁻¹(x - μ_m), accumulated in the same single pass.
class GaussianMixture {
 public:
  static constexpr double kMinEigenvalue = 1e-12;

  explicit GaussianMixture(std::vector<MixtureComponent> components) {
    if (components.empty()) {
      throw Error(ErrorCode::EmptyMixture, "mixture needs at least one component");
    }
    const auto n = components.front().mean.size();
    if (n < 1) {
      throw Error(ErrorCode::DimensionMismatch, "component 0 has an empty mean");
    }
    double total = 0.0;
    for (std::size_t m = 0; m < components.size(); ++m) {
      const auto& c = components[m];
      if (c.mean.size() != n || c.cov.rows() != n || c.cov.cols() != n) {
        throw Error(ErrorCode::DimensionMismatch,
                    "component " + std::to_string(m) + " has mean size " +
                        std::to_string(c.mean.size()) + " and cov " +
                        std::to_string(c.cov.rows()) + "x" +
                        std::to_string(c.cov.cols()) + "; expected n=" +
                        std::to_string(n));
      }
      if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
        throw Error(ErrorCode::InvalidArgument,
                    "component " + std::to_string(m) +
                        " weight must be positive and finite");
      }
      total += c.weight;
    }
    dim_ = static_cast<std::size_t>(n);
    components_ = std::move(components);
    cache_.reserve(components_.size());
    // Weights already summing to 1 up to rounding are kept as given, so that
    // writing a mixture out and reading it back is bit-exact.
    const bool normalized = std::abs(total - 1.0) <= 8.0 * std::numeric_limits<double>::epsilon();
    for (std::size_t m = 0; m < components_.size(); ++m) {
      auto& c = components_[m];
      if (!normalized) c.weight /= total;
      c.cov = (0.5 * (c.cov + c.cov.transpose())).eval();
      Eigen::SelfAdjointEigenSolver<Matrix> eig(c.cov, Eigen::EigenvaluesOnly);
      const double lo = eig.eigenvalues().minCoeff();
      if (!(lo > kMinEigenvalue) || !c.mean.allFinite()) {
        throw Error(ErrorCode::NotPositiveDefinite,
                    "component " + std::to_string(m) +
                        " covariance smallest eigenvalue " + std::to_string(lo) +
                        " is not above 1e-12");
      }
      cache_.push_back(make_cache(c));
    }
    cumulative_.resize(components_.size());
    double acc = 0.0;
    for (std::size_t m = 0; m < components_.size(); ++m) {
      acc += components_[m].weight;
      cumulative_[m] = acc;
    }
    cumulative_.back() = 1.0;
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return components_.size(); }
  const std::vector<MixtureComponent>& components() const { return components_; }

  double log_density(std::span<const double> x) const {
    double max_term = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const auto& c : cache_) {
      const double term = c.log_coef - 0.5 * mahalanobis(c, x);
      if (term > max_term) {
        sum = sum * std::exp(max_term - term) + 1.0;
        max_term = term;
      } else {
        sum += std::exp(term - max_term);
      }
    }
    return max_term + std::log(sum);
  }

  double score(std::span<const double> x, std::span<double> grad) const {
    const std::size_t n = dim_;
    thread_local std::vector<double> diff, pdiff;
    diff.resize(n);
    pdiff.resize(n);
    std::fill(grad.begin(), grad.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
    double max_term = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const auto& c : cache_) {
      for (std::size_t i = 0; i < n; ++i) diff[i] = x[i] - c.mean[i];
      double q = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* row = c.precision.data() + i * n;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += row[j] * diff[j];
        pdiff[i] = s;
        q += s * diff[i];
      }
      const double term = c.log_coef - 0.5 * q;
      double scale;
      if (term > max_term) {
        const double shrink = std::exp(max_term - term);
        sum *= shrink;
        for (std::size_t i = 0; i < n; ++i) grad[i] *= shrink;
        max_term = term;
        scale = 1.0;
      } else {
        scale = std::exp(term - max_term);
      }
      sum += scale;
      for (std::size_t i = 0; i < n; ++i) grad[i] -= scale * pdiff[i];
    }
    for (std::size_t i = 0; i < n; ++i) grad[i] /= sum;
    return max_term + std::log(sum);
  }

  void draw(Rng& rng, std::span<double> out) const {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u = uniform(rng);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const std::size_t m = std::min<std::size_t>(
        static_cast<std::size_t>(it - cumulative_.begin()), cache_.size() - 1);
    draw_component(m, rng, out);
  }

  // Index of the component a draw() would use for uniform variate u.
  std::size_t component_for(double u) const {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                 cache_.size() - 1);
  }

  void draw_component(std::size_t m, Rng& rng, std::span<double> out) const {
    const std::size_t n = dim_;
    const auto& c = cache_[m];
    thread_local std::vector<double> xi;
    xi.resize(n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) xi[i] = normal(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = c.chol.data() + i * n;
      double s = c.mean[i];
      for (std::size_t j = 0; j <= i; ++j) s += row[j] * xi[j];
      out[i] = s;
    }
  }

  double log_density(const Vector& x) const { return log_density_at(*this, x); }
  Vector score(const Vector& x) const { return score_at(*this, x); }

 private:
  struct Cache {
    double log_coef;                 // log w - ½(n log 2π + log det Σ)
    std::vector<double> mean;
    std::vector<double> precision;  // row-major Σ⁻¹
    std::vector<double> chol;       // row-major lower Cholesky factor
  };

  Cache make_cache(const MixtureComponent& c) const {
    const std::size_t n = dim_;
    Eigen::LLT<Matrix> llt(c.cov);
    const Matrix L = llt.matrixL();
    const Matrix P = llt.solve(Matrix::Identity(c.cov.rows(), c.cov.cols()));
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < L.rows(); ++i) log_det += 2.0 * std::log(L(i, i));
    Cache out;
    out.log_coef = std::log(c.weight) -
                   0.5 * (static_cast<double>(n) * kLog2Pi + log_det);
    out.mean.assign(c.mean.data(), c.mean.data() + n);
    out.precision.resize(n * n);
    out.chol.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        out.precision[i * n + j] = 0.5 * (P(ii, jj) + P(jj, ii));
        out.chol[i * n + j] = L(ii, jj);
      }
    }
    return out;
  }

  double mahalanobis(const Cache& c, std::span<const double> x) const {
    const std::size_t n = dim_;
    if (n == 1) {
      const double d = x[0] - c.mean[0];
      return c.precision[0] * d * d;
    }
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double di = x[i] - c.mean[i];
      const double* row = c.precision.data() + i * n;
      double s = row[i] * di;
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * row[j] * (x[j] - c.mean[j]);
      q += di * s;
    }
    return q;
  }

  std::size_t dim_ = 0;
  std::vector<MixtureComponent> components_;
  std::vector<Cache> cache_;
  std::vector<double> cumulative_;
};

static_assert(DensityModel<GaussianMixture>);

inline GaussianMixture make_gaussian_mixture(std::vector<MixtureComponent> components) {
  return GaussianMixture(std::move(components));
}

inline GaussianMixture make_gaussian(const Vector& mean, const Matrix& cov) {
  return GaussianMixture({{1.0, mean, cov}});
}

// ½ log((2πe)^n det Σ)
inline double gaussian_entropy(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(0.5 * (cov + cov.transpose()));
  const Matrix L = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) log_det += 2.0 * std::log(L(i, i));
  return static_cast<double>(cov.rows()) * kHalfLog2PiE + 0.5 * log_det;
}

// Y = A X. Requires full row rank (smallest singular value >= 1e-10).
inline GaussianMixture push_forward_linear(const GaussianMixture& mix, const Matrix& A) {
  if (A.cols() != static_cast<Eigen::Index>(mix.dim())) {
    throw Error(ErrorCode::DimensionMismatch,
                "matrix has " + std::to_string(A.cols()) + " columns, mixture dim is " +
                    std::to_string(mix.dim()));
  }
  if (A.rows() < 1 || A.rows() > A.cols()) {
    throw Error(ErrorCode::RankDeficient,
                "a " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) +
                    " matrix cannot have full row rank k <= n");
  }
  Eigen::JacobiSVD<Matrix> svd(A);
  const double smallest = svd.singularValues().minCoeff();
  if (!(smallest >= 1e-10)) {
    throw Error(ErrorCode::RankDeficient,
                "smallest singular value " + std::to_string(smallest) + " < 1e-10");
  }
  std::vector<MixtureComponent> out;
  out.reserve(mix.size());
  for (const auto& c : mix.components()) {
    out.push_back({c.weight, A * c.mean, A * c.cov * A.transpose()});
  }
  return GaussianMixture(std::move(out));
}

// X_t = X + √t Z: every covariance gains t·I.
inline GaussianMixture convolve_isotropic(const GaussianMixture& mix, double t) {
  if (!(t >= 0.0)) {
    throw Error(ErrorCode::NegativeTime, "t must be >= 0, got " + std::to_string(t));
  }
  if (t == 0.0) return mix;
  std::vector<MixtureComponent> out = mix.components();
  for (auto& c : out) c.cov.diagonal().array() += t;
  return GaussianMixture(std::move(out));
}

// Independent concatenation: law of (X, Y) with X ~ a, Y ~ b.
inline GaussianMixture product_mixture(const GaussianMixture& a, const GaussianMixture& b) {
  const auto na = static_cast<Eigen::Index>(a.dim());
  const auto nb = static_cast<Eigen::Index>(b.dim());
  std::vector<MixtureComponent> out;
  out.reserve(a.size() * b.size());
  for (const auto& ca : a.components()) {
    for (const auto& cb : b.components()) {
      Vector mean(na + nb);
      mean << ca.mean, cb.mean;
      Matrix cov = Matrix::Zero(na + nb, na + nb);
      cov.topLeftCorner(na, na) = ca.cov;
      cov.bottomRightCorner(nb, nb) = cb.cov;
      out.push_back({ca.weight * cb.weight, std::move(mean), std::move(cov)});
    }
  }
  return GaussianMixture(std::move(out));
}

inline GaussianMixture product_power(const GaussianMixture& base, std::size_t n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "power must be >= 1");
  GaussianMixture out = base;
  for (std::size_t i = 1; i < n; ++i) out = product_mixture(out, base);
  return out;
}

namespace detail {

inline bool components_match(const MixtureComponent& a, const MixtureComponent& b,
                             double tol) {
  return ((a.mean - b.mean).cwiseAbs().maxCoeff() <= tol) &&
         ((a.cov - b.cov).cwiseAbs().maxCoeff() <= tol);
}

// Sums the weights of components whose (mean, cov) agree entrywise within tol.
// Candidates are sorted on the first mean coordinate so only a narrow window is
// compared; the first member of each group is kept as the representative.
inline std::vector<MixtureComponent> merge_duplicates(std::vector<MixtureComponent> in,
                                                      double tol) {
  std::vector<std::size_t> order(in.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return in[a].mean(0) < in[b].mean(0);
  });
  std::vector<long> group(in.size(), -1);
  std::vector<MixtureComponent> out;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (group[i] >= 0) continue;
    group[i] = static_cast<long>(out.size());
    MixtureComponent rep = in[i];
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (in[j].mean(0) - in[i].mean(0) > tol) break;
      if (group[j] >= 0) continue;
      if (components_match(in[i], in[j], tol)) {
        group[j] = group[i];
        rep.weight += in[j].weight;
      }
    }
    out.push_back(std::move(rep));
  }
  // Restore first-appearance order so output does not depend on the sort.
  std::vector<std::pair<std::size_t, std::size_t>> first;  // (original index, out slot)
  std::vector<bool> seen(out.size(), false);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto g = static_cast<std::size_t>(group[i]);
    if (!seen[g]) {
      seen[g] = true;
      first.emplace_back(i, g);
    }
  }
  std::vector<MixtureComponent> ordered;
  ordered.reserve(out.size());
  for (const auto& [idx, slot] : first) ordered.push_back(std::move(out[slot]));
  return ordered;
}

}  // namespace detail

inline constexpr std::size_t kMaxSymmetrizeDim = 12;

// Average of the law over all 2^n coordinate sign reflections, with coincident
// reflected components merged (entrywise tolerance 1e-12).
inline GaussianMixture symmetrize(const GaussianMixture& mix) {
  const std::size_t n = mix.dim();
  if (n > kMaxSymmetrizeDim) {
    throw Error(ErrorCode::DimensionTooLarge,
                "symmetrize multiplies components by up to 2^n; n=" + std::to_string(n) +
                    " exceeds 12");
  }
  const std::uint64_t patterns = std::uint64_t{1} << n;
  const double share = 1.0 / static_cast<double>(patterns);
  std::vector<MixtureComponent> reflected;
  reflected.reserve(mix.size() * patterns);
  for (const auto& c : mix.components()) {
    for (std::uint64_t s = 0; s < patterns; ++s) {
      Vector sign(static_cast<Eigen::Index>(n));
      for (std::size_t j = 0; j < n; ++j) {
        sign(static_cast<Eigen::Index>(j)) = ((s >> j) & 1U) ? -1.0 : 1.0;
      }
      Vector mean = sign.cwiseProduct(c.mean);
      Matrix cov = sign.asDiagonal() * c.cov * sign.asDiagonal();
      reflected.push_back({c.weight * share, std::move(mean), std::move(cov)});
    }
  }
  return GaussianMixture(detail::merge_duplicates(std::move(reflected), 1e-12));
}

// (1/√2)[[1,-1],[1,1]]
inline Matrix rotation_45() {
  Matrix A(2, 2);
  A << 1.0, -1.0, 1.0, 1.0;
  return A * kInvSqrt2;
}

// X = A Z with Z1, Z2 i.i.d. from the base law and A the 45° rotation.
// Realized exactly as the product mixture pushed through A.
inline GaussianMixture rotated_iid_construction(const GaussianMixture& base,
                                                double symmetry_tol = 1e-9) {
  if (base.dim() != 1) {
    throw Error(ErrorCode::NotUnivariate,
                "base must be 1-D, got n=" + std::to_string(base.dim()));
  }
  const auto report = check_symmetry(base, 64, 0x5eed, symmetry_tol);
  if (!report.verdict) {
    throw Error(ErrorCode::NotSymmetricBase,
                "base fails the symmetry check (max violation " +
                    std::to_string(report.max_violation) + ")");
  }
  return push_forward_linear(product_mixture(base, base), rotation_45());
}

// Moments of the whole mixture.
inline Vector mixture_mean(const GaussianMixture& mix) {
  Vector mu = Vector::Zero(static_cast<Eigen::Index>(mix.dim()));
  for (const auto& c : mix.components()) mu += c.weight * c.mean;
  return mu;
}

inline Matrix mixture_covariance(const GaussianMixture& mix) {
  const Vector mu = mixture_mean(mix);
  const auto n = static_cast<Eigen::Index>(mix.dim());
  Matrix cov = Matrix::Zero(n, n);
  for (const auto& c : mix.components()) {
    const Vector d = c.mean - mu;
    cov += c.weight * (c.cov + d * d.transpose());
  }
  return cov;
}

}  // namespace symentropy
