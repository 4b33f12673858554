#pragma once

// Small dense bases used by the equality analysis and the k-dimensional bound:
// Gram-Schmidt, completions of sign vertices (±1/√n, ..., ±1/√n), the basis
// family A_1..A_n built from permuted Gram-Schmidt runs, and balanced k×n
// projections (orthonormal rows, every column with squared norm k/n).

#include <bit>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symentropy/density_model.hpp"
#include "symentropy/error.hpp"

namespace symentropy {

inline constexpr double kBasisTolerance = 1e-12;
inline constexpr double kIndependenceFloor = 1e-10;

struct OrthonormalBasis {
  Matrix columns;  // n×n, column j is the j-th basis vector

  std::size_t dim() const { return static_cast<std::size_t>(columns.rows()); }
  Vector column(std::size_t j) const { return columns.col(static_cast<Eigen::Index>(j)); }

  // max |QᵀQ - I| entrywise
  double orthonormality_error() const {
    const auto n = columns.cols();
    return (columns.transpose() * columns - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  }
};

// Modified Gram-Schmidt with one reorthogonalization pass. The span of the
// first j outputs equals the span of the first j inputs for every j.
// A vector whose residual after projection falls below 1e-10 of its own norm
// is reported as LinearlyDependent with its index.
inline OrthonormalBasis gram_schmidt(const std::vector<Vector>& vectors) {
  if (vectors.empty()) {
    throw Error(ErrorCode::InvalidArgument, "gram_schmidt needs at least one vector");
  }
  const auto n = vectors.front().size();
  if (static_cast<Eigen::Index>(vectors.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "gram_schmidt expects n vectors in R^n; got " +
                    std::to_string(vectors.size()) + " vectors of length " +
                    std::to_string(n));
  }
  Matrix Q(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vector& v = vectors[static_cast<std::size_t>(j)];
    if (v.size() != n) {
      throw Error(ErrorCode::DimensionMismatch,
                  "vector " + std::to_string(j) + " has length " + std::to_string(v.size()));
    }
    const double original = v.norm();
    Vector r = v;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) r -= Q.col(i).dot(r) * Q.col(i);
    }
    const double residual = r.norm();
    if (!(original > 0.0) || residual <= kIndependenceFloor * original) {
      throw Error(ErrorCode::LinearlyDependent,
                  "vector " + std::to_string(j) + " lies in the span of the preceding ones");
    }
    Q.col(j) = r / residual;
  }
  return {Q};
}

// Orthonormal basis whose first column is s/√n. The completion is fixed: the
// Householder reflection taking e_1 to (1,...,1)/√n, then row i negated
// wherever s_i = -1.
inline OrthonormalBasis sign_vertex_basis(const std::vector<int>& signs) {
  const auto n = static_cast<Eigen::Index>(signs.size());
  if (n < 2) {
    throw Error(ErrorCode::DimensionTooSmall,
                "sign_vertex_basis needs n >= 2, got " + std::to_string(n));
  }
  for (std::size_t i = 0; i < signs.size(); ++i) {
    if (signs[i] != 1 && signs[i] != -1) {
      throw Error(ErrorCode::InvalidArgument,
                  "sign " + std::to_string(i) + " must be +1 or -1");
    }
  }
  const Vector ones_unit = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  Vector u = -ones_unit;
  u(0) += 1.0;
  Matrix H = Matrix::Identity(n, n) - 2.0 * u * u.transpose() / u.squaredNorm();
  // H e_1 is ones_unit up to rounding; pin it exactly.
  H.col(0) = ones_unit;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (signs[static_cast<std::size_t>(i)] < 0) H.row(i) *= -1.0;
  }
  return {H};
}

struct ProofBasisFamily {
  std::size_t n = 0;
  std::vector<Vector> v;                 // v^1..v^n, each in {±1/√n}^n
  std::vector<OrthonormalBasis> bases;   // A_i = GS(v^i, v^1, ..., v^{i-1}, v^{i+1}, ..., v^n)
  std::vector<Matrix> rotations;         // R_i = A_1ᵀ A_i
};

// v^i(j) = -1/√n if i == j else +1/√n, except that for n = 4 (where
// v^1·v^2 = (n-4)/n vanishes) v^1 is the all-ones vector/√n.
inline ProofBasisFamily proof_basis_family(std::size_t n) {
  if (n < 3) {
    throw Error(ErrorCode::DimensionTooSmall,
                "a non-orthogonal pair of sign vertices spanning R^n exists only for n > 2; got n=" +
                    std::to_string(n));
  }
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  const auto N = static_cast<Eigen::Index>(n);
  ProofBasisFamily family;
  family.n = n;
  for (Eigen::Index i = 0; i < N; ++i) {
    Vector vi = Vector::Constant(N, s);
    vi(i) = -s;
    family.v.push_back(vi);
  }
  if (n == 4) family.v[0] = Vector::Constant(N, s);

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Vector> order;
    order.reserve(n);
    order.push_back(family.v[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order.push_back(family.v[j]);
    }
    family.bases.push_back(gram_schmidt(order));
  }
  for (std::size_t i = 0; i < n; ++i) {
    family.rotations.push_back(family.bases[0].columns.transpose() * family.bases[i].columns);
  }
  return family;
}

enum class ProjectionMethod { hadamard, frequency_pairs };

inline std::string to_string(ProjectionMethod m) {
  return m == ProjectionMethod::hadamard ? "hadamard" : "frequency_pairs";
}

struct BalancedProjection {
  Matrix matrix;  // k×n

  std::size_t rows() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(matrix.cols()); }
};

// hadamard:        rows 0..k-1 of the Sylvester Hadamard matrix scaled by 1/√n;
//                  n must be a power of two. For k = 1 any n is accepted and the
//                  single row is (1,...,1)/√n.
// frequency_pairs: k even, 2 <= k < n; for f = 1..k/2 the pair
//                  √(2/n)cos(2πfj/n), √(2/n)sin(2πfj/n).
inline BalancedProjection balanced_projection(std::size_t k, std::size_t n,
                                              ProjectionMethod method) {
  const auto K = static_cast<Eigen::Index>(k);
  const auto N = static_cast<Eigen::Index>(n);
  if (method == ProjectionMethod::hadamard) {
    if (k == 1 && n >= 1) {
      return {Matrix::Constant(1, N, 1.0 / std::sqrt(static_cast<double>(n)))};
    }
    if (n < 1 || !std::has_single_bit(n) || k < 1 || k > n) {
      throw Error(ErrorCode::UnsupportedShape,
                  "hadamard needs n a power of two and 1 <= k <= n (or k = 1 with any n); got k=" +
                      std::to_string(k) + ", n=" + std::to_string(n));
    }
    Matrix A(K, N);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (Eigen::Index i = 0; i < K; ++i) {
      for (Eigen::Index j = 0; j < N; ++j) {
        const auto bits = static_cast<unsigned>(i & j);
        A(i, j) = (std::popcount(bits) % 2 == 0) ? scale : -scale;
      }
    }
    return {A};
  }
  if (k < 2 || k % 2 != 0 || k >= n) {
    throw Error(ErrorCode::UnsupportedShape,
                "frequency_pairs needs k even with 2 <= k < n; got k=" + std::to_string(k) +
                    ", n=" + std::to_string(n));
  }
  Matrix A(K, N);
  const double amp = std::sqrt(2.0 / static_cast<double>(n));
  for (Eigen::Index p = 0; p < K / 2; ++p) {
    const double f = static_cast<double>(p + 1);
    for (Eigen::Index j = 0; j < N; ++j) {
      const double angle = 2.0 * std::numbers::pi * f * static_cast<double>(j) /
                           static_cast<double>(n);
      A(2 * p, j) = amp * std::cos(angle);
      A(2 * p + 1, j) = amp * std::sin(angle);
    }
  }
  return {A};
}

struct BalanceReport {
  bool balanced = false;
  double row_error = 0.0;          // max |AAᵀ - I|
  double column_error = 0.0;       // max_j |Σ_i a_ij² - k/n|
  std::size_t worst_column = 0;
  std::size_t worst_row_i = 0;
  std::size_t worst_row_j = 0;
};

inline BalanceReport check_balanced(const Matrix& A, double tol = kBasisTolerance) {
  BalanceReport r;
  const auto k = A.rows();
  const auto n = A.cols();
  if (k < 1 || n < 1) return r;
  const Matrix gram = A * A.transpose() - Matrix::Identity(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (std::abs(gram(i, j)) > r.row_error) {
        r.row_error = std::abs(gram(i, j));
        r.worst_row_i = static_cast<std::size_t>(i);
        r.worst_row_j = static_cast<std::size_t>(j);
      }
    }
  }
  const double target = static_cast<double>(k) / static_cast<double>(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double dev = std::abs(A.col(j).squaredNorm() - target);
    if (dev > r.column_error) {
      r.column_error = dev;
      r.worst_column = static_cast<std::size_t>(j);
    }
  }
  r.balanced = r.row_error <= tol && r.column_error <= tol;
  return r;
}

}  // namespace symentropy
