#pragma once

// Named laws used by the CLI and the acceptance suite. Names are resolved
// with an optional "builtin:" prefix:
//
//   gaussian-iid-nK            N(0, I_K)
//   bimodal-product-nK         K i.i.d. coordinates, each ½N(-2,1) + ½N(2,1)
//   bimodal                    the 1-D base ½N(-2,1) + ½N(2,1)
//   trimodal                   0.3 N(-2,0.25) + 0.4 N(0,1) + 0.3 N(2,0.25)
//   rotated-bimodal            45° rotation of two i.i.d. bimodal coordinates
//   rotated-trimodal           same with the trimodal base
//   symmetric-dependent-nK     sign-flip symmetrization of an equicorrelated
//                              (ρ = 0.5) Gaussian; symmetric, not a product
//   correlated-gaussian-rhoR   N(0, [[1,R],[R,1]]), e.g. correlated-gaussian-rho-0.9

#include <cstdlib>
#include <string>
#include <vector>

#include "symentropy/error.hpp"
#include "symentropy/gaussian_mixture.hpp"

namespace symentropy {

inline GaussianMixture bimodal_base() {
  return make_gaussian_mixture({{0.5, Vector::Constant(1, -2.0), Matrix::Identity(1, 1)},
                                {0.5, Vector::Constant(1, 2.0), Matrix::Identity(1, 1)}});
}

inline GaussianMixture trimodal_base() {
  return make_gaussian_mixture({{0.3, Vector::Constant(1, -2.0), Matrix::Constant(1, 1, 0.25)},
                                {0.4, Vector::Constant(1, 0.0), Matrix::Identity(1, 1)},
                                {0.3, Vector::Constant(1, 2.0), Matrix::Constant(1, 1, 0.25)}});
}

inline GaussianMixture standard_gaussian(std::size_t n, double variance = 1.0) {
  const auto N = static_cast<Eigen::Index>(n);
  return make_gaussian(Vector::Zero(N), variance * Matrix::Identity(N, N));
}

inline GaussianMixture correlated_gaussian(double rho) {
  if (!(std::abs(rho) < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "rho must lie in (-1, 1), got " + std::to_string(rho));
  }
  Matrix cov(2, 2);
  cov << 1.0, rho, rho, 1.0;
  return make_gaussian(Vector::Zero(2), cov);
}

inline GaussianMixture symmetric_dependent(std::size_t n) {
  const auto N = static_cast<Eigen::Index>(n);
  Matrix cov = Matrix::Constant(N, N, 0.5);
  cov.diagonal().setOnes();
  return symmetrize(make_gaussian(Vector::Zero(N), cov));
}

namespace detail {

inline bool strip_prefix(std::string& s, const std::string& prefix) {
  if (s.rfind(prefix, 0) != 0) return false;
  s.erase(0, prefix.size());
  return true;
}

inline std::size_t parse_dimension(const std::string& text, const std::string& name) {
  char* end = nullptr;
  const unsigned long v = std::strtoul(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0' || v < 1 || v > kMaxSymmetrizeDim) {
    throw Error(ErrorCode::ParseError, "law: '" + name + "' needs a dimension n in [1, " +
                                           std::to_string(kMaxSymmetrizeDim) + "]");
  }
  return v;
}

}  // namespace detail

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {
      "gaussian-iid-nK",   "bimodal-product-nK", "bimodal",
      "trimodal",          "rotated-bimodal",    "rotated-trimodal",
      "symmetric-dependent-nK", "correlated-gaussian-rhoR"};
  return names;
}

inline GaussianMixture builtin_law(const std::string& full_name) {
  std::string name = full_name;
  detail::strip_prefix(name, "builtin:");
  const std::string original = name;
  if (name == "bimodal") return bimodal_base();
  if (name == "trimodal") return trimodal_base();
  if (name == "rotated-bimodal") return rotated_iid_construction(bimodal_base());
  if (name == "rotated-trimodal") return rotated_iid_construction(trimodal_base());
  if (detail::strip_prefix(name, "gaussian-iid-n")) {
    return standard_gaussian(detail::parse_dimension(name, original));
  }
  if (detail::strip_prefix(name, "bimodal-product-n")) {
    return product_power(bimodal_base(), detail::parse_dimension(name, original));
  }
  if (detail::strip_prefix(name, "symmetric-dependent-n")) {
    const std::size_t n = detail::parse_dimension(name, original);
    if (n < 2 || n > 6) {
      throw Error(ErrorCode::ParseError, "law: '" + original + "' needs n in [2, 6]");
    }
    return symmetric_dependent(n);
  }
  if (detail::strip_prefix(name, "correlated-gaussian-rho")) {
    char* end = nullptr;
    const double rho = std::strtod(name.c_str(), &end);
    if (name.empty() || *end != '\0' || !(std::abs(rho) < 1.0)) {
      throw Error(ErrorCode::ParseError,
                  "law: '" + original + "' needs a correlation rho in (-1, 1)");
    }
    return correlated_gaussian(rho);
  }
  std::string known;
  for (const auto& n : builtin_names()) known += (known.empty() ? "" : ", ") + n;
  throw Error(ErrorCode::ParseError, "law: unknown builtin '" + original + "'; known: " + known);
}

}  // namespace symentropy
