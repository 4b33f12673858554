#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "symentropy/symentropy.hpp"
#include "test_support.hpp"

using namespace symentropy;

namespace {
double gaussian_h(double var) { return 0.5 * std::log(2 * std::numbers::pi * std::numbers::e * var); }
}  // namespace

TEST(FisherPath, GaussianClosedForms) {
  // I(N(0, σ²I_n) + √t Z) = n / (σ² + t)
  const auto p = fisher_path(standard_gaussian(2), {0.0, 1.0, 3.0}, 100000, 1);
  ASSERT_EQ(p.values.size(), 3u);
  EXPECT_NEAR(p.values[0].value, 2.0, 3 * p.values[0].std_error);
  EXPECT_NEAR(p.values[1].value, 1.0, 3 * p.values[1].std_error);
  EXPECT_NEAR(p.values[2].value, 0.5, 3 * p.values[2].std_error);

  const auto q = fisher_path(standard_gaussian(1, 4.0), {0.0}, 100000, 2);
  EXPECT_NEAR(q.values[0].value, 0.25, 3 * q.values[0].std_error);
}

TEST(FisherPath, DecreasesAlongTheFlow) {
  const auto p = fisher_path(bimodal_base(), {0.0, 0.5, 2.0, 8.0}, 50000, 3);
  for (std::size_t i = 1; i < p.values.size(); ++i) {
    EXPECT_LT(p.values[i].value, p.values[i - 1].value);
  }
  // Cramér-Rao: I(X_t) ≥ 1/Var(X_t), Var = 5 + t for the bimodal base
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    EXPECT_GT(p.values[i].value + 3 * p.values[i].std_error, 1.0 / (5.0 + p.times[i]));
  }
}

TEST(FisherPath, CsvAndErrors) {
  const auto p = fisher_path(standard_gaussian(1), {0.0, 0.25}, 1000, 4);
  const std::string csv = p.to_csv();
  EXPECT_EQ(csv.rfind("t,value,stderr\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("\n0.25,"), std::string::npos);
  EXPECT_SE_ERROR(fisher_path(standard_gaussian(1), {-0.1}, 1000, 1), ErrorCode::NegativeTime);
  EXPECT_SE_ERROR(fisher_path(standard_gaussian(1), {1.0, 1.0}, 1000, 1), ErrorCode::InvalidArgument);
}

TEST(DeBruijn, GaussianIsExactUpToQuadrature) {
  // with the control variate the integrand is identically zero for Gaussians
  const auto h1 = entropy_via_debruijn(standard_gaussian(1), 64, 1000, 5);
  EXPECT_NEAR(h1.value, gaussian_h(1.0), 1e-10);
  const auto h4 = entropy_via_debruijn(standard_gaussian(1, 4.0), 64, 1000, 6);
  EXPECT_NEAR(h4.value, 2.1120857137646180, 1e-10);
  EXPECT_EQ(h4.method, EntropyMethod::debruijn);

  Matrix cov = Matrix::Zero(3, 3);
  cov.diagonal() << 1.0, 2.0, 3.0;
  const auto h3 = entropy_via_debruijn(make_gaussian(Vector::Zero(3), cov), 64, 1000, 7);
  EXPECT_NEAR(h3.value, gaussian_h(1.0) + gaussian_h(2.0) + gaussian_h(3.0), 1e-9);
  EXPECT_LE(std::abs(h3.value - gaussian_entropy(cov)), 3 * h3.std_error + 1e-12);
}

TEST(DeBruijn, BimodalAgreesWithQuadrature) {
  const auto law = bimodal_base();
  const auto q = entropy_quadrature_1d(law);
  const auto r = debruijn_analysis(law, 50000, 8);
  EXPECT_NEAR(r.estimate.value, q.value, 3 * std::hypot(r.estimate.std_error, q.std_error));
  EXPECT_NEAR(r.estimate.value, q.value, 0.01);
  EXPECT_GT(r.mc_std_error, 0.0);
  EXPECT_GT(r.quadrature_std_error, 0.0);
  EXPECT_LT(r.quadrature_std_error, r.mc_std_error);
  EXPECT_DOUBLE_EQ(r.estimate.std_error, std::hypot(r.mc_std_error, r.quadrature_std_error));
}

TEST(DeBruijn, NodeCountsAgree) {
  const auto law = product_power(bimodal_base(), 2);
  const auto a = entropy_via_debruijn(law, 32, 20000, 9);
  const auto b = entropy_via_debruijn(law, 64, 20000, 9);
  EXPECT_NEAR(a.value, b.value, 3 * std::hypot(a.std_error, b.std_error));
  // the 2-D product has entropy 2·h(base)
  const double oracle = 2.0 * entropy_quadrature_1d(bimodal_base()).value;
  EXPECT_NEAR(b.value, oracle, 3 * b.std_error);
}

TEST(DeBruijn, ControlVariateIsOptional) {
  const auto law = trimodal_base();
  DeBruijnOptions plain;
  plain.control_variate = false;
  const auto without = debruijn_analysis(law, 50000, 10, plain);
  const auto with = debruijn_analysis(law, 50000, 10);
  const double oracle = entropy_quadrature_1d(law).value;
  EXPECT_NEAR(without.estimate.value, oracle, 3 * without.estimate.std_error);
  EXPECT_NEAR(with.estimate.value, oracle, 3 * with.estimate.std_error);
  EXPECT_LT(with.mc_std_error, without.mc_std_error);
}

TEST(DeBruijn, PathMatchesFisherOfSmoothedLaw) {
  const auto r = debruijn_analysis(standard_gaussian(2), 2000, 11, {16, true});
  ASSERT_EQ(r.path.times.size(), 16u);
  for (std::size_t k = 0; k < r.path.times.size(); ++k) {
    const double t = r.path.times[k];
    EXPECT_GT(t, 0.0);
    EXPECT_NEAR(r.path.values[k].value, 2.0 / (1.0 + t), 4 * r.path.values[k].std_error + 1e-12);
  }
}

TEST(DeBruijn, DeterministicAndValidated) {
  const auto law = bimodal_base();
  const auto a = entropy_via_debruijn(law, 16, 5000, 12);
  const auto b = entropy_via_debruijn(law, 16, 5000, 12);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_NE(a.value, entropy_via_debruijn(law, 16, 5000, 13).value);
  EXPECT_SE_ERROR(entropy_via_debruijn(law, 15, 5000, 1), ErrorCode::InvalidArgument);
  EXPECT_SE_ERROR(entropy_via_debruijn(law, 64, 50, 1), ErrorCode::InvalidArgument);
}
