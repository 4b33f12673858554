#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "symentropy/symentropy.hpp"
#include "test_support.hpp"

using namespace symentropy;

namespace {

constexpr double kTwoPiE = 2.0 * std::numbers::pi * std::numbers::e;

// Independent oracle: Gauss-Kronrod 61 on the whole line.
double kronrod_entropy(const GaussianMixture& law) {
  auto f = [&](double x) {
    const double lf = law.log_density(std::span<const double>(&x, 1));
    const double p = std::exp(lf);
    return p > 0 ? -p * lf : 0.0;
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15,
      1e-14);
}

double kronrod_fisher(const GaussianMixture& law) {
  auto f = [&](double x) {
    double g = 0.0;
    const double lf = law.score(std::span<const double>(&x, 1), std::span<double>(&g, 1));
    return std::exp(lf) * g * g;
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15,
      1e-14);
}

}  // namespace

TEST(EntropyMc, StandardNormalThreeD) {
  const auto h = entropy_mc(standard_gaussian(3), 200000, 1);
  EXPECT_NEAR(h.value, 3 * 1.4189385332046727, 3 * h.std_error);
  EXPECT_EQ(h.method, EntropyMethod::mc_logdensity);
  EXPECT_EQ(h.count, 200000u);
}

TEST(EntropyMc, BimodalAgreesWithKronrod) {
  const auto law = bimodal_base();
  const auto h = entropy_mc(law, 200000, 2);
  EXPECT_NEAR(h.value, kronrod_entropy(law), 3 * h.std_error);
}

TEST(EntropyMc, RejectsTinyBudget) {
  EXPECT_SE_ERROR(entropy_mc(standard_gaussian(1), 99, 1), ErrorCode::InvalidArgument);
}

TEST(EntropyQuadrature, GaussianClosedForms) {
  const auto h1 = entropy_quadrature_1d(standard_gaussian(1));
  EXPECT_NEAR(h1.value, 0.5 * std::log(kTwoPiE), 1e-9);
  EXPECT_LE(std::abs(h1.value - 0.5 * std::log(kTwoPiE)), 3 * h1.std_error);
  const auto h01 = entropy_quadrature_1d(standard_gaussian(1, 0.1));
  EXPECT_NEAR(h01.value, 0.26764598670764983, 1e-12);
}

TEST(EntropyQuadrature, MixturesAgreeWithKronrod) {
  for (const auto& law : {bimodal_base(), trimodal_base()}) {
    const auto h = entropy_quadrature_1d(law);
    EXPECT_NEAR(h.value, kronrod_entropy(law), 1e-11);
  }
  // widely separated narrow components stress the adaptive refinement
  const auto spiky = make_gaussian_mixture({{0.5, Vector::Constant(1, -30.0), Matrix::Constant(1, 1, 1e-4)},
                                            {0.5, Vector::Constant(1, 30.0), Matrix::Constant(1, 1, 1e-4)}});
  EXPECT_NEAR(entropy_quadrature_1d(spiky).value, std::log(2.0) + 0.5 * std::log(kTwoPiE * 1e-4), 1e-9);
}

TEST(EntropyQuadrature, MatchesMonteCarloOnBimodal) {
  const auto law = bimodal_base();
  const auto q = entropy_quadrature_1d(law);
  const auto mc = entropy_mc(law, 200000, 5);
  EXPECT_NEAR(q.value, mc.value, 3 * std::hypot(q.std_error, mc.std_error));
}

TEST(EntropyQuadrature, TruncationAndDimension) {
  QuadratureSpec narrow;
  narrow.radius = 3.0;
  EXPECT_SE_ERROR(entropy_quadrature_1d(bimodal_base(), narrow), ErrorCode::TruncationInsufficient);
  EXPECT_SE_ERROR(entropy_quadrature_1d(standard_gaussian(2)), ErrorCode::NotUnivariate);
  QuadratureSpec wide;
  wide.radius = 12.0;
  EXPECT_NEAR(entropy_quadrature_1d(standard_gaussian(1), wide).value, 0.5 * std::log(kTwoPiE), 1e-12);
}

TEST(EntropyQuadrature, GenericModelNeedsRadius) {
  QuadratureSpec spec;
  EXPECT_SE_ERROR(entropy_quadrature_1d(test::Logistic{}, spec), ErrorCode::InvalidArgument);
  spec.radius = 80.0;
  EXPECT_NEAR(entropy_quadrature_1d(test::Logistic{}, spec).value, 2.0, 1e-11);
}

TEST(EntropyKnn, GaussianOracles) {
  const auto h1 = entropy_knn(sample(standard_gaussian(1), 100000, 3));
  EXPECT_NEAR(h1.value, 1.4189385332046727, 0.02);
  EXPECT_EQ(h1.method, EntropyMethod::knn);
  const auto h2 = entropy_knn(sample(standard_gaussian(2), 100000, 4));
  EXPECT_NEAR(h2.value, 2.8378770664093453, 0.03);
  EXPECT_NEAR(h2.value, 2.8378770664093453, 3 * h2.std_error);
}

TEST(EntropyKnn, ScalingShiftsByLogC) {
  Samples s = sample(bimodal_base(), 20000, 6);
  const auto h = entropy_knn(s);
  for (double& v : s.data) v *= 2.0;
  const auto h2 = entropy_knn(s);
  EXPECT_NEAR(h2.value - h.value, std::log(2.0), 1e-10);
}

TEST(EntropyKnn, DuplicatesAndSmallSamples) {
  Samples s = sample(standard_gaussian(2), 200, 7);
  for (std::size_t i = 0; i < 20; ++i) {
    s.row(100 + i)[0] = s.row(i)[0];
    s.row(100 + i)[1] = s.row(i)[1];
  }
  const auto h = entropy_knn(s, 1);
  EXPECT_TRUE(std::isfinite(h.value));
  EXPECT_TRUE(std::isfinite(h.std_error));

  Samples tiny{2, std::vector<double>(2 * 9, 0.0)};
  for (std::size_t i = 0; i < tiny.data.size(); ++i) tiny.data[i] = static_cast<double>(i);
  EXPECT_SE_ERROR(entropy_knn(tiny, 4), ErrorCode::TooFewSamples);
}

TEST(EntropyKnn, CrossChecksMonteCarloInThreeD) {
  const auto law = product_power(bimodal_base(), 3);
  const auto knn = entropy_knn(sample(law, 50000, 8));
  const auto mc = entropy_mc(law, 200000, 9);
  EXPECT_NEAR(knn.value, mc.value, 3 * std::hypot(knn.std_error, mc.std_error));
}

TEST(ProjectionEntropy, GaussianDirection) {
  Matrix cov = Matrix::Zero(2, 2);
  cov.diagonal() << 1.0, 4.0;
  const auto law = make_gaussian(Vector::Zero(2), cov);
  Vector a(2);
  a << 0.6, 0.8;
  EXPECT_NEAR(projection_entropy(law, a).value, 0.5 * std::log(kTwoPiE * (0.36 + 0.64 * 4.0)), 1e-12);
  EXPECT_SE_ERROR(projection_entropy(law, Vector::Ones(2)), ErrorCode::NotUnitVector);
  EXPECT_SE_ERROR(projection_entropy(law, Vector::Unit(3, 0)), ErrorCode::DimensionMismatch);
}

TEST(ProjectionEntropy, BimodalProductDiagonal) {
  // (X1 + X2)/√2 for i.i.d. ½N(±2,1): components N(±2√2, 1) w.p. ¼ and N(0, 1) w.p. ½
  const auto law = product_power(bimodal_base(), 2);
  const Vector a = Vector::Constant(2, kInvSqrt2);
  const auto oracle = make_gaussian_mixture(
      {{0.25, Vector::Constant(1, -2 * std::numbers::sqrt2), Matrix::Identity(1, 1)},
       {0.5, Vector::Zero(1), Matrix::Identity(1, 1)},
       {0.25, Vector::Constant(1, 2 * std::numbers::sqrt2), Matrix::Identity(1, 1)}});
  EXPECT_NEAR(projection_entropy(law, a).value, kronrod_entropy(oracle), 1e-11);
}

TEST(FisherMc, ClosedFormsAndKronrod) {
  const auto i4 = fisher_mc(standard_gaussian(1, 4.0), 100000, 10);
  EXPECT_NEAR(i4.value, 0.25, 3 * i4.std_error);
  const auto i3 = fisher_mc(standard_gaussian(3), 100000, 11);
  EXPECT_NEAR(i3.value, 3.0, 3 * i3.std_error);
  const auto law = bimodal_base();
  const auto ib = fisher_mc(law, 200000, 12);
  EXPECT_NEAR(ib.value, kronrod_fisher(law), 3 * ib.std_error);
}

TEST(CrossTerm, ZeroOnSymmetricLaws) {
  for (const auto& law : {product_power(bimodal_base(), 3), symmetric_dependent(3),
                          rotated_iid_construction(bimodal_base())}) {
    const auto n = law.dim();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const auto c = cross_term_mc(law, i, j, 100000, 13 + i * n + j);
        EXPECT_LE(std::abs(c.value), 3 * c.std_error) << "i=" << i << " j=" << j;
      }
    }
  }
}

TEST(CrossTerm, DetectsCorrelation) {
  // E[ρ_0 ρ_1] is the off-diagonal of Σ⁻¹: -ρ/(1-ρ²) = 0.9/0.19 for ρ = -0.9
  const auto c = cross_term_mc(correlated_gaussian(-0.9), 0, 1, 200000, 14);
  EXPECT_NEAR(c.value, 0.9 / 0.19, 3 * c.std_error);
  EXPECT_GT(std::abs(c.value), 10 * c.std_error);
  EXPECT_SE_ERROR(cross_term_mc(standard_gaussian(2), 0, 2, 1000, 1), ErrorCode::IndexOutOfRange);
  EXPECT_SE_ERROR(cross_term_mc(standard_gaussian(2), 1, 1, 1000, 1), ErrorCode::IndexOutOfRange);
}

TEST(ScoreProjection, GaussianAnalyticPath) {
  Matrix cov(3, 3);
  cov << 2, 0.3, 0.1, 0.3, 1, -0.2, 0.1, -0.2, 0.5;
  const auto law = make_gaussian(Vector::Zero(3), cov);
  const auto A = balanced_projection(1, 3, ProjectionMethod::hadamard).matrix;
  const auto r = score_projection_residual(law, A, 16, 1000, 15);
  EXPECT_TRUE(r.analytic);
  EXPECT_LE(r.max_residual, 1e-10);
  const auto r2 = score_projection_residual(standard_gaussian(4),
                                            balanced_projection(2, 4, ProjectionMethod::hadamard).matrix,
                                            16, 1000, 16);
  EXPECT_LE(r2.max_residual, 1e-10);
}

TEST(ScoreProjection, BimodalProductWithinNoise) {
  const auto law = product_power(bimodal_base(), 2);
  Matrix A(1, 2);
  A << kInvSqrt2, kInvSqrt2;
  const auto r = score_projection_residual(law, A, 8, 20000, 17);
  EXPECT_FALSE(r.analytic);
  EXPECT_EQ(r.probe_count, 8u);
  EXPECT_LE(r.max_z, 3.5);
  EXPECT_GT(r.std_error, 0.0);
}

TEST(ScoreProjection, MultiRowProjectionOfDependentLaw) {
  const auto law = symmetric_dependent(4);
  const auto A = balanced_projection(2, 4, ProjectionMethod::hadamard).matrix;
  const auto r = score_projection_residual(law, A, 6, 20000, 18);
  EXPECT_LE(r.max_z, 4.0);
}

TEST(ScoreProjection, ConditionalSamplerHasTheRightLaw) {
  // Residual against a deliberately wrong score would be large; instead check
  // the mechanism: for a Gaussian the sampled route must agree with the
  // analytic one. Force sampling by wrapping in a two-component mixture of
  // identical Gaussians.
  const auto g = standard_gaussian(3, 2.0);
  std::vector<MixtureComponent> twice = g.components();
  twice.push_back(g.components()[0]);
  const auto law = make_gaussian_mixture(twice);
  const auto A = balanced_projection(1, 3, ProjectionMethod::hadamard).matrix;
  const auto r = score_projection_residual(law, A, 8, 20000, 19);
  EXPECT_FALSE(r.analytic);
  EXPECT_LE(r.max_z, 4.0);
  EXPECT_LE(r.max_residual, 0.05);
}

TEST(MixedPartial, ProductLawIsIndependent) {
  const auto law = product_power(trimodal_base(), 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto r = mixed_partial_independence(law, i, 32, 20 + i);
    EXPECT_TRUE(r.verdict) << "i=" << i << " max " << r.max_abs;
  }
}

TEST(MixedPartial, DependentLawsAreFlagged) {
  EXPECT_FALSE(mixed_partial_independence(symmetric_dependent(3), 0, 32, 23).verdict);
  const auto r = mixed_partial_independence(correlated_gaussian(-0.9), 0, 8, 24);
  // ∂²log f/∂x0∂x1 = -(Σ⁻¹)01 = -4.7368 everywhere
  EXPECT_NEAR(r.max_abs, 0.9 / 0.19, 1e-4);
  EXPECT_FALSE(r.verdict);
  EXPECT_SE_ERROR(mixed_partial_independence(standard_gaussian(2), 2, 4, 1), ErrorCode::IndexOutOfRange);
}
