#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "symentropy/error.hpp"

namespace symentropy {

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

// Nodes by Newton iteration on P_n from the Chebyshev-like initial guess,
// weights 2 / ((1 - x²) P_n'(x)²).
inline GaussLegendreRule gauss_legendre(std::size_t order) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "Gauss-Legendre order must be >= 1");
  if (order == 1) return {{0.0}, {2.0}};
  GaussLegendreRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const double n = static_cast<double>(order);
  // P_n(x) and P_n'(x) by the three-term recurrence.
  auto legendre = [order, n](double x, double& dp) {
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= order; ++k) {
      const double kk = static_cast<double>(k);
      const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    return p1;
  };
  for (std::size_t i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      const double dx = legendre(x, dp) / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-16) break;
    }
    legendre(x, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

template <class F>
double integrate_fixed(const GaussLegendreRule& rule, F&& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return sum * half;
}

struct AdaptiveResult {
  double value = 0.0;        // composite rule on the refined (halved) panels
  double coarse = 0.0;       // same panels before the last halving
  double abs_sum = 0.0;      // Σ |panel contribution|, for rounding bounds
  std::size_t panels = 0;
  bool converged = true;

  // Rounding floor: no quadrature sum is known better than a few ulps of the
  // magnitudes it adds up.
  double error_proxy() const {
    const double rounding = 64.0 * std::numeric_limits<double>::epsilon() * abs_sum;
    return std::max(std::abs(value - coarse), rounding);
  }
};

// Adaptive composite Gauss-Legendre. Each panel is compared against the sum
// over its two halves; panels whose difference exceeds their share of abs_tol
// are bisected. Panels are visited left to right so results are reproducible.
template <class F>
AdaptiveResult integrate_adaptive(F&& f, double a, double b, std::size_t order = 20,
                                  double abs_tol = 1e-13, std::size_t initial_panels = 16,
                                  int max_depth = 30) {
  if (!(b > a)) throw Error(ErrorCode::InvalidArgument, "integration interval must have b > a");
  const GaussLegendreRule rule = gauss_legendre(order);
  const double total_len = b - a;
  AdaptiveResult result;

  struct Panel {
    double lo, hi, whole;
    int depth;
  };
  std::vector<Panel> stack;
  const double width = total_len / static_cast<double>(initial_panels);
  for (std::size_t p = initial_panels; p-- > 0;) {
    const double lo = a + width * static_cast<double>(p);
    const double hi = (p + 1 == initial_panels) ? b : lo + width;
    stack.push_back({lo, hi, integrate_fixed(rule, f, lo, hi), 0});
  }
  while (!stack.empty()) {
    const Panel panel = stack.back();
    stack.pop_back();
    const double mid = 0.5 * (panel.lo + panel.hi);
    const double left = integrate_fixed(rule, f, panel.lo, mid);
    const double right = integrate_fixed(rule, f, mid, panel.hi);
    const double diff = std::abs(left + right - panel.whole);
    // Once the halves agree to rounding, further bisection only chases noise.
    const double share = std::max(abs_tol * (panel.hi - panel.lo) / total_len,
                                  32.0 * std::numeric_limits<double>::epsilon() *
                                      (std::abs(left) + std::abs(right)));
    if (diff <= share || panel.depth >= max_depth) {
      if (diff > share) result.converged = false;
      result.value += left + right;
      result.coarse += panel.whole;
      result.abs_sum += std::abs(left) + std::abs(right);
      ++result.panels;
    } else {
      stack.push_back({mid, panel.hi, right, panel.depth + 1});
      stack.push_back({panel.lo, mid, left, panel.depth + 1});
    }
  }
  return result;
}

}  // namespace symentropy
