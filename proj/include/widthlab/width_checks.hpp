#pragma once

// Cross-checks between width estimators: duality products, the Pietsch
// inequality, the b <= c, d <= a sandwich and the Hilbert-space collapse.

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "widthlab/widths.hpp"

namespace widthlab {

inline constexpr double kDualityTolerance = 0.1;
/// Largest ambient dimension for which duality checks are attempted.
inline constexpr int kDualityMaxDimension = 12;

struct DualityReport {
  WidthEstimate first;
  WidthEstimate second;
  double product = 0;
  double tolerance = kDualityTolerance;
  bool pass = false;
  bool inconclusive = false;  // the dimension exceeded the desk-scale cap; nothing computed
};

namespace detail {
inline DualityReport finish_duality(WidthEstimate a, WidthEstimate b, double tol) {
  DualityReport r;
  r.first = std::move(a);
  r.second = std::move(b);
  r.product = r.first.value * r.second.value;
  r.tolerance = tol;
  r.pass = std::fabs(r.product - 1.0) <= tol;
  return r;
}
}  // namespace detail

/// b_n(id_{p1,p2}^{2n}) * d_{n+1}(id_{p1',p2'}^{2n}), which equals 1.
///
/// The Kolmogorov factor approximates by n-dimensional subspaces, which is
/// index n+1 in the s-number numbering used by kolmogorov_number.
inline DualityReport check_pukhov(int n, Exponent p1, Exponent p2, const OptimBudget& budget,
                                  double tol = kDualityTolerance) {
  budget.validate();
  if (n < 1) fail_validation("width index must be >= 1");
  if (2 * n > kDualityMaxDimension) {
    DualityReport r;
    r.inconclusive = true;
    r.tolerance = tol;
    return r;
  }
  WidthEstimate b = bernstein_number(FiniteOperator::identity_of(2 * n, p1, p2), n, budget);
  WidthEstimate d = kolmogorov_number(FiniteOperator::identity_of(2 * n, p1.dual(), p2.dual()), n + 1, budget);
  return detail::finish_duality(std::move(b), std::move(d), tol);
}

/// b_n(id_{p1,p2}^m) * c_{m-n+1}(id_{p2,p1}^m), which equals 1.
inline DualityReport check_bern_gelfand_duality(int m, int n, Exponent p1, Exponent p2, const OptimBudget& budget,
                                                double tol = kDualityTolerance) {
  budget.validate();
  if (n < 1 || n > m) fail_validation("index exceeds dimension");
  if (m > kDualityMaxDimension) {
    DualityReport r;
    r.inconclusive = true;
    r.tolerance = tol;
    return r;
  }
  WidthEstimate b = bernstein_number(FiniteOperator::identity_of(m, p1, p2), n, budget);
  WidthEstimate c = gelfand_number(FiniteOperator::identity_of(m, p2, p1), m - n + 1, budget);
  return detail::finish_duality(std::move(b), std::move(c), tol);
}

struct PietschReport {
  double lhs = 0;  // b_{2n-1}(T)
  double rhs = 0;  // e (x_1 ... x_n)^{1/n}
  bool certified = false;
  std::optional<bool> pass;  // empty in diagnostic mode
};

/// b_{2n-1}(T) <= e (prod_{k<=n} x_k(T))^{1/n}. Pass/fail is reported only on
/// Hilbert pairs, where both sides are singular values; otherwise the
/// comparison of the estimates is returned as a diagnostic.
inline PietschReport check_pietsch(const FiniteOperator& t, int n, const OptimBudget& budget) {
  budget.validate();
  if (n < 1) fail_validation("width index must be >= 1");
  if (2 * n - 1 > t.m_in()) fail_validation("index exceeds dimension");
  PietschReport r;
  WidthEstimate b = bernstein_number(t, 2 * n - 1, budget);
  double log_sum = 0;
  bool zero = false;
  bool all_exact = b.direction == Direction::exact;
  for (int k = 1; k <= n; ++k) {
    WidthEstimate x = weyl_number(t, k, budget);
    all_exact = all_exact && x.direction == Direction::exact;
    if (x.value <= 0) zero = true;
    else log_sum += std::log(x.value);
  }
  r.lhs = b.value;
  r.rhs = zero ? 0.0 : std::numbers::e * std::exp(log_sum / n);
  r.certified = t.hilbert() && all_exact;
  if (r.certified) r.pass = r.lhs <= r.rhs + 1e-9;
  return r;
}

struct SandwichReport {
  WidthEstimate bernstein, gelfand, kolmogorov, approximation;
  bool pass = false;
};

/// b_n <= min(c_n, d_n) <= a_n on the estimates, with slack 1e-9.
inline SandwichReport check_sandwich(const FiniteOperator& t, int n, const OptimBudget& budget) {
  SandwichReport r;
  r.bernstein = bernstein_number(t, n, budget);
  r.gelfand = gelfand_number(t, n, budget);
  r.kolmogorov = kolmogorov_number(t, n, budget);
  r.approximation = approximation_number(t, n, budget);
  double cd = std::min(r.gelfand.value, r.kolmogorov.value);
  r.pass = r.bernstein.value <= cd + 1e-9 && cd <= r.approximation.value + 1e-9;
  return r;
}

struct HilbertCollapseReport {
  double max_rel_exact = 0;   // closed-form path against the singular values
  double max_rel_search = 0;  // numerical search path against the singular values
};

/// All five kinds agree with the singular values on l_2 -> l_2.
inline HilbertCollapseReport check_hilbert_collapse(const Matrix& m, const OptimBudget& budget) {
  FiniteOperator t(m, Exponent(2), Exponent(2));
  Vector sigma = m.jacobiSvd().singularValues();
  HilbertCollapseReport r;
  const int n_max = static_cast<int>(std::min(m.rows(), m.cols()));
  for (WidthKind kind : kAllWidthKinds) {
    for (int n = 1; n <= n_max; ++n) {
      double s = sigma[n - 1];
      double scale = std::max(s, 1e-300);
      double e = estimate_width(kind, t, n, budget, EstimatorMode::automatic).value;
      double h = estimate_width(kind, t, n, budget, EstimatorMode::search).value;
      r.max_rel_exact = std::max(r.max_rel_exact, std::fabs(e - s) / scale);
      r.max_rel_search = std::max(r.max_rel_search, std::fabs(h - s) / scale);
    }
  }
  return r;
}

}  // namespace widthlab
