#pragma once

#include <vector>

#include "widthlab/optim.hpp"
#include "widthlab/pnorm.hpp"

namespace widthlab {

/// Largest dimension for which the extreme points of an l_inf ball are enumerated.
inline constexpr Eigen::Index kSignEnumerationLimit = 16;

struct OperatorNorm {
  double value = 0;
  /// True when the value is exact (closed form or exhaustive extreme-point search);
  /// false for the sampled lower bound.
  bool certified = false;
  Vector witness;  // a maximizing source vector with ||witness||_src = 1
};

namespace detail {

/// max over s in {+-1}^n of ||A s||_q; s_0 = +1 is fixed by symmetry.
inline double max_over_signs(const Matrix& a, Exponent q, Vector* arg) {
  const Eigen::Index n = a.cols();
  const std::uint64_t count = std::uint64_t{1} << (n - 1);
  Vector s = Vector::Ones(n);
  Vector y = a * s;
  double best = pnorm(y, q);
  if (arg) *arg = s;
  // Gray-code walk: one sign flips per step
  for (std::uint64_t k = 1; k < count; ++k) {
    int bit = __builtin_ctzll(k) + 1;
    s[bit] = -s[bit];
    y += (2.0 * s[bit]) * a.col(bit);
    double v = pnorm(y, q);
    if (v > best) {
      best = v;
      if (arg) *arg = s;
    }
  }
  return best;
}

inline Vector unit_in(const Vector& x, Exponent p) {
  double n = pnorm(x, p);
  return n > 0 ? Vector(x / n) : x;
}

}  // namespace detail

/// ||M : l_src -> l_tgt||.
///
/// Exact when src = 1 (largest column norm), tgt = inf (largest dual row
/// norm), src = tgt = 2 (largest singular value), and by extreme-point
/// enumeration when src = inf or tgt = 1 in dimension <= 16. Otherwise a
/// multi-start projected-gradient ascent over the source sphere returns a
/// lower bound, flagged uncertified. `hint` is an optional extra start.
inline OperatorNorm operator_norm(const Matrix& m, Exponent src, Exponent tgt, const OptimBudget& budget,
                                  const Vector* hint = nullptr) {
  budget.validate();
  if (m.rows() == 0 || m.cols() == 0) fail_validation("operator norm of an empty matrix");
  OperatorNorm out;
  const Eigen::Index n_in = m.cols();
  const Eigen::Index n_out = m.rows();

  if (src.is(1.0)) {
    Eigen::Index arg = 0;
    double best = -1;
    for (Eigen::Index j = 0; j < n_in; ++j) {
      double v = pnorm(Vector(m.col(j)), tgt);
      if (v > best) best = v, arg = j;
    }
    out = {best, true, Vector::Unit(n_in, arg)};
    return out;
  }
  if (tgt.is_infinite()) {
    const Exponent dual_src = src.dual();
    Eigen::Index arg = 0;
    double best = -1;
    for (Eigen::Index i = 0; i < n_out; ++i) {
      double v = pnorm(Vector(m.row(i).transpose()), dual_src);
      if (v > best) best = v, arg = i;
    }
    Vector g;
    norm_gradient(Vector(m.row(arg).transpose()), dual_src, g);
    out = {best, true, detail::unit_in(g, src)};
    return out;
  }
  if (src.is(2.0) && tgt.is(2.0)) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinV);
    out = {svd.singularValues()[0], true, Vector(svd.matrixV().col(0))};
    return out;
  }
  if (src.is_infinite() && n_in <= kSignEnumerationLimit) {
    Vector s;
    double v = detail::max_over_signs(m, tgt, &s);
    out = {v, true, s};
    return out;
  }
  if (tgt.is(1.0) && n_out <= kSignEnumerationLimit) {
    // ||M||_{p->1} = ||M^T||_{inf->p'}
    Vector s;
    double v = detail::max_over_signs(m.transpose(), src.dual(), &s);
    Vector g;
    norm_gradient(Vector(m.transpose() * s), src.dual(), g);
    out = {v, true, detail::unit_in(g, src)};
    return out;
  }

  RatioObjective obj{m, tgt, Matrix::Identity(n_in, n_in), src};
  std::vector<Vector> starts;
  if (hint && hint->size() == n_in) starts.push_back(*hint);
  for (Eigen::Index j = 0; j < n_in; ++j) starts.push_back(Vector::Unit(n_in, j));
  starts.push_back(Vector::Ones(n_in));
  {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinV);
    starts.push_back(svd.matrixV().col(0));
  }
  for (int r = 0; r < budget.restarts; ++r) {
    Rng rng = make_stream(budget.seed, 0x6f70u, r);
    starts.push_back(gaussian_vector(rng, n_in));
  }
  LocalOptions lo;
  lo.max_iter = budget.max_iter;
  lo.polish = obj.nonsmooth();
  MultiStartResult best = multistart_on_sphere(obj, starts, Sense::maximize, lo);
  out = {best.value, false, detail::unit_in(best.point, src)};
  return out;
}

}  // namespace widthlab
