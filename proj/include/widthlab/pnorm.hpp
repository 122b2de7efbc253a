#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <type_traits>

#include <Eigen/Dense>

#include "widthlab/exponent.hpp"

namespace widthlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {
template <class T>
double magnitude(const T& v) {
  if constexpr (std::is_arithmetic_v<T>)
    return std::fabs(static_cast<double>(v));
  else
    return std::abs(v);
}
}  // namespace detail

/// l_p norm of a finite sequence (real or complex entries). Empty input has norm 0.
template <class Range>
double pnorm(const Range& x, Exponent p) {
  double peak = 0.0;
  for (const auto& v : x) peak = std::max(peak, detail::magnitude(v));
  if (peak == 0.0 || p.is_infinite()) return peak;
  double acc = 0.0;
  if (p.is(1.0)) {
    for (const auto& v : x) acc += detail::magnitude(v);
    return acc;
  }
  // scale by the peak so large or tiny entries do not overflow the power sum
  if (p.is(2.0)) {
    for (const auto& v : x) {
      double r = detail::magnitude(v) / peak;
      acc += r * r;
    }
    return peak * std::sqrt(acc);
  }
  for (const auto& v : x) acc += std::pow(detail::magnitude(v) / peak, p.value());
  return peak * std::pow(acc, p.reciprocal());
}

inline double pnorm(const Vector& x, Exponent p) {
  return pnorm(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), p);
}

/// A (sub)gradient of y -> ||y||_p. Returns the norm.
inline double norm_gradient(const Vector& y, Exponent p, Vector& grad) {
  grad.setZero(y.size());
  double n = pnorm(y, p);
  if (n == 0.0) return 0.0;
  if (p.is_infinite()) {
    Eigen::Index arg = 0;
    y.cwiseAbs().maxCoeff(&arg);
    grad[arg] = y[arg] > 0 ? 1.0 : -1.0;
  } else if (p.is(1.0)) {
    for (Eigen::Index i = 0; i < y.size(); ++i) grad[i] = (y[i] > 0) - (y[i] < 0);
  } else if (p.is(2.0)) {
    grad = y / n;
  } else {
    const double e = p.value() - 1.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      double a = std::fabs(y[i]) / n;
      grad[i] = (y[i] > 0 ? 1.0 : -1.0) * (a == 0 ? 0.0 : std::pow(a, e));
    }
  }
  return n;
}

}  // namespace widthlab
