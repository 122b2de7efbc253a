#pragma once

// Exact optimization of norm ratios ||N c||_q / ||D c||_p when one of the
// norms is polyhedral (p or q in {1, inf}).
//
// On each cell of the arrangement of kink hyperplanes a polyhedral norm is
// linear. A ratio with a linear numerator is quasi-concave there and a ratio
// with a linear denominator is quasi-convex, so the minimum (resp. maximum)
// over the cone is attained on an extreme ray: an intersection of k-1 kink
// hyperplanes in R^k. Enumerating those rays gives the optimum outright.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/LU>

#include "widthlab/optim.hpp"
#include "widthlab/pnorm.hpp"

namespace widthlab {

inline bool polyhedral(Exponent p) { return p.is(1.0) || p.is_infinite(); }

/// Normals of the hyperplanes across which c -> ||A c||_p changes its linear
/// piece (p = 1: the rows of A; p = inf: sums and differences of rows).
inline void append_kinks(const Matrix& a, Exponent p, std::vector<Vector>& out) {
  const double tiny = 1e-14 * std::max(1.0, a.cwiseAbs().maxCoeff());
  auto push = [&](Vector h) {
    if (h.cwiseAbs().maxCoeff() > tiny) out.push_back(std::move(h));
  };
  if (p.is(1.0)) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) push(a.row(i).transpose());
  } else if (p.is_infinite()) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = i + 1; j < a.rows(); ++j) {
        push((a.row(i) - a.row(j)).transpose());
        push((a.row(i) + a.row(j)).transpose());
      }
  }
}

inline double combinations(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  double r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

/// Best ratio over all one-dimensional intersections of k-1 hyperplanes from
/// `kinks`, or nothing if there are more than `cap` combinations.
inline std::optional<MultiStartResult> extreme_ray_optimum(const RatioObjective& obj,
                                                           const std::vector<Vector>& kinks, Sense sense,
                                                           double cap) {
  const Eigen::Index k = obj.num.cols();
  MultiStartResult best;
  bool have = false;
  auto consider = [&](const Vector& c) {
    double v = obj(c, nullptr);
    if (!std::isfinite(v)) return;
    ++best.starts;
    if (!have || improves(sense, v, best.value)) {
      best.value = v;
      best.point = c;
      have = true;
    }
  };
  if (k == 1) {
    consider(Vector::Ones(1));
    best.converged = true;
    return best;
  }
  const std::size_t pick = static_cast<std::size_t>(k - 1);
  if (kinks.size() < pick || combinations(kinks.size(), pick) > cap) return std::nullopt;

  std::vector<std::size_t> idx(pick);
  for (std::size_t i = 0; i < pick; ++i) idx[i] = i;
  Matrix m(pick, k);
  while (true) {
    for (std::size_t r = 0; r < pick; ++r) m.row(static_cast<Eigen::Index>(r)) = kinks[idx[r]].transpose();
    Eigen::FullPivLU<Matrix> lu(m);
    lu.setThreshold(1e-11);
    if (lu.rank() == static_cast<Eigen::Index>(pick)) {
      Vector c = lu.kernel().col(0);
      c.normalize();
      consider(c);
    }
    std::size_t i = pick;
    while (i > 0 && idx[i - 1] == kinks.size() - pick + (i - 1)) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < pick; ++j) idx[j] = idx[j - 1] + 1;
  }
  if (!have) return std::nullopt;
  best.converged = true;
  return best;
}

/// max of ||N c||_q over the polytope {c : ||D c||_inf <= 1}, by its
/// vertices: k of the constraints |(D c)_i| <= 1 active with fixed signs.
/// Valid for any norm q (the objective is convex). Nothing if the
/// enumeration exceeds `cap`.
inline std::optional<MultiStartResult> linf_section_vertices_max(const RatioObjective& obj, double cap) {
  const Eigen::Index k = obj.den.cols();
  const Eigen::Index m = obj.den.rows();
  if (combinations(static_cast<std::size_t>(m), static_cast<std::size_t>(k)) * std::ldexp(1.0, int(k) - 1) > cap)
    return std::nullopt;
  MultiStartResult best;
  bool have = false;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  Matrix sub(k, k);
  Vector s(k);
  while (true) {
    for (Eigen::Index r = 0; r < k; ++r) sub.row(r) = obj.den.row(idx[static_cast<std::size_t>(r)]);
    Eigen::FullPivLU<Matrix> lu(sub);
    if (lu.isInvertible()) {
      const std::uint64_t count = std::uint64_t{1} << (k - 1);
      for (std::uint64_t mask = 0; mask < count; ++mask) {
        s[0] = 1.0;
        for (Eigen::Index j = 1; j < k; ++j) s[j] = (mask >> (j - 1) & 1) ? -1.0 : 1.0;
        Vector c = lu.solve(s);
        Vector x = obj.den * c;
        if (x.cwiseAbs().maxCoeff() > 1.0 + 1e-10) continue;
        double v = obj(c, nullptr);
        ++best.starts;
        if (!have || v > best.value) {
          best.value = v;
          best.point = c.normalized();
          have = true;
        }
      }
    }
    Eigen::Index i = k;
    while (i > 0 && idx[static_cast<std::size_t>(i - 1)] == m - k + (i - 1)) --i;
    if (i == 0) break;
    ++idx[static_cast<std::size_t>(i - 1)];
    for (Eigen::Index j = i; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  if (!have) return std::nullopt;
  best.converged = true;
  return best;
}

}  // namespace widthlab
