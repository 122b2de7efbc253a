#pragma once

// Estimators for the approximation, Kolmogorov, Gelfand, Bernstein and Weyl
// numbers of a matrix acting between finite-dimensional l_p spaces.
//
// Outer searches run over subspaces or factorizations (parameter_search);
// inner problems are single-sphere optimizations or certified operator norms.
// Every result carries its bound direction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "widthlab/extreme_rays.hpp"
#include "widthlab/operator_norm.hpp"
#include "widthlab/optim.hpp"
#include "widthlab/pnorm.hpp"

namespace widthlab {

enum class WidthKind { approximation, kolmogorov, gelfand, bernstein, weyl };
enum class Direction { lower_bound, upper_bound, exact, heuristic };

/// automatic uses closed forms where they apply; search always runs the
/// numerical optimizer (used to validate it against the closed forms).
enum class EstimatorMode { automatic, search };

inline constexpr std::array<WidthKind, 5> kAllWidthKinds = {
    WidthKind::approximation, WidthKind::kolmogorov, WidthKind::gelfand, WidthKind::bernstein, WidthKind::weyl};

inline const char* to_string(WidthKind k) {
  switch (k) {
    case WidthKind::approximation: return "approximation";
    case WidthKind::kolmogorov: return "kolmogorov";
    case WidthKind::gelfand: return "gelfand";
    case WidthKind::bernstein: return "bernstein";
    case WidthKind::weyl: return "weyl";
  }
  return "?";
}

inline WidthKind parse_width_kind(std::string_view s) {
  for (WidthKind k : kAllWidthKinds)
    if (s == to_string(k)) return k;
  fail_validation("unknown width kind '" + std::string(s) + "'");
}

inline const char* to_string(Direction d) {
  switch (d) {
    case Direction::lower_bound: return "lower_bound";
    case Direction::upper_bound: return "upper_bound";
    case Direction::exact: return "exact";
    case Direction::heuristic: return "heuristic";
  }
  return "?";
}

inline Direction parse_direction(std::string_view s) {
  for (Direction d : {Direction::lower_bound, Direction::upper_bound, Direction::exact, Direction::heuristic})
    if (s == to_string(d)) return d;
  fail_validation("unknown bound direction '" + std::string(s) + "'");
}

/// A real matrix T : l_src^{m_in} -> l_tgt^{m_out}.
class FiniteOperator {
 public:
  FiniteOperator(Matrix matrix, Exponent src, Exponent tgt) : matrix_(std::move(matrix)), src_(src), tgt_(tgt) {
    if (matrix_.rows() < 1 || matrix_.cols() < 1) fail_validation("operator needs m_out, m_in >= 1");
    if (!matrix_.allFinite()) fail_validation("operator has non-finite entries");
  }

  /// id_{p1,p2}^m
  static FiniteOperator identity_of(int m, Exponent p1, Exponent p2) {
    if (m < 1) fail_validation("identity dimension must be >= 1");
    return FiniteOperator(Matrix::Identity(m, m), p1, p2);
  }

  const Matrix& matrix() const { return matrix_; }
  Exponent src() const { return src_; }
  Exponent tgt() const { return tgt_; }
  Eigen::Index m_in() const { return matrix_.cols(); }
  Eigen::Index m_out() const { return matrix_.rows(); }
  bool is_identity() const { return matrix_.rows() == matrix_.cols() && matrix_ == Matrix::Identity(m_in(), m_in()); }
  bool hilbert() const { return src_.is(2.0) && tgt_.is(2.0); }

 private:
  Matrix matrix_;
  Exponent src_, tgt_;
};

/// Columns spanning an n-dimensional subspace; full column rank is enforced.
class SubspaceBasis {
 public:
  explicit SubspaceBasis(Matrix columns) : columns_(std::move(columns)) {
    if (columns_.cols() < 1 || columns_.rows() < columns_.cols()) fail_validation("subspace basis has bad shape");
    if (!full_rank(columns_)) fail_validation("subspace basis is rank deficient");
  }

  /// Smallest singular value above 1e-8 after normalizing each column.
  static bool full_rank(const Matrix& b) {
    Matrix c = b;
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      double nj = c.col(j).norm();
      if (nj == 0) return false;
      c.col(j) /= nj;
    }
    Eigen::JacobiSVD<Matrix> svd(c);
    return svd.singularValues()[c.cols() - 1] > 1e-8;
  }

  const Matrix& columns() const { return columns_; }
  Eigen::Index dim() const { return columns_.cols(); }
  Matrix orthonormal() const { return orthonormalize(columns_); }

 private:
  Matrix columns_;
};

struct WidthDiagnostics {
  int restarts = 0;        // random candidates and inner restarts per evaluation
  std::uint64_t seed = 0;
  int evaluations = 0;     // candidate evaluations in the outer search
  Vector witness;          // source vector attaining the inner optimum
  Matrix parameter;        // best subspace basis / constraint rows / factor pair / Hilbert map
  bool converged = true;
  bool clamped = false;    // set by width_profile when the raw value broke monotonicity
  double raw_value = 0;    // value before profile post-processing
};

struct WidthEstimate {
  WidthKind kind = WidthKind::bernstein;
  int n = 1;
  double value = 0;
  Direction direction = Direction::exact;
  WidthDiagnostics diagnostics;
};

namespace detail {

inline double binomial(int m, int k) {
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (m - k + i) / i;
  return r;
}

/// All k-subsets of {0..m-1} in lexicographic order if there are at most `cap`
/// of them, otherwise `cap` distinct subsets drawn from rng.
inline std::vector<std::vector<int>> coordinate_subsets(int m, int k, int cap, Rng& rng) {
  std::vector<std::vector<int>> out;
  if (k <= 0 || k > m) return out;
  if (binomial(m, k) <= cap) {
    std::vector<int> s(k);
    for (int i = 0; i < k; ++i) s[i] = i;
    while (true) {
      out.push_back(s);
      int i = k - 1;
      while (i >= 0 && s[i] == m - k + i) --i;
      if (i < 0) break;
      ++s[i];
      for (int j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
    }
    return out;
  }
  std::set<std::vector<int>> seen;
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = i;
  while (static_cast<int>(out.size()) < cap) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<int> s(idx.begin(), idx.begin() + k);
    std::sort(s.begin(), s.end());
    if (seen.insert(s).second) out.push_back(s);
  }
  return out;
}

inline Matrix coordinate_basis(int m, const std::vector<int>& s) {
  Matrix b = Matrix::Zero(m, static_cast<Eigen::Index>(s.size()));
  for (std::size_t j = 0; j < s.size(); ++j) b(s[j], static_cast<Eigen::Index>(j)) = 1.0;
  return b;
}

/// Normalized indicators of k contiguous groups of near-equal size.
inline Matrix block_constant_basis(int m, int k) {
  Matrix b = Matrix::Zero(m, k);
  int start = 0;
  for (int j = 0; j < k; ++j) {
    int size = m / k + (j < m % k ? 1 : 0);
    for (int i = start; i < start + size; ++i) b(i, j) = 1.0 / std::sqrt(double(size));
    start += size;
  }
  return b;
}

/// First k-1 coordinate vectors plus the constant vector, orthonormalized.
inline Matrix constant_augmented_basis(int m, int k) {
  Matrix b = Matrix::Zero(m, k);
  for (int j = 0; j + 1 < k; ++j) b(j, j) = 1.0;
  b.col(k - 1).setOnes();
  return orthonormalize(b);
}

/// Orthonormal basis of the orthogonal complement of span(b).
inline Matrix complement_basis(const Matrix& b) {
  return null_space_basis(b.transpose(), b.rows());
}

inline Matrix orthonormal_rows(const Matrix& w) {
  if (w.rows() == 0) return w;
  return orthonormalize(w.transpose()).transpose();
}

struct Spectrum {
  Vector sigma;
  Matrix u, v;
  int rank = 0;
};

inline Spectrum spectrum(const Matrix& t) {
  Eigen::JacobiSVD<Matrix> svd(t, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Spectrum s{svd.singularValues(), svd.matrixU(), svd.matrixV(), 0};
  double tol = s.sigma.size() ? std::max(t.rows(), t.cols()) * 1e-15 * s.sigma[0] : 0;
  for (Eigen::Index i = 0; i < s.sigma.size(); ++i)
    if (s.sigma[i] > tol) ++s.rank;
  return s;
}

/// Coefficient-space starts for an inner problem on span(b): the warm start,
/// projections of coordinate vectors and of the constant vector, then random.
inline std::vector<Vector> subspace_starts(const Matrix& b, const Vector* hint, int random, Rng& rng) {
  std::vector<Vector> starts;
  if (hint && hint->size() == b.rows()) starts.push_back(b.transpose() * *hint);
  for (Eigen::Index j = 0; j < b.rows(); ++j) starts.push_back(b.row(j).transpose());
  starts.push_back(b.transpose() * Vector::Ones(b.rows()));
  for (int r = 0; r < random; ++r) starts.push_back(gaussian_vector(rng, b.cols()));
  return starts;
}

inline LocalOptions local_options(const OptimBudget& budget, bool nonsmooth) {
  LocalOptions lo;
  lo.max_iter = budget.max_iter;
  lo.polish = nonsmooth;
  return lo;
}

inline int screening_starts(const OptimBudget& budget) { return std::clamp(budget.restarts / 32, 2, 8); }

inline SearchOptions search_options(const OptimBudget& budget, Eigen::Index params) {
  SearchOptions so;
  so.random_candidates = budget.restarts;
  so.refine_count = 3;
  so.refine_iters = static_cast<int>(std::min<Eigen::Index>(400, 60 + 8 * params));
  return so;
}

inline Vector unit_source(const Vector& x, Exponent p) {
  double n = pnorm(x, p);
  return n > 0 ? Vector(x / n) : x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Inner problems

namespace detail {
inline double ray_cap(const OptimBudget& budget) { return 2000.0 + 500.0 * budget.restarts; }
}  // namespace detail

/// min over nonzero x in span(B) of ||Tx||_tgt / ||x||_src. Exact by extreme-ray
/// enumeration when tgt is polyhedral and the arrangement is small enough;
/// otherwise multi-start descent, which estimates the minimum from above.
inline CandidateValue subspace_min_ratio(const FiniteOperator& t, const Matrix& basis, const OptimBudget& budget,
                                         const Vector* hint = nullptr) {
  budget.validate();
  RatioObjective obj{t.matrix() * basis, t.tgt(), basis, t.src()};
  const Eigen::Index k = basis.cols();
  Eigen::JacobiSVD<Matrix> svd(obj.num, Eigen::ComputeFullV);
  if (obj.num.rows() < k || svd.singularValues()[k - 1] <= 1e-14 * std::max(1.0, svd.singularValues()[0])) {
    Vector c = svd.matrixV().col(k - 1);  // T vanishes on span(B) in this direction
    return {0.0, detail::unit_source(basis * c, t.src()), true};
  }
  if (polyhedral(t.tgt())) {
    std::vector<Vector> kinks;
    append_kinks(obj.num, t.tgt(), kinks);
    if (polyhedral(t.src())) append_kinks(obj.den, t.src(), kinks);
    if (auto r = extreme_ray_optimum(obj, kinks, Sense::minimize, detail::ray_cap(budget)))
      return {r->value, detail::unit_source(basis * r->point, t.src()), true};
  }
  Rng rng = make_stream(budget.seed, 0x6272u);
  auto starts = detail::subspace_starts(basis, hint, budget.restarts, rng);
  auto r = multistart_on_sphere(obj, starts, Sense::minimize, detail::local_options(budget, obj.nonsmooth()));
  return {r.value, detail::unit_source(basis * r.point, t.src()), false};
}

/// sup over x in span(Z) of ||Tx||_tgt / ||x||_src. Exact for polyhedral
/// source norms (vertices of the section of the unit ball) and for
/// tgt = inf (each row functional restricted to span(Z) has norm equal to its
/// dual-norm distance from the annihilator); otherwise multi-start ascent,
/// which estimates the norm from below.
inline CandidateValue restricted_norm(const FiniteOperator& t, const Matrix& z, const OptimBudget& budget,
                                      const Vector* hint = nullptr);

/// dist_q(y, span V) = min_z ||y - V z||_q for V with orthonormal columns.
/// Least squares for q = 2; reweighted least squares (majorize-minimize) for
/// 1 < q <= 2; damped Newton for 2 < q < inf; Lawson and reweighted steps
/// followed by a descent/compass polish for the polyhedral norms q = 1, inf.
/// `residual` receives y - V z at the optimum found.
inline double subspace_distance(const Vector& y, const Matrix& v, Exponent q, Vector* residual = nullptr) {
  auto done = [&](const Vector& z, double val) {
    if (residual) *residual = y - v * z;
    return val;
  };
  Vector z = v.cols() ? Vector(v.transpose() * y) : Vector(0);
  auto f = [&](const Vector& zz) { return pnorm(Vector(y - v * zz), q); };
  double best = f(z);
  if (v.cols() == 0 || q.is(2.0) || best == 0) return done(z, best);
  const Eigen::Index m = y.size();
  const double scale = std::max(pnorm(y, Exponent::infinity()), 1e-300);
  const double floor = 1e-12 * scale;

  if (!q.is(1.0) && !q.is_infinite()) {
    const double p = q.value();
    for (int it = 0; it < 200; ++it) {
      Vector r = y - v * z;
      Vector zn;
      if (p <= 2.0) {
        Vector w(m);
        for (Eigen::Index i = 0; i < m; ++i) w[i] = std::pow(std::max(std::fabs(r[i]), floor), p - 2.0);
        Matrix vw = v.transpose() * w.asDiagonal();
        zn = (vw * v).ldlt().solve(vw * y);
      } else {
        Vector g(m), h(m);
        for (Eigen::Index i = 0; i < m; ++i) {
          double ai = std::fabs(r[i]);
          g[i] = (r[i] > 0 ? 1.0 : -1.0) * std::pow(ai, p - 1.0);
          h[i] = (p - 1.0) * std::pow(std::max(ai, floor), p - 2.0);
        }
        Vector step = (v.transpose() * h.asDiagonal() * v).ldlt().solve(v.transpose() * g);
        double tstep = 1.0;
        zn = z + step;
        while (tstep > 1e-8 && !(f(zn) < best)) {
          tstep *= 0.5;
          zn = z + tstep * step;
        }
      }
      if (!zn.allFinite()) break;
      double fv = f(zn);
      if (!(fv < best)) break;
      double rel = (best - fv) / best;
      z = zn;
      best = fv;
      if (rel < 1e-15) break;
    }
    return done(z, best);
  }

  Vector w = Vector::Ones(m);
  Vector zc = z;
  for (int it = 0; it < 60; ++it) {
    Vector r = y - v * zc;
    for (Eigen::Index i = 0; i < m; ++i) {
      double ai = std::max(std::fabs(r[i]), floor);
      if (q.is_infinite())
        w[i] *= ai;  // Lawson update
      else
        w[i] = 1.0 / ai;
    }
    w /= w.maxCoeff();
    Matrix vw = v.transpose() * w.asDiagonal();
    Vector zn = (vw * v).ldlt().solve(vw * y);
    if (!zn.allFinite()) break;
    zc = zn;
    double fv = f(zc);
    if (fv < best) best = fv, z = zc;
  }
  double h = 0.05 * scale;
  Vector g;
  int evals = 0;
  while (h > 1e-13 * scale && evals < 2000) {
    norm_gradient(Vector(y - v * z), q, g);
    Vector dg = v.transpose() * g;  // minus a subgradient of f in z
    bool moved = false;
    if (dg.norm() > 0) {
      Vector zn = z + h * dg.normalized();
      double fv = f(zn);
      ++evals;
      if (fv < best) best = fv, z = zn, moved = true;
    }
    for (Eigen::Index i = 0; i < z.size() && !moved; ++i) {
      for (double sgn : {1.0, -1.0}) {
        Vector zn = z;
        zn[i] += sgn * h;
        double fv = f(zn);
        ++evals;
        if (fv < best) {
          best = fv, z = zn, moved = true;
          break;
        }
      }
    }
    if (!moved) h *= 0.5;
  }
  return done(z, best);
}

inline CandidateValue restricted_norm(const FiniteOperator& t, const Matrix& z, const OptimBudget& budget,
                                      const Vector* hint) {
  budget.validate();
  if (z.cols() == t.m_in()) {
    OperatorNorm r = operator_norm(t.matrix(), t.src(), t.tgt(), budget, hint);
    return {r.value, r.witness, r.certified};
  }
  RatioObjective obj{t.matrix() * z, t.tgt(), z, t.src()};
  const double cap = detail::ray_cap(budget);
  if (t.src().is(1.0)) {
    std::vector<Vector> kinks;
    append_kinks(obj.den, t.src(), kinks);
    if (auto r = extreme_ray_optimum(obj, kinks, Sense::maximize, cap))
      return {r->value, detail::unit_source(z * r->point, t.src()), true};
  } else if (t.src().is_infinite()) {
    if (auto r = linf_section_vertices_max(obj, cap))
      return {r->value, detail::unit_source(z * r->point, t.src()), true};
  }
  if (t.tgt().is_infinite()) {
    const Matrix annihilator = detail::complement_basis(z);
    const Exponent dual_src = t.src().dual();
    CandidateValue out{-1, Vector(), true};
    for (Eigen::Index i = 0; i < t.m_out(); ++i) {
      Vector r, g;
      double v = subspace_distance(t.matrix().row(i).transpose(), annihilator, dual_src, &r);
      if (v > out.value) {
        norm_gradient(r, dual_src, g);
        out.value = v;
        out.witness = detail::unit_source(z * (z.transpose() * g), t.src());
      }
    }
    return out;
  }
  Rng rng = make_stream(budget.seed, 0x6765u);
  auto starts = detail::subspace_starts(z, hint, budget.restarts, rng);
  {
    Eigen::JacobiSVD<Matrix> svd(obj.num, Eigen::ComputeThinV);
    starts.push_back(svd.matrixV().col(0));
  }
  auto r = multistart_on_sphere(obj, starts, Sense::maximize, detail::local_options(budget, obj.nonsmooth()));
  return {r.value, detail::unit_source(z * r.point, t.src()), false};
}

struct DeviationValue {
  double value = 0;
  Vector witness;
  bool certified = false;
};

/// sup over ||x||_src <= 1 of dist_tgt(Tx, span V): the deviation of T(ball)
/// from the subspace N = span V (V orthonormal, possibly empty).
inline DeviationValue kolmogorov_deviation(const FiniteOperator& t, const Matrix& v, const OptimBudget& budget,
                                           const Vector* hint = nullptr) {
  budget.validate();
  const Matrix& a = t.matrix();
  const Eigen::Index n_in = t.m_in();
  if (t.tgt().is(2.0)) {
    Matrix p = Matrix::Identity(t.m_out(), t.m_out()) - v * v.transpose();
    OperatorNorm r = operator_norm(p * a, t.src(), Exponent(2), budget, hint);
    return {r.value, r.witness, r.certified};
  }
  // through the adjoint: sup_x dist(Tx, N) / ||x||_src equals
  // sup over w in N-perp of ||T^T w||_{src'} / ||w||_{tgt'}
  const Matrix q = detail::complement_basis(v);
  RatioObjective obj{a.transpose() * q, t.src().dual(), q, t.tgt().dual()};
  auto primal_witness = [&](const Vector& c) {
    Vector g;
    norm_gradient(Vector(obj.num * c), t.src().dual(), g);
    return detail::unit_source(g, t.src());
  };
  if (t.tgt().is_infinite()) {  // dual denominator is l_1
    std::vector<Vector> kinks;
    append_kinks(obj.den, Exponent(1), kinks);
    if (auto r = extreme_ray_optimum(obj, kinks, Sense::maximize, detail::ray_cap(budget)))
      return {r->value, primal_witness(r->point), true};
  } else if (t.tgt().is(1.0)) {  // dual denominator is l_inf
    if (auto r = linf_section_vertices_max(obj, detail::ray_cap(budget)))
      return {r->value, primal_witness(r->point), true};
  }
  // dist(T., N) is a seminorm, so its maximum over a polytope ball sits at a vertex
  if (t.src().is(1.0)) {
    DeviationValue out{-1, Vector(), true};
    for (Eigen::Index j = 0; j < n_in; ++j) {
      double dv = subspace_distance(a.col(j), v, t.tgt());
      if (dv > out.value) out.value = dv, out.witness = Vector::Unit(n_in, j);
    }
    return out;
  }
  if (t.src().is_infinite() && n_in <= 10) {
    DeviationValue out{-1, Vector(), true};
    const std::uint64_t count = std::uint64_t{1} << (n_in - 1);
    Vector s(n_in);
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      s[0] = 1.0;
      for (Eigen::Index j = 1; j < n_in; ++j) s[j] = (mask >> (j - 1) & 1) ? -1.0 : 1.0;
      double dv = subspace_distance(a * s, v, t.tgt());
      if (dv > out.value) out.value = dv, out.witness = s;
    }
    return out;
  }
  Rng rng = make_stream(budget.seed, 0x6b6fu);
  std::vector<Vector> starts;
  if (hint && hint->size() == n_in) {
    // dual start: a norming functional of the residual of T * hint
    Vector r, g;
    subspace_distance(a * *hint, v, t.tgt(), &r);
    norm_gradient(r, t.tgt(), g);
    starts.push_back(q.transpose() * g);
  }
  auto more = detail::subspace_starts(q, nullptr, budget.restarts, rng);
  starts.insert(starts.end(), more.begin(), more.end());
  auto best = multistart_on_sphere(obj, starts, Sense::maximize, detail::local_options(budget, obj.nonsmooth()));
  return {best.value, primal_witness(best.point), false};
}

// ---------------------------------------------------------------------------
// Closed forms

/// Closed-form widths of id_{p1,p2}^m where available: every s-number and the
/// Bernstein number is 1 when p1 = p2 (the Weyl number only on l_2, or for
/// n = 1); b_m = m^{1/p2 - 1/p1} for p1 <= p2 and 1 otherwise; every kind at
/// n = 1 is the norm m^{(1/p2 - 1/p1)_+}; s-numbers vanish for n > m.
inline std::optional<double> exact_identity_width(WidthKind kind, int m, int n, Exponent p1, Exponent p2) {
  if (m < 1 || n < 1) return std::nullopt;
  if (n > m) {
    if (kind == WidthKind::bernstein) return std::nullopt;
    return 0.0;
  }
  const double gap = p2.reciprocal() - p1.reciprocal();
  if (n == 1) return std::pow(double(m), positive_part(gap));
  if (p1 == p2 && (kind != WidthKind::weyl || p1.is(2.0))) return 1.0;
  if (kind == WidthKind::bernstein && n == m) return p1 <= p2 ? std::pow(double(m), gap) : 1.0;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Estimators

namespace detail {

/// Shared front matter: index checks, rank property, 1x1 and zero operators,
/// and the closed forms that hold for every kind.
inline std::optional<WidthEstimate> trivial_width(WidthKind kind, const FiniteOperator& t, int n,
                                                  const OptimBudget& budget, EstimatorMode mode,
                                                  const Spectrum& spec) {
  budget.validate();
  if (n < 1) fail_validation("width index must be >= 1");
  if (kind == WidthKind::bernstein && n > t.m_in()) fail_validation("index exceeds dimension");
  WidthEstimate e;
  e.kind = kind;
  e.n = n;
  e.direction = Direction::exact;
  e.diagnostics.seed = budget.seed;
  if (n > spec.rank) {
    e.value = 0.0;          // rank property
    e.diagnostics.raw_value = 0.0;
    return e;
  }
  if (t.m_in() == 1 && t.m_out() == 1) {
    e.value = std::fabs(t.matrix()(0, 0));
    e.diagnostics.witness = Vector::Ones(1);
    e.diagnostics.raw_value = e.value;
    return e;
  }
  if (mode == EstimatorMode::automatic) {
    if (t.hilbert()) {
      e.value = spec.sigma[n - 1];
      e.diagnostics.witness = spec.v.col(n - 1);
      e.diagnostics.raw_value = e.value;
      return e;
    }
    if (t.is_identity()) {
      if (auto v = exact_identity_width(kind, static_cast<int>(t.m_in()), n, t.src(), t.tgt())) {
        e.value = *v;
        e.diagnostics.raw_value = *v;
        return e;
      }
    }
  }
  if (n == 1) {
    OperatorNorm r = operator_norm(t.matrix(), t.src(), t.tgt(), budget);
    e.value = r.value;
    e.direction = r.certified ? Direction::exact : Direction::lower_bound;
    e.diagnostics.witness = r.witness;
    e.diagnostics.restarts = r.certified ? 0 : budget.restarts;
    e.diagnostics.raw_value = e.value;
    return e;
  }
  return std::nullopt;
}

inline void fill_search_diagnostics(WidthEstimate& e, const SearchResult& r, const OptimBudget& budget) {
  e.value = r.value;
  e.diagnostics.raw_value = r.value;
  e.diagnostics.restarts = budget.restarts;
  e.diagnostics.seed = budget.seed;
  e.diagnostics.evaluations = r.evaluations;
  e.diagnostics.witness = r.witness;
  e.diagnostics.parameter = r.best;
  e.diagnostics.converged = r.converged;
}

inline OptimBudget inner_budget(const OptimBudget& outer, bool thorough, std::uint64_t tag) {
  OptimBudget b = outer;
  b.restarts = thorough ? outer.restarts : screening_starts(outer);
  b.seed = derive_seed(outer.seed, tag, thorough ? 1u : 0u);
  return b;
}

}  // namespace detail

/// b_n(T): sup over n-dimensional subspaces L of inf over x in L of ||Tx|| / ||x||.
inline WidthEstimate bernstein_number(const FiniteOperator& t, int n, const OptimBudget& budget,
                                      EstimatorMode mode = EstimatorMode::automatic) {
  detail::Spectrum spec = detail::spectrum(t.matrix());
  if (auto e = detail::trivial_width(WidthKind::bernstein, t, n, budget, mode, spec)) return *e;
  const int m = static_cast<int>(t.m_in());
  Rng rng = make_stream(budget.seed, 0x6265726eu, n);

  std::vector<Matrix> structured;
  structured.push_back(spec.v.leftCols(n));
  for (const auto& s : detail::coordinate_subsets(m, n, std::max(16, budget.restarts / 4), rng))
    structured.push_back(detail::coordinate_basis(m, s));
  structured.push_back(detail::block_constant_basis(m, n));
  structured.push_back(detail::constant_augmented_basis(m, n));

  auto eval = [&](const Matrix& b, const Vector* hint, bool thorough) {
    return subspace_min_ratio(t, b, detail::inner_budget(budget, thorough, 0x6231u), hint);
  };
  auto normalize = [](const Matrix& b) { return orthonormalize(b); };
  SearchResult r = parameter_search(std::move(structured), m, n, eval, normalize, Sense::maximize,
                                    detail::search_options(budget, Eigen::Index(m) * n), rng);
  WidthEstimate e{WidthKind::bernstein, n, 0, Direction::lower_bound, {}};
  detail::fill_search_diagnostics(e, r, budget);
  return e;
}

/// c_n(T): inf over subspaces M of codimension < n of ||T J_M||. M is the
/// null space of n-1 constraint functionals (the rows of W).
inline WidthEstimate gelfand_number(const FiniteOperator& t, int n, const OptimBudget& budget,
                                    EstimatorMode mode = EstimatorMode::automatic) {
  detail::Spectrum spec = detail::spectrum(t.matrix());
  if (auto e = detail::trivial_width(WidthKind::gelfand, t, n, budget, mode, spec)) return *e;
  const int m = static_cast<int>(t.m_in());
  const int k = m - n + 1;  // dim M
  Rng rng = make_stream(budget.seed, 0x67656cu, n);

  std::vector<Matrix> structured;
  structured.push_back(spec.v.leftCols(n - 1).transpose());
  auto from_subspace = [&](const Matrix& z) { return Matrix(detail::complement_basis(z).transpose()); };
  for (const auto& s : detail::coordinate_subsets(m, k, std::max(16, budget.restarts / 4), rng))
    structured.push_back(from_subspace(detail::coordinate_basis(m, s)));
  structured.push_back(from_subspace(detail::block_constant_basis(m, k)));
  structured.push_back(from_subspace(detail::constant_augmented_basis(m, k)));

  auto eval = [&](const Matrix& w, const Vector* hint, bool thorough) {
    Matrix z = null_space_basis(w, m);
    return restricted_norm(t, z, detail::inner_budget(budget, thorough, 0x6331u), hint);
  };
  auto normalize = [](const Matrix& w) { return detail::orthonormal_rows(w); };
  SearchResult r = parameter_search(std::move(structured), n - 1, m, eval, normalize, Sense::minimize,
                                    detail::search_options(budget, Eigen::Index(m) * (n - 1)), rng);
  WidthEstimate e{WidthKind::gelfand, n, 0, Direction::upper_bound, {}};
  detail::fill_search_diagnostics(e, r, budget);
  return e;
}

/// d_n(T): inf over subspaces N of the target with dim N < n of
/// sup over the unit ball of dist(Tx, N).
inline WidthEstimate kolmogorov_number(const FiniteOperator& t, int n, const OptimBudget& budget,
                                       EstimatorMode mode = EstimatorMode::automatic) {
  detail::Spectrum spec = detail::spectrum(t.matrix());
  if (auto e = detail::trivial_width(WidthKind::kolmogorov, t, n, budget, mode, spec)) return *e;
  const int m_out = static_cast<int>(t.m_out());
  const int k = n - 1;  // dim N
  Rng rng = make_stream(budget.seed, 0x6b6f6cu, n);

  std::vector<Matrix> structured;
  structured.push_back(spec.u.leftCols(k));
  for (const auto& s : detail::coordinate_subsets(m_out, k, std::max(16, budget.restarts / 4), rng))
    structured.push_back(detail::coordinate_basis(m_out, s));
  for (const auto& s : detail::coordinate_subsets(static_cast<int>(t.m_in()), k, 8, rng)) {
    Matrix img = t.matrix() * detail::coordinate_basis(static_cast<int>(t.m_in()), s);
    if (SubspaceBasis::full_rank(img)) structured.push_back(orthonormalize(img));
  }
  structured.push_back(detail::block_constant_basis(m_out, k));
  structured.push_back(detail::constant_augmented_basis(m_out, k));

  auto eval = [&](const Matrix& v, const Vector* hint, bool thorough) {
    DeviationValue d = kolmogorov_deviation(t, v, detail::inner_budget(budget, thorough, 0x6431u), hint);
    return CandidateValue{d.value, d.witness};
  };
  auto normalize = [](const Matrix& v) { return orthonormalize(v); };
  SearchResult r = parameter_search(std::move(structured), m_out, k, eval, normalize, Sense::minimize,
                                    detail::search_options(budget, Eigen::Index(m_out) * k), rng);
  WidthEstimate e{WidthKind::kolmogorov, n, 0, Direction::upper_bound, {}};
  detail::fill_search_diagnostics(e, r, budget);
  return e;
}

/// a_n(T): inf over rank < n operators L of ||T - L||. L = U V^T with the
/// factor pair stacked as [U; V] in the search parameter.
inline WidthEstimate approximation_number(const FiniteOperator& t, int n, const OptimBudget& budget,
                                          EstimatorMode mode = EstimatorMode::automatic) {
  detail::Spectrum spec = detail::spectrum(t.matrix());
  if (auto e = detail::trivial_width(WidthKind::approximation, t, n, budget, mode, spec)) return *e;
  const int m_in = static_cast<int>(t.m_in()), m_out = static_cast<int>(t.m_out());
  const int k = n - 1;
  const Matrix& a = t.matrix();
  Rng rng = make_stream(budget.seed, 0x617070u, n);

  auto stack = [&](const Matrix& u, const Matrix& v) {
    Matrix x(m_out + m_in, k);
    x << u, v;
    return x;
  };
  std::vector<Matrix> structured;
  structured.push_back(stack(spec.u.leftCols(k) * spec.sigma.head(k).asDiagonal(), spec.v.leftCols(k)));
  for (const auto& s : detail::coordinate_subsets(m_in, k, 32, rng)) {
    Matrix e = detail::coordinate_basis(m_in, s);
    structured.push_back(stack(a * e, e));  // T P_S
  }
  for (const auto& s : detail::coordinate_subsets(m_out, k, 32, rng)) {
    Matrix e = detail::coordinate_basis(m_out, s);
    structured.push_back(stack(e, a.transpose() * e));  // P_S T
  }
  for (double c : {0.5, 0.75}) {
    Matrix e = detail::coordinate_basis(m_in, detail::coordinate_subsets(m_in, k, 1, rng).front());
    structured.push_back(stack(c * (a * e), e));
  }
  auto eval = [&](const Matrix& x, const Vector* hint, bool thorough) {
    Matrix r = a - x.topRows(m_out) * x.bottomRows(m_in).transpose();
    OperatorNorm nr = operator_norm(r, t.src(), t.tgt(), detail::inner_budget(budget, thorough, 0x6131u), hint);
    return CandidateValue{nr.value, nr.witness};
  };
  // l_1 sources lift and l_inf targets extend, so there a_n = d_n resp. a_n = c_n
  // and the best subspace found for those widths yields an approximant:
  // column-wise best approximations from N, or row-wise Hahn-Banach extensions
  // of the row functionals restricted to ker W. The norm of T - L is exact for
  // these pairs, and min(c, d) <= a then holds between the estimates as well.
  std::vector<Matrix> derived;
  int derived_evals = 0;
  if (t.src().is(1.0)) {
    WidthEstimate d = kolmogorov_number(t, n, budget, mode);
    derived_evals += d.diagnostics.evaluations;
    const Matrix& v = d.diagnostics.parameter;
    if (v.rows() == m_out && v.cols() == k) {
      Matrix basis = orthonormalize(v);
      Matrix z(m_in, k);
      for (int j = 0; j < m_in; ++j) {
        Vector res;
        subspace_distance(a.col(j), basis, t.tgt(), &res);
        z.row(j) = (basis.transpose() * (a.col(j) - res)).transpose();
      }
      derived.push_back(stack(basis, z));
    }
  }
  if (t.tgt().is_infinite()) {
    WidthEstimate c = gelfand_number(t, n, budget, mode);
    derived_evals += c.diagnostics.evaluations;
    const Matrix& w = c.diagnostics.parameter;
    if (w.rows() == k && w.cols() == m_in) {
      Matrix basis = orthonormalize(Matrix(w.transpose()));
      Matrix z(m_out, k);
      for (int i = 0; i < m_out; ++i) {
        Vector row = a.row(i).transpose(), res;
        subspace_distance(row, basis, t.src().dual(), &res);
        z.row(i) = (basis.transpose() * (row - res)).transpose();
      }
      derived.push_back(stack(z, basis));
    }
  }

  if (!derived.empty()) {
    SearchResult r;
    r.evaluations = derived_evals;
    r.converged = true;
    bool have = false;
    for (const Matrix& x : derived) {
      CandidateValue v = eval(x, nullptr, true);
      ++r.evaluations;
      if (!have || v.value < r.value) {
        r.best = x;
        r.value = v.value;
        r.witness = v.witness;
        have = true;
      }
    }
    WidthEstimate e{WidthKind::approximation, n, 0, Direction::upper_bound, {}};
    detail::fill_search_diagnostics(e, r, budget);
    return e;
  }
  auto normalize = [](const Matrix& x) { return x; };
  SearchResult r = parameter_search(std::move(structured), m_out + m_in, k, eval, normalize, Sense::minimize,
                                    detail::search_options(budget, Eigen::Index(m_out + m_in) * k), rng);
  WidthEstimate e{WidthKind::approximation, n, 0, Direction::upper_bound, {}};
  detail::fill_search_diagnostics(e, r, budget);
  return e;
}

/// x_n(T): sup over A : l_2^m -> l_src^m with ||A|| <= 1 of a_n(TA).
///
/// For tgt = 2, a_n(TA) is the n-th singular value, so each candidate gives a
/// lower bound (certified whenever ||A||_{2->src} is). For other targets the
/// inner a_n is itself estimated from above and the result is heuristic.
inline WidthEstimate weyl_number(const FiniteOperator& t, int n, const OptimBudget& budget,
                                 EstimatorMode mode = EstimatorMode::automatic) {
  detail::Spectrum spec = detail::spectrum(t.matrix());
  if (auto e = detail::trivial_width(WidthKind::weyl, t, n, budget, mode, spec)) return *e;
  const int m = static_cast<int>(t.m_in());
  const Matrix& a = t.matrix();
  const bool hilbert_target = t.tgt().is(2.0);
  Rng rng = make_stream(budget.seed, 0x7765796cu, n);

  std::vector<Matrix> structured;
  structured.push_back(Matrix::Identity(m, m));
  structured.push_back(spec.v.leftCols(n) * spec.v.leftCols(n).transpose());
  for (const auto& s : detail::coordinate_subsets(m, n, std::max(16, budget.restarts / 4), rng)) {
    Matrix d = Matrix::Zero(m, m);
    for (int i : s) d(i, i) = 1.0;
    structured.push_back(d);
  }
  for (Matrix& x : structured) x /= x.norm();

  bool normalization_certified = true;
  auto eval = [&](const Matrix& x, const Vector*, bool thorough) {
    OptimBudget ib = detail::inner_budget(budget, thorough, 0x7831u);
    OperatorNorm na = operator_norm(x, Exponent(2), t.src(), ib);
    if (!na.certified) normalization_certified = false;
    if (na.value == 0) return CandidateValue{0.0, Vector::Zero(m)};
    Matrix ta = a * x;
    Eigen::JacobiSVD<Matrix> svd(ta, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vector witness = x * svd.matrixV().col(n - 1);
    double an;
    if (hilbert_target) {
      an = svd.singularValues()[n - 1];
    } else {
      // residual of the truncated SVD bounds a_n(TA) from above
      Matrix trunc = svd.matrixU().leftCols(n - 1) * svd.singularValues().head(n - 1).asDiagonal() *
                     svd.matrixV().leftCols(n - 1).transpose();
      an = operator_norm(ta - trunc, Exponent(2), t.tgt(), ib).value;
      if (thorough) {
        OptimBudget sub = ib;
        sub.restarts = std::max(4, budget.restarts / 8);
        FiniteOperator inner(ta, Exponent(2), t.tgt());
        an = std::min(an, approximation_number(inner, n, sub).value);
      }
    }
    return CandidateValue{an / na.value, detail::unit_source(witness, t.src())};
  };
  auto normalize = [](const Matrix& x) {
    double nx = x.norm();
    return nx > 0 ? Matrix(x / nx) : x;
  };
  SearchResult r = parameter_search(std::move(structured), m, m, eval, normalize, Sense::maximize,
                                    detail::search_options(budget, Eigen::Index(m) * m), rng);
  WidthEstimate e{WidthKind::weyl, n, 0, Direction::heuristic, {}};
  if (hilbert_target && normalization_certified) e.direction = Direction::lower_bound;
  detail::fill_search_diagnostics(e, r, budget);
  return e;
}

inline WidthEstimate estimate_width(WidthKind kind, const FiniteOperator& t, int n, const OptimBudget& budget,
                                    EstimatorMode mode = EstimatorMode::automatic) {
  switch (kind) {
    case WidthKind::approximation: return approximation_number(t, n, budget, mode);
    case WidthKind::kolmogorov: return kolmogorov_number(t, n, budget, mode);
    case WidthKind::gelfand: return gelfand_number(t, n, budget, mode);
    case WidthKind::bernstein: return bernstein_number(t, n, budget, mode);
    case WidthKind::weyl: return weyl_number(t, n, budget, mode);
  }
  fail_validation("unknown width kind");
}

/// Nonincreasing repair of a width sequence. Upper-bound and heuristic
/// entries take the running minimum from the left; lower-bound entries take
/// the running maximum from the right, which keeps them lower bounds. Exact
/// entries are left as they are. Raw violations above 1e-9 are flagged.
inline void enforce_monotone(std::vector<WidthEstimate>& seq) {
  constexpr double tol = 1e-9;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    WidthEstimate& cur = seq[i];
    if (cur.direction == Direction::lower_bound || cur.direction == Direction::exact) continue;
    double prev = seq[i - 1].value;
    if (cur.value > prev) {
      if (cur.value - prev > tol) cur.diagnostics.clamped = true;
      cur.value = prev;
    }
  }
  for (std::size_t i = seq.size() - 1; i-- > 0;) {
    WidthEstimate& cur = seq[i];
    if (cur.direction != Direction::lower_bound) continue;
    double next = seq[i + 1].value;
    if (cur.value < next) {
      if (next - cur.value > tol) cur.diagnostics.clamped = true;
      cur.value = next;
    }
  }
  // remaining violations (mixed directions) fall back to the running minimum
  for (std::size_t i = 1; i < seq.size(); ++i) {
    WidthEstimate& cur = seq[i];
    if (cur.direction == Direction::exact || cur.value <= seq[i - 1].value) continue;
    if (cur.value - seq[i - 1].value > tol) cur.diagnostics.clamped = true;
    cur.value = seq[i - 1].value;
  }
}

/// Estimates for n = 1..n_max followed by the monotone repair.
inline std::vector<WidthEstimate> width_profile(WidthKind kind, const FiniteOperator& t, int n_max,
                                                const OptimBudget& budget,
                                                EstimatorMode mode = EstimatorMode::automatic) {
  std::vector<WidthEstimate> seq;
  for (int n = 1; n <= n_max; ++n) seq.push_back(estimate_width(kind, t, n, budget, mode));
  enforce_monotone(seq);
  return seq;
}

}  // namespace widthlab
