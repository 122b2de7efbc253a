#pragma once

// Seeded multi-start local search used by the norm and width estimators.
//
// Every random draw comes from a stream derived from (seed, tags...), so a
// restart's outcome depends only on its own index and never on scheduling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "widthlab/errors.hpp"
#include "widthlab/pnorm.hpp"

namespace widthlab {

/// Search effort for the stochastic estimators.
struct OptimBudget {
  int restarts = 64;
  int max_iter = 500;
  std::uint64_t seed = 0;

  void validate() const {
    if (restarts < 1) fail_validation("empty optimization budget");
    if (max_iter < 1) fail_validation("optimization budget needs max_iter >= 1");
  }
};

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <class... Tags>
std::uint64_t derive_seed(std::uint64_t seed, Tags... tags) {
  std::uint64_t h = splitmix64(seed);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(tags))), ...);
  return h;
}

template <class... Tags>
Rng make_stream(std::uint64_t seed, Tags... tags) {
  return Rng(derive_seed(seed, tags...));
}

inline Vector gaussian_vector(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline Matrix gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

/// Orthonormal basis of the column span (thin Householder QR).
inline Matrix orthonormalize(const Matrix& b) {
  Eigen::HouseholderQR<Matrix> qr(b);
  return qr.householderQ() * Matrix::Identity(b.rows(), b.cols());
}

/// Orthonormal basis of null(W) for W of full row rank; W may have zero rows.
inline Matrix null_space_basis(const Matrix& w, Eigen::Index ambient) {
  if (w.rows() == 0) return Matrix::Identity(ambient, ambient);
  Eigen::HouseholderQR<Matrix> qr(w.transpose());
  Matrix q = qr.householderQ();
  return q.rightCols(ambient - w.rows());
}

enum class Sense { minimize, maximize };

inline bool improves(Sense s, double candidate, double incumbent) {
  return s == Sense::maximize ? candidate > incumbent : candidate < incumbent;
}

struct LocalOptions {
  int max_iter = 500;
  double rel_tol = 1e-10;
  /// Compass-search polish after the gradient phase; used when the objective
  /// has kinks (l_1 or l_inf norms).
  bool polish = false;
};

struct LocalResult {
  double value = 0;
  Vector point;
  int iterations = 0;
  bool converged = false;
};

/// Projected-gradient search on the Euclidean unit sphere for a 0-homogeneous
/// objective. `f(c, grad)` returns the value at c and, when grad is non-null,
/// writes a (sub)gradient. Steps are halved until the objective improves; the
/// search stops when the relative improvement falls below rel_tol, no
/// improving step exists, or max_iter is reached. Smooth objectives are then
/// finished by safeguarded Newton steps.
template <class F>
LocalResult optimize_on_sphere(F&& f, Vector start, Sense sense, const LocalOptions& opt) {
  LocalResult r;
  if (start.norm() == 0) start = Vector::Unit(start.size(), 0);
  Vector c = start.normalized();
  Vector g, g_new, c_new;
  double v = f(c, &g);
  const double dir_sign = sense == Sense::maximize ? 1.0 : -1.0;

  auto gradient_phase = [&](int budget) {
    double step = 0.5;
    for (int it = 0; it < budget; ++it) {
      ++r.iterations;
      g -= g.dot(c) * c;
      double gn = g.norm();
      if (!(gn > 1e-15)) return true;
      Vector dir = (dir_sign / gn) * g;
      bool accepted = false;
      double v_new = v;
      while (step > 1e-13) {
        c_new = (c + step * dir).normalized();
        v_new = f(c_new, &g_new);
        if (improves(sense, v_new, v)) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) return true;
      double rel = std::fabs(v_new - v) / std::max(std::fabs(v), 1e-300);
      c = c_new;
      v = v_new;
      std::swap(g, g_new);
      step = std::min(1.0, 2.0 * step);
      if (rel < opt.rel_tol) return true;
    }
    return false;
  };

  // Newton steps in tangent coordinates u -> c + T u (the objective is
  // 0-homogeneous), with a finite-difference Hessian of the analytic gradient
  auto newton_phase = [&](int budget) {
    const Eigen::Index k = c.size();
    if (k < 2) return;
    for (int it = 0; it < budget; ++it) {
      Eigen::HouseholderQR<Matrix> qr{Matrix(c)};
      Matrix tb = Matrix(qr.householderQ()).rightCols(k - 1);
      Vector gt = tb.transpose() * g;
      if (!(gt.norm() > 1e-15 * std::max(std::fabs(v), 1e-300))) return;
      const double h = 1e-5;
      Matrix hess(k - 1, k - 1);
      for (Eigen::Index i = 0; i < k - 1; ++i) {
        Vector gp, gm;
        f(Vector(c + h * tb.col(i)), &gp);
        f(Vector(c - h * tb.col(i)), &gm);
        hess.col(i) = tb.transpose() * (gp - gm) / (2 * h);
      }
      hess = 0.5 * (hess + hess.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Matrix> es(hess);
      Vector lam = es.eigenvalues().cwiseAbs().cwiseMax(1e-8 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()));
      Vector u = es.eigenvectors() * (es.eigenvectors().transpose() * gt).cwiseQuotient(lam);
      if (sense == Sense::minimize) u = -u;
      bool accepted = false;
      for (double step = 1.0; step > 1e-4; step *= 0.5) {
        c_new = (c + step * (tb * u)).normalized();
        double v_new = f(c_new, &g_new);
        if (improves(sense, v_new, v)) {
          c = c_new;
          v = v_new;
          std::swap(g, g_new);
          accepted = true;
          break;
        }
      }
      if (!accepted) return;
      ++r.iterations;
    }
  };

  r.converged = gradient_phase(opt.max_iter);
  if (!opt.polish) newton_phase(50);
  if (opt.polish) {
    double h = 0.05;
    int sweeps = 0;
    while (h > 1e-10 && sweeps < 4 * opt.max_iter) {
      ++sweeps;
      bool moved = false;
      for (Eigen::Index i = 0; i < c.size(); ++i) {
        for (double s : {1.0, -1.0}) {
          c_new = c;
          c_new[i] += s * h;
          if (c_new.norm() == 0) continue;
          c_new.normalize();
          double v_new = f(c_new, nullptr);
          if (improves(sense, v_new, v)) {
            c = c_new;
            v = v_new;
            moved = true;
          }
        }
      }
      if (!moved) h *= 0.5;
    }
    v = f(c, &g);
    gradient_phase(std::max(1, opt.max_iter / 5));
  }
  r.value = v;
  r.point = c;
  return r;
}

struct MultiStartResult {
  double value = 0;
  Vector point;
  int starts = 0;
  bool converged = false;
};

/// Best local optimum over the given starts, refined once more at a tight
/// tolerance; the first start wins ties.
template <class F>
MultiStartResult multistart_on_sphere(F&& f, const std::vector<Vector>& starts, Sense sense,
                                      const LocalOptions& opt) {
  MultiStartResult best;
  bool have = false;
  for (const Vector& s : starts) {
    if (s.norm() == 0) continue;
    LocalResult r = optimize_on_sphere(f, s, sense, opt);
    ++best.starts;
    if (!have || improves(sense, r.value, best.value)) {
      best.value = r.value;
      best.point = r.point;
      best.converged = r.converged;
      have = true;
    }
  }
  if (!have) fail_validation("no usable start vectors");
  // refine the winner to near machine precision
  LocalOptions fine = opt;
  fine.rel_tol = std::min(opt.rel_tol, 1e-15);
  fine.max_iter = 4 * opt.max_iter;
  LocalResult r = optimize_on_sphere(f, best.point, sense, fine);
  if (improves(sense, r.value, best.value)) {
    best.value = r.value;
    best.point = r.point;
  }
  return best;
}

/// Objective ||A c||_q / ||B c||_p with its gradient.
struct RatioObjective {
  Matrix num;
  Exponent num_exp;
  Matrix den;
  Exponent den_exp;

  double operator()(const Vector& c, Vector* grad) const {
    Vector y = num * c;
    Vector z = den * c;
    if (!grad) {
      double d = pnorm(z, den_exp);
      return d == 0 ? std::numeric_limits<double>::infinity() : pnorm(y, num_exp) / d;
    }
    Vector gy, gz;
    double n = norm_gradient(y, num_exp, gy);
    double d = norm_gradient(z, den_exp, gz);
    if (d == 0) {
      grad->setZero(c.size());
      return std::numeric_limits<double>::infinity();
    }
    *grad = (num.transpose() * gy) / d - (n / (d * d)) * (den.transpose() * gz);
    return n / d;
  }

  bool nonsmooth() const {
    return num_exp.is(1.0) || num_exp.is_infinite() || den_exp.is(1.0) || den_exp.is_infinite();
  }
};

/// Result of evaluating one candidate in a subspace/parameter search.
struct CandidateValue {
  double value = 0;
  Vector witness;  // inner optimizer's best point, reused as a warm start
  bool exact = false;  // inner problem solved by enumeration rather than sampling
};

struct SearchOptions {
  int random_candidates = 64;
  int refine_count = 3;
  int refine_iters = 200;
  double sigma0 = 0.3;
};

struct SearchResult {
  Matrix best;
  double value = 0;
  Vector witness;
  int evaluations = 0;
  bool converged = false;
};

/// Multi-start search over parameter matrices (subspace bases, constraint
/// functionals, factor pairs). Structured candidates are evaluated first, then
/// `random_candidates` Gaussian draws; the best few are refined by a (1+1)
/// evolution strategy with step adaptation. The final incumbent is
/// re-evaluated with the thorough inner evaluation.
///
/// `eval(X, hint, thorough)` returns the objective for parameter X, with
/// `hint` an optional warm start from a nearby parameter.
/// `normalize(X)` maps a raw matrix to canonical form (e.g. orthonormal basis).
template <class Eval, class Normalize>
SearchResult parameter_search(std::vector<Matrix> structured, Eigen::Index rows, Eigen::Index cols,
                              Eval&& eval, Normalize&& normalize, Sense sense,
                              const SearchOptions& opt, Rng& rng) {
  SearchResult out;
  std::vector<Matrix> pool = std::move(structured);
  for (int i = 0; i < opt.random_candidates; ++i) pool.push_back(normalize(gaussian_matrix(rng, rows, cols)));
  if (pool.empty()) fail_validation("parameter search with no candidates");

  std::vector<CandidateValue> vals;
  vals.reserve(pool.size());
  for (const Matrix& x : pool) {
    vals.push_back(eval(x, static_cast<const Vector*>(nullptr), false));
    ++out.evaluations;
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return improves(sense, vals[a].value, vals[b].value);
  });

  bool have = false;
  Matrix best;
  CandidateValue best_val;
  const int refine = std::min<int>(opt.refine_count, static_cast<int>(pool.size()));
  for (int r = 0; r < refine; ++r) {
    Matrix x = pool[order[r]];
    CandidateValue cur = vals[order[r]];
    double scale = x.norm() / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, x.size())));
    if (scale == 0) scale = 1.0;
    double sigma = opt.sigma0;
    for (int it = 0; it < opt.refine_iters && sigma > 1e-7; ++it) {
      Matrix y = normalize(x + (sigma * scale) * gaussian_matrix(rng, rows, cols));
      CandidateValue cand = eval(y, cur.witness.size() ? &cur.witness : nullptr, false);
      ++out.evaluations;
      if (improves(sense, cand.value, cur.value)) {
        x = std::move(y);
        cur = std::move(cand);
        sigma *= 2.0;
      } else {
        sigma *= 0.8408964152537145;  // 2^(-1/4): balances at a 1/5 success rate
      }
    }
    if (!have || improves(sense, cur.value, best_val.value)) {
      best = x;
      best_val = cur;
      have = true;
      out.converged = sigma <= 1e-7 || opt.refine_iters == 0;
    }
  }
  CandidateValue final_val = eval(best, best_val.witness.size() ? &best_val.witness : nullptr, true);
  ++out.evaluations;
  out.best = best;
  out.value = final_val.value;
  out.witness = final_val.witness;
  return out;
}

}  // namespace widthlab
