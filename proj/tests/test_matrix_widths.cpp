#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "widthlab/width_checks.hpp"

using namespace widthlab;

namespace {

const OptimBudget kBudget{64, 500, 7};

Matrix signed_permutation(int m, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> perm(m);
  for (int i = 0; i < m; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix p = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) p(i, perm[i]) = (rng() & 1) ? 1.0 : -1.0;
  return p;
}

Matrix diag3(double a, double b, double c) {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = a;
  d(1, 1) = b;
  d(2, 2) = c;
  return d;
}

}  // namespace

TEST(Bernstein, IdentityClosedForms) {
  for (int n = 1; n <= 5; ++n) {
    auto e = bernstein_number(FiniteOperator::identity_of(5, Exponent(1), Exponent(1)), n, kBudget);
    EXPECT_DOUBLE_EQ(e.value, 1.0);
    EXPECT_EQ(e.direction, Direction::exact);
  }
  auto e = bernstein_number(FiniteOperator::identity_of(5, Exponent(2), Exponent(2)), 2, kBudget);
  EXPECT_DOUBLE_EQ(e.value, 1.0);
  e = bernstein_number(FiniteOperator::identity_of(4, Exponent(1), Exponent(2)), 4, kBudget);
  EXPECT_NEAR(e.value, 0.5, 1e-15);
  EXPECT_EQ(e.direction, Direction::exact);
}

TEST(Bernstein, HilbertPairIsSingularValue) {
  Rng rng(1);
  Matrix a = gaussian_matrix(rng, 5, 5);
  Vector s = a.jacobiSvd().singularValues();
  auto e = bernstein_number(FiniteOperator(a, Exponent(2), Exponent(2)), 3, kBudget);
  EXPECT_EQ(e.direction, Direction::exact);
  EXPECT_NEAR(e.value, s[2], 1e-12 * s[0]);
}

// For p1 <= p2, b_n(id_{p1,p2}^m) = n^{1/p2 - 1/p1}: coordinate subspaces attain
// it, and every n-dimensional subspace holds a vector whose largest modulus is
// attained on n coordinates. A signed permutation has the same widths and
// forces the numerical search.
TEST(Bernstein, SearchMatchesIsometryOracle) {
  struct Case {
    double p1, p2;
  };
  for (Case c : {Case{1, 2}, Case{1, 4}, Case{2, 4}, Case{1.5, 3}}) {
    Exponent p1(c.p1), p2(c.p2);
    FiniteOperator t(signed_permutation(5, 3), p1, p2);
    for (int n = 1; n <= 5; ++n) {
      auto e = bernstein_number(t, n, kBudget);
      double oracle = std::pow(double(n), p2.reciprocal() - p1.reciprocal());
      EXPECT_NEAR(e.value, oracle, 1e-6 * oracle) << c.p1 << " " << c.p2 << " n=" << n;
      EXPECT_NE(e.direction, Direction::heuristic);
    }
  }
}

TEST(Bernstein, SearchModeFindsOneOnEqualExponents) {
  for (Exponent p : {Exponent(1), Exponent(4), Exponent::infinity()}) {
    FiniteOperator t = FiniteOperator::identity_of(4, p, p);
    for (int n = 2; n <= 4; ++n) {
      auto e = bernstein_number(t, n, kBudget, EstimatorMode::search);
      EXPECT_NEAR(e.value, 1.0, 1e-6);
      EXPECT_EQ(e.direction, Direction::lower_bound);
    }
  }
}

TEST(Bernstein, IndexExceedsDimension) {
  try {
    bernstein_number(FiniteOperator::identity_of(3, Exponent(1), Exponent(2)), 4, kBudget);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "index exceeds dimension");
    EXPECT_EQ(e.kind(), ErrorKind::validation);
  }
}

TEST(Bernstein, WitnessAttainsReportedRatio) {
  Rng rng(19);
  Matrix a = gaussian_matrix(rng, 4, 4);
  FiniteOperator t(a, Exponent(4), Exponent(1.5));
  auto e = bernstein_number(t, 2, kBudget);
  const Vector& x = e.diagnostics.witness;
  ASSERT_EQ(x.size(), 4);
  EXPECT_NEAR(pnorm(Vector(a * x), Exponent(1.5)) / pnorm(x, Exponent(4)), e.value, 1e-9 * e.value);
}

TEST(Approximation, HilbertAndFirstIndex) {
  auto e = approximation_number(FiniteOperator(diag3(3, 2, 1), Exponent(2), Exponent(2)), 2, kBudget);
  EXPECT_NEAR(e.value, 2.0, 1e-12);
  EXPECT_EQ(e.direction, Direction::exact);

  Rng rng(2);
  Matrix a = gaussian_matrix(rng, 3, 4);
  FiniteOperator t(a, Exponent(1), Exponent(3));
  auto a1 = approximation_number(t, 1, kBudget);
  EXPECT_NEAR(a1.value, operator_norm(a, Exponent(1), Exponent(3), kBudget).value, 1e-14);
}

// Brute-force rank-1 search for a_2(id_{1,2}^2): L = s (cos a, sin a)(cos b, sin b)^T
// with the certified 1 -> 2 norm (largest column norm), on a coarse grid
// followed by successively zoomed grids around the incumbent.
TEST(Approximation, BracketedByGridOracleOnSmallIdentity) {
  auto value = [](double al, double be, double s) {
    Vector u{{std::cos(al), std::sin(al)}}, v{{std::cos(be), std::sin(be)}};
    Matrix r = Matrix::Identity(2, 2) - s * u * v.transpose();
    return std::max(r.col(0).norm(), r.col(1).norm());
  };
  double best_al = 0, best_be = 0, best_s = 0, grid = value(0, 0, 0);
  double h_ang = std::numbers::pi / 60, h_s = 0.05;
  double lo_al = 0, lo_be = 0, lo_s = -2;
  int count_ang = 60, count_s = 81;
  for (int pass = 0; pass < 6; ++pass) {
    for (int i = 0; i <= count_ang; ++i)
      for (int j = 0; j <= count_ang; ++j)
        for (int k = 0; k <= count_s; ++k) {
          double al = lo_al + h_ang * i, be = lo_be + h_ang * j, s = lo_s + h_s * k;
          double v = value(al, be, s);
          if (v < grid) grid = v, best_al = al, best_be = be, best_s = s;
        }
    lo_al = best_al - 2 * h_ang, lo_be = best_be - 2 * h_ang, lo_s = best_s - 2 * h_s;
    h_ang /= 5, h_s /= 5;
    count_ang = 20, count_s = 20;
  }
  FiniteOperator t = FiniteOperator::identity_of(2, Exponent(1), Exponent(2));
  auto a2 = approximation_number(t, 2, kBudget);
  auto b2 = bernstein_number(t, 2, kBudget);
  EXPECT_NEAR(b2.value, std::sqrt(0.5), 1e-12);
  EXPECT_EQ(a2.direction, Direction::upper_bound);
  EXPECT_LE(a2.value, grid + 1e-9);
  EXPECT_GE(a2.value, b2.value - 1e-9);
  EXPECT_NEAR(a2.value, grid, 1e-5);
}

TEST(Kolmogorov, IdentityAndFirstIndex) {
  for (int n = 1; n <= 4; ++n) {
    auto e = kolmogorov_number(FiniteOperator::identity_of(4, Exponent(2), Exponent(2)), n, kBudget);
    EXPECT_DOUBLE_EQ(e.value, 1.0);
  }
  Rng rng(4);
  Matrix a = gaussian_matrix(rng, 3, 3);
  auto d1 = kolmogorov_number(FiniteOperator(a, Exponent::infinity(), Exponent(1.5)), 1, kBudget);
  EXPECT_NEAR(d1.value, operator_norm(a, Exponent::infinity(), Exponent(1.5), kBudget).value, 1e-14);
  EXPECT_EQ(d1.direction, Direction::exact);
}

// d_2(id_{1,2}^2): brute force over lines N = span(cos t, sin t); the deviation is
// the largest distance of a column to N.
TEST(Kolmogorov, GridOracleOnSmallIdentity) {
  double grid = 1e9;
  for (int i = 0; i < 3600; ++i) {
    double th = std::numbers::pi * i / 3600;
    Vector u{{std::cos(th), std::sin(th)}};
    double dev = 0;
    for (int j = 0; j < 2; ++j) {
      Vector e = Vector::Unit(2, j);
      dev = std::max(dev, (e - e.dot(u) * u).norm());
    }
    grid = std::min(grid, dev);
  }
  auto d2 = kolmogorov_number(FiniteOperator::identity_of(2, Exponent(1), Exponent(2)), 2, kBudget);
  EXPECT_NEAR(d2.value, grid, 1e-6);
  EXPECT_NEAR(d2.value, std::sqrt(0.5), 1e-6);
}

TEST(Kolmogorov, GeneralTargetDeviationMatchesPrimalDefinition) {
  // sup_x dist_q(Tx, N) / ||x||_p, computed through the adjoint, against direct
  // sampling of the primal definition
  Rng rng(8);
  Matrix a = gaussian_matrix(rng, 4, 4);
  Matrix v = orthonormalize(gaussian_matrix(rng, 4, 2));
  FiniteOperator t(a, Exponent(3), Exponent(1.5));
  auto dev = kolmogorov_deviation(t, v, OptimBudget{64, 500, 1});
  double sampled = 0;
  for (int s = 0; s < 3000; ++s) {
    Vector x = gaussian_vector(rng, 4);
    sampled = std::max(sampled, subspace_distance(a * x, v, Exponent(1.5)) / pnorm(x, Exponent(3)));
  }
  EXPECT_GE(dev.value, sampled - 1e-9);
  EXPECT_LE(dev.value, sampled * 1.05);
  const Vector& x = dev.witness;
  EXPECT_NEAR(subspace_distance(a * x, v, Exponent(1.5)) / pnorm(x, Exponent(3)), dev.value, 1e-6 * dev.value);
}

TEST(Gelfand, IdentityAndFirstIndex) {
  for (int n = 1; n <= 4; ++n) {
    auto e = gelfand_number(FiniteOperator::identity_of(4, Exponent(2), Exponent(2)), n, kBudget);
    EXPECT_DOUBLE_EQ(e.value, 1.0);
  }
  Rng rng(6);
  Matrix a = gaussian_matrix(rng, 3, 3);
  auto c1 = gelfand_number(FiniteOperator(a, Exponent(2), Exponent(1)), 1, kBudget);
  EXPECT_NEAR(c1.value, operator_norm(a, Exponent(2), Exponent(1), kBudget).value, 1e-14);
}

// c_2(id_{2,1}^3): brute force over unit functionals w on a grid of the sphere;
// M = null(w) is a plane and the restricted norm is scanned over its unit circle.
TEST(Gelfand, GridOracleOnSmallIdentity) {
  double grid = 1e9;
  const int steps = 120;
  for (int i = 0; i <= steps; ++i) {
    double phi = 0.5 * std::numbers::pi * i / steps;
    for (int j = 0; j < steps; ++j) {
      double psi = std::numbers::pi * j / steps;
      Matrix w(1, 3);
      w << std::sin(phi) * std::cos(psi), std::sin(phi) * std::sin(psi), std::cos(phi);
      Matrix z = null_space_basis(w, 3);
      double inner = 0;
      for (int k = 0; k < 720; ++k) {
        double th = std::numbers::pi * k / 720;
        Vector x = std::cos(th) * z.col(0) + std::sin(th) * z.col(1);
        inner = std::max(inner, x.lpNorm<1>());
      }
      grid = std::min(grid, inner);
    }
  }
  auto c2 = gelfand_number(FiniteOperator::identity_of(3, Exponent(2), Exponent(1)), 2, kBudget);
  EXPECT_EQ(c2.direction, Direction::upper_bound);
  EXPECT_NEAR(c2.value, grid, 5e-3 * grid);
}

TEST(Weyl, HilbertCases) {
  for (int n = 1; n <= 4; ++n)
    EXPECT_DOUBLE_EQ(weyl_number(FiniteOperator::identity_of(4, Exponent(2), Exponent(2)), n, kBudget).value, 1.0);
  auto e = weyl_number(FiniteOperator(diag3(3, 2, 1), Exponent(2), Exponent(2)), 2, kBudget);
  EXPECT_NEAR(e.value, 2.0, 1e-12);
}

TEST(Weyl, LowerBoundModeOnHilbertTarget) {
  // x_n(id_{1,2}^m) >= n^{-1/2}: A = coordinate projection onto n coordinates / sqrt(n)
  FiniteOperator t = FiniteOperator::identity_of(4, Exponent(1), Exponent(2));
  for (int n = 2; n <= 4; ++n) {
    auto e = weyl_number(t, n, kBudget);
    EXPECT_EQ(e.direction, Direction::lower_bound);
    EXPECT_GE(e.value, 1.0 / std::sqrt(double(n)) - 1e-12);
    EXPECT_LE(e.value, bernstein_number(FiniteOperator::identity_of(4, Exponent(2), Exponent(2)), n, kBudget).value);
  }
}

TEST(Weyl, HeuristicModeOnL1) {
  const int m = 4;
  FiniteOperator t = FiniteOperator::identity_of(m, Exponent(1), Exponent(1));
  for (int n = 2; n <= m; ++n) {
    auto e = weyl_number(t, n, OptimBudget{16, 300, 1});
    EXPECT_EQ(e.direction, Direction::heuristic);
    EXPECT_TRUE(std::isfinite(e.value));
    EXPECT_GT(e.value, 0.0);
    RecordProperty("weyl_l1_n" + std::to_string(n), std::to_string(e.value) + " vs reference " +
                                                        std::to_string(1.0 / std::sqrt(double(n))));
  }
}

TEST(ExactIdentityWidth, Examples) {
  EXPECT_NEAR(*exact_identity_width(WidthKind::bernstein, 9, 9, Exponent(1), Exponent(2)), 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(*exact_identity_width(WidthKind::bernstein, 7, 7, Exponent(3), Exponent(2)), 1.0);
  EXPECT_DOUBLE_EQ(*exact_identity_width(WidthKind::kolmogorov, 5, 3, Exponent(2), Exponent(2)), 1.0);
  EXPECT_NEAR(*exact_identity_width(WidthKind::gelfand, 4, 1, Exponent(2), Exponent(1)), 2.0, 1e-15);
  EXPECT_FALSE(exact_identity_width(WidthKind::weyl, 4, 2, Exponent(1), Exponent(1)).has_value());
  EXPECT_FALSE(exact_identity_width(WidthKind::kolmogorov, 4, 2, Exponent(1), Exponent(2)).has_value());
  EXPECT_DOUBLE_EQ(*exact_identity_width(WidthKind::approximation, 3, 4, Exponent(1), Exponent(2)), 0.0);
}

TEST(ExactIdentityWidth, NormBranchMatchesOperatorNorm) {
  for (Exponent p1 : {Exponent(1), Exponent(2), Exponent::infinity()})
    for (Exponent p2 : {Exponent(1), Exponent(2), Exponent::infinity()}) {
      auto r = operator_norm(Matrix::Identity(5, 5), p1, p2, kBudget);
      ASSERT_TRUE(r.certified);
      EXPECT_NEAR(*exact_identity_width(WidthKind::approximation, 5, 1, p1, p2), r.value, 1e-12);
    }
}

TEST(Degenerate, RankPropertyZeroAndScalar) {
  Rng rng(12);
  Matrix a = gaussian_matrix(rng, 4, 2) * gaussian_matrix(rng, 2, 4);  // rank 2
  FiniteOperator t(a, Exponent(1), Exponent(3));
  for (WidthKind k : kAllWidthKinds) {
    auto e = estimate_width(k, t, 3, kBudget);
    EXPECT_EQ(e.value, 0.0) << to_string(k);
    EXPECT_EQ(e.direction, Direction::exact);
  }
  FiniteOperator zero(Matrix::Zero(3, 3), Exponent(2), Exponent(4));
  for (WidthKind k : kAllWidthKinds) EXPECT_EQ(estimate_width(k, zero, 1, kBudget).value, 0.0);
  FiniteOperator one(Matrix::Constant(1, 1, -2.5), Exponent(3), Exponent(1.5));
  for (WidthKind k : kAllWidthKinds) {
    auto e = estimate_width(k, one, 1, kBudget);
    EXPECT_EQ(e.value, 2.5);
    EXPECT_EQ(e.direction, Direction::exact);
  }
}

TEST(Degenerate, EmptyBudgetRejected) {
  try {
    bernstein_number(FiniteOperator::identity_of(3, Exponent(1), Exponent(2)), 2, OptimBudget{0, 500, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty optimization budget");
  }
}

TEST(SubspaceBasis, RankCheck) {
  Matrix b(3, 2);
  b << 1, 2, 1, 2, 1, 2;
  EXPECT_THROW(SubspaceBasis{b}, Error);
  b << 1, 0, 0, 1e-3, 0, 0;
  EXPECT_NO_THROW(SubspaceBasis{b});  // small columns are fine after normalization
}

TEST(InnerProblems, ExtremeRaysAgreeWithDescent) {
  Rng rng(31);
  for (int trial = 0; trial < 4; ++trial) {
    Matrix a = gaussian_matrix(rng, 5, 5);
    Matrix b = orthonormalize(gaussian_matrix(rng, 5, 3));
    for (Exponent src : {Exponent(1), Exponent(2), Exponent::infinity()}) {
      for (Exponent tgt : {Exponent(1), Exponent::infinity()}) {
        FiniteOperator t(a, src, tgt);
        CandidateValue exact = subspace_min_ratio(t, b, OptimBudget{64, 500, 1});
        ASSERT_TRUE(exact.exact);
        RatioObjective obj{a * b, tgt, b, src};
        for (int s = 0; s < 400; ++s) EXPECT_LE(exact.value, obj(gaussian_vector(rng, 3), nullptr) + 1e-12);
        CandidateValue mx = restricted_norm(FiniteOperator(a, tgt, src), b, OptimBudget{64, 500, 1});
        RatioObjective omx{a * b, src, b, tgt};
        for (int s = 0; s < 400; ++s) EXPECT_GE(mx.value, omx(gaussian_vector(rng, 3), nullptr) - 1e-12);
      }
    }
  }
}

TEST(InnerProblems, SubspaceDistanceAgainstScan) {
  Rng rng(41);
  for (Exponent q : {Exponent(1), Exponent(1.5), Exponent(3), Exponent::infinity()}) {
    Vector y = gaussian_vector(rng, 5);
    Matrix v = orthonormalize(gaussian_matrix(rng, 5, 1));
    // z -> ||y - z v||_q is convex: ternary search
    auto f = [&](double z) { return pnorm(Vector(y - z * v.col(0)), q); };
    double lo = -10, hi = 10;
    for (int it = 0; it < 200; ++it) {
      double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
      (f(a) < f(b) ? hi : lo) = (f(a) < f(b) ? b : a);
    }
    double scan = f(0.5 * (lo + hi));
    EXPECT_LE(subspace_distance(y, v, q), scan + 1e-9) << q.to_string();
    EXPECT_GE(subspace_distance(y, v, q), scan - 1e-9) << q.to_string();
  }
}

TEST(Profile, EnforceMonotoneDirections) {
  auto mk = [](double v, Direction d) {
    WidthEstimate e;
    e.value = v;
    e.direction = d;
    e.diagnostics.raw_value = v;
    return e;
  };
  std::vector<WidthEstimate> up = {mk(2, Direction::exact), mk(1.5, Direction::upper_bound),
                                   mk(1.7, Direction::upper_bound), mk(1.0, Direction::upper_bound)};
  enforce_monotone(up);
  EXPECT_EQ(up[2].value, 1.5);
  EXPECT_TRUE(up[2].diagnostics.clamped);
  EXPECT_FALSE(up[1].diagnostics.clamped);

  std::vector<WidthEstimate> lo = {mk(2, Direction::exact), mk(0.5, Direction::lower_bound),
                                   mk(0.7, Direction::lower_bound), mk(0.6, Direction::exact)};
  enforce_monotone(lo);
  EXPECT_EQ(lo[1].value, 0.7);  // lower bounds are raised, never lowered
  EXPECT_TRUE(lo[1].diagnostics.clamped);
  EXPECT_EQ(lo[2].value, 0.7);

  std::vector<WidthEstimate> tiny = {mk(1, Direction::upper_bound), mk(1 + 1e-12, Direction::upper_bound)};
  enforce_monotone(tiny);
  EXPECT_EQ(tiny[1].value, 1.0);
  EXPECT_FALSE(tiny[1].diagnostics.clamped);
}

TEST(Profile, NonincreasingForEveryKind) {
  Rng rng(14);
  FiniteOperator t(gaussian_matrix(rng, 4, 4), Exponent(1), Exponent(2));
  for (WidthKind k : kAllWidthKinds) {
    auto seq = width_profile(k, t, 4, OptimBudget{32, 400, 2});
    for (std::size_t i = 1; i < seq.size(); ++i) EXPECT_LE(seq[i].value, seq[i - 1].value) << to_string(k);
  }
}

TEST(Properties, IdealPropertyOnHilbertPairs) {
  Rng rng(15);
  for (int trial = 0; trial < 5; ++trial) {
    Vector s = gaussian_vector(rng, 5).cwiseAbs();
    FiniteOperator scaled(Matrix(s.asDiagonal()), Exponent(2), Exponent(2));
    double id = bernstein_number(FiniteOperator::identity_of(5, Exponent(2), Exponent(2)), 3, kBudget).value;
    EXPECT_LE(bernstein_number(scaled, 3, kBudget).value, s.maxCoeff() * id + 1e-12);
  }
}

TEST(Properties, SandwichOnMixedExponents) {
  Rng rng(16);
  std::vector<Exponent> ps = {Exponent(1), Exponent(2), Exponent(4), Exponent::infinity()};
  for (Exponent p1 : ps)
    for (Exponent p2 : ps) {
      FiniteOperator t(gaussian_matrix(rng, 3, 3), p1, p2);
      auto r = check_sandwich(t, 2, OptimBudget{32, 400, 3});
      EXPECT_TRUE(r.pass) << p1.to_string() << "->" << p2.to_string() << " b=" << r.bernstein.value
                          << " c=" << r.gelfand.value << " d=" << r.kolmogorov.value
                          << " a=" << r.approximation.value;
    }
}

TEST(Properties, Determinism) {
  Rng rng(17);
  FiniteOperator t(gaussian_matrix(rng, 4, 4), Exponent(1.5), Exponent(3));
  for (WidthKind k : kAllWidthKinds) {
    auto a = estimate_width(k, t, 2, OptimBudget{16, 300, 99});
    auto b = estimate_width(k, t, 2, OptimBudget{16, 300, 99});
    EXPECT_EQ(a.value, b.value) << to_string(k);
  }
}

TEST(Checks, PukhovExamples) {
  auto r = check_pukhov(2, Exponent(2), Exponent(2), kBudget);
  EXPECT_DOUBLE_EQ(r.product, 1.0);
  EXPECT_TRUE(r.pass);
  r = check_pukhov(2, Exponent(1), Exponent(2), kBudget);
  EXPECT_TRUE(r.pass) << r.product;
  EXPECT_NEAR(r.product, 1.0, 1e-6);
  r = check_pukhov(7, Exponent(1), Exponent(2), kBudget);
  EXPECT_TRUE(r.inconclusive);
  EXPECT_FALSE(r.pass);
}

TEST(Checks, BernGelfandExamples) {
  auto r = check_bern_gelfand_duality(4, 2, Exponent(2), Exponent(2), kBudget);
  EXPECT_DOUBLE_EQ(r.product, 1.0);
  r = check_bern_gelfand_duality(4, 4, Exponent(1), Exponent(2), kBudget);
  EXPECT_NEAR(r.first.value, 0.5, 1e-15);
  EXPECT_NEAR(r.second.value, 2.0, 1e-12);
  EXPECT_NEAR(r.product, 1.0, 1e-12);
  r = check_bern_gelfand_duality(5, 3, Exponent(1), Exponent(2), kBudget);
  EXPECT_TRUE(r.pass) << r.product;
}

TEST(Checks, PietschExamples) {
  Matrix d = diag3(4, 2, 1);
  auto r = check_pietsch(FiniteOperator(d, Exponent(2), Exponent(2)), 2, kBudget);
  ASSERT_TRUE(r.pass.has_value());
  EXPECT_TRUE(*r.pass);
  EXPECT_NEAR(r.lhs, 1.0, 1e-12);
  EXPECT_NEAR(r.rhs, std::numbers::e * std::sqrt(8.0), 1e-12);

  r = check_pietsch(FiniteOperator::identity_of(5, Exponent(2), Exponent(2)), 3, kBudget);
  EXPECT_TRUE(*r.pass);

  Rng rng(18);
  Matrix g = gaussian_matrix(rng, 6, 6);
  Matrix spd = g * g.transpose() + 0.1 * Matrix::Identity(6, 6);
  r = check_pietsch(FiniteOperator(spd, Exponent(2), Exponent(2)), 3, kBudget);
  Vector s = spd.jacobiSvd().singularValues();
  EXPECT_NEAR(r.lhs, s[4], 1e-10 * s[0]);
  EXPECT_NEAR(r.rhs, std::numbers::e * std::cbrt(s[0] * s[1] * s[2]), 1e-10 * s[0]);
  EXPECT_TRUE(*r.pass);

  auto diag_mode = check_pietsch(FiniteOperator::identity_of(3, Exponent(1), Exponent(2)), 2, OptimBudget{16, 300, 0});
  EXPECT_FALSE(diag_mode.pass.has_value());
}

TEST(Checks, HilbertCollapseOnRandomMatrix) {
  Rng rng(20);
  auto r = check_hilbert_collapse(gaussian_matrix(rng, 4, 4), OptimBudget{32, 500, 1});
  EXPECT_LE(r.max_rel_exact, 1e-8);
  EXPECT_LE(r.max_rel_search, 1e-3);
}
