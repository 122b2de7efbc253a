#include <cmath>
#include <complex>
#include <vector>

#include <gtest/gtest.h>

#include "widthlab/operator_norm.hpp"

using namespace widthlab;

namespace {

const std::vector<Exponent> kExponents = {Exponent(1), Exponent(4.0 / 3.0), Exponent(1.5), Exponent(2),
                                          Exponent(3), Exponent(4), Exponent::infinity()};

}  // namespace

TEST(Pnorm, BasicValues) {
  EXPECT_DOUBLE_EQ(pnorm(Vector{{3.0, 4.0}}, Exponent(2)), 5.0);
  EXPECT_DOUBLE_EQ(pnorm(Vector{{1.0, 1.0, 1.0, 1.0}}, Exponent(1)), 4.0);
  EXPECT_DOUBLE_EQ(pnorm(Vector{{1.0, -2.0, 3.0}}, Exponent::infinity()), 3.0);
  EXPECT_EQ(pnorm(Vector(0), Exponent(3)), 0.0);
  EXPECT_EQ(pnorm(Vector::Zero(5), Exponent(3)), 0.0);
}

TEST(Pnorm, ComplexEntries) {
  std::vector<std::complex<double>> z = {{3, 4}, {0, 0}};
  EXPECT_DOUBLE_EQ(pnorm(z, Exponent(1)), 5.0);
  std::vector<std::complex<double>> w = {{0, 1}, {1, 0}};
  EXPECT_NEAR(pnorm(w, Exponent(2)), std::sqrt(2.0), 1e-15);
}

TEST(Pnorm, GeneralExponentMatchesDirectSum) {
  Rng rng(11);
  for (int k = 0; k < 20; ++k) {
    Vector x = gaussian_vector(rng, 7);
    for (double p : {1.25, 3.0, 7.5}) {
      double s = 0;
      for (double v : x) s += std::pow(std::fabs(v), p);
      EXPECT_NEAR(pnorm(x, Exponent(p)), std::pow(s, 1.0 / p), 1e-12);
    }
  }
}

TEST(Pnorm, NoOverflowForHugeEntries) {
  Vector x = Vector::Constant(4, 1e300);
  EXPECT_NEAR(pnorm(x, Exponent(3)) / 1e300, std::pow(4.0, 1.0 / 3.0), 1e-12);
}

TEST(Pnorm, MonotoneInExponent) {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    Vector x = gaussian_vector(rng, 6);
    for (std::size_t i = 0; i + 1 < kExponents.size(); ++i)
      EXPECT_LE(pnorm(x, kExponents[i + 1]), pnorm(x, kExponents[i]) * (1 + 1e-14));
  }
}

TEST(Pnorm, HolderSandwich) {
  Rng rng(5);
  const int m = 9;
  for (std::size_t i = 0; i < kExponents.size(); ++i) {
    for (std::size_t j = i; j < kExponents.size(); ++j) {
      Exponent p1 = kExponents[i], p2 = kExponents[j];
      double factor = std::pow(double(m), p1.reciprocal() - p2.reciprocal());
      for (int k = 0; k < 10; ++k) {
        Vector x = gaussian_vector(rng, m);
        EXPECT_LE(pnorm(x, p1), factor * pnorm(x, p2) * (1 + 1e-13));
      }
      Vector c = Vector::Constant(m, -0.7);
      EXPECT_NEAR(pnorm(c, p1), factor * pnorm(c, p2), 1e-12);
    }
  }
}

TEST(Exponent, Dual) {
  EXPECT_EQ(dual(Exponent(2)), Exponent(2));
  EXPECT_TRUE(dual(Exponent(1)).is_infinite());
  EXPECT_TRUE(dual(Exponent::infinity()).is(1.0));
  EXPECT_NEAR(dual(Exponent(4)).value(), 4.0 / 3.0, 1e-15);
  EXPECT_EQ(dual(Exponent(4)).reciprocal(), 0.75);
}

TEST(Exponent, DualInvolutionIsExact) {
  for (Exponent p : {Exponent(1), Exponent(4.0 / 3.0), Exponent(2), Exponent(4), Exponent::infinity(),
                     Exponent(1.1), Exponent(13.0)}) {
    Exponent q = dual(dual(p));
    EXPECT_EQ(q, p);
    EXPECT_EQ(q.reciprocal(), p.reciprocal());
    EXPECT_EQ(q.is_infinite(), p.is_infinite());
  }
}

TEST(Exponent, Parse) {
  EXPECT_TRUE(Exponent::parse("inf").is_infinite());
  EXPECT_EQ(Exponent::parse("2"), Exponent(2));
  EXPECT_NEAR(Exponent::parse("4/3").value(), 4.0 / 3.0, 1e-15);
  EXPECT_THROW(Exponent::parse("0.5"), Error);
  EXPECT_THROW(Exponent::parse("abc"), Error);
  EXPECT_THROW(Exponent(0.99), Error);
}

TEST(Exponent, InfinityReciprocalIsZero) {
  EXPECT_EQ(Exponent::infinity().reciprocal(), 0.0);
  ParamSet ps{1, 1.0, Exponent(2), Exponent::infinity(), Exponent(2)};
  EXPECT_EQ(ps.embedding_gap(), 0.5);
}

TEST(Exponent, Ordering) {
  EXPECT_LT(Exponent(1), Exponent(2));
  EXPECT_LT(Exponent(2), Exponent::infinity());
  EXPECT_LE(Exponent::infinity(), Exponent::infinity());
}

TEST(ParamSet, CompactnessPredicatesWithGuardBand) {
  ParamSet ps{2, 1.0, Exponent(1), Exponent(2), Exponent(2)};
  EXPECT_FALSE(ps.isotropic_compact());  // t/d equals the gap
  ps.t = 1.0 + 1e-10;
  EXPECT_FALSE(ps.isotropic_compact());  // inside the guard band
  ps.t = 1.0 + 1e-6;
  EXPECT_TRUE(ps.isotropic_compact());
  ps.t = 0.5 + 1e-6;
  EXPECT_TRUE(ps.mixed_compact());
  ps.p1 = Exponent(3);
  ps.t = 0.01;
  EXPECT_TRUE(ps.mixed_compact());  // no gap when p1 > p2
}

TEST(OperatorNorm, CertifiedClosedForms) {
  OptimBudget b;
  auto r = operator_norm(Matrix::Identity(3, 3), Exponent(1), Exponent(2), b);
  EXPECT_TRUE(r.certified);
  EXPECT_DOUBLE_EQ(r.value, 1.0);

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 1;
  r = operator_norm(d, Exponent(2), Exponent(2), b);
  EXPECT_TRUE(r.certified);
  EXPECT_NEAR(r.value, 3.0, 1e-14);

  r = operator_norm(Matrix::Identity(4, 4), Exponent(2), Exponent(1), b);
  EXPECT_TRUE(r.certified);
  EXPECT_NEAR(r.value, 2.0, 1e-14);
}

TEST(OperatorNorm, TargetInfinityUsesDualRowNorms) {
  Matrix m{{1.0, -2.0}, {0.5, 0.5}};
  auto r = operator_norm(m, Exponent(2), Exponent::infinity(), OptimBudget{});
  EXPECT_TRUE(r.certified);
  EXPECT_NEAR(r.value, std::sqrt(5.0), 1e-14);
  EXPECT_NEAR(pnorm(r.witness, Exponent(2)), 1.0, 1e-14);
  EXPECT_NEAR(pnorm(Vector(m * r.witness), Exponent::infinity()), r.value, 1e-12);
}

TEST(OperatorNorm, SignEnumerationMatchesBruteForce) {
  Rng rng(17);
  Matrix m = gaussian_matrix(rng, 3, 5);
  double best = 0;
  for (int mask = 0; mask < 32; ++mask) {
    Vector s(5);
    for (int j = 0; j < 5; ++j) s[j] = (mask >> j & 1) ? 1.0 : -1.0;
    best = std::max(best, pnorm(Vector(m * s), Exponent(3)));
  }
  auto r = operator_norm(m, Exponent::infinity(), Exponent(3), OptimBudget{});
  EXPECT_TRUE(r.certified);
  EXPECT_NEAR(r.value, best, 1e-12);

  // p -> 1 is the adjoint of inf -> p'
  auto r1 = operator_norm(m.transpose(), Exponent(1.5), Exponent(1), OptimBudget{});
  EXPECT_TRUE(r1.certified);
  EXPECT_NEAR(r1.value, best, 1e-12);
  EXPECT_NEAR(pnorm(Vector(m.transpose() * r1.witness), Exponent(1)), r1.value, 1e-10);
}

TEST(OperatorNorm, UncertifiedBranchIsSoundLowerBound) {
  Rng rng(23);
  for (int k = 0; k < 5; ++k) {
    Matrix m = gaussian_matrix(rng, 4, 4);
    OptimBudget b{16, 500, static_cast<std::uint64_t>(k)};
    auto r = operator_norm(m, Exponent(3), Exponent(1.5), b);
    EXPECT_FALSE(r.certified);
    EXPECT_NEAR(pnorm(Vector(m * r.witness), Exponent(1.5)), r.value, 1e-10);
    for (int s = 0; s < 2000; ++s) {
      Vector x = gaussian_vector(rng, 4);
      x /= pnorm(x, Exponent(3));
      EXPECT_LE(pnorm(Vector(m * x), Exponent(1.5)), r.value + 1e-12);
    }
  }
}

TEST(OperatorNorm, AscentMatchesCertifiedBranchOnHilbertPairs) {
  // 2 -> 2 through the generic path: compare against the SVD after transposition trick
  Rng rng(29);
  Matrix m = gaussian_matrix(rng, 5, 5);
  // (2 -> 3) has no closed form; check consistency with duality ||M||_{2->3} = ||M^T||_{3/2->2}
  OptimBudget b{32, 500, 1};
  auto a = operator_norm(m, Exponent(2), Exponent(3), b);
  auto c = operator_norm(m.transpose(), Exponent(1.5), Exponent(2), b);
  EXPECT_NEAR(a.value, c.value, 1e-6 * a.value);
}

TEST(OperatorNorm, Errors) {
  EXPECT_THROW(operator_norm(Matrix(0, 0), Exponent(2), Exponent(2), OptimBudget{}), Error);
  try {
    operator_norm(Matrix::Identity(2, 2), Exponent(3), Exponent(3), OptimBudget{0, 10, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty optimization budget");
  }
}
