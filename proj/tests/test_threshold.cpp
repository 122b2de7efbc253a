#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "widthlab/threshold.hpp"

using namespace widthlab;

namespace {

const ParamSet kMain{2, 1.5, Exponent(1), Exponent(2), Exponent(1)};

HyperIndex idx(std::vector<int> nu, std::vector<std::int64_t> m) { return make_index(nu, m); }

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / x.size(), my += y[i] / y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

void expect_error(auto f, const char* message, ErrorKind kind) {
  try {
    f();
    ADD_FAILURE() << "no error";
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), message);
    EXPECT_EQ(e.kind(), kind);
  }
}

}  // namespace

TEST(Theta, Examples) {
  EXPECT_DOUBLE_EQ(theta(1.5, Exponent(1), Exponent(2)), 1.0);
  EXPECT_DOUBLE_EQ(theta(1.0, Exponent(1), Exponent(2)), 0.5);
  expect_error([] { theta(0.5, Exponent(1), Exponent(2)); }, "insufficient smoothness", ErrorKind::regime);
  expect_error([] { theta(3, Exponent(2), Exponent(1.5)); }, "threshold regime requires p1 < max(p2,2)",
               ErrorKind::regime);
  // delta2 = p2 when p2 > 2
  EXPECT_NEAR(theta(1.0, Exponent(2), Exponent(4)), 0.5 * (1 - 0.5 + 0.25) / (1 - 0.5), 1e-15);
}

TEST(Schedule, AlphaBetaAndThresholds) {
  ThresholdSchedule s = make_schedule(kMain, 4);
  EXPECT_DOUBLE_EQ(s.alpha, 0.5);
  EXPECT_DOUBLE_EQ(s.beta, -2.0);
  EXPECT_EQ(s.K, 7);
  for (int mu = 0; mu <= 4; ++mu) EXPECT_EQ(s.eps[mu], 0.0);
  for (int mu = 5; mu <= 7; ++mu) EXPECT_NEAR(s.eps[mu], std::pow(2.0, 0.5 * mu - 8) / mu, 1e-15);
  expect_error([] { make_schedule(kMain, 4, Exponent(3)); }, "threshold schedule is defined for target q = 2 only",
               ErrorKind::regime);
}

TEST(ChooseK, Examples) {
  EXPECT_EQ(choose_K(4, kMain), 7);
  EXPECT_EQ(choose_K(8, kMain), 14);
}

TEST(ChooseK, AgainstLinearDomainSearch) {
  std::vector<ParamSet> sets = {kMain, {3, 1.2, Exponent(1.5), Exponent(4), Exponent(1.5)},
                                {2, 1.0, Exponent(1.5), Exponent(1.2), Exponent(1.5)},
                                {2, 0.6, Exponent(3), Exponent(4), Exponent(3)}};
  for (const auto& ps : sets)
    for (int J = 1; J <= 20; ++J) {
      const double r1 = ps.p1.reciprocal(), r2 = ps.p2.reciprocal();
      const double rhs = std::pow(2.0, -J * ps.t) * std::pow(double(J), (ps.d - 1) * (0.5 - r1));
      int L = J;
      auto bound = [&](int l) {
        return ps.p1 < ps.p2 ? std::pow(2.0, l * (-ps.t + r1 - r2))
                             : std::pow(2.0, -l * ps.t) * std::pow(double(l), (ps.d - 1) * positive_part(0.5 - r1));
      };
      while (bound(L) > rhs * (1 + 1e-12)) ++L;
      EXPECT_EQ(choose_K(J, ps), L) << J;
      EXPECT_GE(L, J);
    }
}

TEST(SoftThreshold, Examples) {
  EXPECT_EQ(soft_threshold(3.0, 1.0), Complex(3.0));
  EXPECT_NEAR(std::abs(soft_threshold(1.5, 1.0) - Complex(1.0)), 0, 1e-15);
  EXPECT_EQ(soft_threshold(Complex(0, 0.5), 1.0), Complex{});
  Complex z(0.9, 1.2);  // |z| = 1.5, phase preserved on the ramp
  Complex v = soft_threshold(z, 1.0);
  EXPECT_NEAR(std::abs(v), 1.0, 1e-15);
  EXPECT_NEAR(std::arg(v), std::arg(z), 1e-15);
  EXPECT_EQ(soft_threshold(z, 0.0), z);
  EXPECT_THROW(soft_threshold(z, -1.0), Error);
}

TEST(SoftThreshold, ContractionAndLipschitz) {
  Rng rng(1);
  std::normal_distribution<double> g;
  for (int i = 0; i < 10000; ++i) {
    Complex z(g(rng), g(rng));
    double eps = std::fabs(g(rng));
    EXPECT_LE(std::abs(soft_threshold(z, eps) - z), std::abs(z) + 1e-15);
    Complex w = z + Complex(1e-6 * g(rng), 1e-6 * g(rng));
    EXPECT_LE(std::abs(soft_threshold(z, eps) - soft_threshold(w, eps)), 2 * std::abs(z - w) + 1e-15);
  }
}

TEST(Sparsify, ShallowFieldIsUnchanged) {
  Rng rng(2);
  CoeffField f = random_field(2, 4, rng);
  f = f.scaled(1.0 / bnorm(f, kMain.t, kMain.p1, kMain.p1));
  auto r = sparsify(f, make_schedule(kMain, 4));
  ASSERT_EQ(r.approx.size(), f.size());
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(r.approx.entries()[i].value, f.entries()[i].value);
  EXPECT_EQ(r.stats.error, 0.0);
}

TEST(Sparsify, SmallAtomAboveJIsRemoved) {
  ThresholdSchedule s = make_schedule(kMain, 4);
  CoeffField atom(2, {{idx({3, 2}, {5, 1}), Complex(0, 0.9 * s.eps[5])}});
  auto r = sparsify(atom, s);
  EXPECT_TRUE(r.approx.empty());
  EXPECT_EQ(r.stats.total, 0u);
  CoeffField deep(2, {{idx({8, 0}, {0, 0}), 1e-9}});
  EXPECT_TRUE(sparsify(deep, s).approx.empty());  // above K: dropped
}

TEST(Sparsify, LargeEntriesPassAndCountsAreBounded) {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    ThresholdSchedule s = make_schedule(kMain, 5);
    CoeffField f = generate_field(FieldGenerator::random_dense, kMain, 5, rng, trial % 2 == 1);
    auto r = sparsify(f, s);
    EXPECT_TRUE(r.stats.unit_ball);
    for (const auto& e : f.entries()) {
      int mu = e.index.level_sum();
      if (mu <= s.K && std::abs(e.value) > 2 * s.eps[mu]) EXPECT_EQ(r.approx.value_at(e.index), e.value);
    }
    for (int mu = s.J + 1; mu <= s.K; ++mu) {
      double bound = std::pow(s.eps[mu], -1.0) * std::exp2(-mu * (s.t - 1.0));
      EXPECT_LE(double(r.stats.retained[mu]), std::min(double(enumerate_block(mu, 2).dimension), bound));
      EXPECT_LE(r.stats.mid_branch[mu], r.stats.retained[mu]);
    }
  }
}

TEST(Sparsify, ContinuityUnderPerturbation) {
  Rng rng(4);
  ThresholdSchedule s = make_schedule(kMain, 4);
  CoeffField f = generate_field(FieldGenerator::random_dense, kMain, 4, rng);
  std::uniform_real_distribution<double> u(-1e-6, 1e-6);
  CoeffField h = f.mapped([&](const FieldEntry& e) { return e.value + u(rng); });
  auto a = sparsify(f, s).approx, b = sparsify(h, s).approx;
  for (const auto& e : f.entries()) {
    double dev = std::abs(a.value_at(e.index) - b.value_at(e.index));
    double pert = std::abs(h.value_at(e.index) - e.value);
    EXPECT_LE(dev, 2 * pert + 1e-18);
    EXPECT_LE(dev, 2e-6);
  }
}

TEST(Sparsify, WarningPathFlagsStats) {
  CoeffField big(2, {{idx({0, 0}, {0, 0}), 5.0}});
  auto r = sparsify(big, make_schedule(kMain, 3));
  EXPECT_FALSE(r.stats.unit_ball);
}

TEST(Sparsify, BudgetConstantStableAcrossSeeds) {
  ThresholdSchedule s = make_schedule(kMain, 6);
  std::vector<double> c0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng = make_stream(seed, 1);
    auto r = sparsify(generate_field(FieldGenerator::random_dense, kMain, 6, rng), s);
    EXPECT_LE(double(r.stats.total), r.stats.c0 * 64 * 6 * (1 + 1e-12));
    c0.push_back(r.stats.c0);
  }
  double mean = 0;
  for (double c : c0) mean += c / c0.size();
  for (double c : c0) EXPECT_NEAR(c, mean, 0.5 * mean);
}

TEST(ApproxError, Examples) {
  Rng rng(5);
  CoeffField f = random_field(2, 3, rng);
  EXPECT_EQ(approx_error(f, f, Exponent(2)), 0.0);
  CoeffField atom(2, {{idx({0, 0}, {0, 0}), 1.0}});
  EXPECT_DOUBLE_EQ(approx_error(atom, CoeffField(2), Exponent(3)), 1.0);
  EXPECT_THROW(approx_error(atom, CoeffField(2), Exponent::infinity()), Error);
}

TEST(Generators, UnitSphere) {
  Rng rng(6);
  for (auto g : {FieldGenerator::random_dense, FieldGenerator::block_concentrated, FieldGenerator::single_level_flat}) {
    CoeffField f = generate_field(g, kMain, 5, rng);
    EXPECT_NEAR(bnorm(f, kMain.t, kMain.p1, kMain.p1), 1.0, 1e-12) << to_string(g);
    EXPECT_EQ(parse_generator(to_string(g)), g);
  }
  EXPECT_THROW(parse_generator("smooth"), Error);
}

TEST(Decay, RateMonotonicityAndDeterminism) {
  auto rows = run_decay_experiment(kMain, 4, 9, 5, 42, FieldGenerator::random_dense);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) EXPECT_LE(rows[i].max_error, rows[i - 1].max_error);
    x.push_back(rows[i].J);
    y.push_back(std::log2(rows[i].max_error));
  }
  EXPECT_NEAR(slope(x, y), -1.5, 0.15);
  auto again = run_decay_experiment(kMain, 4, 9, 5, 42, FieldGenerator::random_dense, 3);
  EXPECT_EQ(rows, again);
}

TEST(Decay, ExtremalFamilyConstantIsStable) {
  auto rows = run_decay_experiment(kMain, 4, 10, 4, 1, FieldGenerator::block_concentrated);
  double lo = 1e300, hi = 0;
  for (const auto& r : rows) lo = std::min(lo, r.c1), hi = std::max(hi, r.c1);
  EXPECT_GT(lo, 0);
  EXPECT_LT(hi / lo, 4.0);
}

TEST(Decay, GuardsFailFast) {
  try {
    run_decay_experiment(kMain, 4, 30, 20, 0, FieldGenerator::random_dense);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::guard);
    EXPECT_NE(std::string(e.what()).find("<= 30"), std::string::npos);
  }
  EXPECT_THROW(run_decay_experiment(kMain, 5, 4, 1, 0, FieldGenerator::random_dense), Error);
  ParamSet rough = kMain;
  rough.t = 0.4;
  EXPECT_THROW(run_decay_experiment(rough, 4, 5, 1, 0, FieldGenerator::random_dense), Error);
}

TEST(Decay, CsvRoundTrip) {
  auto rows = run_decay_experiment(kMain, 3, 6, 3, 7, FieldGenerator::random_dense);
  std::ostringstream out;
  out << "# config: {}\n";
  write_decay_csv(out, rows);
  std::istringstream in(out.str());
  EXPECT_EQ(read_decay_csv(in), rows);
  std::istringstream bad("J,K\n1,2\n");
  EXPECT_THROW(read_decay_csv(bad), Error);
}
