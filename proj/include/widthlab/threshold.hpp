#pragma once

// Nonlinear approximation of the unit ball of s^t_{p1,p1} b in s^0_{p2,2} f by
// level-dependent soft thresholding: every coefficient up to level J is kept,
// blocks J < mu <= K are thresholded at eps_mu, deeper blocks are dropped.

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "widthlab/exponent.hpp"
#include "widthlab/hypercross.hpp"
#include "widthlab/parallel.hpp"

namespace widthlab {

/// max(p2, 2)
inline Exponent delta2(Exponent p2) { return p2 > Exponent(2.0) ? p2 : Exponent(2.0); }

inline void check_threshold_regime(double t, Exponent p1, Exponent p2) {
  const Exponent d2 = delta2(p2);
  if (!(p1 < d2)) fail_regime("threshold regime requires p1 < max(p2,2)");
  if (!(t > p1.reciprocal() - d2.reciprocal() + kGuardBand)) fail_regime("insufficient smoothness");
}

/// theta = (t - 1/p1 + 1/delta2) / (2 (1 - p1/delta2)).
inline double theta(double t, Exponent p1, Exponent p2) {
  check_threshold_regime(t, p1, p2);
  const Exponent d2 = delta2(p2);
  const double ratio = d2.is_infinite() ? 0.0 : p1.value() * d2.reciprocal();
  return 0.5 * (t - p1.reciprocal() + d2.reciprocal()) / (1.0 - ratio);
}

/// Smallest L >= J whose truncation bound (constant 1) is below
/// 2^{-Jt} J^{(d-1)(1/2 - 1/p1)}; compared in log2.
inline int choose_K(int J, const ParamSet& ps) {
  ps.validate();
  if (J < 1) fail_validation("budget level J must be >= 1");
  check_threshold_regime(ps.t, ps.p1, ps.p2);
  const double r1 = ps.p1.reciprocal(), r2 = ps.p2.reciprocal();
  const double target = -J * ps.t + (ps.d - 1) * (0.5 - r1) * std::log2(double(J));
  const bool lower_source = ps.p1 < ps.p2;
  const double rate = lower_source ? -ps.t + r1 - r2 : -ps.t;
  if (!(rate < 0)) fail_regime("truncation bound does not decay for these exponents");
  const double log_power = lower_source ? 0.0 : (ps.d - 1) * positive_part(0.5 - r1);
  constexpr double slack = 1e-12;  // equality counts as met
  for (long L = J; L <= 1'000'000; ++L) {
    const double bound = L * rate + log_power * std::log2(double(L));
    if (bound <= target + slack) return static_cast<int>(L);
  }
  fail_regime("truncation bound does not decay for these exponents");
}

struct ThresholdSchedule {
  int d = 1;
  int J = 1;
  int K = 1;
  double t = 0;
  Exponent p1, p2;
  double theta = 0;
  double alpha = 0;  // -t + 1/p1 + theta
  double beta = 0;   // -1/p1 - theta
  Exponent delta2;
  std::vector<double> eps;  // eps[mu], mu = 0..K

  void validate() const {
    if (J < 1 || K < J) fail_validation("invalid threshold schedule: need 1 <= J <= K");
    if (eps.size() != static_cast<std::size_t>(K) + 1) fail_validation("invalid threshold schedule: eps has wrong length");
    for (int mu = 0; mu <= K; ++mu)
      if (!(eps[mu] >= 0) || (mu <= J && eps[mu] != 0)) fail_validation("invalid threshold schedule: bad eps");
    if (!(theta > 0)) fail_validation("invalid threshold schedule: theta must be positive");
  }
};

inline ThresholdSchedule make_schedule(const ParamSet& ps, int J, Exponent q2 = Exponent(2.0)) {
  if (!q2.is(2.0)) fail_regime("threshold schedule is defined for target q = 2 only");
  ThresholdSchedule s;
  s.d = ps.d;
  s.J = J;
  s.K = choose_K(J, ps);
  s.t = ps.t;
  s.p1 = ps.p1;
  s.p2 = ps.p2;
  s.theta = theta(ps.t, ps.p1, ps.p2);
  s.alpha = -ps.t + ps.p1.reciprocal() + s.theta;
  s.beta = -ps.p1.reciprocal() - s.theta;
  s.delta2 = delta2(ps.p2);
  s.eps.assign(s.K + 1, 0.0);
  for (int mu = J + 1; mu <= s.K; ++mu)
    s.eps[mu] = std::exp2(mu * s.alpha + J * s.beta) * std::pow(double(mu), -(ps.d - 1) * ps.p1.reciprocal());
  return s;
}

/// 0 below eps, (2|z| - 2 eps) z/|z| on (eps, 2 eps], z above.
inline Complex soft_threshold(Complex z, double eps) {
  if (!(eps >= 0)) fail_validation("threshold must be >= 0");
  const double r = std::abs(z);
  if (eps == 0 || r > 2 * eps) return z;
  if (r <= eps) return Complex{};
  return (2 * r - 2 * eps) / r * z;
}

struct SparsifyStats {
  std::vector<std::size_t> retained;    // nonzeros per block, mu = 0..K
  std::vector<std::size_t> mid_branch;  // entries on the linear ramp, per block
  std::size_t total = 0;
  double c0 = 0;  // total / (2^J J^{d-1})
  double error = 0;
  double c1 = 0;  // error / (2^{-Jt} J^{(d-1)(1/2 - 1/p1)})
  bool unit_ball = true;  // bnorm(lambda) <= 1; otherwise the bounds carry no guarantee
};

struct SparsifyResult {
  CoeffField approx;
  SparsifyStats stats;
};

/// ||lambda - lambda* | s^0_{p2,2} f||
inline double approx_error(const CoeffField& lambda, const CoeffField& approx, Exponent p2) {
  return fnorm(lambda - approx, 0.0, p2, Exponent(2.0));
}

inline double budget_scale(const ThresholdSchedule& s) { return std::exp2(s.J) * std::pow(double(s.J), s.d - 1); }
inline double error_scale(const ThresholdSchedule& s) {
  return std::exp2(-s.J * s.t) * std::pow(double(s.J), (s.d - 1) * (0.5 - s.p1.reciprocal()));
}

inline SparsifyResult sparsify(const CoeffField& lambda, const ThresholdSchedule& s) {
  s.validate();
  if (lambda.d() != s.d) fail_validation("field dimension does not match schedule");
  SparsifyResult r;
  r.stats.retained.assign(s.K + 1, 0);
  r.stats.mid_branch.assign(s.K + 1, 0);
  r.stats.unit_ball = bnorm(lambda, s.t, s.p1, s.p1) <= 1.0 + 1e-12;
  std::vector<FieldEntry> kept;
  for (const auto& e : lambda.entries()) {
    const int mu = e.index.level_sum();
    if (mu > s.K) continue;
    const double eps = s.eps[mu];
    Complex v = soft_threshold(e.value, eps);
    if (v == Complex{}) continue;
    const double r_abs = std::abs(e.value);
    if (eps > 0 && r_abs <= 2 * eps) ++r.stats.mid_branch[mu];
    ++r.stats.retained[mu];
    kept.push_back({e.index, v});
  }
  r.stats.total = kept.size();
  r.approx = CoeffField(s.d, std::move(kept));
  r.stats.c0 = double(r.stats.total) / budget_scale(s);
  r.stats.error = approx_error(lambda, r.approx, s.p2);
  r.stats.c1 = r.stats.error / error_scale(s);
  return r;
}

enum class FieldGenerator { random_dense, block_concentrated, single_level_flat };

inline std::string to_string(FieldGenerator g) {
  switch (g) {
    case FieldGenerator::random_dense: return "random-dense";
    case FieldGenerator::block_concentrated: return "block-concentrated";
    case FieldGenerator::single_level_flat: return "single-level-flat";
  }
  return "?";
}

inline FieldGenerator parse_generator(const std::string& s) {
  if (s == "random-dense") return FieldGenerator::random_dense;
  if (s == "block-concentrated") return FieldGenerator::block_concentrated;
  if (s == "single-level-flat") return FieldGenerator::single_level_flat;
  fail_validation("unknown generator '" + s + "'");
}

/// Blocks beyond J that a generator populates: random-dense fills every block
/// up to J + 3, the extremal families sit on block J + 1.
inline int generator_depth(FieldGenerator g) { return g == FieldGenerator::random_dense ? 3 : 1; }

/// A field on the unit sphere of s^t_{p1,p1} b.
inline CoeffField generate_field(FieldGenerator g, const ParamSet& ps, int J, Rng& rng, bool complex_values = false) {
  std::normal_distribution<double> gauss;
  std::bernoulli_distribution coin;
  auto value = [&]() { return Complex(gauss(rng), complex_values ? gauss(rng) : 0.0); };
  auto unit_modulus = [&]() {
    if (complex_values) {
      Complex z = value();
      return z / std::abs(z);
    }
    return Complex(coin(rng) ? 1.0 : -1.0);
  };
  CoeffField f(ps.d);
  switch (g) {
    case FieldGenerator::random_dense: {
      std::vector<FieldEntry> es;
      for (int mu = 0; mu <= J + generator_depth(g); ++mu) {
        BlockLayout b = enumerate_block(mu, ps.d);
        if (es.size() + b.dimension > kMaxBlockEntries) fail_guard("block too large");
        b.for_each_index([&](const HyperIndex& h) { es.push_back({h, value()}); });
      }
      f = CoeffField(ps.d, std::move(es));
      break;
    }
    case FieldGenerator::block_concentrated:
      f = block_field(J + 1, ps.d, [&](const HyperIndex&) { return unit_modulus(); });
      break;
    case FieldGenerator::single_level_flat: {
      BlockLayout b = enumerate_block(J + 1, ps.d);
      std::uniform_int_distribution<std::size_t> pick(0, b.levels.size() - 1);
      const auto nu = b.levels[pick(rng)];
      f = block_field(J + 1, ps.d, [&](const HyperIndex& h) { return h.nu == nu ? unit_modulus() : Complex{}; })
              .filtered([](const FieldEntry& e) { return e.value != Complex{}; });
      break;
    }
  }
  return f.scaled(1.0 / bnorm(f, ps.t, ps.p1, ps.p1));
}

struct DecayRow {
  int J = 0;
  int K = 0;
  int trials = 0;
  double max_error = 0;
  std::size_t max_nonzeros = 0;
  double c0 = 0;
  double c1 = 0;
  friend bool operator==(const DecayRow&, const DecayRow&) = default;
};

/// Largest d * (J + depth) accepted by the decay runner; matches the f-norm cap.
inline constexpr int kDecayMaxLevelProduct = kFnormMaxLevelSum;

/// Guards of the decay runner, checked before any computation.
inline void check_decay_config(const ParamSet& ps, int j_min, int j_max, int trials, FieldGenerator g) {
  ps.validate();
  check_threshold_regime(ps.t, ps.p1, ps.p2);
  if (ps.p2.is_infinite()) fail_regime("f-scale requires p < ∞");
  if (j_min < 1 || j_max < j_min) fail_validation("need 1 <= jmin <= jmax");
  if (trials < 1) fail_validation("trials must be >= 1");
  if (ps.d > kFnormMaxDim || ps.d * (j_max + generator_depth(g)) > kDecayMaxLevelProduct)
    fail_guard("decay experiment exceeds the desk-scale cap d <= 3, d*(J+" + std::to_string(generator_depth(g)) +
               ") <= " + std::to_string(kDecayMaxLevelProduct));
}

/// Per J: `trials` fields on the unit sphere, each seeded from (seed, J, trial),
/// sparsified; worst error and sparsity over the trials.
inline std::vector<DecayRow> run_decay_experiment(const ParamSet& ps, int j_min, int j_max, int trials,
                                                  std::uint64_t seed, FieldGenerator g, int threads = 1) {
  check_decay_config(ps, j_min, j_max, trials, g);
  std::vector<DecayRow> rows;
  for (int J = j_min; J <= j_max; ++J) {
    ThresholdSchedule s = make_schedule(ps, J);
    std::vector<SparsifyStats> stats(trials);
    parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t k) {
      Rng rng = make_stream(seed, 0x746872u, J, k);
      stats[k] = sparsify(generate_field(g, ps, J, rng), s).stats;
    });
    DecayRow row;
    row.J = J;
    row.K = s.K;
    row.trials = trials;
    for (const auto& st : stats) {
      row.max_error = std::max(row.max_error, st.error);
      row.max_nonzeros = std::max(row.max_nonzeros, st.total);
    }
    row.c0 = double(row.max_nonzeros) / budget_scale(s);
    row.c1 = row.max_error / error_scale(s);
    rows.push_back(row);
  }
  return rows;
}

/// Rate read off a decay table: alpha_hat = -(least-squares slope of
/// log2 max_error against J), so max_error ~ 2^{-J alpha_hat}. Rows with zero
/// error carry no slope information and are skipped. Spreads are max/min of
/// c0 and c1 over the rows used.
struct DecayFit {
  double alpha_hat = 0;
  double intercept = 0;
  double c0_spread = 1;
  double c1_spread = 1;
  int points = 0;
};

inline DecayFit fit_decay(const std::vector<DecayRow>& rows) {
  std::vector<double> x, y, c0, c1;
  for (const auto& r : rows) {
    if (!(r.max_error > 0)) continue;
    x.push_back(r.J);
    y.push_back(std::log2(r.max_error));
    c0.push_back(r.c0);
    c1.push_back(r.c1);
  }
  if (x.size() < 2) fail_validation("decay fit needs at least two rows with nonzero error");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  DecayFit f;
  f.alpha_hat = -sxy / sxx;
  f.intercept = my + f.alpha_hat * mx;
  auto spread = [](const std::vector<double>& v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo > 0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  };
  f.c0_spread = spread(c0);
  f.c1_spread = spread(c1);
  f.points = static_cast<int>(x.size());
  return f;
}

inline constexpr const char* kDecayCsvHeader = "J,K,trials,max_error,max_nonzeros,c0,c1";

inline void write_decay_csv(std::ostream& out, const std::vector<DecayRow>& rows) {
  out << kDecayCsvHeader << '\n';
  for (const auto& r : rows)
    out << r.J << ',' << r.K << ',' << r.trials << ',' << format_double(r.max_error) << ',' << r.max_nonzeros << ','
        << format_double(r.c0) << ',' << format_double(r.c1) << '\n';
}

/// Parses the table written by write_decay_csv; '#' comment lines are skipped.
inline std::vector<DecayRow> read_decay_csv(std::istream& in) {
  std::vector<DecayRow> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kDecayCsvHeader) fail_validation("unexpected decay table header");
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    if (cells.size() != 7) fail_validation("malformed decay table row");
    auto num = [](const std::string& c, auto& v) {
      auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size()) fail_validation("malformed decay table cell");
    };
    DecayRow r;
    num(cells[0], r.J);
    num(cells[1], r.K);
    num(cells[2], r.trials);
    num(cells[3], r.max_error);
    num(cells[4], r.max_nonzeros);
    num(cells[5], r.c0);
    num(cells[6], r.c1);
    rows.push_back(r);
  }
  if (!header) fail_validation("missing decay table header");
  return rows;
}

}  // namespace widthlab
