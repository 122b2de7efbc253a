#pragma once

// Hyperbolic-cross sequence spaces on the unit cube: coefficients indexed by a
// level tuple nu and a position m with 0 <= m_l < 2^{nu_l}, grouped into
// blocks |nu|_1 = mu.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "widthlab/exponent.hpp"
#include "widthlab/optim.hpp"
#include "widthlab/pnorm.hpp"

namespace widthlab {

using Complex = std::complex<double>;

inline constexpr int kMaxHyperDim = 8;
inline constexpr int kMaxLevel = 62;
/// Desk-scale cap of the general f-norm integration: d <= 3 and the per-axis
/// finest levels summing to at most 30, i.e. at most 2^30 grid cells.
inline constexpr int kFnormMaxDim = 3;
inline constexpr int kFnormMaxLevelSum = 30;
/// Blocks larger than this are not materialized.
inline constexpr std::uint64_t kMaxBlockEntries = std::uint64_t{1} << 22;

struct HyperIndex {
  int d = 1;
  std::array<int, kMaxHyperDim> nu{};
  std::array<std::int64_t, kMaxHyperDim> m{};

  int level_sum() const {
    int s = 0;
    for (int l = 0; l < d; ++l) s += nu[l];
    return s;
  }
  void validate() const {
    if (d < 1 || d > kMaxHyperDim) fail_validation("dimension must be in [1, 8]");
    for (int l = 0; l < d; ++l) {
      if (nu[l] < 0 || nu[l] > kMaxLevel) fail_validation("level out of range [0, 62]");
      if (m[l] < 0 || m[l] >= (std::int64_t{1} << nu[l])) fail_validation("position outside 0 <= m < 2^nu");
    }
  }
  friend bool operator==(const HyperIndex&, const HyperIndex&) = default;
  friend auto operator<=>(const HyperIndex& a, const HyperIndex& b) {
    if (auto c = a.nu <=> b.nu; c != 0) return c;
    return a.m <=> b.m;
  }
};

inline HyperIndex make_index(const std::vector<int>& nu, const std::vector<std::int64_t>& m) {
  if (nu.size() != m.size()) fail_validation("level and position tuples differ in length");
  HyperIndex h;
  h.d = static_cast<int>(nu.size());
  if (h.d < 1 || h.d > kMaxHyperDim) fail_validation("dimension must be in [1, 8]");
  for (int l = 0; l < h.d; ++l) {
    h.nu[l] = nu[l];
    h.m[l] = m[l];
  }
  h.validate();
  return h;
}

struct FieldEntry {
  HyperIndex index;
  Complex value;
};

/// Finitely supported coefficients, sorted lexicographically by (nu, m).
/// Immutable after construction.
class CoeffField {
 public:
  explicit CoeffField(int d = 1) : d_(d) {
    if (d < 1 || d > kMaxHyperDim) fail_validation("dimension must be in [1, 8]");
  }
  CoeffField(int d, std::vector<FieldEntry> entries) : CoeffField(d) {
    for (const auto& e : entries) {
      if (e.index.d != d) fail_validation("index dimension does not match field");
      e.index.validate();
    }
    std::sort(entries.begin(), entries.end(),
              [](const FieldEntry& a, const FieldEntry& b) { return a.index < b.index; });
    for (std::size_t i = 1; i < entries.size(); ++i)
      if (entries[i].index == entries[i - 1].index) fail_validation("duplicate coefficient index");
    entries_ = std::move(entries);
  }

  int d() const { return d_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<FieldEntry>& entries() const { return entries_; }

  /// Finest level per axis (0 for an empty field).
  std::array<int, kMaxHyperDim> axis_levels() const {
    std::array<int, kMaxHyperDim> out{};
    for (const auto& e : entries_)
      for (int l = 0; l < d_; ++l) out[l] = std::max(out[l], e.index.nu[l]);
    return out;
  }
  /// J_support: the finest level on any axis.
  int max_level() const {
    auto a = axis_levels();
    return *std::max_element(a.begin(), a.begin() + d_);
  }
  /// Largest block index |nu|_1 in the support.
  int max_block() const {
    int b = 0;
    for (const auto& e : entries_) b = std::max(b, e.index.level_sum());
    return b;
  }

  Complex value_at(const HyperIndex& h) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), h,
                               [](const FieldEntry& e, const HyperIndex& k) { return e.index < k; });
    return (it != entries_.end() && it->index == h) ? it->value : Complex{};
  }

  CoeffField scaled(Complex c) const {
    CoeffField out(d_);
    out.entries_ = entries_;
    for (auto& e : out.entries_) e.value *= c;
    return out;
  }

  /// Entries kept by `keep`, in order.
  template <class Pred>
  CoeffField filtered(Pred keep) const {
    CoeffField out(d_);
    for (const auto& e : entries_)
      if (keep(e)) out.entries_.push_back(e);
    return out;
  }

  /// Same support, values replaced by f(entry).
  template <class F>
  CoeffField mapped(F f) const {
    CoeffField out(d_);
    out.entries_ = entries_;
    for (auto& e : out.entries_) e.value = f(e);
    return out;
  }

  /// a + c b on the union of supports.
  static CoeffField combine(const CoeffField& a, const CoeffField& b, Complex c) {
    if (a.d_ != b.d_) fail_validation("fields of different dimension");
    CoeffField out(a.d_);
    auto i = a.entries_.begin(), j = b.entries_.begin();
    while (i != a.entries_.end() || j != b.entries_.end()) {
      if (j == b.entries_.end() || (i != a.entries_.end() && i->index < j->index)) {
        out.entries_.push_back(*i++);
      } else if (i == a.entries_.end() || j->index < i->index) {
        out.entries_.push_back({j->index, c * j->value});
        ++j;
      } else {
        out.entries_.push_back({i->index, i->value + c * j->value});
        ++i, ++j;
      }
    }
    return out;
  }

 private:
  int d_;
  std::vector<FieldEntry> entries_;
};

inline CoeffField operator-(const CoeffField& a, const CoeffField& b) { return CoeffField::combine(a, b, -1.0); }

namespace detail {

/// Neumaier-compensated sum.
struct CompensatedSum {
  double sum = 0, comp = 0;
  void add(double x) {
    double t = sum + x;
    comp += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  unsigned __int128 r = static_cast<unsigned __int128>(a) * b;
  if (r > std::numeric_limits<std::uint64_t>::max()) fail_guard("block too large");
  return static_cast<std::uint64_t>(r);
}

/// C(n, k) with overflow detection.
inline std::uint64_t checked_binomial(std::uint64_t n, std::uint64_t k) {
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;  // exact: a product of i consecutive integers is divisible by i!
    if (r > std::numeric_limits<std::uint64_t>::max()) fail_guard("block too large");
  }
  return static_cast<std::uint64_t>(r);
}

}  // namespace detail

/// The levels and total dimension of block mu.
struct BlockLayout {
  int mu = 0;
  int d = 1;
  std::vector<std::array<int, kMaxHyperDim>> levels;  // lexicographic
  std::uint64_t dimension = 0;                        // D_mu = C(mu+d-1, d-1) 2^mu

  /// Visits every index of the block in lexicographic (nu, m) order.
  template <class F>
  void for_each_index(F f) const {
    HyperIndex h;
    h.d = d;
    for (const auto& nu : levels) {
      h.nu = nu;
      h.m.fill(0);
      const std::uint64_t count = std::uint64_t{1} << mu;  // prod_l 2^{nu_l}
      for (std::uint64_t k = 0; k < count; ++k) {
        f(static_cast<const HyperIndex&>(h));
        // odometer increment, last axis fastest
        for (int l = d - 1; l >= 0; --l) {
          if (++h.m[l] < (std::int64_t{1} << nu[l])) break;
          h.m[l] = 0;
        }
      }
    }
  }
};

inline BlockLayout enumerate_block(int mu, int d) {
  if (mu < 0) fail_validation("block index must be >= 0");
  if (d < 1 || d > kMaxHyperDim) fail_validation("dimension must be in [1, 8]");
  if (mu > kMaxLevel) fail_guard("block too large");
  BlockLayout b;
  b.mu = mu;
  b.d = d;
  const std::uint64_t n_levels = detail::checked_binomial(std::uint64_t(mu + d - 1), std::uint64_t(d - 1));
  b.dimension = detail::checked_mul(n_levels, std::uint64_t{1} << mu);
  if (n_levels > kMaxBlockEntries) fail_guard("block too large");
  b.levels.reserve(n_levels);
  // compositions of mu into d parts, lexicographic
  std::array<int, kMaxHyperDim> nu{};
  auto rec = [&](auto&& self, int axis, int remaining) -> void {
    if (axis == d - 1) {
      nu[axis] = remaining;
      b.levels.push_back(nu);
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      nu[axis] = v;
      self(self, axis + 1, remaining - v);
    }
  };
  rec(rec, 0, mu);
  return b;
}

/// Coefficients supported on block mu, one per index, from `value(index)`.
template <class F>
CoeffField block_field(int mu, int d, F value) {
  BlockLayout b = enumerate_block(mu, d);
  if (b.dimension > kMaxBlockEntries) fail_guard("block too large");
  std::vector<FieldEntry> entries;
  entries.reserve(b.dimension);
  b.for_each_index([&](const HyperIndex& h) { entries.push_back({h, value(h)}); });
  return CoeffField(d, std::move(entries));
}

/// ||lambda | s^t_{p,q} b||: an l_q sum over levels nu of 2^{|nu|(t - 1/p)} times
/// the l_p norm over positions.
inline double bnorm(const CoeffField& f, double t, Exponent p, Exponent q) {
  std::vector<double> level_terms;
  std::vector<double> group;
  const auto& es = f.entries();
  for (std::size_t i = 0; i < es.size();) {
    std::size_t j = i;
    group.clear();
    while (j < es.size() && es[j].index.nu == es[i].index.nu) group.push_back(std::abs(es[j++].value));
    double inner = pnorm(group, p);
    if (inner > 0) level_terms.push_back(std::exp2(es[i].index.level_sum() * (t - p.reciprocal())) * inner);
    i = j;
  }
  return pnorm(level_terms, q);
}

namespace detail {

/// Exact integral of the dyadic step function by recursive bisection of the
/// unit cube; a box stops splitting once every coefficient meeting it is
/// constant on it.
class StepIntegrator {
 public:
  StepIntegrator(const CoeffField& f, double t, Exponent p, Exponent q) : f_(f), p_(p), q_(q), d_(f.d()) {
    const auto& es = f.entries();
    amp_.resize(es.size());
    for (std::size_t i = 0; i < es.size(); ++i) {
      amp_[i] = std::exp2(es[i].index.level_sum() * t) * std::abs(es[i].value);
      peak_ = std::max(peak_, amp_[i]);
    }
    if (peak_ > 0)
      for (double& a : amp_) a = q_.is_infinite() ? a / peak_ : std::pow(a / peak_, q_.value());
  }

  double run() {
    if (peak_ == 0) return 0;
    std::vector<int> root;
    double c = 0;
    for (std::size_t i = 0; i < amp_.size(); ++i) {
      if (amp_[i] == 0) continue;
      if (f_.entries()[i].index.level_sum() == 0) absorb(c, amp_[i]);
      else root.push_back(static_cast<int>(i));
    }
    k_.fill(0);
    pos_.fill(0);
    buffers_.assign(kFnormMaxLevelSum + 2, {});
    recurse(root, c, 0);
    return peak_ * std::pow(acc_.value(), p_.reciprocal());
  }

 private:
  void absorb(double& c, double a) const { c = q_.is_infinite() ? std::max(c, a) : c + a; }

  void recurse(const std::vector<int>& live, double c, int depth) {
    if (live.empty()) {
      double v = q_.is_infinite() ? std::pow(c, p_.value()) : std::pow(c, p_.value() / q_.value());
      acc_.add(std::ldexp(v, -depth));
      return;
    }
    // split the axis with the largest unresolved depth
    int axis = 0, best = -1;
    for (int l = 0; l < d_; ++l) {
      int need = 0;
      for (int i : live) need = std::max(need, f_.entries()[i].index.nu[l] - k_[l]);
      if (need > best) best = need, axis = l;
    }
    std::vector<int>& next = buffers_[depth + 1];
    for (int half = 0; half < 2; ++half) {
      ++k_[axis];
      pos_[axis] = 2 * pos_[axis] + half;
      next.clear();
      double cc = c;
      for (int i : live) {
        const HyperIndex& h = f_.entries()[i].index;
        if (h.nu[axis] >= k_[axis] && ((h.m[axis] >> (h.nu[axis] - k_[axis])) & 1) != half) continue;
        bool resolved = true;
        for (int l = 0; l < d_; ++l) resolved = resolved && h.nu[l] <= k_[l];
        if (resolved) absorb(cc, amp_[i]);
        else next.push_back(i);
      }
      std::vector<int> mine;
      mine.swap(next);
      recurse(mine, cc, depth + 1);
      mine.swap(next);
      pos_[axis] >>= 1;
      --k_[axis];
    }
  }

  const CoeffField& f_;
  Exponent p_, q_;
  int d_;
  std::vector<double> amp_;
  double peak_ = 0;
  std::array<int, kMaxHyperDim> k_{};
  std::array<std::int64_t, kMaxHyperDim> pos_{};
  std::vector<std::vector<int>> buffers_;
  CompensatedSum acc_;
};

}  // namespace detail

/// The f-norm by dyadic bisection for any p < inf, q, subject to the desk-scale cap.
inline double fnorm_integrated(const CoeffField& f, double t, Exponent p, Exponent q) {
  if (p.is_infinite()) fail_validation("f-scale requires p < ∞");
  if (f.d() > kFnormMaxDim) fail_guard("f-norm integration is capped at d <= 3");
  auto levels = f.axis_levels();
  int sum = 0;
  for (int l = 0; l < f.d(); ++l) sum += levels[l];
  if (sum > kFnormMaxLevelSum) fail_guard("f-norm integration is capped at 30 total axis levels");
  return detail::StepIntegrator(f, t, p, q).run();
}

/// ||lambda | s^t_{p,q} f||: the L_p norm of x -> (sum |2^{|nu| t} lambda chi(x)|^q)^{1/q}.
///
/// Exact. For p = q the integral separates into a sum over coefficients;
/// otherwise the step function is integrated by dyadic bisection, subject to
/// the desk-scale cap.
inline double fnorm(const CoeffField& f, double t, Exponent p, Exponent q) {
  if (p.is_infinite()) fail_validation("f-scale requires p < ∞");
  if (f.empty()) return 0;
  if (p == q) {
    std::vector<double> terms;
    terms.reserve(f.size());
    for (const auto& e : f.entries()) {
      int s = e.index.level_sum();
      terms.push_back(std::exp2(s * (t - p.reciprocal())) * std::abs(e.value));
    }
    return pnorm(terms, p);
  }
  return fnorm_integrated(f, t, p, q);
}

/// Entries with |nu|_1 <= J.
inline CoeffField truncate(const CoeffField& f, int J) {
  if (J < 0) fail_validation("truncation level must be >= 0");
  return f.filtered([J](const FieldEntry& e) { return e.index.level_sum() <= J; });
}

/// I.i.d. standard Gaussian (real) coefficients on every index with |nu|_1 <= max_block.
inline CoeffField random_field(int d, int max_block, Rng& rng) {
  std::normal_distribution<double> g;
  std::vector<FieldEntry> entries;
  for (int mu = 0; mu <= max_block; ++mu) {
    BlockLayout b = enumerate_block(mu, d);
    if (entries.size() + b.dimension > kMaxBlockEntries) fail_guard("block too large");
    b.for_each_index([&](const HyperIndex& h) { entries.push_back({h, Complex(g(rng), 0.0)}); });
  }
  return CoeffField(d, std::move(entries));
}

struct ProbeResult {
  double value = 0;                // best ratio found
  double predicted_exponent = 0;   // 2-adic decay rate in mu
  double predicted_log_exponent = 0;  // power of mu
  int evaluations = 0;
  CoeffField witness;
};

/// Lower estimate of ||id_mu : (s^t_{p1,p1} b)_mu -> (s^0_{p2,2} f)_mu|| from
/// coordinate atoms, constant-on-block and constant-on-one-level fields,
/// sparse random and dense random fields. The prediction is
/// 2^{mu(-t + (1/p1 - 1/p2)_+)} mu^{(d-1)(1/2 - 1/p1)_+}, without the log
/// factor when p1 < p2.
inline ProbeResult block_embedding_norm_probe(int mu, const ParamSet& params, const OptimBudget& budget) {
  params.validate();
  budget.validate();
  if (mu < 0) fail_validation("block index must be >= 0");
  const int d = params.d;
  BlockLayout layout = enumerate_block(mu, d);
  if (layout.dimension > kMaxBlockEntries) fail_guard("block too large");
  const Exponent two(2.0);

  ProbeResult r;
  r.predicted_exponent = -params.t + params.embedding_gap();
  r.predicted_log_exponent =
      params.p1 < params.p2 ? 0.0 : (d - 1) * positive_part(0.5 - params.p1.reciprocal());
  r.witness = CoeffField(d);
  auto consider = [&](CoeffField f) {
    double den = bnorm(f, params.t, params.p1, params.p1);
    if (den == 0) return;
    double v = fnorm(f, 0.0, params.p2, two) / den;
    ++r.evaluations;
    if (v > r.value) {
      r.value = v;
      r.witness = std::move(f);
    }
  };

  HyperIndex first;
  first.d = d;
  first.nu = layout.levels.front();
  consider(CoeffField(d, {{first, 1.0}}));
  consider(block_field(mu, d, [](const HyperIndex&) { return Complex(1.0); }));
  for (const auto& nu : layout.levels)
    consider(block_field(mu, d, [&](const HyperIndex& h) { return Complex(h.nu == nu ? 1.0 : 0.0); })
                 .filtered([](const FieldEntry& e) { return e.value != Complex{}; }));

  std::vector<HyperIndex> all;
  all.reserve(layout.dimension);
  layout.for_each_index([&](const HyperIndex& h) { all.push_back(h); });
  std::normal_distribution<double> g;
  for (int k = 0; k < budget.restarts; ++k) {
    Rng rng = make_stream(budget.seed, 0x70726fu, mu, k);
    if (k % 2 == 0) {
      // sparse: a handful of random positions
      std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
      const int count = 1 + k / 2 % 8;
      std::vector<FieldEntry> es;
      for (int j = 0; j < count; ++j) es.push_back({all[pick(rng)], Complex(g(rng), 0.0)});
      std::sort(es.begin(), es.end(), [](const FieldEntry& a, const FieldEntry& b) { return a.index < b.index; });
      es.erase(std::unique(es.begin(), es.end(),
                           [](const FieldEntry& a, const FieldEntry& b) { return a.index == b.index; }),
               es.end());
      consider(CoeffField(d, std::move(es)));
    } else {
      consider(block_field(mu, d, [&](const HyperIndex&) { return Complex(g(rng), 0.0); }));
    }
  }
  return r;
}

/// One entry per line: `nu_1 .. nu_d m_1 .. m_d re im`, shortest round-trip doubles.
inline void write_field(std::ostream& out, const CoeffField& f) {
  for (const auto& e : f.entries()) {
    for (int l = 0; l < f.d(); ++l) out << e.index.nu[l] << ' ';
    for (int l = 0; l < f.d(); ++l) out << e.index.m[l] << ' ';
    out << format_double(e.value.real()) << ' ' << format_double(e.value.imag()) << '\n';
  }
}

inline CoeffField read_field(std::istream& in, int d) {
  if (d < 1 || d > kMaxHyperDim) fail_validation("dimension must be in [1, 8]");
  std::vector<FieldEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string s; ls >> s;) tok.push_back(s);
    auto bad = [&]() -> void { fail_validation("malformed coefficient line " + std::to_string(line_no)); };
    if (tok.size() != static_cast<std::size_t>(2 * d + 2)) bad();
    FieldEntry e;
    e.index.d = d;
    auto parse_int = [&](const std::string& s, auto& v) {
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) bad();
    };
    auto parse_double = [&](const std::string& s) {
      if (s == "inf" || s == "-inf" || s == "nan") bad();
      double v = 0;
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) bad();
      return v;
    };
    for (int l = 0; l < d; ++l) parse_int(tok[l], e.index.nu[l]);
    for (int l = 0; l < d; ++l) parse_int(tok[d + l], e.index.m[l]);
    e.value = Complex(parse_double(tok[2 * d]), parse_double(tok[2 * d + 1]));
    entries.push_back(e);
  }
  return CoeffField(d, std::move(entries));
}

}  // namespace widthlab
