#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "errors.hpp"
#include "exponent.hpp"

namespace widthlab {

enum class Scale { isotropic, mixed };

inline std::string to_string(Scale s) { return s == Scale::isotropic ? "isotropic" : "mixed"; }

inline Scale parse_scale(const std::string& s) {
  if (s == "isotropic") return Scale::isotropic;
  if (s == "mixed") return Scale::mixed;
  fail_validation("unknown scale '" + s + "' (expected isotropic or mixed)");
}

/// Exponents of n^{-alpha} (log n)^{(d-1) beta}. beta is a point unless the
/// table only brackets it, in which case [beta_lo, beta_hi].
struct RateExponents {
  double alpha = 0;
  double beta_lo = 0;
  double beta_hi = 0;
  std::string table;    // main1, main2, weylis, weyl2, width1, width2
  std::string case_id;  // roman numeral, "open", or "all"
  std::vector<std::string> preconditions;
  bool two_sided = true;

  std::string label() const { return table + "-case-" + case_id; }
  bool beta_is_interval() const { return beta_lo != beta_hi; }
};

inline void to_json(nlohmann::ordered_json& j, const RateExponents& r) {
  j = nlohmann::ordered_json{{"alpha", r.alpha}, {"beta_lo", r.beta_lo}, {"beta_hi", r.beta_hi},
                             {"case", r.case_id}, {"two_sided", r.two_sided}, {"table", r.table}};
  if (r.beta_is_interval())
    j["beta"] = {r.beta_lo, r.beta_hi};
  else
    j["beta"] = r.beta_lo;
  j["preconditions"] = r.preconditions;
}

namespace detail {

using Q = boost::multiprecision::cpp_rational;

inline double to_double(const Q& q) { return q.convert_to<double>(); }

/// The decimal value the user wrote: the shortest round-trip text of x, read
/// back as an exact fraction. 0.2 becomes 1/5, not its binary neighbour.
inline Q decimal_rational(double x) {
  using boost::multiprecision::cpp_int;
  const std::string s = format_double(x);
  std::size_t i = 0;
  bool neg = false;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) neg = s[i++] == '-';
  cpp_int mant = 0;
  long exp10 = 0;
  bool frac = false;
  for (; i < s.size() && s[i] != 'e' && s[i] != 'E'; ++i) {
    if (s[i] == '.') {
      frac = true;
      continue;
    }
    mant = mant * 10 + (s[i] - '0');
    if (frac) --exp10;
  }
  if (i < s.size()) exp10 += std::stol(s.substr(i + 1));
  cpp_int scale = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(std::labs(exp10)));
  Q v = exp10 >= 0 ? Q(mant * scale) : Q(mant, scale);
  return neg ? Q(-v) : v;
}

inline Q reciprocal_q(const Exponent& p) { return p.is_infinite() ? Q(0) : Q(1) / decimal_rational(p.value()); }

/// lhs < rhs (strict) or lhs <= rhs, both read with the guard band.
struct Cond {
  Q lhs, rhs;
  bool strict = false;
  std::string text;
  bool defined = true;

  double slack() const { return to_double(rhs - lhs); }
  bool holds() const {
    if (!defined) return false;
    const double d = slack();
    return strict ? d > kGuardBand : d >= -kGuardBand;
  }
  bool on_boundary() const { return defined && std::abs(slack()) <= kGuardBand; }
};

struct Outcome {
  Q alpha, beta_lo, beta_hi;
  bool two_sided = true;
};

struct Case {
  std::string id;
  std::vector<std::vector<Cond>> clauses;  // disjunction of conjunctions
  std::function<Outcome()> outcome;
};

struct Table {
  std::string name;
  std::vector<Cond> hypotheses;
  std::vector<Case> cases;
};

/// Variables of one classification, all exact. s is t/d on the isotropic
/// scale and t on the mixed scale.
struct Vars {
  Q t, s, r1, r2;
  std::string s_name;
  std::optional<Q> tau;  // (1/p2 - 1/p1)/(p1/2 - 1), defined for p1 > 2
  Q half{1, 2};
};

inline Vars make_vars(const ParamSet& ps, Scale scale) {
  ps.validate();
  Vars v;
  v.t = decimal_rational(ps.t);
  v.r1 = reciprocal_q(ps.p1);
  v.r2 = reciprocal_q(ps.p2);
  if (scale == Scale::isotropic) {
    v.s = v.t / ps.d;
    v.s_name = "t/d";
  } else {
    v.s = v.t;
    v.s_name = "t";
  }
  if (v.r1 < v.half) v.tau = 2 * v.r1 * (v.r2 - v.r1) / (1 - 2 * v.r1);
  return v;
}

// Exponent comparisons, written in terms of reciprocals: a <= b iff 1/b <= 1/a.
inline Cond p_le(const Q& ra, const std::string& a, const Q& rb, const std::string& b) {
  return {rb, ra, false, a + " <= " + b};
}
inline Cond p_lt(const Q& ra, const std::string& a, const Q& rb, const std::string& b) {
  return {rb, ra, true, a + " < " + b};
}
inline Cond s_gt(const Vars& v, const Q& rhs, const std::string& text) { return {rhs, v.s, true, v.s_name + " > " + text}; }
inline Cond s_lt(const Vars& v, const Q& rhs, const std::string& text) { return {v.s, rhs, true, v.s_name + " < " + text}; }

inline const char* kTauText = "(1/p2 - 1/p1)/(p1/2 - 1)";

inline Cond s_gt_tau(const Vars& v) {
  Cond c = v.tau ? s_gt(v, *v.tau, kTauText) : Cond{0, 0, true, v.s_name + " > " + kTauText, false};
  return c;
}
inline Cond s_lt_tau(const Vars& v) {
  Cond c = v.tau ? s_lt(v, *v.tau, kTauText) : Cond{0, 0, true, v.s_name + " < " + kTauText, false};
  return c;
}

inline Cond compactness(const Vars& v, const Q& gap_recip, const std::string& gap_text) {
  Q gap = v.r1 - gap_recip;
  if (gap < 0) gap = 0;
  return {gap, v.s, true, v.s_name + " > " + gap_text};
}

inline Outcome pure(Q a) { return {a, 0, 0, true}; }
inline Outcome logged(Q a, Q b) { return {a, b, b, true}; }

inline Table main1_table(const Vars& v) {
  const Q& r1 = v.r1;
  const Q& r2 = v.r2;
  const Q two = v.half, one = 1;
  Table tb{"main1", {compactness(v, r2, "(1/p1 - 1/p2)_+")}, {}};
  tb.cases.push_back({"i",
                      {{p_lt(r2, "p2", r1, "p1"), p_le(r1, "p1", two, "2")}, {p_le(r1, "p1", r2, "p2")}},
                      [&v] { return pure(v.s); }});
  tb.cases.push_back({"ii",
                      {{p_le(r2, "p2", two, "2"), p_le(two, "2", r1, "p1"), s_gt(v, r1, "1/p1")}},
                      [&v] { return pure(v.s - v.r1 + v.half); }});
  tb.cases.push_back({"iii",
                      {{p_le(two, "2", r2, "p2"), p_le(r2, "p2", r1, "p1"), s_gt_tau(v)}},
                      [&v] { return pure(v.s + v.r2 - v.r1); }});
  tb.cases.push_back({"iv",
                      {{p_le(two, "2", r2, "p2"), p_lt(r2, "p2", r1, "p1"), s_lt_tau(v)},
                       {p_lt(one, "1", r2, "p2"), p_le(r2, "p2", two, "2"), p_le(two, "2", r1, "p1"),
                        s_lt(v, r1, "1/p1")}},
                      [&v] { return pure(v.s / (2 * v.r1)); }});
  return tb;
}

inline Table main2_table(const Vars& v) {
  const Q& r1 = v.r1;
  const Q& r2 = v.r2;
  const Q two = v.half, one = 1;
  Table tb{"main2",
           {p_lt(one, "1", r2, "p2"), Cond{0, r2, true, "p2 < inf"}, compactness(v, r2, "(1/p1 - 1/p2)_+")},
           {}};
  tb.cases.push_back({"i",
                      {{p_le(r1, "p1", two, "2"), p_le(r2, "p2", two, "2"), s_lt(v, r1 - v.half, "1/p1 - 1/2")}},
                      [&v] { return pure(v.t); }});
  tb.cases.push_back({"ii",
                      {{p_le(r1, "p1", two, "2"), p_le(r2, "p2", two, "2"), s_gt(v, r1 - v.half, "1/p1 - 1/2")},
                       {p_le(r1, "p1", two, "2"), p_le(two, "2", r2, "p2")}},
                      [&v] { return logged(v.t, v.t + v.half - v.r1); }});
  tb.cases.push_back({"iii",
                      {{p_le(r2, "p2", two, "2"), p_le(two, "2", r1, "p1"), s_gt(v, r1, "1/p1")}},
                      [&v] {
                        Q a = v.t - v.r1 + v.half;
                        return logged(a, a);
                      }});
  tb.cases.push_back({"iv",
                      {{p_le(two, "2", r2, "p2"), p_le(r2, "p2", r1, "p1"), s_gt_tau(v)}},
                      [&v] {
                        Q a = v.t + v.r2 - v.r1;
                        return logged(a, a);
                      }});
  tb.cases.push_back({"v",
                      {{p_le(two, "2", r2, "p2"), p_lt(r2, "p2", r1, "p1"), s_lt_tau(v)},
                       {p_le(r2, "p2", two, "2"), p_le(two, "2", r1, "p1"), s_lt(v, r1, "1/p1")}},
                      [&v] { return logged(v.t / (2 * v.r1), v.t - v.r1 + v.half); }});
  // Only bracketed: n^{-t} (log n)^{(d-1)t} <~ b_n <~ n^{-t} (log n)^{(d-1)(t - 1/p1 + 1/2)}.
  tb.cases.push_back({"open",
                      {{p_lt(two, "2", r1, "p1"), p_lt(r1, "p1", r2, "p2")}},
                      [&v] { return Outcome{v.t, v.t, v.t - v.r1 + v.half, false}; }});
  return tb;
}

inline Table weylis_table(const Vars& v) {
  const Q& r1 = v.r1;
  const Q& r2 = v.r2;
  const Q two = v.half;
  Table tb{"weylis", {compactness(v, r2, "(1/p1 - 1/p2)_+")}, {}};
  tb.cases.push_back({"i", {{p_le(r1, "p1", two, "2"), p_le(r2, "p2", two, "2")}}, [&v] { return pure(v.s); }});
  tb.cases.push_back({"ii",
                      {{p_le(r1, "p1", two, "2"), p_le(two, "2", r2, "p2")}},
                      [&v] { return pure(v.s + v.r2 - v.half); }});
  tb.cases.push_back({"iii",
                      {{p_le(r2, "p2", two, "2"), p_le(two, "2", r1, "p1"), s_gt(v, r1, "1/p1")}},
                      [&v] { return pure(v.s - v.r1 + v.half); }});
  tb.cases.push_back({"iv",
                      {{p_le(two, "2", r2, "p2"), p_le(r2, "p2", r1, "p1"), s_gt_tau(v)},
                       {p_le(two, "2", r1, "p1"), p_le(r1, "p1", r2, "p2")}},
                      [&v] { return pure(v.s + v.r2 - v.r1); }});
  tb.cases.push_back({"v",
                      {{p_le(two, "2", r2, "p2"), p_lt(r2, "p2", r1, "p1"), s_lt_tau(v)},
                       {p_le(r2, "p2", two, "2"), p_le(two, "2", r1, "p1"), s_lt(v, r1, "1/p1")}},
                      [&v] { return pure(v.s / (2 * v.r1)); }});
  return tb;
}

inline Table weyl2_table(const Vars& v) {
  const Q& r1 = v.r1;
  const Q& r2 = v.r2;
  const Q two = v.half;
  Table tb{"weyl2", {Cond{0, r2, true, "p2 < inf"}, compactness(v, r2, "(1/p1 - 1/p2)_+")}, {}};
  tb.cases.push_back({"i",
                      {{p_le(r1, "p1", two, "2"), p_le(r2, "p2", two, "2"), s_lt(v, r1 - v.half, "1/p1 - 1/2")}},
                      [&v] { return pure(v.t); }});
  tb.cases.push_back({"ii",
                      {{p_le(r1, "p1", two, "2"), p_le(r2, "p2", two, "2"), s_gt(v, r1 - v.half, "1/p1 - 1/2")}},
                      [&v] { return logged(v.t, v.t + v.half - v.r1); }});
  tb.cases.push_back({"iii",
                      {{p_le(r1, "p1", two, "2"), p_le(two, "2", r2, "p2")}},
                      [&v] { return logged(v.t - v.half + v.r2, v.t + v.r2 - v.r1); }});
  tb.cases.push_back({"iv",
                      {{p_le(r2, "p2", two, "2"), p_le(two, "2", r1, "p1"), s_gt(v, r1, "1/p1")}},
                      [&v] {
                        Q a = v.t - v.r1 + v.half;
                        return logged(a, a);
                      }});
  tb.cases.push_back({"v",
                      {{p_le(two, "2", r2, "p2"), p_le(r2, "p2", r1, "p1"), s_gt_tau(v)},
                       {p_le(two, "2", r1, "p1"), p_le(r1, "p1", r2, "p2")}},
                      [&v] {
                        Q a = v.t - v.r1 + v.r2;
                        return logged(a, a);
                      }});
  tb.cases.push_back({"vi",
                      {{p_le(two, "2", r2, "p2"), p_lt(r2, "p2", r1, "p1"), s_lt_tau(v)},
                       {p_le(r2, "p2", two, "2"), p_lt(two, "2", r1, "p1"), s_lt(v, r1, "1/p1")}},
                      [&v] { return logged(v.t / (2 * v.r1), v.t + v.half - v.r1); }});
  return tb;
}

inline Table width_table(const Vars& v, Scale scale) {
  if (scale == Scale::isotropic) {
    Table tb{"width1", {compactness(v, v.r2, "(1/p1 - 1/p2)_+")}, {}};
    tb.cases.push_back({"all", {{}}, [&v] { return pure(v.s); }});
    return tb;
  }
  // delta2 = max(p2, 2), so 1/delta2 = min(1/p2, 1/2).
  const Q rd = v.r2 < v.half ? v.r2 : v.half;
  Table tb{"width2", {Cond{0, v.r2, true, "p2 < inf"}, compactness(v, rd, "(1/p1 - 1/delta2)_+")}, {}};
  tb.cases.push_back({"upper", {{}}, [&v] { return Outcome{v.t, v.t - v.r1 + v.half, v.t - v.r1 + v.half, false}; }});
  return tb;
}

inline bool clause_holds(const std::vector<Cond>& clause) {
  for (const auto& c : clause)
    if (!c.holds()) return false;
  return true;
}

inline void check_hypotheses(const Table& tb) {
  for (const auto& h : tb.hypotheses) {
    if (h.holds()) continue;
    if (h.on_boundary()) fail_regime("limiting case not covered: " + tb.name + " requires " + h.text);
    fail_regime(tb.name + " requires " + h.text);
  }
}

/// Ids of every case whose conditions hold, in table order.
inline std::vector<std::string> matching(const Table& tb) {
  std::vector<std::string> ids;
  for (const auto& c : tb.cases)
    for (const auto& clause : c.clauses)
      if (clause_holds(clause)) {
        ids.push_back(c.id);
        break;
      }
  return ids;
}

inline RateExponents classify(const Table& tb) {
  check_hypotheses(tb);
  for (const auto& c : tb.cases) {
    for (const auto& clause : c.clauses) {
      if (!clause_holds(clause)) continue;
      const Outcome o = c.outcome();
      RateExponents r;
      r.alpha = to_double(o.alpha);
      r.beta_lo = to_double(o.beta_lo);
      r.beta_hi = to_double(o.beta_hi);
      r.table = tb.name;
      r.case_id = c.id;
      r.two_sided = o.two_sided;
      for (const auto& cond : clause) r.preconditions.push_back(cond.text);
      return r;
    }
  }
  // Nothing matched: the point sits on a strict inequality some case needs.
  std::vector<std::string> violated;
  for (const auto& c : tb.cases)
    for (const auto& clause : c.clauses)
      for (const auto& cond : clause)
        if (cond.strict && cond.on_boundary()) {
          const std::string s = cond.text + " (case " + c.id + ")";
          if (std::find(violated.begin(), violated.end(), s) == violated.end()) violated.push_back(s);
        }
  std::string msg = "limiting case not covered by " + tb.name;
  if (!violated.empty()) {
    msg += ": parameters lie on the boundary of ";
    for (std::size_t i = 0; i < violated.size(); ++i) msg += (i ? ", " : "") + violated[i];
  }
  fail_regime(msg);
}

enum class Which { main1, main2, weylis, weyl2 };

inline Table table_for(Which w, const Vars& v) {
  switch (w) {
    case Which::main1: return main1_table(v);
    case Which::main2: return main2_table(v);
    case Which::weylis: return weylis_table(v);
    case Which::weyl2: return weyl2_table(v);
  }
  fail_validation("unknown rate table");
}

inline Scale scale_of(Which w) { return (w == Which::main1 || w == Which::weylis) ? Scale::isotropic : Scale::mixed; }

}  // namespace detail

/// Bernstein numbers of B^t_{p1,q} -> L_{p2}: n^{-alpha}, four cases.
inline RateExponents bernstein_rate_isotropic(const ParamSet& ps) {
  const auto v = detail::make_vars(ps, Scale::isotropic);
  return detail::classify(detail::main1_table(v));
}

/// Bernstein numbers of S^t_{p1,p1}B -> L_{p2}: five cases plus the bracketed
/// case 2 < p1 < p2 < inf.
inline RateExponents bernstein_rate_mixed(const ParamSet& ps) {
  const auto v = detail::make_vars(ps, Scale::mixed);
  return detail::classify(detail::main2_table(v));
}

/// Weyl numbers, isotropic scale: five cases.
inline RateExponents weyl_rate_isotropic(const ParamSet& ps) {
  const auto v = detail::make_vars(ps, Scale::isotropic);
  return detail::classify(detail::weylis_table(v));
}

/// Weyl numbers of the mixed sequence-space embedding: six cases.
inline RateExponents weyl_rate_mixed(const ParamSet& ps) {
  const auto v = detail::make_vars(ps, Scale::mixed);
  return detail::classify(detail::weyl2_table(v));
}

/// Nonlinear widths: two-sided t/d on the isotropic scale, an upper bound
/// n^{-t} (log n)^{(d-1)(t - 1/p1 + 1/2)} on the mixed scale.
inline RateExponents nonlinear_width_rate(const ParamSet& ps, Scale scale) {
  const auto v = detail::make_vars(ps, scale);
  return detail::classify(detail::width_table(v, scale));
}

using RateTable = detail::Which;

/// Every case of the table whose conditions hold (empty on a boundary).
/// Hypotheses are not checked.
inline std::vector<std::string> matching_cases(RateTable w, const ParamSet& ps) {
  const auto v = detail::make_vars(ps, detail::scale_of(w));
  return detail::matching(detail::table_for(w, v));
}

/// n^{-a} (log n)^{(d-1) b} decays no slower than n^{-a'} (log n)^{(d-1) b'}.
inline bool rate_dominates(const RateExponents& fast, const RateExponents& slow, int d) {
  const double tol = 1e-12;
  if (fast.alpha > slow.alpha + tol) return true;
  if (fast.alpha < slow.alpha - tol) return false;
  return d == 1 || fast.beta_hi <= slow.beta_lo + tol;
}

struct FitResult {
  double alpha = 0;
  double beta = 0;
  double intercept = 0;
  double residual = 0;  // root mean square of the log residuals
  long long n_min = 0;
  long long n_max = 0;
  bool beta_fitted = false;
  double condition = 1;
  bool ill_conditioned = false;
};

inline constexpr double kFitConditionWarning = 1e6;

/// Least squares on log v = c - alpha log n + (d-1) beta log log n. beta is
/// pinned to 0 when d = 1 or the range stays below e^2.
inline FitResult fit_rate(const std::vector<long long>& ns, const std::vector<double>& values, int d) {
  if (ns.size() != values.size()) fail_validation("fit_rate: ns and values differ in length");
  if (ns.size() < 4) fail_validation("fit_rate needs at least 4 points");
  if (d < 1) fail_validation("dimension d must be >= 1");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 1) fail_validation("fit_rate: n must be a positive integer");
    if (i && ns[i] <= ns[i - 1]) fail_validation("fit_rate: n must be strictly increasing");
    if (!(values[i] > 0) || !std::isfinite(values[i])) fail_validation("fit_rate: values must be positive");
  }
  FitResult r;
  r.n_min = ns.front();
  r.n_max = ns.back();
  r.beta_fitted = d > 1 && std::log(static_cast<double>(ns.back())) >= 2.0;
  if (r.beta_fitted && ns.front() < 2) fail_validation("fit_rate: the log log n regressor needs n >= 2");

  const Eigen::Index m = static_cast<Eigen::Index>(ns.size());
  const Eigen::Index k = r.beta_fitted ? 3 : 2;
  Eigen::MatrixXd X(m, k);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double ln = std::log(static_cast<double>(ns[i]));
    X(i, 0) = 1.0;
    X(i, 1) = -ln;
    if (r.beta_fitted) X(i, 2) = (d - 1) * std::log(ln);
    y(i) = std::log(values[i]);
  }
  // Condition of the column-equilibrated design.
  Eigen::MatrixXd Xs = X;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double nrm = Xs.col(j).norm();
    if (nrm > 0) Xs.col(j) /= nrm;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xs);
  const auto& sv = svd.singularValues();
  r.condition = sv(k - 1) > 0 ? sv(0) / sv(k - 1) : std::numeric_limits<double>::infinity();
  r.ill_conditioned = r.condition > kFitConditionWarning;

  const Eigen::VectorXd coef = X.colPivHouseholderQr().solve(y);
  r.intercept = coef(0);
  r.alpha = coef(1);
  r.beta = r.beta_fitted ? coef(2) : 0.0;
  r.residual = std::sqrt((X * coef - y).squaredNorm() / static_cast<double>(m));
  return r;
}

}  // namespace widthlab
