#pragma once

// The widths-lab commands: matrix, rates, threshold, verify.

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "widthlab/cli/config.hpp"
#include "widthlab/hypercross.hpp"
#include "widthlab/parallel.hpp"
#include "widthlab/rates.hpp"
#include "widthlab/threshold.hpp"
#include "widthlab/width_checks.hpp"
#include "widthlab/widths.hpp"

namespace widthlab::cli {

enum ExitCode { kSuccess = 0, kCheckFailed = 1, kUsage = 2, kRegime = 3 };

inline constexpr int kMatrixMaxDimension = 16;

enum class Format { csv, json, svg };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  if (s == "svg") return Format::svg;
  fail_validation("unknown format '" + s + "' (expected csv, json or svg)");
}

inline std::string config_comment(const Json& cfg) { return "# config: " + cfg.dump(); }

// ---------------------------------------------------------------- matrix

/// One row of the width table.
struct WidthRow {
  WidthKind kind = WidthKind::bernstein;
  int n = 1;
  double value = 0;
  Direction direction = Direction::exact;
  bool converged = true;
  friend bool operator==(const WidthRow&, const WidthRow&) = default;
};

inline constexpr const char* kWidthCsvHeader = "kind,n,value,direction,converged";

inline void write_width_csv(std::ostream& out, const std::vector<WidthRow>& rows) {
  out << kWidthCsvHeader << '\n';
  for (const auto& r : rows)
    out << to_string(r.kind) << ',' << r.n << ',' << format_double(r.value) << ',' << to_string(r.direction) << ','
        << (r.converged ? "true" : "false") << '\n';
}

inline std::vector<WidthRow> read_width_csv(std::istream& in) {
  std::vector<WidthRow> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kWidthCsvHeader) fail_validation("unexpected width table header");
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    if (cells.size() != 5) fail_validation("malformed width table row");
    WidthRow r;
    r.kind = parse_width_kind(cells[0]);
    r.n = static_cast<int>(detail::parse_integer("n", cells[1]));
    r.value = detail::parse_real("value", cells[2]);
    r.direction = parse_direction(cells[3]);
    r.converged = detail::parse_bool("converged", cells[4]);
    rows.push_back(r);
  }
  if (!header) fail_validation("missing width table header");
  return rows;
}

inline std::vector<WidthKind> parse_kinds(const std::string& s) {
  if (s == "all") return {kAllWidthKinds.begin(), kAllWidthKinds.end()};
  std::vector<WidthKind> kinds;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, ',');) {
    WidthKind k = parse_width_kind(part);
    if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
  }
  if (kinds.empty()) fail_validation("no width kinds requested");
  return kinds;
}

inline EstimatorMode parse_mode(const std::string& s) {
  if (s == "automatic") return EstimatorMode::automatic;
  if (s == "search") return EstimatorMode::search;
  fail_validation("unknown estimator mode '" + s + "' (expected automatic or search)");
}

/// Width profiles of id_{p1,p2}^m for n = 1..m, one kind per worker, rows in
/// the order the kinds were requested.
inline std::vector<WidthRow> matrix_table(const Json& cfg) {
  const long long m = cfg["m"];
  if (m < 1) fail_validation("matrix dimension m must be >= 1");
  if (m > kMatrixMaxDimension)
    fail_guard("matrix dimension m = " + std::to_string(m) + " exceeds the desk-scale cap m <= 16");
  const Exponent p1 = Exponent::parse(cfg["p1"].get<std::string>());
  const Exponent p2 = Exponent::parse(cfg["p2"].get<std::string>());
  const auto kinds = parse_kinds(cfg["kinds"]);
  const EstimatorMode mode = parse_mode(cfg["mode"]);
  OptimBudget budget;
  budget.restarts = static_cast<int>(cfg["restarts"].get<long long>());
  budget.max_iter = static_cast<int>(cfg["max_iter"].get<long long>());
  budget.seed = cfg["seed"].get<std::uint64_t>();
  budget.validate();
  const auto t = FiniteOperator::identity_of(static_cast<int>(m), p1, p2);

  std::vector<std::vector<WidthEstimate>> profiles(kinds.size());
  parallel_for(kinds.size(), default_thread_count(),
               [&](std::size_t i) { profiles[i] = width_profile(kinds[i], t, static_cast<int>(m), budget, mode); });
  std::vector<WidthRow> rows;
  for (const auto& prof : profiles)
    for (const auto& e : prof) rows.push_back({e.kind, e.n, e.value, e.direction, e.diagnostics.converged});
  return rows;
}

/// Plot data: one polyline per series, in data coordinates.
inline void write_svg(std::ostream& out, const Json& cfg, const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\">\n";
  out << "<!-- config: " << cfg.dump() << " -->\n";
  for (const auto& [name, pts] : series) {
    out << "<polyline data-series=\"" << name << "\" fill=\"none\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
      out << (i ? " " : "") << format_double(pts[i].first) << ',' << format_double(pts[i].second);
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

inline void cmd_matrix(const Json& cfg, std::ostream& out) {
  const Format fmt = parse_format(cfg["format"]);
  const auto rows = matrix_table(cfg);
  if (fmt == Format::csv) {
    out << config_comment(cfg) << '\n';
    write_width_csv(out, rows);
  } else if (fmt == Format::json) {
    Json j;
    j["config"] = cfg;
    j["rows"] = Json::array();
    for (const auto& r : rows)
      j["rows"].push_back({{"kind", to_string(r.kind)},
                           {"n", r.n},
                           {"value", r.value},
                           {"direction", to_string(r.direction)},
                           {"converged", r.converged}});
    out << j.dump(2) << '\n';
  } else {
    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> series;
    for (const auto& r : rows) {
      if (series.empty() || series.back().first != to_string(r.kind)) series.push_back({to_string(r.kind), {}});
      series.back().second.push_back({double(r.n), r.value});
    }
    write_svg(out, cfg, series);
  }
}

// ----------------------------------------------------------------- rates

inline ParamSet rate_params(const Json& cfg) {
  ParamSet ps;
  ps.d = static_cast<int>(cfg["d"].get<long long>());
  ps.t = cfg["t"];
  ps.p1 = Exponent::parse(cfg["p1"].get<std::string>());
  ps.p2 = Exponent::parse(cfg["p2"].get<std::string>());
  ps.q = Exponent::parse(cfg["q"].get<std::string>());
  ps.validate();
  return ps;
}

inline void cmd_rates(const Json& cfg, std::ostream& out) {
  const Format fmt = parse_format(cfg["format"]);
  if (fmt == Format::svg) fail_validation("rates has no plot output; use csv or json");
  const Scale scale = parse_scale(cfg["scale"]);
  const ParamSet ps = rate_params(cfg);
  std::vector<std::pair<std::string, RateExponents>> entries;
  if (scale == Scale::isotropic) {
    entries.emplace_back("bernstein", bernstein_rate_isotropic(ps));
    entries.emplace_back("weyl", weyl_rate_isotropic(ps));
  } else {
    entries.emplace_back("bernstein", bernstein_rate_mixed(ps));
    entries.emplace_back("weyl", weyl_rate_mixed(ps));
  }
  entries.emplace_back("nonlinear_width", nonlinear_width_rate(ps, scale));

  if (fmt == Format::json) {
    Json j;
    j["config"] = cfg;
    for (const auto& [name, r] : entries) j[name] = r;
    out << j.dump(2) << '\n';
  } else {
    out << config_comment(cfg) << '\n';
    out << "quantity,table,case,alpha,beta_lo,beta_hi,two_sided\n";
    for (const auto& [name, r] : entries)
      out << name << ',' << r.table << ',' << r.case_id << ',' << format_double(r.alpha) << ','
          << format_double(r.beta_lo) << ',' << format_double(r.beta_hi) << ',' << (r.two_sided ? "true" : "false")
          << '\n';
  }
}

// ------------------------------------------------------------- threshold

inline Json decay_fit_json(const std::vector<DecayRow>& rows, const ParamSet& ps) {
  const DecayFit f = fit_decay(rows);
  Json j;
  j["alpha_hat"] = f.alpha_hat;
  j["alpha_predicted"] = ps.t;
  j["log_exponent_predicted"] = (ps.d - 1) * (ps.t - ps.p1.reciprocal() + 0.5);
  j["points"] = f.points;
  j["c0_spread"] = f.c0_spread;
  j["c1_spread"] = f.c1_spread;
  // Against the budget n_J = 2^J J^{d-1} with both regressors.
  std::vector<long long> ns;
  std::vector<double> errs;
  for (const auto& r : rows) {
    if (!(r.max_error > 0)) continue;
    ns.push_back(static_cast<long long>(std::llround(std::ldexp(1.0, r.J) * std::pow(double(r.J), ps.d - 1))));
    errs.push_back(r.max_error);
  }
  bool increasing = true;
  for (std::size_t i = 1; i < ns.size(); ++i) increasing = increasing && ns[i] > ns[i - 1];
  if (ns.size() >= 4 && increasing) {
    const FitResult fr = fit_rate(ns, errs, ps.d);
    j["rate_fit"] = {{"alpha", fr.alpha},       {"beta", fr.beta},
                     {"residual", fr.residual}, {"beta_fitted", fr.beta_fitted},
                     {"condition", fr.condition}, {"ill_conditioned", fr.ill_conditioned}};
  }
  return j;
}

inline void cmd_threshold(const Json& cfg, std::ostream& out) {
  const Format fmt = parse_format(cfg["format"]);
  ParamSet ps;
  ps.d = static_cast<int>(cfg["d"].get<long long>());
  ps.t = cfg["t"];
  ps.p1 = Exponent::parse(cfg["p1"].get<std::string>());
  ps.p2 = Exponent::parse(cfg["p2"].get<std::string>());
  ps.q = ps.p1;
  const int jmin = static_cast<int>(cfg["jmin"].get<long long>());
  const int jmax = static_cast<int>(cfg["jmax"].get<long long>());
  const int trials = static_cast<int>(cfg["trials"].get<long long>());
  const FieldGenerator g = parse_generator(cfg["generator"]);
  const bool fit = cfg["fit"];
  check_decay_config(ps, jmin, jmax, trials, g);

  const auto rows = run_decay_experiment(ps, jmin, jmax, trials, cfg["seed"].get<std::uint64_t>(), g,
                                         default_thread_count());
  if (fmt == Format::csv) {
    out << config_comment(cfg) << '\n';
    write_decay_csv(out, rows);
    if (fit) out << "# fit: " << decay_fit_json(rows, ps).dump() << '\n';
  } else if (fmt == Format::json) {
    Json j;
    j["config"] = cfg;
    j["rows"] = Json::array();
    for (const auto& r : rows)
      j["rows"].push_back({{"J", r.J},
                           {"K", r.K},
                           {"trials", r.trials},
                           {"max_error", r.max_error},
                           {"max_nonzeros", r.max_nonzeros},
                           {"c0", r.c0},
                           {"c1", r.c1}});
    if (fit) j["fit"] = decay_fit_json(rows, ps);
    out << j.dump(2) << '\n';
  } else {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows)
      if (r.max_error > 0) pts.push_back({double(r.J), std::log2(r.max_error)});
    write_svg(out, cfg, {{"log2_max_error", pts}});
  }
}

// ---------------------------------------------------------------- verify

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  int restarts = 32;
  std::string fault = "none";
};

namespace detail {

inline std::string fmt(double v) { return format_double(v); }

/// Random valid ParamSet with reciprocals of p1, p2, q uniform on [0, 1].
inline ParamSet sample_params(Rng& rng, Scale scale, int d_max, bool open_p2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto e = [&](double lo, double hi) {
    double r = lo + (hi - lo) * u(rng);
    return r > 0 ? Exponent(1.0 / r) : Exponent::infinity();
  };
  ParamSet p;
  p.d = std::uniform_int_distribution<int>(1, d_max)(rng);
  p.p1 = e(0, 1);
  p.p2 = open_p2 ? e(1e-3, 1 - 1e-3) : e(0, 1);
  p.q = e(0, 1);
  const double s = p.embedding_gap() + 1e-6 + 2.0 * u(rng);
  p.t = scale == Scale::isotropic ? s * p.d : s;
  return p;
}

inline bool limiting(const Error& e) { return std::string(e.what()).find("limiting case not covered") != std::string::npos; }

}  // namespace detail

inline CheckResult check_closed_forms(const VerifyOptions& o) {
  OptimBudget budget{o.restarts, 500, o.seed};
  double worst = 0;
  std::string witness;
  for (double p : {1.0, 2.0, 4.0, std::numeric_limits<double>::infinity()}) {
    const Exponent e = std::isinf(p) ? Exponent::infinity() : Exponent(p);
    for (int m = 1; m <= 3; ++m)
      for (int n = 1; n <= m; ++n) {
        const double v = bernstein_number(FiniteOperator::identity_of(m, e, e), n, budget, EstimatorMode::search).value;
        if (std::abs(v - 1) > worst) {
          worst = std::abs(v - 1);
          witness = "b_" + std::to_string(n) + "(id_p,p^" + std::to_string(m) + ") p=" + e.to_string();
        }
      }
  }
  double worst_rel = 0;
  for (int m = 2; m <= 4; ++m) {
    const double v =
        bernstein_number(FiniteOperator::identity_of(m, Exponent(1), Exponent(2)), m, budget, EstimatorMode::search).value;
    worst_rel = std::max(worst_rel, std::abs(v * std::sqrt(double(m)) - 1));
  }
  const bool pass = worst <= 1e-6 && worst_rel <= 0.01;
  return {"closed_forms", pass,
          "max |b_n(id_pp)-1| = " + detail::fmt(worst) + (witness.empty() ? "" : " at " + witness) +
              "; max rel err b_m(id_12^m) = " + detail::fmt(worst_rel)};
}

inline CheckResult check_hilbert(const VerifyOptions& o) {
  Rng rng = make_stream(o.seed, 0x68696c);
  const Matrix a = gaussian_matrix(rng, 4, 4);
  const auto r = check_hilbert_collapse(a, OptimBudget{o.restarts, 500, o.seed});
  const bool pass = r.max_rel_exact <= 1e-8 && r.max_rel_search <= 1e-3;
  return {"hilbert_collapse", pass,
          "exact rel " + detail::fmt(r.max_rel_exact) + ", search rel " + detail::fmt(r.max_rel_search)};
}

inline CheckResult check_duality_products(const VerifyOptions& o) {
  OptimBudget budget{o.restarts, 500, o.seed};
  std::string detail;
  bool pass = true;
  const auto pk = check_pukhov(2, Exponent(1), Exponent(2), budget);
  pass = pass && pk.pass;
  detail += "pukhov(2,1,2) = " + detail::fmt(pk.product);
  const auto bg = check_bern_gelfand_duality(3, 2, Exponent(1), Exponent(2), budget);
  pass = pass && bg.pass;
  detail += "; bern-gelfand(3,2,1,2) = " + detail::fmt(bg.product);
  return {"duality_products", pass, detail};
}

inline CheckResult check_pietsch_hilbert(const VerifyOptions& o) {
  Rng rng = make_stream(o.seed, 0x706965);
  const FiniteOperator t(gaussian_matrix(rng, 4, 4), Exponent(2), Exponent(2));
  OptimBudget budget{o.restarts, 500, o.seed};
  for (int n = 1; n <= 2; ++n) {
    const auto r = check_pietsch(t, n, budget);
    if (!r.certified || !*r.pass)
      return {"pietsch", false, "n=" + std::to_string(n) + ": b=" + detail::fmt(r.lhs) + " > " + detail::fmt(r.rhs)};
  }
  return {"pietsch", true, "b_{2n-1} <= e (x_1...x_n)^{1/n} for n = 1, 2"};
}

inline CheckResult check_sandwich_grid(const VerifyOptions& o) {
  OptimBudget budget{o.restarts, 500, o.seed};
  const double inf = std::numeric_limits<double>::infinity();
  const std::pair<double, double> pairs[] = {{1, 2}, {2, 1}, {1, inf}, {4, 2}};
  Rng rng = make_stream(o.seed, 0x73616e);
  const Matrix a = gaussian_matrix(rng, 3, 3);
  int count = 0;
  for (auto [p, q] : pairs) {
    const auto ep = std::isinf(p) ? Exponent::infinity() : Exponent(p);
    const auto eq = std::isinf(q) ? Exponent::infinity() : Exponent(q);
    const FiniteOperator t(a, ep, eq);
    for (int n = 1; n <= 3; ++n, ++count) {
      const auto r = check_sandwich(t, n, budget);
      if (!r.pass)
        return {"sandwich", false,
                "p=" + ep.to_string() + " q=" + eq.to_string() + " n=" + std::to_string(n) + ": b=" +
                    detail::fmt(r.bernstein.value) + " c=" + detail::fmt(r.gelfand.value) +
                    " d=" + detail::fmt(r.kolmogorov.value) + " a=" + detail::fmt(r.approximation.value)};
    }
  }
  return {"sandwich", true, std::to_string(count) + " instances"};
}

inline CheckResult check_block_identity(const VerifyOptions& o) {
  Rng rng = make_stream(o.seed, 0x626c6b);
  std::normal_distribution<double> g;
  double worst = 0;
  for (int k = 0; k < 30; ++k) {
    const int d = 1 + k % 3;
    const int mu = k % 7;
    const double t = -0.5 + 0.1 * k;
    const Exponent p(1.0 + 0.25 * (k % 9));
    const CoeffField f = block_field(mu, d, [&](const HyperIndex&) { return Complex(g(rng), g(rng)); });
    const double b = bnorm(f, t, p, p);
    worst = std::max(worst, std::abs(fnorm_integrated(f, t, p, p) - b) / b);
  }
  return {"block_identity", worst <= 1e-10, "max rel |fnorm - bnorm| = " + detail::fmt(worst)};
}

inline CheckResult check_dimension_one_collapse(const VerifyOptions& o) {
  Rng rng = make_stream(o.seed, 0x643163);
  int checked = 0;
  for (int k = 0; k < 1000; ++k) {
    ParamSet p = detail::sample_params(rng, Scale::mixed, 1, true);
    p.q = p.p1;
    try {
      const auto a = bernstein_rate_mixed(p);
      const auto b = bernstein_rate_isotropic(p);
      if (a.alpha != b.alpha)
        return {"d1_collapse", false,
                "t=" + detail::fmt(p.t) + " p1=" + p.p1.to_string() + " p2=" + p.p2.to_string() + ": " + a.label() +
                    " vs " + b.label()};
      ++checked;
    } catch (const Error& e) {
      if (!detail::limiting(e)) return {"d1_collapse", false, e.what()};
    }
  }
  return {"d1_collapse", true, std::to_string(checked) + " parameter sets"};
}

inline CheckResult check_rate_dominance(const VerifyOptions& o) {
  Rng rng = make_stream(o.seed, 0x646f6d);
  int checked = 0;
  for (int k = 0; k < 2000; ++k) {
    const ParamSet p = detail::sample_params(rng, Scale::mixed, 4, true);
    try {
      const auto b = bernstein_rate_mixed(p);
      const auto x = weyl_rate_mixed(p);
      if (!rate_dominates(b, x, p.d))
        return {"bernstein_weyl_dominance", false,
                "d=" + std::to_string(p.d) + " t=" + detail::fmt(p.t) + " p1=" + p.p1.to_string() +
                    " p2=" + p.p2.to_string() + ": " + b.label() + " vs " + x.label()};
      ++checked;
    } catch (const Error& e) {
      if (!detail::limiting(e)) return {"bernstein_weyl_dominance", false, e.what()};
    }
  }
  return {"bernstein_weyl_dominance", true, std::to_string(checked) + " parameter sets"};
}

inline CheckResult check_monotonicity(const VerifyOptions& o) {
  OptimBudget budget{o.restarts, 500, o.seed};
  const auto t = FiniteOperator::identity_of(4, Exponent(1), Exponent(2));
  for (WidthKind kind : {WidthKind::bernstein, WidthKind::gelfand}) {
    auto seq = width_profile(kind, t, 4, budget, EstimatorMode::search);
    if (o.fault == "monotonicity") seq[2].value = 1.5 * seq[1].value + 1e-3;
    for (std::size_t i = 1; i < seq.size(); ++i)
      if (seq[i].value > seq[i - 1].value + 1e-12)
        return {"monotonicity", false,
                std::string(to_string(kind)) + " n=" + std::to_string(seq[i].n) + ": " + detail::fmt(seq[i].value) +
                    " > " + detail::fmt(seq[i - 1].value)};
  }
  return {"monotonicity", true, "bernstein and gelfand profiles of id_12^4 nonincreasing"};
}

inline std::vector<CheckResult> run_verify(const VerifyOptions& o) {
  if (o.fault != "none" && o.fault != "monotonicity")
    fail_validation("unknown fault '" + o.fault + "' (expected none or monotonicity)");
  using Check = CheckResult (*)(const VerifyOptions&);
  const Check checks[] = {check_closed_forms,    check_hilbert,          check_duality_products,
                          check_pietsch_hilbert, check_sandwich_grid,    check_block_identity,
                          check_dimension_one_collapse, check_rate_dominance, check_monotonicity};
  const std::size_t n = std::size(checks);
  std::vector<CheckResult> results(n);
  parallel_for(n, default_thread_count(), [&](std::size_t i) { results[i] = checks[i](o); });
  return results;
}

inline bool cmd_verify(const Json& cfg, std::ostream& out, std::ostream& err) {
  const Format fmt = parse_format(cfg["format"]);
  if (fmt == Format::svg) fail_validation("verify has no plot output; use csv or json");
  VerifyOptions o;
  o.seed = cfg["seed"];
  o.restarts = static_cast<int>(cfg["restarts"].get<long long>());
  o.fault = cfg["fault"];
  if (o.restarts < 1) fail_validation("empty optimization budget");
  const auto results = run_verify(o);
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    if (!r.pass) err << "widths-lab: check failed: " << r.name << ": " << r.detail << '\n';
  }
  if (fmt == Format::csv) {
    out << config_comment(cfg) << '\n';
    out << "check,status,detail\n";
    for (const auto& r : results) out << r.name << ',' << (r.pass ? "PASS" : "FAIL") << ",\"" << r.detail << "\"\n";
  } else {
    Json j;
    j["config"] = cfg;
    j["checks"] = Json::array();
    for (const auto& r : results) j["checks"].push_back({{"check", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    j["pass"] = all;
    out << j.dump(2) << '\n';
  }
  return all;
}

// ------------------------------------------------------------------ main

inline std::vector<Key> common_keys(const char* format) {
  return {{"seed", KeyType::unsigned_integer, Json(std::uint64_t{0}), "master seed"},
          {"output", KeyType::text, "", "output file; empty writes to standard output"},
          {"format", KeyType::text, format, "csv, json or svg"}};
}

inline std::vector<Key> with_common(std::vector<Key> keys, const char* format) {
  auto c = common_keys(format);
  keys.insert(keys.end(), c.begin(), c.end());
  return keys;
}

/// Runs one command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical s-numbers, widths, hyperbolic-cross sparsification and rate tables"};
  app.name("widths-lab");
  app.require_subcommand(1);

  struct Command {
    CLI::App* app;
    std::unique_ptr<CommandOptions> options;
  };
  std::vector<Command> commands;
  auto add = [&](const char* name, const char* help, std::vector<Key> keys) {
    CLI::App* sub = app.add_subcommand(name, help);
    commands.push_back({sub, std::make_unique<CommandOptions>(sub, name, std::move(keys))});
  };
  add("matrix", "width table of id: l_p1^m -> l_p2^m for n = 1..m",
      with_common({{"m", KeyType::integer, 4, "dimension (<= 16)"},
                   {"p1", KeyType::exponent, "2", "source exponent"},
                   {"p2", KeyType::exponent, "2", "target exponent"},
                   {"kinds", KeyType::text, "all", "comma list of approximation,kolmogorov,gelfand,bernstein,weyl"},
                   {"restarts", KeyType::integer, 64, "random restarts per search"},
                   {"max_iter", KeyType::integer, 500, "local iterations per restart"},
                   {"mode", KeyType::text, "automatic", "automatic or search"}},
                  "csv"));
  add("rates", "closed-form rate exponents for Bernstein, Weyl and nonlinear widths",
      with_common({{"scale", KeyType::text, "isotropic", "isotropic or mixed"},
                   {"d", KeyType::integer, 1, "dimension"},
                   {"t", KeyType::real, 1.0, "smoothness"},
                   {"p1", KeyType::exponent, "2", "source exponent"},
                   {"p2", KeyType::exponent, "2", "target exponent"},
                   {"q", KeyType::exponent, "2", "fine index of the isotropic source"}},
                  "json"));
  add("threshold", "decay experiment of the thresholding approximant",
      with_common({{"d", KeyType::integer, 2, "dimension"},
                   {"t", KeyType::real, 1.5, "smoothness"},
                   {"p1", KeyType::exponent, "1", "source exponent"},
                   {"p2", KeyType::exponent, "2", "target exponent"},
                   {"jmin", KeyType::integer, 4, "first level J"},
                   {"jmax", KeyType::integer, 10, "last level J"},
                   {"trials", KeyType::integer, 20, "fields per level"},
                   {"generator", KeyType::text, "random-dense", "random-dense, block-concentrated or single-level-flat"},
                   {"fit", KeyType::boolean, false, "append the rate fit"}},
                  "csv"));
  add("verify", "cross-module invariant battery",
      with_common({{"restarts", KeyType::integer, 32, "random restarts per search"},
                   {"fault", KeyType::text, "none", "inject a fault: none or monotonicity"}},
                  "csv"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    for (const auto& c : commands) {
      if (!c.app->parsed()) continue;
      const Json cfg = c.options->merge();
      const std::string name = cfg["command"];
      const std::string path = cfg["output"];
      std::ofstream file;
      if (!path.empty()) {
        file.open(path);
        if (!file) fail_validation("cannot open output file '" + path + "'");
      }
      std::ostream& sink = path.empty() ? out : file;
      std::ostringstream buffer;  // nothing is written unless the command completes
      int code = kSuccess;
      if (name == "matrix") cmd_matrix(cfg, buffer);
      else if (name == "rates") cmd_rates(cfg, buffer);
      else if (name == "threshold") cmd_threshold(cfg, buffer);
      else if (!cmd_verify(cfg, buffer, err)) code = kCheckFailed;
      sink << buffer.str();
      sink.flush();
      return code;
    }
  } catch (const Error& e) {
    const char* label = e.kind() == ErrorKind::validation ? "error" : e.kind() == ErrorKind::regime ? "regime" : "guard";
    err << "widths-lab: " << label << ": " << e.what() << '\n';
    return e.kind() == ErrorKind::validation ? kUsage : kRegime;
  } catch (const std::exception& e) {
    err << "widths-lab: error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace widthlab::cli
