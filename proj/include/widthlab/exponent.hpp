#pragma once

#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "widthlab/errors.hpp"

namespace widthlab {

/// Guard band applied to every strict inequality on parameters.
inline constexpr double kGuardBand = 1e-9;

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// A Lebesgue exponent p in [1, inf].
///
/// Infinity is its own case, never a large float. The reciprocal 1/p is held
/// alongside the value so that exponent arithmetic such as (1/p1 - 1/p2)_+
/// sees 1/inf == 0 exactly, and the dual exponent is carried with it so that
/// dual(dual(p)) reproduces p bit for bit.
class Exponent {
 public:
  /// p = 1.
  constexpr Exponent() = default;

  explicit Exponent(double p) {
    if (std::isnan(p) || p < 1.0) fail_validation("exponent must satisfy p >= 1, got " + format_double(p));
    if (std::isinf(p)) {
      *this = infinity();
      return;
    }
    infinite_ = false;
    value_ = p;
    recip_ = 1.0 / p;
    dual_infinite_ = (p == 1.0);
    dual_value_ = dual_infinite_ ? std::numeric_limits<double>::infinity() : p / (p - 1.0);
    dual_recip_ = 1.0 - recip_;
  }

  static constexpr Exponent infinity() {
    Exponent e;
    e.infinite_ = true;
    e.value_ = std::numeric_limits<double>::infinity();
    e.recip_ = 0.0;
    e.dual_infinite_ = false;
    e.dual_value_ = 1.0;
    e.dual_recip_ = 1.0;
    return e;
  }

  /// Parses "2", "1.5", "4/3", "inf".
  static Exponent parse(std::string_view text) {
    if (text == "inf" || text == "infinity" || text == "Inf") return infinity();
    auto parse_num = [&](std::string_view s) {
      double v = 0;
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail_validation("cannot parse exponent '" + std::string(text) + "'");
      return v;
    };
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      double num = parse_num(text.substr(0, slash));
      double den = parse_num(text.substr(slash + 1));
      if (den == 0) fail_validation("cannot parse exponent '" + std::string(text) + "'");
      return Exponent(num / den);
    }
    return Exponent(parse_num(text));
  }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr double value() const { return value_; }
  /// 1/p, exactly 0 for p = inf.
  constexpr double reciprocal() const { return recip_; }

  constexpr Exponent dual() const {
    Exponent e;
    e.infinite_ = dual_infinite_;
    e.value_ = dual_value_;
    e.recip_ = dual_recip_;
    e.dual_infinite_ = infinite_;
    e.dual_value_ = value_;
    e.dual_recip_ = recip_;
    return e;
  }

  bool is(double p) const { return !infinite_ && value_ == p; }

  std::string to_string() const { return infinite_ ? "inf" : format_double(value_); }

  friend constexpr bool operator==(const Exponent& a, const Exponent& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }
  /// Ordering of exponents (p <= q  <=>  1/p >= 1/q).
  friend constexpr bool operator<(const Exponent& a, const Exponent& b) { return a.recip_ > b.recip_; }
  friend constexpr bool operator<=(const Exponent& a, const Exponent& b) { return a.recip_ >= b.recip_; }
  friend constexpr bool operator>(const Exponent& a, const Exponent& b) { return b < a; }
  friend constexpr bool operator>=(const Exponent& a, const Exponent& b) { return b <= a; }

 private:
  bool infinite_ = false;
  double value_ = 1.0;
  double recip_ = 1.0;
  bool dual_infinite_ = true;
  double dual_value_ = std::numeric_limits<double>::infinity();
  double dual_recip_ = 0.0;
};

inline Exponent dual(Exponent p) { return p.dual(); }

inline constexpr double positive_part(double x) { return x > 0 ? x : 0.0; }

/// The tuple (d, t, p1, p2, q) that determines every regime decision.
struct ParamSet {
  int d = 1;
  double t = 1.0;
  Exponent p1{};
  Exponent p2{};
  Exponent q{};

  void validate() const {
    if (d < 1) fail_validation("dimension d must be >= 1");
    if (!std::isfinite(t)) fail_validation("smoothness t must be finite");
  }

  /// (1/p1 - 1/p2)_+
  double embedding_gap() const { return positive_part(p1.reciprocal() - p2.reciprocal()); }

  /// Compactness of B^t_{p1,q} -> L_{p2}: t/d > (1/p1 - 1/p2)_+, strict with guard band.
  bool isotropic_compact() const { return t / d > embedding_gap() + kGuardBand; }
  /// Compactness of S^t_{p1,p1}B -> L_{p2}: t > (1/p1 - 1/p2)_+, strict with guard band.
  bool mixed_compact() const { return t > embedding_gap() + kGuardBand; }
};

}  // namespace widthlab
