#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "grid.hpp"

namespace mlmi {

/// Transcendental factor carried by a term.
enum class Transcendental {
  none,
  asinh21,  ///< arcsinh(t2/t1)
  asinh12,  ///< arcsinh(t1/t2)
  log1,     ///< ln|t1|
  log2,     ///< ln|t2|
};

/// coeff * t1^a1 * t2^a2 * r^g * sgn(t1)^s1 * sgn(t2)^s2 * F, with r = sqrt(t1^2+t2^2).
struct Term {
  long double coeff = 0.0L;
  int a1 = 0;
  int a2 = 0;
  int g = 0;
  bool s1 = false;
  bool s2 = false;
  Transcendental f = Transcendental::none;

  [[nodiscard]] auto key() const noexcept { return std::tuple(a1, a2, g, s1, s2, f); }
};

/// Closed-form expression over the kernel algebra, kept as a sum of merged terms.
/// Differentiation is exact; every derivative stays inside the algebra.
class KernelExpr {
 public:
  KernelExpr() = default;

  static KernelExpr constant(long double c) { return from(Term{c}); }
  static KernelExpr t1() { return from(Term{1.0L, 1}); }
  static KernelExpr t2() { return from(Term{1.0L, 0, 1}); }
  static KernelExpr radius() { return from(Term{1.0L, 0, 0, 1}); }
  static KernelExpr sign(Axis a) {
    Term t{1.0L};
    (a == Axis::first ? t.s1 : t.s2) = true;
    return from(t);
  }
  static KernelExpr abs(Axis a) {
    Term t{1.0L};
    (a == Axis::first ? t.a1 : t.a2) = 1;
    (a == Axis::first ? t.s1 : t.s2) = true;
    return from(t);
  }
  static KernelExpr function(Transcendental f) {
    Term t{1.0L};
    t.f = f;
    return from(t);
  }
  /// Monomial t1^a1 t2^a2 r^g.
  static KernelExpr monomial(long double c, int a1, int a2, int g = 0) {
    return from(Term{c, a1, a2, g});
  }

  [[nodiscard]] const std::vector<Term>& terms() const noexcept { return terms_; }
  [[nodiscard]] bool is_zero() const noexcept { return terms_.empty(); }

  friend KernelExpr operator+(const KernelExpr& a, const KernelExpr& b) {
    std::vector<Term> all = a.terms_;
    all.insert(all.end(), b.terms_.begin(), b.terms_.end());
    return canonical(std::move(all));
  }
  friend KernelExpr operator-(const KernelExpr& a, const KernelExpr& b) { return a + (-1.0L) * b; }
  friend KernelExpr operator*(long double c, const KernelExpr& e) {
    std::vector<Term> all = e.terms_;
    for (auto& t : all) t.coeff *= c;
    return canonical(std::move(all));
  }
  friend KernelExpr operator*(const KernelExpr& a, const KernelExpr& b) {
    std::vector<Term> all;
    for (const auto& x : a.terms_)
      for (const auto& y : b.terms_) {
        if (x.f != Transcendental::none && y.f != Transcendental::none)
          throw std::domain_error("product of two transcendental factors is outside the algebra");
        all.push_back(Term{x.coeff * y.coeff, x.a1 + y.a1, x.a2 + y.a2, x.g + y.g, x.s1 != y.s1,
                           x.s2 != y.s2, x.f != Transcendental::none ? x.f : y.f});
      }
    return canonical(std::move(all));
  }

  /// First partial derivative along `axis` (valid off the coordinate axes).
  [[nodiscard]] KernelExpr partial(Axis axis) const {
    const bool first = axis == Axis::first;
    std::vector<Term> out;
    out.reserve(terms_.size() * 3);
    for (const auto& t : terms_) {
      const int a = first ? t.a1 : t.a2;
      if (a != 0) {
        Term d = t;
        d.coeff *= a;
        (first ? d.a1 : d.a2) -= 1;
        out.push_back(d);
      }
      if (t.g != 0) {
        Term d = t;
        d.coeff *= t.g;
        d.g -= 2;
        (first ? d.a1 : d.a2) += 1;
        out.push_back(d);
      }
      if (t.f == Transcendental::none) continue;
      Term d = t;
      d.f = Transcendental::none;
      switch (t.f) {
        case Transcendental::asinh21:
          d.g -= 1;
          if (first) {
            d.coeff = -d.coeff;
            d.a1 -= 1;
            d.a2 += 1;
          }
          d.s1 = !d.s1;
          break;
        case Transcendental::asinh12:
          d.g -= 1;
          if (!first) {
            d.coeff = -d.coeff;
            d.a2 -= 1;
            d.a1 += 1;
          }
          d.s2 = !d.s2;
          break;
        case Transcendental::log1:
          if (!first) continue;
          d.a1 -= 1;
          break;
        case Transcendental::log2:
          if (first) continue;
          d.a2 -= 1;
          break;
        case Transcendental::none:
          break;
      }
      out.push_back(d);
    }
    return canonical(std::move(out));
  }

  /// Value at t; zero-power limits are taken where a coordinate vanishes.
  /// Returns NaN at a genuinely singular point.
  [[nodiscard]] long double eval(long double x1, long double x2) const noexcept {
    const Point pt(x1, x2);
    long double sum = 0.0L;
    for (const auto& t : terms_) sum += pt.term(t);
    return sum;
  }

  [[nodiscard]] std::string to_string() const;

 private:
  struct Point {
    long double t1, t2, r;
    long double f[5];
    Point(long double x1, long double x2) : t1(x1), t2(x2), r(std::hypot(x1, x2)) {
      const long double nan = std::numeric_limits<long double>::quiet_NaN();
      f[0] = 1.0L;
      f[1] = x1 != 0 ? std::asinh(x2 / x1) : nan;
      f[2] = x2 != 0 ? std::asinh(x1 / x2) : nan;
      f[3] = x1 != 0 ? std::log(std::fabs(x1)) : nan;
      f[4] = x2 != 0 ? std::log(std::fabs(x2)) : nan;
    }

    static long double sgn(long double v) noexcept { return v > 0 ? 1.0L : (v < 0 ? -1.0L : 0.0L); }

    [[nodiscard]] long double term(const Term& t) const noexcept {
      const long double nan = std::numeric_limits<long double>::quiet_NaN();
      // Positive powers win against the at most logarithmic singularities of F.
      if ((t1 == 0 && t.a1 > 0) || (t2 == 0 && t.a2 > 0)) return 0.0L;
      if ((t1 == 0 && t.a1 < 0) || (t2 == 0 && t.a2 < 0)) return nan;
      if (r == 0 && t.g < 0) return nan;
      long double v = t.coeff;
      if (t.a1) v *= std::pow(t1, t.a1);
      if (t.a2) v *= std::pow(t2, t.a2);
      if (t.g) v *= std::pow(r, t.g);
      if (t.s1) v *= sgn(t1);
      if (t.s2) v *= sgn(t2);
      if (v == 0) return 0.0L;
      return v * f[static_cast<int>(t.f)];
    }
  };

  static KernelExpr from(Term t) { return canonical({t}); }

  static KernelExpr canonical(std::vector<Term> in) {
    std::map<decltype(Term{}.key()), long double> merged;
    for (const auto& t : in) merged[t.key()] += t.coeff;
    KernelExpr e;
    for (const auto& [k, c] : merged) {
      if (c == 0) continue;
      const auto& [a1, a2, g, s1, s2, f] = k;
      e.terms_.push_back(Term{c, a1, a2, g, s1, s2, f});
    }
    return e;
  }

  std::vector<Term> terms_;
};

inline std::string KernelExpr::to_string() const {
  if (terms_.empty()) return "0";
  static const char* fname[] = {"", "*asinh(t2/t1)", "*asinh(t1/t2)", "*ln|t1|", "*ln|t2|"};
  std::string s;
  for (const auto& t : terms_) {
    if (!s.empty()) s += " + ";
    s += std::to_string(static_cast<double>(t.coeff));
    if (t.a1) s += "*t1^" + std::to_string(t.a1);
    if (t.a2) s += "*t2^" + std::to_string(t.a2);
    if (t.g) s += "*r^" + std::to_string(t.g);
    if (t.s1) s += "*sgn(t1)";
    if (t.s2) s += "*sgn(t2)";
    s += fname[static_cast<int>(t.f)];
  }
  return s;
}

/// Repeated partial derivative.
inline KernelExpr derive(const KernelExpr& e, Axis axis, int order) {
  if (order < 0 || order > 12) throw std::invalid_argument("derivative order must be in [0,12]");
  KernelExpr out = e;
  for (int k = 0; k < order; ++k) out = out.partial(axis);
  return out;
}

}  // namespace mlmi
