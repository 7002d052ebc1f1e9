#pragma once

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "kernel_expr.hpp"

namespace mlmi {

/// 1/|t| for t != 0.
inline double model_kernel(double t1, double t2) {
  const double r = std::hypot(t1, t2);
  if (r == 0.0) throw std::domain_error("model kernel is singular at t = 0");
  return 1.0 / r;
}

/// Kernel integrated twice along each axis, with the t_k -> 0 limits taken.
/// Even in both arguments and bitwise symmetric under t1 <-> t2.
inline double integrated_kernel_22(double t1, double t2) noexcept {
  const double a = std::min(std::fabs(t1), std::fabs(t2));
  const double b = std::max(std::fabs(t1), std::fabs(t2));
  const double r = std::hypot(a, b);
  double v = (a * a * a + b * b * b - r * r * r) / 6.0;
  if (a != 0.0) v += 0.5 * a * b * (a * std::asinh(b / a) + b * std::asinh(a / b));
  return v;
}

enum class Parity { even, odd, none };

/// One additive piece of the integrated kernel.
struct KernelComponent {
  std::string name;
  KernelExpr expr;
  std::array<Parity, 2> parity{Parity::even, Parity::even};
  std::array<bool, 2> smooth{false, false};  ///< axes on which no softening is needed
};

/// The six components whose sum is integrated_kernel_22.
inline const std::vector<KernelComponent>& kernel_components() {
  static const std::vector<KernelComponent> comps = [] {
    using E = KernelExpr;
    const E s1 = E::sign(Axis::first);
    const E s2 = E::sign(Axis::second);
    const E r = E::radius();
    std::vector<KernelComponent> c;
    c.push_back({"G0", 0.5L * s1 * E::monomial(1, 2, 1) * E::function(Transcendental::asinh21)});
    c.push_back({"G1", E::monomial(-1.0L / 6, 2, 0) * r});
    c.push_back({"G2", (1.0L / 6) * s1 * E::monomial(1, 3, 0)});
    c.push_back({"G3", 0.5L * s2 * E::monomial(1, 1, 2) * E::function(Transcendental::asinh12)});
    c.push_back({"G4", E::monomial(-1.0L / 6, 0, 2) * r});
    c.push_back({"G5", (1.0L / 6) * s2 * E::monomial(1, 0, 3)});
    c[2].smooth = {false, true};
    c[5].smooth = {true, false};
    return c;
  }();
  return comps;
}

/// Sum of all components as a single expression.
inline const KernelExpr& integrated_kernel_expr() {
  static const KernelExpr g = [] {
    KernelExpr s;
    for (const auto& c : kernel_components()) s = s + c.expr;
    return s;
  }();
  return g;
}

/// Mixed partial derivative d1^j1 d2^j2 of the integrated kernel, memoized.
inline const KernelExpr& integrated_kernel_derivative(int j1, int j2) {
  if (j1 < 0 || j2 < 0 || j1 > 12 || j2 > 12)
    throw std::invalid_argument("derivative order must be in [0,12]");
  static std::mutex mu;
  static std::map<std::pair<int, int>, KernelExpr> memo;
  std::lock_guard<std::mutex> lock(mu);
  auto it = memo.find({j1, j2});
  if (it != memo.end()) return it->second;
  // Build along axis 1 first, then axis 2, reusing shorter chains.
  KernelExpr e = integrated_kernel_expr();
  for (int a = 0; a <= j1; ++a) {
    if (a > 0) e = e.partial(Axis::first);
    memo.try_emplace({a, 0}, e);
  }
  e = memo.at({j1, 0});
  for (int b = 1; b <= j2; ++b) {
    auto found = memo.find({j1, b});
    e = found != memo.end() ? found->second : e.partial(Axis::second);
    memo.try_emplace({j1, b}, e);
  }
  return memo.at({j1, j2});
}

/// eta^l * ln|eta|, the dominant non-smooth part of the kernel along one axis.
inline double principal_smoothness_component(int l, double eta) {
  if (eta == 0.0) throw std::domain_error("principal smoothness component needs eta != 0");
  return std::pow(eta, l) * std::log(std::fabs(eta));
}

/// Expression form of principal_smoothness_component along axis 1.
inline KernelExpr principal_smoothness_expr(int l) {
  return KernelExpr::monomial(1, l, 0) * KernelExpr::function(Transcendental::log1);
}

namespace detail {

/// Integral over [0,t] of w(eta) f(eta) with w = (t-eta)^(l-1)/(l-1)!, i.e. l-fold integration.
/// `split` (> 0) marks the width of a near-singular peak at eta = 0, integrated separately.
/// Inner integrals skip the error check: at abscissae within ~1e-200 of the axis their own
/// estimate is poor, but the outer sum gives those points negligible weight and is checked.
template <class F>
double repeated_integral(F&& f, double t, int l, double tol, double split = 0.0, bool check = true) {
  if (l == 0) return f(t);
  if (t == 0.0) return 0.0;
  const double len = std::fabs(t);
  const double sgn = t < 0 ? -1.0 : 1.0;
  const double fact = std::tgamma(static_cast<double>(l));
  // integrate over |eta| in [0, len] with eta = sgn * |eta|
  auto integrand = [&](double a) { return std::pow(len - a, l - 1) / fact * f(sgn * a); };
  boost::math::quadrature::tanh_sinh<double> q;
  double total = 0.0;
  double err_total = 0.0;
  double lo = 0.0;
  for (double hi : {split > 1e-12 * len && split < 0.5 * len ? split : len, len}) {
    if (!(hi > lo)) continue;
    double err = 0.0;
    total += q.integrate(integrand, lo, hi, tol, &err);
    err_total += err;
    lo = hi;
  }
  if (!std::isfinite(total) || (check && err_total > 1e3 * std::max(tol, tol * std::fabs(total))))
    throw std::runtime_error("kernel quadrature did not converge");
  // (t - eta)^(l-1) = sgn^(l-1) (len - |eta|)^(l-1), d eta = sgn d|eta|
  return (l % 2 == 0 ? 1.0 : sgn) * total;
}

}  // namespace detail

/// Recursively integrated kernel by nested quadrature, l_k in [0,2].
inline double kernel_family_oracle(std::array<int, 2> l, double t1, double t2, double tol = 1e-10) {
  for (int lk : l)
    if (lk < 0 || lk > 2) throw std::invalid_argument("kernel family index must be in [0,2]");
  if (l[0] == 0 && l[1] == 0) return model_kernel(t1, t2);
  const double inner_tol = tol * 1e-2;
  auto along2 = [&](double eta1) {
    if (l[1] == 0) return model_kernel(eta1, t2);
    return detail::repeated_integral([&](double eta2) { return model_kernel(eta1, eta2); }, t2,
                                     l[1], inner_tol, std::fabs(eta1), false);
  };
  return detail::repeated_integral(along2, t1, l[0], tol);
}

}  // namespace mlmi
