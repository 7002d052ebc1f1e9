#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "kernels.hpp"

namespace mlmi {

/// Softening order p, distance m (in coarse meshes) and coarse mesh H for one axis.
struct SofteningParams {
  int order = 4;
  int distance = 0;
  double coarse_mesh = 1.0;

  [[nodiscard]] double band() const noexcept { return distance * coarse_mesh; }
  [[nodiscard]] bool active() const noexcept { return distance > 0; }

  void validate() const {
    if (order < 2 || order > 12 || order % 2 != 0)
      throw std::invalid_argument("softening order must be even in [2,12]");
    if (distance < 0) throw std::invalid_argument("softening distance must be >= 0");
    if (!(coarse_mesh > 0.0)) throw std::invalid_argument("coarse mesh must be positive");
    if (band() >= kDomainDiameter)
      throw std::invalid_argument("softening band exceeds the domain diameter");
  }

  friend bool operator==(const SofteningParams&, const SofteningParams&) = default;
};

namespace detail {

using Rational = boost::multiprecision::cpp_rational;

inline Rational falling_factorial(int n, int k) {
  Rational v = 1;
  for (int q = 0; q < k; ++q) v *= n - q;
  return v;
}

/// Exact inverse of B with B(j,i) = e!/(e-j)!, e = 2i+odd: the scaled continuity system
/// at the band edge s = 1. Row-major p x p, cached.
inline const std::vector<long double>& continuity_inverse(int p, bool odd) {
  if (p < 1 || p > 12) throw std::invalid_argument("continuity system size must be in [1,12]");
  static std::mutex mu;
  static std::map<std::pair<int, bool>, std::vector<long double>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto [it, fresh] = cache.try_emplace({p, odd});
  if (!fresh) return it->second;
  const auto n = static_cast<std::size_t>(p);
  std::vector<Rational> a(n * 2 * n, Rational(0));
  auto at = [&](std::size_t r, std::size_t c) -> Rational& { return a[r * 2 * n + c]; };
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const int e = 2 * static_cast<int>(i) + (odd ? 1 : 0);
      if (e >= static_cast<int>(j)) at(j, i) = falling_factorial(e, static_cast<int>(j));
    }
    at(j, n + j) = 1;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && at(piv, c) == 0) ++piv;
    if (piv == n) {
      cache.erase(it);
      throw std::domain_error("continuity matrix is singular");
    }
    if (piv != c)
      for (std::size_t k = 0; k < 2 * n; ++k) std::swap(at(c, k), at(piv, k));
    const Rational d = at(c, c);
    for (std::size_t k = 0; k < 2 * n; ++k) at(c, k) /= d;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || at(r, c) == 0) continue;
      const Rational f = at(r, c);
      for (std::size_t k = 0; k < 2 * n; ++k) at(r, k) -= f * at(c, k);
    }
  }
  it->second.resize(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) it->second[r * n + c] = static_cast<long double>(at(r, n + c));
  return it->second;
}

/// c = Binv * rhs.
inline std::vector<long double> solve_continuity(int p, bool odd, const std::vector<long double>& rhs) {
  const auto& inv = continuity_inverse(p, odd);
  const auto n = static_cast<std::size_t>(p);
  std::vector<long double> c(n, 0.0L);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i] += inv[i * n + j] * rhs[j];
  return c;
}

/// Even polynomial sum_i c_i s^(2i) by Horner in s^2.
inline long double even_poly(const std::vector<long double>& c, long double s) noexcept {
  const long double s2 = s * s;
  long double v = 0.0L;
  for (std::size_t i = c.size(); i-- > 0;) v = v * s2 + c[i];
  return v;
}

/// q-th derivative in s of sum_i c_i s^(2i).
inline long double even_poly_derivative(const std::vector<long double>& c, long double s, int q) noexcept {
  long double v = 0.0L;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const int e = 2 * static_cast<int>(i);
    if (e < q) continue;
    long double f = 1.0L;
    for (int k = 0; k < q; ++k) f *= e - k;
    v += c[i] * f * std::pow(s, e - q);
  }
  return v;
}

}  // namespace detail

/// Unscaled continuity matrix M(j,i) = d^j/dt^j t^e(i) at t = mH, with e(i) = 2i or 2i+1.
inline Eigen::MatrixXd continuity_matrix(int p, double mH, Parity parity) {
  if (!(mH > 0.0)) throw std::invalid_argument("band width must be positive");
  if (p < 1 || p > 12) throw std::invalid_argument("continuity system size must be in [1,12]");
  if (parity == Parity::none) throw std::domain_error("continuity matrix needs an even or odd exponent set");
  const int odd = parity == Parity::odd ? 1 : 0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < p; ++i) {
      const int e = 2 * i + odd;
      if (e >= j)
        m(j, i) = static_cast<double>(detail::falling_factorial(e, j)) * std::pow(mH, e - j);
    }
  if (Eigen::FullPivLU<Eigen::MatrixXd>(m).rank() < p) throw std::domain_error("continuity matrix is singular");
  return m;
}

/// Coefficients c_i of the softened polynomial sum_i c_i (t_axis/mH)^(2i+odd) of one component
/// along `axis`, on the line where the other coordinate equals t_other.
inline std::vector<long double> axis_coefficients(const KernelComponent& comp, Axis axis,
                                                  const SofteningParams& params, double t_other) {
  params.validate();
  if (!params.active()) throw std::invalid_argument("softening distance is zero");
  const std::size_t k = axis == Axis::first ? 0 : 1;
  if (comp.parity[k] == Parity::none) throw std::domain_error("component has no parity along the softened axis");
  const double b = params.band();
  std::vector<long double> rhs(static_cast<std::size_t>(params.order));
  KernelExpr d = comp.expr;
  long double scale = 1.0L;
  for (int j = 0; j < params.order; ++j) {
    if (j > 0) {
      d = d.partial(axis);
      scale *= b;
    }
    const long double v = k == 0 ? d.eval(b, t_other) : d.eval(t_other, b);
    if (!std::isfinite(static_cast<double>(v))) throw std::domain_error("derivative evaluated at a singular point");
    rhs[static_cast<std::size_t>(j)] = scale * v;
  }
  return detail::solve_continuity(params.order, comp.parity[k] == Parity::odd, rhs);
}

/// Softened polynomial of one component along `axis`, for |t_axis| <= mH.
inline double soften_axis(const KernelComponent& comp, Axis axis, const SofteningParams& params,
                          double t1, double t2) {
  params.validate();
  if (!params.active()) return static_cast<double>(comp.expr.eval(t1, t2));
  const std::size_t k = axis == Axis::first ? 0 : 1;
  const double tk = k == 0 ? t1 : t2;
  if (std::fabs(tk) > params.band()) throw std::invalid_argument("point lies outside the softening band");
  const auto c = axis_coefficients(comp, axis, params, k == 0 ? t2 : t1);
  const long double s = static_cast<long double>(tk) / params.band();
  const long double v = detail::even_poly(c, s);
  return static_cast<double>(comp.parity[k] == Parity::odd ? v * s : v);
}

/// Lattice table of an even-even kernel: value at (d1*h1, d2*h2) for 0 <= d < n.
struct KernelTable {
  double h1 = 0.0;
  double h2 = 0.0;
  int n1 = 0;
  int n2 = 0;
  std::vector<double> v;

  [[nodiscard]] double at(int d1, int d2) const noexcept {
    return v[static_cast<std::size_t>(std::abs(d1)) * static_cast<std::size_t>(n2) +
             static_cast<std::size_t>(std::abs(d2))];
  }
  double& ref(int d1, int d2) noexcept {
    return v[static_cast<std::size_t>(d1) * static_cast<std::size_t>(n2) + static_cast<std::size_t>(d2)];
  }
};

/// Integrated kernel, softened along each axis whose band is nonzero.
class SoftenedKernel {
 public:
  enum class Region { axis1 = 1, axis2 = 2, both = 3, original = 4 };

  SoftenedKernel() : SoftenedKernel(SofteningParams{4, 0, 1.0}) {}
  explicit SoftenedKernel(const SofteningParams& both) : SoftenedKernel(both, both) {}
  SoftenedKernel(const SofteningParams& axis1, const SofteningParams& axis2)
      : params_{axis1, axis2}, cache_(std::make_shared<Cache>()) {
    axis1.validate();
    axis2.validate();
    if (axis1.active() && axis2.active()) corner_ = corner_coefficients();
  }

  [[nodiscard]] const SofteningParams& params(Axis a) const noexcept {
    return params_[a == Axis::first ? 0 : 1];
  }
  [[nodiscard]] double band(Axis a) const noexcept { return params(a).band(); }

  [[nodiscard]] Region region(double t1, double t2) const noexcept {
    const bool in1 = std::fabs(t1) < band(Axis::first);
    const bool in2 = std::fabs(t2) < band(Axis::second);
    if (in1 && in2) return Region::both;
    if (in1) return Region::axis1;
    if (in2) return Region::axis2;
    return Region::original;
  }

  [[nodiscard]] double value(double t1, double t2) const {
    switch (region(t1, t2)) {
      case Region::original:
        return integrated_kernel_22(t1, t2);
      case Region::axis1:
        return static_cast<double>(
            detail::even_poly(cached_line(Axis::first, std::fabs(t2)), t1 / band(Axis::first)));
      case Region::axis2:
        return static_cast<double>(
            detail::even_poly(cached_line(Axis::second, std::fabs(t1)), t2 / band(Axis::second)));
      case Region::both:
        return corner_value(t1, t2);
    }
    return 0.0;
  }

  /// Polynomial coefficients along `axis` for the line where the other coordinate is t_other.
  [[nodiscard]] std::vector<long double> line_coefficients(Axis axis, double t_other) const {
    const SofteningParams& p = params(axis);
    const double b = p.band();
    std::vector<long double> rhs(static_cast<std::size_t>(p.order));
    long double scale = 1.0L;
    for (int j = 0; j < p.order; ++j) {
      const bool first = axis == Axis::first;
      const KernelExpr& d = integrated_kernel_derivative(first ? j : 0, first ? 0 : j);
      rhs[static_cast<std::size_t>(j)] = scale * (first ? d.eval(b, t_other) : d.eval(t_other, b));
      scale *= b;
    }
    return detail::solve_continuity(p.order, false, rhs);
  }

  /// Mixed partial derivative d1^q1 d2^q2 at t, taken inside the region that contains t.
  [[nodiscard]] long double derivative(int q1, int q2, double t1, double t2) const {
    const Region reg = region(t1, t2);
    if (reg == Region::original) return integrated_kernel_derivative(q1, q2).eval(t1, t2);
    if (reg == Region::both) {
      std::vector<long double> row(corner_.size());
      for (std::size_t i = 0; i < corner_.size(); ++i)
        row[i] = detail::even_poly_derivative(corner_[i], t2 / band(Axis::second), q2) /
                 std::pow(static_cast<long double>(band(Axis::second)), q2);
      return detail::even_poly_derivative(row, t1 / band(Axis::first), q1) /
             std::pow(static_cast<long double>(band(Axis::first)), q1);
    }
    // single-axis band: the coefficients depend on the other coordinate through the rhs
    const Axis soft = reg == Region::axis1 ? Axis::first : Axis::second;
    const SofteningParams& p = params(soft);
    const double b = p.band();
    const int q_soft = soft == Axis::first ? q1 : q2;
    const int q_other = soft == Axis::first ? q2 : q1;
    const double t_other = soft == Axis::first ? t2 : t1;
    std::vector<long double> rhs(static_cast<std::size_t>(p.order));
    long double scale = 1.0L;
    for (int j = 0; j < p.order; ++j) {
      const bool first = soft == Axis::first;
      const KernelExpr& d = integrated_kernel_derivative(first ? j : q_other, first ? q_other : j);
      rhs[static_cast<std::size_t>(j)] = scale * (first ? d.eval(b, t_other) : d.eval(t_other, b));
      scale *= b;
    }
    const auto c = detail::solve_continuity(p.order, false, rhs);
    const double s = (soft == Axis::first ? t1 : t2) / b;
    return detail::even_poly_derivative(c, s, q_soft) / std::pow(static_cast<long double>(b), q_soft);
  }

  /// Coefficient matrix of the doubly softened polynomial: value = sum C(i,j) s1^2i s2^2j.
  [[nodiscard]] const std::vector<std::vector<long double>>& corner() const noexcept { return corner_; }

  /// Values on the lattice (d1*h1, d2*h2), 0 <= d < n.
  [[nodiscard]] KernelTable tabulate(double h1, int n1, double h2, int n2) const {
    KernelTable t{h1, h2, n1, n2, std::vector<double>(static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2))};
    const double b1 = band(Axis::first);
    const double b2 = band(Axis::second);
    for (int d1 = 0; d1 < n1; ++d1)
      for (int d2 = 0; d2 < n2; ++d2) {
        const double x1 = d1 * h1;
        const double x2 = d2 * h2;
        if (!(x1 < b1) && !(x2 < b2)) t.ref(d1, d2) = integrated_kernel_22(x1, x2);
        else if (x1 < b1 && x2 < b2) t.ref(d1, d2) = corner_value(x1, x2);
      }
    // Band lines: one coefficient solve per line of the other coordinate.
    if (b1 > 0)
      for (int d2 = 0; d2 < n2; ++d2) {
        const double x2 = d2 * h2;
        if (x2 < b2) continue;
        const auto c = line_coefficients(Axis::first, x2);
        for (int d1 = 0; d1 < n1 && d1 * h1 < b1; ++d1)
          t.ref(d1, d2) = static_cast<double>(detail::even_poly(c, d1 * h1 / b1));
      }
    if (b2 > 0)
      for (int d1 = 0; d1 < n1; ++d1) {
        const double x1 = d1 * h1;
        if (x1 < b1) continue;
        const auto c = line_coefficients(Axis::second, x1);
        for (int d2 = 0; d2 < n2 && d2 * h2 < b2; ++d2)
          t.ref(d1, d2) = static_cast<double>(detail::even_poly(c, d2 * h2 / b2));
      }
    return t;
  }

 private:
  struct Cache {
    std::mutex mu;
    std::map<double, std::vector<long double>> line[2];
  };

  [[nodiscard]] const std::vector<long double>& cached_line(Axis axis, double t_other) const {
    const int k = axis == Axis::first ? 0 : 1;
    {
      std::lock_guard<std::mutex> lock(cache_->mu);
      auto it = cache_->line[k].find(t_other);
      if (it != cache_->line[k].end()) return it->second;
    }
    auto c = line_coefficients(axis, t_other);
    std::lock_guard<std::mutex> lock(cache_->mu);
    return cache_->line[k].try_emplace(t_other, std::move(c)).first->second;
  }

  [[nodiscard]] std::vector<std::vector<long double>> corner_coefficients() const {
    const int p1 = params_[0].order;
    const int p2 = params_[1].order;
    const long double b1 = params_[0].band();
    const long double b2 = params_[1].band();
    // M(j1,j2) = b1^j1 b2^j2 d1^j1 d2^j2 G at the corner; C = B1^-1 M B2^-T.
    std::vector<std::vector<long double>> m(static_cast<std::size_t>(p1),
                                            std::vector<long double>(static_cast<std::size_t>(p2)));
    for (int j1 = 0; j1 < p1; ++j1)
      for (int j2 = 0; j2 < p2; ++j2)
        m[static_cast<std::size_t>(j1)][static_cast<std::size_t>(j2)] =
            std::pow(b1, j1) * std::pow(b2, j2) * integrated_kernel_derivative(j1, j2).eval(b1, b2);
    const auto& i1 = detail::continuity_inverse(p1, false);
    const auto& i2 = detail::continuity_inverse(p2, false);
    std::vector<std::vector<long double>> tmp(m.size(), std::vector<long double>(static_cast<std::size_t>(p2), 0.0L));
    for (int a = 0; a < p1; ++a)
      for (int j1 = 0; j1 < p1; ++j1)
        for (int j2 = 0; j2 < p2; ++j2)
          tmp[static_cast<std::size_t>(a)][static_cast<std::size_t>(j2)] +=
              i1[static_cast<std::size_t>(a * p1 + j1)] * m[static_cast<std::size_t>(j1)][static_cast<std::size_t>(j2)];
    std::vector<std::vector<long double>> c(m.size(), std::vector<long double>(static_cast<std::size_t>(p2), 0.0L));
    for (int a = 0; a < p1; ++a)
      for (int b = 0; b < p2; ++b)
        for (int j2 = 0; j2 < p2; ++j2)
          c[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] +=
              tmp[static_cast<std::size_t>(a)][static_cast<std::size_t>(j2)] * i2[static_cast<std::size_t>(b * p2 + j2)];
    return c;
  }

  [[nodiscard]] double corner_value(double t1, double t2) const noexcept {
    const long double s1 = t1 / band(Axis::first);
    const long double s2 = t2 / band(Axis::second);
    std::vector<long double> row(corner_.size());
    for (std::size_t i = 0; i < corner_.size(); ++i) row[i] = detail::even_poly(corner_[i], s2);
    return static_cast<double>(detail::even_poly(row, s1));
  }

  SofteningParams params_[2];
  std::vector<std::vector<long double>> corner_;
  std::shared_ptr<Cache> cache_;
};

/// Doubly softened kernel inside the central square |t_k| <= m_k H_k.
inline double soften_double(const SofteningParams& p1, const SofteningParams& p2, double t1, double t2) {
  if (!p1.active() || !p2.active()) throw std::invalid_argument("double softening needs both bands nonzero");
  if (std::fabs(t1) > p1.band() || std::fabs(t2) > p2.band())
    throw std::invalid_argument("point lies outside the central square");
  const SoftenedKernel k(p1, p2);
  const auto& c = k.corner();
  const long double s1 = t1 / p1.band();
  const long double s2 = t2 / p2.band();
  std::vector<long double> row(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) row[i] = detail::even_poly(c[i], s2);
  return static_cast<double>(detail::even_poly(row, s1));
}

/// p-th derivative of the softened eta^l ln|eta| at eta in [0, mH], from the closed
/// expression in the inverse continuity matrix.
inline double softened_psc_derivative(int l, int p, double mH, double eta) {
  if (!(mH > 0.0)) throw std::invalid_argument("band width must be positive");
  if (eta < 0.0 || eta > mH) throw std::invalid_argument("eta must lie in [0, mH]");
  const bool odd = (l % 2) != 0;
  const auto& inv = detail::continuity_inverse(p, odd);
  const KernelExpr psc = principal_smoothness_expr(l);
  std::vector<long double> g(static_cast<std::size_t>(p));
  KernelExpr d = psc;
  for (int j = 0; j < p; ++j) {
    if (j > 0) d = d.partial(Axis::first);
    g[static_cast<std::size_t>(j)] = d.eval(mH, 1.0L);
  }
  long double sum = 0.0L;
  for (int i = 0; i < p; ++i) {
    const int e = 2 * i + (odd ? 1 : 0);
    if (e < p) continue;
    const long double bpi = static_cast<long double>(detail::falling_factorial(e, p));
    for (int j = 0; j < p; ++j)
      sum += inv[static_cast<std::size_t>(i * p + j)] * bpi * std::pow(static_cast<long double>(mH), j - e) *
             std::pow(static_cast<long double>(eta), e - p) * g[static_cast<std::size_t>(j)];
  }
  return static_cast<double>(sum);
}

}  // namespace mlmi
