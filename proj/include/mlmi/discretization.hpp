#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "grid.hpp"
#include "kernels.hpp"
#include "softening.hpp"

namespace mlmi {

/// Multiply-add counter. One kernel value times one weight, accumulated, is one op.
struct OpCounter {
  std::uint64_t multiply_adds = 0;
  void add(std::uint64_t n) noexcept { multiply_adds += n; }
};

/// One factor of the separable test function: -1/3 + z^2 - 2/3 |z|^3 with z = 10y/9, zero for |y| > 9/10.
inline double test_profile(double y) noexcept {
  if (std::fabs(y) > 0.9) return 0.0;
  const double z = std::fabs(10.0 * y / 9.0);
  return -1.0 / 3.0 + z * z - 2.0 / 3.0 * z * z * z;
}

/// d/dy of test_profile.
inline double test_profile_derivative(double y) noexcept {
  if (std::fabs(y) > 0.9) return 0.0;
  const double z = 10.0 * y / 9.0;
  return (10.0 / 9.0) * (2.0 * z - 2.0 * z * std::fabs(z));
}

inline double test_function(double y1, double y2) noexcept { return test_profile(y1) * test_profile(y2); }

inline GridFunction sample_u(const GridSpec& grid) {
  GridFunction u(grid);
  const int n = grid.nodes_per_axis();
  std::vector<double> f(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) f[static_cast<std::size_t>(j)] = test_profile(grid.coordinate(j));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) u(i, j) = f[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(j)];
  return u;
}

/// u and its first derivatives vanish on the two outermost node rings, so no boundary terms arise.
inline bool boundary_terms_vanish(const GridSpec& grid) {
  const int n = grid.nodes_per_axis();
  for (int j : {0, 1, n - 2, n - 1}) {
    const double y = grid.coordinate(j);
    if (test_profile(y) != 0.0 || test_profile_derivative(y) != 0.0) return false;
  }
  return true;
}

/// Weights U of the single surviving subtransform, with the boundary ring zeroed.
struct DiscreteTransformInput {
  GridSpec grid;
  GridFunction U;
  bool boundary_zeroed = true;
};

/// [1 -2 1] x [1 -2 1] / (h1 h2) at interior nodes, 0 on the boundary ring.
inline DiscreteTransformInput build_U(const GridFunction& u) {
  const GridSpec g = u.spec();
  const int n = g.nodes_per_axis();
  const double h = g.mesh();
  GridFunction U(g);
  for (int i = 1; i < n - 1; ++i)
    for (int j = 1; j < n - 1; ++j) {
      double s = 0.0;
      for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b) s += (a == 0 ? -2.0 : 1.0) * (b == 0 ? -2.0 : 1.0) * u(i + a, j + b);
      U(i, j) = s / (h * h);
    }
  return {g, U, true};
}

/// Weights of subtransform l (l_k in {1,2}) for order-2 cell interpolation, built literally:
/// signed sum over the four cells sharing node j of the (l-1) derivative of each cell's
/// bilinear interpolant at y_j. Only l = (2,2) is nonzero.
inline Field subtransform_weights(const GridFunction& u, std::array<int, 2> l) {
  for (int lk : l)
    if (lk < 1 || lk > 2) throw std::invalid_argument("subtransform index must be 1 or 2 for order-2 cells");
  const GridSpec g = u.spec();
  const int n = g.nodes_per_axis();
  const double h = g.mesh();
  // derivative (l-1) of the bilinear interpolant on cell c = [y_c, y_c+1] at the local point (x1, x2) in {0,1}
  auto cell = [&](int c1, int c2, int x1, int x2) {
    auto lin = [&](int q, int c, int x, auto&& at) {
      return q == 1 ? at(c + x) : (at(c + 1) - at(c)) / h;  // value at a node, or slope
    };
    return lin(l[0], c1, x1, [&](int i1) { return lin(l[1], c2, x2, [&](int i2) { return u(i1, i2); }); });
  };
  Field w(GridFunction::full_range(g), GridFunction::full_range(g));
  for (int j1 = 1; j1 < n - 1; ++j1)
    for (int j2 = 1; j2 < n - 1; ++j2) {
      double s = 0.0;
      for (int a1 = 0; a1 <= 1; ++a1)
        for (int a2 = 0; a2 <= 1; ++a2) s += ((a1 + a2) % 2 ? -1.0 : 1.0) * cell(j1 - a1, j2 - a2, a1, a2);
      w(j1, j2) = s;
    }
  return w;
}

namespace detail {

inline int fft_size(int n) {
  for (int m = n;; ++m) {
    int r = m;
    for (int f : {2, 3, 5, 7})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

inline std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace detail

/// out(i) = sum_j table(i - j) src(j) over the ranges, with an even lattice kernel table.
/// Uses FFTW once the direct loop would exceed ~2e7 multiply-adds.
inline Field lattice_convolve(const Field& src, const KernelTable& table, IndexRange o1, IndexRange o2,
                              bool allow_fft = true) {
  const IndexRange s1 = src.range(Axis::first), s2 = src.range(Axis::second);
  const int need1 = std::max(std::abs(o1.lo - s1.hi), std::abs(o1.hi - s1.lo));
  const int need2 = std::max(std::abs(o2.lo - s2.hi), std::abs(o2.hi - s2.lo));
  if (need1 >= table.n1 || need2 >= table.n2) throw std::invalid_argument("kernel table too small for the ranges");
  Field out(o1, o2);
  const double direct_cost = static_cast<double>(o1.size()) * o2.size() * s1.size() * s2.size();
  if (!allow_fft || direct_cost < 2e7) {
    for (int i1 = o1.lo; i1 <= o1.hi; ++i1)
      for (int j1 = s1.lo; j1 <= s1.hi; ++j1) {
        const double* srow = src.row(j1);
        const std::size_t base = static_cast<std::size_t>(std::abs(i1 - j1)) * static_cast<std::size_t>(table.n2);
        for (int i2 = o2.lo; i2 <= o2.hi; ++i2) {
          double acc = 0.0;
          for (int j2 = s2.lo; j2 <= s2.hi; ++j2)
            acc += table.v[base + static_cast<std::size_t>(std::abs(i2 - j2))] * srow[j2 - s2.lo];
          out(i1, i2) += acc;
        }
      }
    return out;
  }
  const int L1 = detail::fft_size(o1.size() + s1.size() - 1);
  const int L2 = detail::fft_size(o2.size() + s2.size() - 1);
  const int C2 = L2 / 2 + 1;
  const auto nr = static_cast<std::size_t>(L1) * static_cast<std::size_t>(L2);
  const auto nc = static_cast<std::size_t>(L1) * static_cast<std::size_t>(C2);
  double* a = fftw_alloc_real(nr);
  double* k = fftw_alloc_real(nr);
  fftw_complex* fa = fftw_alloc_complex(nc);
  fftw_complex* fk = fftw_alloc_complex(nc);
  fftw_plan pa, pk, back;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    pa = fftw_plan_dft_r2c_2d(L1, L2, a, fa, FFTW_ESTIMATE);
    pk = fftw_plan_dft_r2c_2d(L1, L2, k, fk, FFTW_ESTIMATE);
    back = fftw_plan_dft_c2r_2d(L1, L2, fa, a, FFTW_ESTIMATE);
  }
  std::fill(a, a + nr, 0.0);
  std::fill(k, k + nr, 0.0);
  auto wrap = [](int d, int L) { return static_cast<std::size_t>(((d % L) + L) % L); };
  for (int j1 = s1.lo; j1 <= s1.hi; ++j1)
    for (int j2 = s2.lo; j2 <= s2.hi; ++j2)
      a[static_cast<std::size_t>(j1 - s1.lo) * static_cast<std::size_t>(L2) + static_cast<std::size_t>(j2 - s2.lo)] =
          src(j1, j2);
  for (int d1 = o1.lo - s1.hi; d1 <= o1.hi - s1.lo; ++d1)
    for (int d2 = o2.lo - s2.hi; d2 <= o2.hi - s2.lo; ++d2)
      k[wrap(d1, L1) * static_cast<std::size_t>(L2) + wrap(d2, L2)] = table.at(d1, d2);
  fftw_execute(pa);
  fftw_execute(pk);
  for (std::size_t q = 0; q < nc; ++q) {
    const std::complex<double> z = std::complex<double>(fa[q][0], fa[q][1]) * std::complex<double>(fk[q][0], fk[q][1]);
    fa[q][0] = z.real();
    fa[q][1] = z.imag();
  }
  fftw_execute(back);
  const double scale = 1.0 / static_cast<double>(nr);
  for (int i1 = o1.lo; i1 <= o1.hi; ++i1)
    for (int i2 = o2.lo; i2 <= o2.hi; ++i2)
      out(i1, i2) = a[wrap(i1 - s1.lo, L1) * static_cast<std::size_t>(L2) + wrap(i2 - s2.lo, L2)] * scale;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pk);
    fftw_destroy_plan(back);
  }
  fftw_free(a);
  fftw_free(k);
  fftw_free(fa);
  fftw_free(fk);
  return out;
}

/// Table of an even kernel on the offsets d*h, 0 <= d < n, in both axes.
template <class Kernel>
KernelTable tabulate_kernel(const Kernel& kernel, double h, int n) {
  KernelTable t{h, h, n, n, std::vector<double>(static_cast<std::size_t>(n) * static_cast<std::size_t>(n))};
  for (int d1 = 0; d1 < n; ++d1)
    for (int d2 = 0; d2 < n; ++d2) t.ref(d1, d2) = kernel(d1 * h, d2 * h);
  return t;
}

/// S(x_i) = sum_j kernel(x_i - y_j) U_j for every node of eval_grid; the kernel must be even in
/// each argument. Counts eval nodes x source nodes multiply-adds (the zero boundary ring included).
template <class Kernel>
GridFunction direct_multisum(const Kernel& kernel, const DiscreteTransformInput& input, const GridSpec& eval_grid,
                             OpCounter* counter = nullptr, bool allow_fft = false) {
  const GridSpec& src = input.grid;
  const int fine = std::max(src.level, eval_grid.level);
  const double h = std::ldexp(1.0, 1 - fine);
  const int rs = 1 << (fine - src.level);
  const int re = 1 << (fine - eval_grid.level);
  const int n = (1 << fine) + 1;
  const KernelTable table = tabulate_kernel(kernel, h, n);
  GridFunction out(eval_grid);
  if (rs == 1 && re == 1) {
    const IndexRange r = GridFunction::full_range(src);
    out.values() = lattice_convolve(input.U.values(), table, r, r, allow_fft);
  } else {
    const int ne = eval_grid.nodes_per_axis();
    const int ns = src.nodes_per_axis();
    for (int i1 = 0; i1 < ne; ++i1)
      for (int i2 = 0; i2 < ne; ++i2) {
        double acc = 0.0;
        for (int j1 = 0; j1 < ns; ++j1)
          for (int j2 = 0; j2 < ns; ++j2) acc += table.at(i1 * re - j1 * rs, i2 * re - j2 * rs) * input.U(j1, j2);
        out(i1, i2) = acc;
      }
  }
  if (counter != nullptr) counter->add(static_cast<std::uint64_t>(eval_grid.node_count()) * src.node_count());
  return out;
}

/// Discrete transform of the test problem on level K with the unsoftened kernel.
inline GridFunction discrete_transform(int level, OpCounter* counter = nullptr) {
  const GridSpec g = make_grid(level);
  return direct_multisum([](double a, double b) { return integrated_kernel_22(a, b); }, build_U(sample_u(g)), g,
                         counter, true);
}

/// (1/n sum |a-b|^2)^(1/2) over all n nodes of the level.
inline double l2_difference(const Field& a, const Field& b) {
  if (a.size() != b.size()) throw std::invalid_argument("fields differ in size");
  double s = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) {
    const double d = a.data()[q] - b.data()[q];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(a.size()));
}

/// Values of a finer-level function at the nodes of `coarse`.
inline Field restrict_to(const GridFunction& f, const GridSpec& coarse) {
  const int step = 1 << (f.spec().level - coarse.level);
  const int n = coarse.nodes_per_axis();
  Field out({0, n - 1}, {0, n - 1});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = f(i * step, j * step);
  return out;
}

struct ReferenceSolution {
  GridFunction R;
  double consistency_ratio = 0.0;  ///< |S_K - R| / |S_K+2 - R|, ideally 16
};

/// Gu on level K by Richardson extrapolation, R = (4 S_K+2 - S_K+1)/3.
inline ReferenceSolution reference_solution(int level) {
  if (level < 2 || level + 2 > kMaxLevel) throw std::invalid_argument("reference level out of range");
  const GridSpec g = make_grid(level);
  const GridFunction s0 = discrete_transform(level);
  const Field s1 = restrict_to(discrete_transform(level + 1), g);
  const Field s2 = restrict_to(discrete_transform(level + 2), g);
  GridFunction R(g);
  for (std::size_t q = 0; q < s2.size(); ++q) R.values().data()[q] = (4.0 * s2.data()[q] - s1.data()[q]) / 3.0;
  const double e0 = l2_difference(s0.values(), R.values());
  const double e2 = l2_difference(s2, R.values());
  ReferenceSolution out{R, e2 > 0.0 ? e0 / e2 : 0.0};
  if (e0 > 0.0 && (out.consistency_ratio < 16.0 / 1.5 || out.consistency_ratio > 16.0 * 1.5))
    throw std::runtime_error("Richardson reference is inconsistent with second-order convergence");
  return out;
}

}  // namespace mlmi
