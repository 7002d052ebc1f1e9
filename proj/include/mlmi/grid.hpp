#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace mlmi {

inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 14;
inline constexpr double kDomainDiameter = 2.8284271247461903;  // diagonal of [-1,1]^2

enum class Axis { first = 0, second = 1 };

/// Uniform vertex-centered grid on [-1,1]^2 at refinement level K.
struct GridSpec {
  int level = 1;

  [[nodiscard]] int nodes_per_axis() const noexcept { return (1 << level) + 1; }
  [[nodiscard]] std::size_t node_count() const noexcept {
    const auto n = static_cast<std::size_t>(nodes_per_axis());
    return n * n;
  }
  [[nodiscard]] double mesh() const noexcept { return std::ldexp(1.0, 1 - level); }
  [[nodiscard]] double coordinate(int j) const noexcept { return -1.0 + j * mesh(); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline GridSpec make_grid(int level) {
  if (level < kMinLevel || level > kMaxLevel)
    throw std::invalid_argument("grid level " + std::to_string(level) + " outside [1,14]");
  return GridSpec{level};
}

/// Inclusive integer index range along one axis.
struct IndexRange {
  int lo = 0;
  int hi = -1;

  [[nodiscard]] int size() const noexcept { return hi - lo + 1; }
  [[nodiscard]] bool contains(int i) const noexcept { return i >= lo && i <= hi; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Dense 2-D array addressed by absolute node indices (i1, i2); rows run along axis 1.
class Field {
 public:
  Field() = default;
  Field(IndexRange r1, IndexRange r2, double fill = 0.0)
      : r1_(r1), r2_(r2),
        data_(static_cast<std::size_t>(std::max(r1.size(), 0)) *
                  static_cast<std::size_t>(std::max(r2.size(), 0)),
              fill) {}

  [[nodiscard]] const IndexRange& range(Axis a) const noexcept {
    return a == Axis::first ? r1_ : r2_;
  }
  [[nodiscard]] int n1() const noexcept { return r1_.size(); }
  [[nodiscard]] int n2() const noexcept { return r2_.size(); }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  double& operator()(int i1, int i2) noexcept { return data_[offset(i1, i2)]; }
  double operator()(int i1, int i2) const noexcept { return data_[offset(i1, i2)]; }

  /// Pointer to the row i1 (contiguous along axis 2).
  double* row(int i1) noexcept { return data_.data() + offset(i1, r2_.lo); }
  const double* row(int i1) const noexcept { return data_.data() + offset(i1, r2_.lo); }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  [[nodiscard]] Field transposed() const {
    Field t(r2_, r1_);
    for (int i1 = r1_.lo; i1 <= r1_.hi; ++i1)
      for (int i2 = r2_.lo; i2 <= r2_.hi; ++i2) t(i2, i1) = (*this)(i1, i2);
    return t;
  }

  /// Copy of the sub-block over (q1, q2); both ranges must lie inside this field.
  [[nodiscard]] Field restricted(IndexRange q1, IndexRange q2) const {
    if (q1.lo < r1_.lo || q1.hi > r1_.hi || q2.lo < r2_.lo || q2.hi > r2_.hi)
      throw std::invalid_argument("restriction range outside field");
    Field out(q1, q2);
    for (int i1 = q1.lo; i1 <= q1.hi; ++i1)
      std::copy_n(row(i1) + (q2.lo - r2_.lo), q2.size(), out.row(i1));
    return out;
  }

  /// Copy embedded into the larger ranges (q1, q2), zero outside.
  [[nodiscard]] Field padded(IndexRange q1, IndexRange q2) const {
    if (q1.lo > r1_.lo || q1.hi < r1_.hi || q2.lo > r2_.lo || q2.hi < r2_.hi)
      throw std::invalid_argument("padding range smaller than field");
    Field out(q1, q2);
    for (int i1 = r1_.lo; i1 <= r1_.hi; ++i1)
      std::copy_n(row(i1), n2(), out.row(i1) + (r2_.lo - q2.lo));
    return out;
  }

  Field& operator+=(const Field& o) {
    if (!(o.r1_ == r1_) || !(o.r2_ == r2_)) throw std::invalid_argument("field shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }

 private:
  [[nodiscard]] std::size_t offset(int i1, int i2) const noexcept {
    return static_cast<std::size_t>(i1 - r1_.lo) * static_cast<std::size_t>(r2_.size()) +
           static_cast<std::size_t>(i2 - r2_.lo);
  }

  IndexRange r1_;
  IndexRange r2_;
  std::vector<double> data_;
};

/// Nodal values on a level-K grid.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(GridSpec spec, double fill = 0.0)
      : spec_(spec), values_(full_range(spec), full_range(spec), fill) {}
  GridFunction(GridSpec spec, Field values) : spec_(spec), values_(std::move(values)) {
    if (!(values_.range(Axis::first) == full_range(spec)) ||
        !(values_.range(Axis::second) == full_range(spec)))
      throw std::invalid_argument("field does not cover the grid");
  }

  static IndexRange full_range(GridSpec spec) noexcept {
    return {0, spec.nodes_per_axis() - 1};
  }

  [[nodiscard]] const GridSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const Field& values() const noexcept { return values_; }
  Field& values() noexcept { return values_; }

  double& operator()(int i1, int i2) noexcept { return values_(i1, i2); }
  double operator()(int i1, int i2) const noexcept { return values_(i1, i2); }

 private:
  GridSpec spec_;
  Field values_;
};

enum class NodeParity { coincident, midpoint };

namespace detail {

using Rational = boost::multiprecision::cpp_rational;

/// Lagrange weights on integer nodes 0..p-1 evaluated at x.
inline std::vector<Rational> lagrange_weights(int p, const Rational& x) {
  std::vector<Rational> w(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    Rational v = 1;
    for (int k = 0; k < p; ++k)
      if (k != j) v *= (x - k) / Rational(j - k);
    w[static_cast<std::size_t>(j)] = v;
  }
  return w;
}

/// Weights of a p-point stencil whose leftmost node sits `shift` coarse nodes
/// left of the midpoint's left neighbour (shift = p/2-1 is central).
inline const std::vector<double>& midpoint_stencil(int p, int shift) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::vector<double>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto [it, fresh] = cache.try_emplace({p, shift});
  if (fresh) {
    const Rational x = Rational(shift) + Rational(1, 2);
    for (const auto& r : lagrange_weights(p, x)) it->second.push_back(static_cast<double>(r));
  }
  return it->second;
}

inline void check_order(int p) {
  if (p < 2 || p > 12 || p % 2 != 0)
    throw std::invalid_argument("transfer order must be even in [2,12], got " + std::to_string(p));
}

}  // namespace detail

/// Central Lagrange weights for the fine node of the given parity.
/// Coincident nodes get the unit stencil of length p+1 (centered on the shared node).
inline std::vector<double> interpolation_weights(int p, NodeParity parity) {
  detail::check_order(p);
  if (parity == NodeParity::coincident) {
    std::vector<double> w(static_cast<std::size_t>(p + 1), 0.0);
    w[static_cast<std::size_t>(p / 2)] = 1.0;
    return w;
  }
  return detail::midpoint_stencil(p, p / 2 - 1);
}

/// How stencils behave where the central stencil would leave the coarse grid.
enum class BoundaryMode {
  shifted,   ///< coarse grid is the plain grid; stencils shift inward
  extended,  ///< coarse grid grows so that every stencil stays central
};

/// One-dimensional factor-2 transfer between a fine index range and a coarse one.
/// Fine index i sits at coarse position i/2.
class AxisTransfer {
 public:
  AxisTransfer(IndexRange fine, int order, BoundaryMode mode) : fine_(fine), order_(order) {
    detail::check_order(order);
    if (fine.size() < 1) throw std::invalid_argument("empty fine range");
    if (mode == BoundaryMode::shifted) {
      if (fine.lo % 2 != 0 || fine.hi % 2 != 0)
        throw std::invalid_argument("shifted transfer needs a fine range with even ends");
      coarse_ = {fine.lo / 2, fine.hi / 2};
      // Too few coarse nodes for order p: drop to the highest order available.
      order_ = std::min(order, coarse_.size());
    } else {
      int lo = fine.hi;
      int hi = fine.lo;
      for (int i = fine.lo; i <= fine.hi; ++i) {
        if (is_midpoint(i)) {
          const int left = floor_half(i);
          lo = std::min(lo, left - order / 2 + 1);
          hi = std::max(hi, left + order / 2);
        } else {
          lo = std::min(lo, i / 2);
          hi = std::max(hi, i / 2);
        }
      }
      coarse_ = {lo, hi};
    }
    starts_.resize(static_cast<std::size_t>(fine.size()));
    weights_.resize(static_cast<std::size_t>(fine.size()), nullptr);
    for (int i = fine.lo; i <= fine.hi; ++i) {
      const auto k = static_cast<std::size_t>(i - fine.lo);
      if (!is_midpoint(i)) {
        starts_[k] = i / 2;
        continue;
      }
      const int left = floor_half(i);
      int start = left - order_ / 2 + 1;
      if (mode == BoundaryMode::shifted)
        start = std::clamp(start, coarse_.lo, coarse_.hi - order_ + 1);
      if (order_ == 1) {
        // single coarse node: constant extrapolation
        starts_[k] = start;
        weights_[k] = &unit_;
        continue;
      }
      starts_[k] = start;
      weights_[k] = &detail::midpoint_stencil(order_, left - start);
    }
  }

  [[nodiscard]] const IndexRange& fine() const noexcept { return fine_; }
  [[nodiscard]] const IndexRange& coarse() const noexcept { return coarse_; }
  [[nodiscard]] int order() const noexcept { return order_; }

  /// Multiply-adds of one 1-D interpolation (or anterpolation) sweep.
  [[nodiscard]] std::int64_t ops_per_line() const noexcept {
    std::int64_t ops = 0;
    for (int i = fine_.lo; i <= fine_.hi; ++i)
      if (is_midpoint(i)) ops += static_cast<std::int64_t>(stencil(i).size());
    return ops;
  }

  /// Coarse node of a coincident fine node, or first node of a midpoint stencil.
  [[nodiscard]] int start(int i) const noexcept {
    return starts_[static_cast<std::size_t>(i - fine_.lo)];
  }
  [[nodiscard]] const std::vector<double>& stencil(int i) const noexcept {
    return *weights_[static_cast<std::size_t>(i - fine_.lo)];
  }
  [[nodiscard]] static bool is_midpoint(int i) noexcept { return (i % 2) != 0; }

  /// Interpolate along `axis`; the field's range on that axis must equal coarse().
  [[nodiscard]] Field interpolate(const Field& coarse, Axis axis) const {
    if (!(coarse.range(axis) == coarse_)) throw std::invalid_argument("incompatible grid sizes");
    const IndexRange other = coarse.range(axis == Axis::first ? Axis::second : Axis::first);
    if (axis == Axis::second) {
      Field fine(other, fine_);
      for (int r = other.lo; r <= other.hi; ++r) {
        const double* src = coarse.row(r) - coarse_.lo;
        double* dst = fine.row(r) - fine_.lo;
        for (int i = fine_.lo; i <= fine_.hi; ++i) dst[i] = apply(src, i);
      }
      return fine;
    }
    Field fine(fine_, other);
    const int n = other.size();
    for (int i = fine_.lo; i <= fine_.hi; ++i) {
      double* dst = fine.row(i);
      if (!is_midpoint(i)) {
        std::copy_n(coarse.row(start(i)), n, dst);
        continue;
      }
      const auto& w = stencil(i);
      for (std::size_t k = 0; k < w.size(); ++k) {
        const double* src = coarse.row(start(i) + static_cast<int>(k));
        const double wk = w[k];
        for (int c = 0; c < n; ++c) dst[c] += wk * src[c];
      }
    }
    return fine;
  }

  /// Exact transpose of interpolate().
  [[nodiscard]] Field anterpolate(const Field& fine, Axis axis) const {
    if (!(fine.range(axis) == fine_)) throw std::invalid_argument("incompatible grid sizes");
    const IndexRange other = fine.range(axis == Axis::first ? Axis::second : Axis::first);
    if (axis == Axis::second) {
      Field coarse(other, coarse_);
      for (int r = other.lo; r <= other.hi; ++r) {
        const double* src = fine.row(r) - fine_.lo;
        double* dst = coarse.row(r) - coarse_.lo;
        for (int i = fine_.lo; i <= fine_.hi; ++i) scatter(dst, i, src[i]);
      }
      return coarse;
    }
    Field coarse(coarse_, other);
    const int n = other.size();
    for (int i = fine_.lo; i <= fine_.hi; ++i) {
      const double* src = fine.row(i);
      if (!is_midpoint(i)) {
        double* dst = coarse.row(start(i));
        for (int c = 0; c < n; ++c) dst[c] += src[c];
        continue;
      }
      const auto& w = stencil(i);
      for (std::size_t k = 0; k < w.size(); ++k) {
        double* dst = coarse.row(start(i) + static_cast<int>(k));
        const double wk = w[k];
        for (int c = 0; c < n; ++c) dst[c] += wk * src[c];
      }
    }
    return coarse;
  }

 private:
  static int floor_half(int i) noexcept { return (i >= 0) ? i / 2 : -((-i + 1) / 2); }

  [[nodiscard]] double apply(const double* src, int i) const noexcept {
    if (!is_midpoint(i)) return src[start(i)];
    const auto& w = stencil(i);
    double s = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * src[start(i) + static_cast<int>(k)];
    return s;
  }

  void scatter(double* dst, int i, double v) const noexcept {
    if (!is_midpoint(i)) {
      dst[start(i)] += v;
      return;
    }
    const auto& w = stencil(i);
    for (std::size_t k = 0; k < w.size(); ++k) dst[start(i) + static_cast<int>(k)] += w[k] * v;
  }

  inline static const std::vector<double> unit_{1.0};

  IndexRange fine_;
  IndexRange coarse_;
  int order_;
  std::vector<int> starts_;
  std::vector<const std::vector<double>*> weights_;
};

/// Interpolate grid-aligned data (range 0..Nc-1 on `axis`) to the refined grid,
/// shifting stencils inward at the boundary.
inline Field interpolate_axis(const Field& coarse, int p, Axis axis) {
  const IndexRange rc = coarse.range(axis);
  if (rc.lo != 0 || rc.size() < 2) throw std::invalid_argument("incompatible grid sizes");
  const AxisTransfer t({0, 2 * rc.hi}, p, BoundaryMode::shifted);
  return t.interpolate(coarse, axis);
}

/// Transpose of interpolate_axis; the fine range on `axis` must be 0..2Nc-2.
inline Field anterpolate_axis(const Field& fine, int p, Axis axis) {
  const IndexRange rf = fine.range(axis);
  if (rf.lo != 0 || rf.hi % 2 != 0 || rf.size() < 3)
    throw std::invalid_argument("incompatible grid sizes");
  const AxisTransfer t(rf, p, BoundaryMode::shifted);
  return t.anterpolate(fine, axis);
}

}  // namespace mlmi
