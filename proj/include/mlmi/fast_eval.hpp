#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "discretization.hpp"
#include "grid.hpp"
#include "softening.hpp"
#include "transfer_params.hpp"

namespace mlmi {

enum class CorrectionStrategy { none, direct, multilevel };

/// Operation counts of one level: transfers to/from the next coarser grid, the coarse sum (coarsest level
/// only) and the local correction.
struct LevelWork {
  int level = 0;
  std::uint64_t transfers = 0;
  std::uint64_t coarse_sum = 0;
  std::uint64_t corrections = 0;
};

struct EvalReport {
  GridFunction S;
  std::uint64_t op_count = 0;
  std::vector<LevelWork> breakdown;

  /// Operations per fine-grid node.
  [[nodiscard]] double ops_per_node() const {
    return static_cast<double>(op_count) / static_cast<double>(S.spec().node_count());
  }
};

/// Kernel difference D = G_a - G_b on one level: G_a softened at this level's scale (distance 0 on the
/// finest level), G_b at the next coarser scale. Both axes share the parameters.
struct CorrectionSpec {
  int level = 0;
  SofteningParams a;
  SofteningParams b;
  /// Axis-2 softening for the semi-coarsened chain, indexed by coarse level r (r <= level-1).
  std::vector<std::pair<int, SofteningParams>> chain;
  int coarsest = 1;  ///< lowest level the chain may reach

  [[nodiscard]] double mesh() const noexcept { return std::ldexp(1.0, 1 - level); }
  [[nodiscard]] double band() const noexcept { return std::max(a.band(), b.band()); }
  [[nodiscard]] bool trivial() const noexcept { return !a.active() && !b.active(); }
  [[nodiscard]] const SofteningParams& axis2(int r) const {
    for (const auto& [lv, p] : chain)
      if (lv == r) return p;
    throw std::out_of_range("no chain parameters for this level");
  }
};

namespace detail {

/// Largest |d| with |d| h < band; -1 for an empty band.
inline int band_halfwidth(double band, double h) {
  if (!(band > 0.0)) return -1;
  return static_cast<int>(std::ceil(band / h - 1e-9)) - 1;
}

/// sum_i #{j in r : |i - j| <= w} for i in r; w < 0 with full = true means every pair.
inline std::uint64_t window_pairs(int n, int w) {
  if (w < 0) return 0;
  std::uint64_t s = 0;
  for (int i = 0; i < n; ++i) s += static_cast<std::uint64_t>(std::min(n - 1, i + w) - std::max(0, i - w) + 1);
  return s;
}

inline std::uint64_t full_pairs(int n) { return static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n); }

constexpr int kFull = std::numeric_limits<int>::max();

/// out(i) += sign * sum_j T(i-j) src(j) over |i1-j1| <= w1, |i2-j2| <= w2 (kFull: unrestricted).
/// src and out share index ranges. Returns the multiply-adds.
inline std::uint64_t window_sum(const Field& src, const KernelTable& T, int w1, int w2, Field& out,
                                double sign = 1.0) {
  const IndexRange r1 = src.range(Axis::first), r2 = src.range(Axis::second);
  std::uint64_t ops = 0;
  for (int i1 = r1.lo; i1 <= r1.hi; ++i1) {
    const int j1lo = w1 == kFull ? r1.lo : std::max(r1.lo, i1 - w1);
    const int j1hi = w1 == kFull ? r1.hi : std::min(r1.hi, i1 + w1);
    for (int i2 = r2.lo; i2 <= r2.hi; ++i2) {
      const int j2lo = w2 == kFull ? r2.lo : std::max(r2.lo, i2 - w2);
      const int j2hi = w2 == kFull ? r2.hi : std::min(r2.hi, i2 + w2);
      double acc = 0.0;
      for (int j1 = j1lo; j1 <= j1hi; ++j1) {
        const double* srow = src.row(j1);
        for (int j2 = j2lo; j2 <= j2hi; ++j2) acc += T.at(i1 - j1, i2 - j2) * srow[j2 - r2.lo];
      }
      ops += static_cast<std::uint64_t>(std::max(0, j1hi - j1lo + 1)) * static_cast<std::uint64_t>(std::max(0, j2hi - j2lo + 1));
      out(i1, i2) += sign * acc;
    }
  }
  return ops;
}

/// a - b, entrywise.
inline KernelTable table_difference(KernelTable a, const KernelTable& b) {
  for (std::size_t q = 0; q < a.v.size(); ++q) a.v[q] -= b.v[q];
  return a;
}

inline SofteningParams unsoftened(double h) { return {4, 0, h}; }

}  // namespace detail

/// Band correction by exact summation over the cross |t1| < band or |t2| < band.
inline Field correction_direct(const CorrectionSpec& spec, const Field& U, OpCounter* counter = nullptr) {
  Field out(U.range(Axis::first), U.range(Axis::second));
  if (spec.trivial()) return out;
  const double h = spec.mesh();
  const int w = detail::band_halfwidth(spec.band(), h);
  const int n = std::max(U.n1(), U.n2());
  const KernelTable d = detail::table_difference(SoftenedKernel(spec.a).tabulate(h, n, h, n),
                                                 SoftenedKernel(spec.b).tabulate(h, n, h, n));
  // cross = vertical band + horizontal band - square
  std::uint64_t ops = detail::window_sum(U, d, w, detail::kFull, out);
  const IndexRange r1 = U.range(Axis::first), r2 = U.range(Axis::second);
  for (int i1 = r1.lo; i1 <= r1.hi; ++i1)
    for (int i2 = r2.lo; i2 <= r2.hi; ++i2) {
      double acc = 0.0;
      for (int j1 = r1.lo; j1 <= r1.hi; ++j1) {
        if (std::abs(i1 - j1) <= w) continue;
        for (int j2 = std::max(r2.lo, i2 - w); j2 <= std::min(r2.hi, i2 + w); ++j2) {
          acc += d.at(i1 - j1, i2 - j2) * U(j1, j2);
          ++ops;
        }
      }
      out(i1, i2) += acc;
    }
  if (counter != nullptr) counter->add(ops);
  return out;
}

namespace detail {

/// Vertical-band part P1 S2b G of a correction (|t1| < band, all t2): a 1-D multilevel chain along axis 2
/// down to level `deepest`, local corrections on the way. `dry` only counts.
inline Field vertical_band(const CorrectionSpec& spec, const Field& U, int deepest, bool dry, std::uint64_t& ops) {
  const int lv = spec.level;
  const double h = spec.mesh();
  const int w = band_halfwidth(spec.band(), h);
  const IndexRange r1 = U.range(Axis::first);
  ops = 0;
  // axis-2 kernel of X^(r) = (S1a - S1b) S2^(r) G, on the lattice (h, h_r)
  auto x_table = [&](int r, double h2, int n2) {
    const SofteningParams s2 = spec.axis2(r);
    return table_difference(SoftenedKernel(spec.a, s2).tabulate(h, w + 1, h2, n2),
                            SoftenedKernel(spec.b, s2).tabulate(h, w + 1, h2, n2));
  };
  std::vector<AxisTransfer> tr;
  std::vector<Field> data{U};
  std::vector<IndexRange> ranges{U.range(Axis::second)};
  for (int r = lv - 1; r >= deepest; --r) {
    tr.emplace_back(ranges.back(), spec.axis2(r).order, BoundaryMode::extended);
    ranges.push_back(tr.back().coarse());
    ops += 2 * tr.back().ops_per_line() * static_cast<std::uint64_t>(r1.size());
    if (!dry) data.push_back(tr.back().anterpolate(data.back(), Axis::second));
  }
  const IndexRange rd = ranges.back();
  const int kd = deepest == lv ? lv - 1 : deepest;
  ops += window_pairs(r1.size(), w) * full_pairs(rd.size());
  Field res(r1, rd);
  if (!dry) window_sum(data.back(), x_table(kd, std::ldexp(1.0, 1 - (deepest == lv ? lv : deepest)), rd.size()), w, kFull, res);
  // up the chain: interpolate, then the local square correction X^(r) - X^(r-1) at lattice h_r
  for (int r = deepest + 1; r <= lv; ++r) {
    const std::size_t k = static_cast<std::size_t>(lv - r);  // index into ranges/data
    const AxisTransfer& t = tr[k];
    if (!dry) res = t.interpolate(res, Axis::second);
    if (r == lv) break;
    const double hr = std::ldexp(1.0, 1 - r);
    const int wr = band_halfwidth(std::max(spec.axis2(r).band(), spec.axis2(r - 1).band()), hr);
    ops += window_pairs(r1.size(), w) * window_pairs(ranges[k].size(), wr);
    if (!dry && wr >= 0) {
      const KernelTable local = table_difference(x_table(r, hr, wr + 1), x_table(r - 1, hr, wr + 1));
      window_sum(data[k], local, w, wr, res);
    }
  }
  return res;
}

/// Chain depth with the fewest operations; ties go to the shallower chain.
inline int cheapest_depth(const CorrectionSpec& spec, const Field& U) {
  int best = spec.level;
  std::uint64_t best_ops = std::numeric_limits<std::uint64_t>::max();
  for (int d = spec.level; d >= spec.coarsest; --d) {
    std::uint64_t ops = 0;
    vertical_band(spec, U, d, true, ops);
    if (ops < best_ops) {
      best_ops = ops;
      best = d;
    }
  }
  return best;
}

}  // namespace detail

/// Band correction split into the vertical band (1-D multilevel along axis 2), its transpose, and the
/// central square (direct). `depth` < 0 picks the cheapest chain depth.
inline Field correction_multilevel(const CorrectionSpec& spec, const Field& U, OpCounter* counter = nullptr,
                                   int depth = -1) {
  Field out(U.range(Axis::first), U.range(Axis::second));
  if (spec.trivial()) return out;
  const int d = depth >= 0 ? depth : detail::cheapest_depth(spec, U);
  if (d > spec.level || d < spec.coarsest) throw std::invalid_argument("chain depth outside the available levels");
  if (d < spec.level && !(spec.axis2(spec.level - 1) == spec.b))
    throw std::invalid_argument("chain must start from the coarse-scale softening");
  std::uint64_t ops_a = 0, ops_b = 0;
  out += detail::vertical_band(spec, U, d, false, ops_a);
  out += detail::vertical_band(spec, U.transposed(), d, false, ops_b).transposed();
  // central square: (S1a - S1b)(S2a - S2b) G
  const double h = spec.mesh();
  const int w = detail::band_halfwidth(spec.band(), h);
  const int n = w + 1;
  KernelTable sq = SoftenedKernel(spec.a, spec.a).tabulate(h, n, h, n);
  const KernelTable ab = SoftenedKernel(spec.a, spec.b).tabulate(h, n, h, n);
  const KernelTable ba = SoftenedKernel(spec.b, spec.a).tabulate(h, n, h, n);
  const KernelTable bb = SoftenedKernel(spec.b, spec.b).tabulate(h, n, h, n);
  for (std::size_t q = 0; q < sq.v.size(); ++q) sq.v[q] += bb.v[q] - ab.v[q] - ba.v[q];
  const std::uint64_t ops_c = detail::window_sum(U, sq, w, w, out);
  if (counter != nullptr) counter->add(ops_a + ops_b + ops_c);
  return out;
}

namespace detail {

/// Softening of the level-`level` kernel in the chain of a schedule (none on the finest level).
inline SofteningParams level_params(const TransferSchedule& s, int level) {
  const double h = std::ldexp(1.0, 1 - level);
  if (level == s.fine) return unsoftened(h);
  const StepParams& p = s.step_to(level);
  return {p.order, p.distance, h};
}

inline CorrectionSpec correction_spec(const TransferSchedule& s, int level) {
  CorrectionSpec c{level, level_params(s, level), level_params(s, level - 1), {}, s.coarse};
  for (int r = level - 1; r >= s.coarse; --r) c.chain.emplace_back(r, level_params(s, r));
  return c;
}

}  // namespace detail

/// Multilevel evaluation of S on level K: anterpolate to level L, sum there with the softened kernel,
/// interpolate back while adding per-level corrections.
inline EvalReport evaluate_fast(const DiscreteTransformInput& input, int L, const TransferSchedule& schedule,
                                CorrectionStrategy strategy, BoundaryMode mode = BoundaryMode::extended) {
  const int K = input.grid.level;
  if (schedule.fine != K || schedule.coarse != L) throw std::invalid_argument("schedule does not match the levels");
  if (L > K || L < kMinLevel) throw std::invalid_argument("coarsest level out of range");
  if (strategy == CorrectionStrategy::none && !schedule.softening_free())
    throw std::invalid_argument("schedule softens the kernel but no correction strategy was given");
  EvalReport rep;
  std::vector<Field> data{input.U.values()};
  std::vector<AxisTransfer> tr;
  for (int lv = K; lv > L; --lv) {
    const int p = schedule.step_to(lv - 1).order;
    const Field& f = data.back();
    tr.emplace_back(f.range(Axis::first), p, mode);
    const AxisTransfer& t = tr.back();
    const Field half = t.anterpolate(f, Axis::first);
    const auto per_line = static_cast<std::uint64_t>(t.ops_per_line());
    const std::uint64_t ops = per_line * static_cast<std::uint64_t>(f.n2() + half.n1());
    data.push_back(t.anterpolate(half, Axis::second));  // invalidates f
    rep.breakdown.push_back({lv, 2 * ops, 0, 0});  // interpolation mirrors anterpolation
  }
  // coarsest level
  const Field& uc = data.back();
  const double hL = std::ldexp(1.0, 1 - L);
  const int nL = uc.n1();
  const KernelTable table = SoftenedKernel(detail::level_params(schedule, L)).tabulate(hL, nL, hL, nL);
  Field S = lattice_convolve(uc, table, uc.range(Axis::first), uc.range(Axis::second));
  rep.breakdown.push_back({L, 0, detail::full_pairs(nL) * detail::full_pairs(nL), 0});
  // upward pass
  for (int lv = L + 1; lv <= K; ++lv) {
    const AxisTransfer& t = tr[static_cast<std::size_t>(K - lv)];
    S = t.interpolate(t.interpolate(S, Axis::second), Axis::first);
    const CorrectionSpec spec = detail::correction_spec(schedule, lv);
    if (spec.trivial()) continue;
    const Field& u = data[static_cast<std::size_t>(K - lv)];
    OpCounter c;
    S += strategy == CorrectionStrategy::multilevel ? correction_multilevel(spec, u, &c) : correction_direct(spec, u, &c);
    rep.breakdown[static_cast<std::size_t>(K - lv)].corrections = c.multiply_adds;
  }
  rep.S = GridFunction(input.grid, S);
  for (const auto& w : rep.breakdown) rep.op_count += w.transfers + w.coarse_sum + w.corrections;
  return rep;
}

/// Convenience: test problem on level K down to L.
inline EvalReport evaluate_test_problem(int K, int L, CorrectionStrategy strategy = CorrectionStrategy::multilevel,
                                        const ParamConfig& cfg = {}, ParamSource source = ParamSource::recipe) {
  const GridSpec g = make_grid(K);
  return evaluate_fast(build_U(sample_u(g)), L, make_schedule(K, L, cfg, source), strategy);
}

}  // namespace mlmi
