#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "discretization.hpp"
#include "fast_eval.hpp"
#include "transfer_params.hpp"

namespace mlmi {

/// Levels with a Richardson reference (direct sums up to K+2).
inline constexpr int kMaxReferenceLevel = 8;
/// Columns of the markdown layout: L = K .. K-6.
inline constexpr int kMaxColumns = 7;

enum class LPolicy { all, starred };
enum class TableFormat { csv, markdown };
enum class TableKind { params, err, inc, work };

inline const char* table_name(TableKind k) {
  switch (k) {
    case TableKind::params: return "params";
    case TableKind::err: return "err";
    case TableKind::inc: return "inc";
    case TableKind::work: return "work";
  }
  return "";
}

struct BenchConfig {
  int kmin = 5;
  int kmax = 8;
  LPolicy lpolicy = LPolicy::all;
  double c_a = 0.0;
  CorrectionStrategy strategy = CorrectionStrategy::multilevel;
  ParamSource params = ParamSource::table;
  TableFormat format = TableFormat::csv;
  std::filesystem::path out = ".";
  std::set<TableKind> tables{TableKind::params, TableKind::err, TableKind::inc, TableKind::work};

  void validate() const {
    if (kmin < 2 || kmax > 11 || kmin > kmax) throw std::invalid_argument("K range must lie within 2..11");
    if (strategy == CorrectionStrategy::none)
      throw std::invalid_argument("strategy none needs a softening-free schedule; use direct or multilevel");
  }
};

/// Cell value: a real (errors), an operation count, or a (p, m) pair.
struct Cell {
  enum class Kind { real, count, pair } kind = Kind::real;
  double value = 0.0;
  int p = 0;
  int m = 0;

  static Cell real(double v) { return {Kind::real, v, 0, 0}; }
  static Cell count(double v) { return {Kind::count, v, 0, 0}; }
  static Cell pair(StepParams s) { return {Kind::pair, 0.0, s.order, s.distance}; }
};

struct Table {
  TableKind kind = TableKind::err;
  std::map<std::pair<int, int>, Cell> cells;  ///< (K, L) -> value

  void set(int K, int L, Cell c) { cells[{K, L}] = c; }
};

/// 3 significant digits, exponent without padding: 2.01e-4.
inline std::string format_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  std::string s(buf);
  const auto e = s.find('e');
  if (e == std::string::npos) return s;
  std::string mant = s.substr(0, e);
  const int ex = std::stoi(s.substr(e + 1));
  return mant + "e" + std::to_string(ex);
}

inline std::string format_cell(const Cell& c, bool csv) {
  switch (c.kind) {
    case Cell::Kind::real: return format_sci(c.value);
    case Cell::Kind::count: return std::to_string(static_cast<long long>(std::llround(c.value)));
    case Cell::Kind::pair: {
      const std::string s = std::to_string(c.p) + "," + std::to_string(c.m);
      return csv ? "\"" + s + "\"" : s;
    }
  }
  return "";
}

inline std::string emit_table(const Table& t, TableFormat format) {
  std::ostringstream os;
  if (format == TableFormat::csv) {
    os << "K,L,value";
    for (const auto& [key, c] : t.cells) os << "\n" << key.first << "," << key.second << "," << format_cell(c, true);
    os << "\n";
    return os.str();
  }
  os << "| K |";
  for (int j = 0; j < kMaxColumns; ++j) os << (j == 0 ? " L=K |" : " L=K-" + std::to_string(j) + " |");
  os << "\n|---|";
  for (int j = 0; j < kMaxColumns; ++j) os << "---|";
  std::set<int> ks;
  for (const auto& [key, c] : t.cells) ks.insert(key.first);
  for (int K : ks) {
    os << "\n| " << K << " |";
    for (int j = 0; j < kMaxColumns; ++j) {
      const auto it = t.cells.find({K, K - j});
      os << " " << (it == t.cells.end() ? "" : format_cell(it->second, false)) << " |";
    }
  }
  os << "\n";
  return os.str();
}

/// Coarsest levels run for K: all of K..max(K-6, 2), or only L = K and the starred floor/ceil(K/2).
inline std::vector<int> levels_for(int K, LPolicy policy) {
  std::set<int> ls{K};
  if (policy == LPolicy::all)
    for (int L = K - 1; L >= std::max(K - 6, 2); --L) ls.insert(L);
  ls.insert(K / 2);
  ls.insert((K + 1) / 2);
  std::vector<int> out;
  for (auto it = ls.rbegin(); it != ls.rend(); ++it)
    if (*it >= 2) out.push_back(*it);
  return out;
}

struct BenchReport {
  std::vector<Table> tables;

  [[nodiscard]] const Table& get(TableKind k) const {
    for (const auto& t : tables)
      if (t.kind == k) return t;
    throw std::out_of_range("table not computed");
  }
};

/// Runs the sweep and fills the requested tables. Throws std::runtime_error on an inconsistent reference.
inline BenchReport compute_benchmark(const BenchConfig& cfg) {
  cfg.validate();
  const ParamConfig pc{cfg.c_a};
  std::map<TableKind, Table> tabs;
  for (TableKind k : cfg.tables) tabs[k].kind = k;
  auto want = [&](TableKind k) { return tabs.count(k) != 0; };

  for (int K = cfg.kmin; K <= cfg.kmax; ++K) {
    const std::vector<int> levels = levels_for(K, cfg.lpolicy);
    if (want(TableKind::params)) {
      const TransferSchedule s = make_schedule(K, levels.back(), pc, cfg.params);
      for (int L = K - 1; L >= levels.back(); --L) tabs[TableKind::params].set(K, L, Cell::pair(s.step_to(L)));
    }
    if (!want(TableKind::err) && !want(TableKind::inc) && !want(TableKind::work)) continue;

    const GridSpec g = make_grid(K);
    const DiscreteTransformInput input = build_U(sample_u(g));
    std::optional<ReferenceSolution> ref;
    if (want(TableKind::err) && K <= kMaxReferenceLevel) ref = reference_solution(K);

    // fast results for every L needed, including L+1 of each incremental cell
    std::map<int, EvalReport> runs;
    auto run = [&](int L) -> const EvalReport& {
      auto it = runs.find(L);
      if (it != runs.end()) return it->second;
      EvalReport r = evaluate_fast(input, L, make_schedule(K, L, pc, cfg.params), cfg.strategy);
      return runs.emplace(L, std::move(r)).first->second;
    };
    for (int L : levels) {
      const EvalReport& r = run(L);
      if (ref) tabs[TableKind::err].set(K, L, Cell::real(l2_difference(r.S.values(), ref->R.values())));
      if (want(TableKind::work)) tabs[TableKind::work].set(K, L, Cell::count(r.ops_per_node()));
      if (want(TableKind::inc) && L < K) {
        const double ie = l2_difference(run(L).S.values(), run(L + 1).S.values());
        tabs[TableKind::inc].set(K, L, Cell::real(ie));
      }
      runs.erase(runs.upper_bound(L + 1), runs.end());  // levels are descending
    }
  }
  BenchReport rep;
  for (auto& [k, t] : tabs) rep.tables.push_back(std::move(t));
  return rep;
}

/// Writes <name>.csv or <name>.md per table into cfg.out; each file is written to a temporary and renamed.
inline std::vector<std::filesystem::path> run_benchmark(const BenchConfig& cfg) {
  const BenchReport rep = compute_benchmark(cfg);
  std::filesystem::create_directories(cfg.out);
  const char* ext = cfg.format == TableFormat::csv ? ".csv" : ".md";
  std::vector<std::filesystem::path> written;
  for (const auto& t : rep.tables) {
    const auto path = cfg.out / (std::string(table_name(t.kind)) + ext);
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
      std::ofstream f(tmp, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + tmp.string());
      f << emit_table(t, cfg.format);
      if (!f) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
    written.push_back(path);
  }
  return written;
}

}  // namespace mlmi
