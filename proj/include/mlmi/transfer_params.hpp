#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "grid.hpp"

namespace mlmi {

/// Accuracy knob and fixed constants of the parameter recipe.
struct ParamConfig {
  double c_a = 0.0;
  double gamma2 = 0.5;  ///< central interpolation
  int l = 2;            ///< kernel integration order per axis
  int s = 2;            ///< discretization order per axis
  int d = 2;
};

/// Softening/transfer parameters of one coarsening step.
struct StepParams {
  int order = 4;
  int distance = 0;
  friend bool operator==(const StepParams&, const StepParams&) = default;
};

/// Parameters for the steps K -> K-1 -> ... -> L; steps[i] belongs to the step from K-i to K-i-1.
struct TransferSchedule {
  int fine = 0;
  int coarse = 0;
  std::vector<StepParams> steps;

  [[nodiscard]] const StepParams& step_to(int level) const { return steps.at(static_cast<std::size_t>(fine - 1 - level)); }
  [[nodiscard]] bool softening_free() const noexcept {
    for (const auto& s : steps)
      if (s.distance != 0) return false;
    return true;
  }
};

/// ln g = c_a + (s - d(s-l)) ln h - (l+1) ln H with h = 2^(1-K), H = 2^(1-L).
inline double ln_g(int K, int L, const ParamConfig& cfg = {}) {
  if (L >= K) throw std::invalid_argument("coarse level must be below the fine level");
  const double ln2 = std::numbers::ln2;
  return cfg.c_a + (cfg.s - cfg.d * (cfg.s - cfg.l)) * (1 - K) * ln2 - (cfg.l + 1) * (1 - L) * ln2;
}

/// Fixed point of chi = (32/3) gamma2 / Hbar * exp(1/chi).
inline double solve_chi(double Hbar, double gamma2 = 0.5) {
  if (!(Hbar > 0.0 && Hbar < 1.0)) throw std::invalid_argument("Hbar must lie in (0,1)");
  const double base = 32.0 / 3.0 * gamma2 / Hbar;
  double chi = base;
  for (int it = 0; it < 500; ++it) {
    const double next = base * std::exp(1.0 / chi);
    if (std::fabs(next - chi) <= 1e-12 * next) return next;
    chi = next;
  }
  throw std::runtime_error("chi iteration did not converge");
}

/// Continuous order estimate p* for the step whose coarse grid is level L.
inline double optimal_order(int K, int L, const ParamConfig& cfg = {}) {
  const double Hbar = std::ldexp(1.0, -L);
  const double chi = solve_chi(Hbar, cfg.gamma2);
  return -chi / (chi + 1.0) * ln_g(K, L, cfg) + cfg.l + 1;
}

/// (p, m) for the step from level L+1 to L of a level-K evaluation.
inline StepParams select_params(int K, int L, const ParamConfig& cfg = {}) {
  const double pstar = optimal_order(K, L, cfg);
  if (pstar < cfg.l + 2) return {cfg.l + 2, 0};
  const int p = 2 * static_cast<int>(std::floor(pstar / 2.0 + 1.0));
  const double Hbar = std::ldexp(1.0, -L);
  const double chi = solve_chi(Hbar, cfg.gamma2);
  const int m = static_cast<int>(std::floor(0.5 + 3.0 / 32.0 * Hbar / cfg.gamma2 * chi * (p - cfg.l - 1)));
  return {p, m};
}

/// The unsoftened kernel meets the accuracy requirement on the coarse grid of mesh H:
/// the softening order that would be needed stays below the minimum l+2.
inline bool no_softening_admissible(double H, int K, const ParamConfig& cfg = {}) {
  if (!(H > 0.0 && H < 2.0)) throw std::invalid_argument("coarse mesh must lie in (0,2)");
  const double h = std::ldexp(1.0, 1 - K);
  const double lg = cfg.c_a + (cfg.s - cfg.d * (cfg.s - cfg.l)) * std::log(h) - (cfg.l + 1) * std::log(H);
  const double chi = solve_chi(H / 2.0, cfg.gamma2);
  return -chi / (chi + 1.0) * lg + cfg.l + 1 < cfg.l + 2;
}

/// Operations per fine node of one step: 2(1 - 2^-d) p + 4 d m Hbar^(1-d).
inline double work_estimate(int p, int m, double Hbar, int d = 2) {
  if (d != 2) throw std::invalid_argument("work model is for d = 2");
  return 2.0 * (1.0 - std::ldexp(1.0, -d)) * p + 4.0 * d * m * std::pow(Hbar, 1 - d);
}

/// Published (p, m) for K = 5..11, rows K-1, K-2, ... (the experiments' settings). The m entries differ
/// from the rounding in select_params by up to one.
inline std::optional<StepParams> tabulated_params(int K, int level) {
  static const std::vector<std::vector<StepParams>> rows = {
      {{4, 0}, {6, 2}},
      {{4, 0}, {4, 1}, {6, 3}},
      {{4, 0}, {4, 0}, {6, 3}, {8, 5}},
      {{4, 0}, {4, 0}, {6, 2}, {8, 4}, {10, 6}},
      {{4, 0}, {4, 0}, {4, 1}, {6, 3}, {8, 5}, {10, 8}},
      {{4, 0}, {4, 0}, {4, 1}, {6, 3}, {8, 5}, {10, 7}},
      {{4, 0}, {4, 0}, {4, 0}, {6, 2}, {8, 4}, {10, 6}},
  };
  if (K < 5 || K > 11 || level >= K) return std::nullopt;
  const auto& row = rows[static_cast<std::size_t>(K - 5)];
  const auto j = static_cast<std::size_t>(K - 1 - level);
  if (j >= row.size()) return std::nullopt;
  return row[j];
}

/// recipe: select_params for every step. table: tabulated_params where listed, recipe elsewhere.
enum class ParamSource { recipe, table };

inline TransferSchedule make_schedule(int K, int L, const ParamConfig& cfg = {},
                                      ParamSource source = ParamSource::recipe) {
  if (L > K || L < kMinLevel) throw std::invalid_argument("coarsest level must satisfy 1 <= L <= K");
  TransferSchedule s{K, L, {}};
  for (int level = K - 1; level >= L; --level) {
    const auto listed = source == ParamSource::table ? tabulated_params(K, level) : std::nullopt;
    StepParams st = listed ? *listed : select_params(K, level, cfg);
    // keep m H below the domain diameter; only bites on the 3x3 grid (L = 2)
    const double H = std::ldexp(1.0, 1 - level);
    while (st.distance > 0 && st.distance * H >= kDomainDiameter) --st.distance;
    s.steps.push_back(st);
  }
  return s;
}

}  // namespace mlmi
