/*
 * ensemble.hpp — N-agent stochastic simulation of the bivariate opinion SDE.
 *
 * Two drift forms:
 *   Pairwise — each agent averages bounded-confidence attractions to all
 *              peers, (1/N) sum_j lambda 1{|Wi-Wj| <= Delta} (Wj - Wi);
 *   McKean   — drift toward the current ensemble means, lambda (M - Wi).
 * For Delta = 1 the pairwise sum telescopes to the mean and the two forms
 * coincide; the noise streams are keyed by (step, agent, axis) so the two
 * integrators can share draws exactly.
 *
 * Time stepping is Euler-Maruyama with the diffusion evaluated at the
 * pre-step state; coordinates are reflected back into [0,1].
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "opdyn/density_field.hpp"
#include "opdyn/grid.hpp"
#include "opdyn/rng.hpp"
#include "opdyn/types.hpp"

namespace opdyn {

enum class SimMode { Pairwise, McKean };
enum class DiffusionKind { BetaRoot, AbsDeviation };

struct SimConfig {
  double dt = 0.01;
  long steps = 100;
  std::uint64_t seed = 0;
  SimMode mode = SimMode::McKean;
  DiffusionKind diffusion = DiffusionKind::BetaRoot;
};

struct Ensemble {
  std::vector<OpinionPair> agents;
  std::vector<Compartment> compartment;
  double time = 0.0;

  std::size_t size() const { return agents.size(); }

  static Ensemble at_point(std::size_t n, OpinionPair w,
                           Compartment c = Compartment::S) {
    Ensemble e;
    e.agents.assign(n, w);
    e.compartment.assign(n, c);
    return e;
  }

  static Ensemble uniform_random(std::size_t n, std::uint64_t seed,
                                 Compartment c = Compartment::S) {
    Ensemble e;
    e.agents.reserve(n);
    e.compartment.assign(n, c);
    for (std::size_t i = 0; i < n; ++i) {
      e.agents.emplace_back(uniform_at(seed, 0xa11ce5, i, 0),
                            uniform_at(seed, 0xa11ce5, i, 1));
    }
    return e;
  }
};

inline std::pair<double, double> ensemble_means(const Ensemble& e) {
  if (e.agents.empty()) throw std::domain_error("ensemble_means: empty ensemble");
  double sp = 0.0, sn = 0.0;
  for (const auto& a : e.agents) {
    sp += a.w_pos;
    sn += a.w_neg;
  }
  const double n = static_cast<double>(e.agents.size());
  return {sp / n, sn / n};
}

// Population variances per axis.
inline std::pair<double, double> ensemble_variances(const Ensemble& e) {
  const auto [mp, mn] = ensemble_means(e);
  double vp = 0.0, vn = 0.0;
  for (const auto& a : e.agents) {
    vp += (a.w_pos - mp) * (a.w_pos - mp);
    vn += (a.w_neg - mn) * (a.w_neg - mn);
  }
  const double n = static_cast<double>(e.agents.size());
  return {vp / n, vn / n};
}

namespace detail {

inline double reflect_unit(double w) {
  while (w < 0.0 || w > 1.0) {
    if (w < 0.0) w = -w;
    if (w > 1.0) w = 2.0 - w;
  }
  return w;
}

inline double diffusion_amplitude(DiffusionKind kind, double w, double mean) {
  switch (kind) {
    case DiffusionKind::BetaRoot: return std::sqrt(w * (1.0 - w));
    case DiffusionKind::AbsDeviation: return std::fabs(w - mean);
  }
  return 0.0;
}

inline void check_stability(const KineticParams& p, const SimConfig& cfg) {
  if (cfg.dt * p.max_lambda() >= 1.0)
    throw std::domain_error("particle step: stability guard dt*max(lambda) < 1 violated");
  if (!(cfg.dt > 0.0)) throw std::domain_error("particle step: dt must be positive");
}

} // namespace detail

// One Euler-Maruyama step of the full pairwise system. O(N^2) drift sums.
inline Ensemble step_pairwise(const Ensemble& e, const KineticParams& p,
                              const SimConfig& cfg, long step_index) {
  detail::check_stability(p, cfg);
  const std::size_t n = e.size();
  const auto [mean_p, mean_n] = ensemble_means(e);
  const double sqrt_dt = std::sqrt(cfg.dt);

  Ensemble out = e;
  for (std::size_t i = 0; i < n; ++i) {
    const Compartment ci = e.compartment[i];
    const double wi_p = e.agents[i].w_pos;
    const double wi_n = e.agents[i].w_neg;
    double drift_p = 0.0, drift_n = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double dp = e.agents[j].w_pos - wi_p;
      const double dn = e.agents[j].w_neg - wi_n;
      if (std::fabs(dp) <= p.confidence_pos) drift_p += dp;
      if (std::fabs(dn) <= p.confidence_neg) drift_n += dn;
    }
    drift_p *= p.lambda(Axis::Pos, ci) / static_cast<double>(n);
    drift_n *= p.lambda(Axis::Neg, ci) / static_cast<double>(n);

    const double noise_p = p.sigma(Axis::Pos, ci) *
        detail::diffusion_amplitude(cfg.diffusion, wi_p, mean_p) *
        normal_at(cfg.seed, static_cast<std::uint64_t>(step_index), i, 0);
    const double noise_n = p.sigma(Axis::Neg, ci) *
        detail::diffusion_amplitude(cfg.diffusion, wi_n, mean_n) *
        normal_at(cfg.seed, static_cast<std::uint64_t>(step_index), i, 1);

    out.agents[i].w_pos =
        detail::reflect_unit(wi_p + drift_p * cfg.dt + noise_p * sqrt_dt);
    out.agents[i].w_neg =
        detail::reflect_unit(wi_n + drift_n * cfg.dt + noise_n * sqrt_dt);
  }
  out.time = e.time + cfg.dt;
  return out;
}

// One Euler-Maruyama step of the McKean mean-field process (constant-rate
// regime, Delta = 1): drift toward the current ensemble means.
inline Ensemble step_mckean(const Ensemble& e, const KineticParams& p,
                            const SimConfig& cfg, long step_index) {
  detail::check_stability(p, cfg);
  if (p.confidence_pos != 1.0 || p.confidence_neg != 1.0)
    throw std::domain_error("step_mckean: requires confidence radii Delta = 1");
  const auto [mean_p, mean_n] = ensemble_means(e);
  const double sqrt_dt = std::sqrt(cfg.dt);

  Ensemble out = e;
  const std::size_t n = e.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Compartment ci = e.compartment[i];
    const double wi_p = e.agents[i].w_pos;
    const double wi_n = e.agents[i].w_neg;
    const double drift_p = p.lambda(Axis::Pos, ci) * (mean_p - wi_p);
    const double drift_n = p.lambda(Axis::Neg, ci) * (mean_n - wi_n);
    const double noise_p = p.sigma(Axis::Pos, ci) *
        detail::diffusion_amplitude(cfg.diffusion, wi_p, mean_p) *
        normal_at(cfg.seed, static_cast<std::uint64_t>(step_index), i, 0);
    const double noise_n = p.sigma(Axis::Neg, ci) *
        detail::diffusion_amplitude(cfg.diffusion, wi_n, mean_n) *
        normal_at(cfg.seed, static_cast<std::uint64_t>(step_index), i, 1);
    out.agents[i].w_pos =
        detail::reflect_unit(wi_p + drift_p * cfg.dt + noise_p * sqrt_dt);
    out.agents[i].w_neg =
        detail::reflect_unit(wi_n + drift_n * cfg.dt + noise_n * sqrt_dt);
  }
  out.time = e.time + cfg.dt;
  return out;
}

inline Ensemble step(const Ensemble& e, const KineticParams& p,
                     const SimConfig& cfg, long step_index) {
  return cfg.mode == SimMode::Pairwise ? step_pairwise(e, p, cfg, step_index)
                                       : step_mckean(e, p, cfg, step_index);
}

// Empirical measure binned on a grid: count/(N * cell area), one layer
// per compartment. Integrates to exactly 1 (up to rounding).
inline DensityField empirical_density(const Ensemble& e, const OpinionGrid& g) {
  DensityField f(g);
  const double unit = 1.0 / (static_cast<double>(e.size()) * g.cell_area());
  for (std::size_t k = 0; k < e.size(); ++k) {
    const int i = g.index_pos(e.agents[k].w_pos);
    const int j = g.index_neg(e.agents[k].w_neg);
    f.at(e.compartment[k], i, j) += unit;
  }
  f.time = e.time;
  return f;
}

// Per-snapshot sample variances on each axis.
inline std::vector<std::pair<double, double>> variance_trajectory(
    std::span<const Ensemble> history) {
  if (history.size() < 2)
    throw std::domain_error("variance_trajectory: need at least 2 snapshots");
  std::vector<std::pair<double, double>> out;
  out.reserve(history.size());
  for (const auto& e : history) out.push_back(ensemble_variances(e));
  return out;
}

} // namespace opdyn
