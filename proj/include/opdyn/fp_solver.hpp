/*
 * fp_solver.hpp — deterministic solver for the mean-field system: the
 * single-population opinion Fokker-Planck equation and the coupled
 * four-compartment fake-news system.
 *
 * Dimensional operator splitting with three stages per step: drift+diffusion
 * along the positive axis, along the negative axis, then the compartmental
 * exchange. Each 1D sweep uses a steady-state-preserving finite-volume flux
 *
 *   F_{i+1/2} = C_{i+1/2} [ (1-d) f_{i+1} + d f_i ] + (Dt_{i+1/2}/dw)(f_{i+1}-f_i)
 *
 * with exponential-fitting weights d = 1/lt - 1/(e^lt - 1), where
 * lt = dw C/Dt is evaluated as the exact center-to-center integral of the
 * flux ratio. The discrete steady state on every slice is then exactly the
 * analytic Beta at cell centers, boundary fluxes vanish (no-flux), mass per
 * slice telescopes, and the backward-Euler solve is positivity preserving.
 *
 * The reaction stage advances the four-species exchange (-K, +K - zeta f_E,
 * +zeta f_E - gamma f_I, +gamma f_I), K = f_S * integral of kappa f_I, with
 * an explicit Runge-Kutta step; the pointwise total density is untouched.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "opdyn/density_field.hpp"
#include "opdyn/grid.hpp"
#include "opdyn/types.hpp"

namespace opdyn {

enum class SplitOrder { Lie, Strang };
enum class StageKind { DriftDiffusePos, DriftDiffuseNeg, Reaction };
enum class SweepScheme { BackwardEuler, CrankNicolson };

struct SplitStepPlan {
  double dt = 0.0;
  SplitOrder order = SplitOrder::Lie;
  // When set, the sweeps use these prescribed global means instead of
  // recomputing them from the field before each stage.
  std::optional<std::pair<double, double>> fixed_means;

  std::vector<std::pair<StageKind, double>> stages() const {
    using K = StageKind;
    if (order == SplitOrder::Lie)
      return {{K::DriftDiffusePos, dt}, {K::DriftDiffuseNeg, dt}, {K::Reaction, dt}};
    return {{K::DriftDiffusePos, 0.5 * dt},
            {K::DriftDiffuseNeg, 0.5 * dt},
            {K::Reaction, dt},
            {K::DriftDiffuseNeg, 0.5 * dt},
            {K::DriftDiffusePos, 0.5 * dt}};
  }

  void validate(const OpinionGrid& g) const {
    if (!(dt > 0.0)) throw std::domain_error("SplitStepPlan: dt must be positive");
    const double dw = std::min(g.dw_pos(), g.dw_neg());
    if (dt > dw * (1.0 + 1e-12))
      throw std::domain_error("SplitStepPlan: dt must satisfy dt <= dw");
  }
};

namespace detail {

// Interface coefficients of one 1D sweep operator:
//   F_k = alpha_k f_k - beta_k f_{k-1}   (k = 1..n-1 interior interfaces)
// Both coefficient arrays are nonnegative, so the semi-discrete operator is
// a generator matrix: columns sum to zero and backward Euler inverts an
// M-matrix.
struct SweepCoeffs {
  std::vector<double> alpha;  // size n+1, alpha[0] = alpha[n] = 0
  std::vector<double> beta;
};

// lt = integral over [w_{k-1}, w_k] of C(w)/Dt(w) dw, in closed form:
//   C/Dt = (2 lambda / sigma^2) [ -m/w + (1-m)/(1-w) ] + 1/w - 1/(1-w).
inline SweepCoeffs sweep_coeffs(int n, double dw, double lambda, double sigma,
                                double mean) {
  SweepCoeffs c;
  c.alpha.assign(static_cast<std::size_t>(n) + 1, 0.0);
  c.beta.assign(static_cast<std::size_t>(n) + 1, 0.0);
  const double s2 = sigma * sigma;
  if (s2 == 0.0 && lambda == 0.0) return c;  // frozen dynamics

  for (int k = 1; k < n; ++k) {
    const double wl = (k - 0.5) * dw;
    const double wr = (k + 0.5) * dw;
    const double wi = k * dw;  // interface position
    if (s2 == 0.0) {
      // pure drift: upwind in the flux C f, velocity is -C
      const double C = lambda * (wi - mean);
      if (C >= 0.0)
        c.alpha[k] = C;
      else
        c.beta[k] = -C;
      continue;
    }
    const double Lw = std::log(wr / wl);
    const double Lv = std::log1p((wr - wl) / (1.0 - wr));  // log((1-wl)/(1-wr))
    const double lt =
        (2.0 * lambda / s2) * (-mean * Lw + (1.0 - mean) * Lv) + (Lw - Lv);
    const double Dt = 0.5 * s2 * wi * (1.0 - wi);
    double base;  // beta_k = base, alpha_k = base * e^{lt}
    if (std::fabs(lt) < 1e-12) {
      base = (Dt / dw) * (1.0 - 0.5 * lt);
    } else {
      base = (Dt / dw) * lt / std::expm1(lt);
    }
    c.beta[k] = base;
    c.alpha[k] = base * std::exp(lt);
  }
  return c;
}

// Thomas solve of (I - dt L) f = rhs for one slice, where
//   (L f)_i = (F_{i+1} - F_i)/dw.
// With CrankNicolson the right-hand side carries the explicit half step.
inline void sweep_slice(const SweepCoeffs& c, int n, double dw, double dt,
                        SweepScheme scheme, std::vector<double>& f,
                        std::vector<double>& scratch_d,
                        std::vector<double>& scratch_u,
                        std::vector<double>& scratch_r) {
  const double theta = scheme == SweepScheme::CrankNicolson ? 0.5 : 1.0;
  const double r = theta * dt / dw;

  auto& diag = scratch_d;
  auto& upper = scratch_u;
  auto& rhs = scratch_r;
  diag.resize(static_cast<std::size_t>(n));
  upper.resize(static_cast<std::size_t>(n));
  rhs.resize(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    diag[i] = 1.0 + r * (c.beta[i + 1] + c.alpha[i]);
    upper[i] = -r * c.alpha[i + 1];
    rhs[i] = f[i];
  }
  if (scheme == SweepScheme::CrankNicolson) {
    const double q = (1.0 - theta) * dt / dw;
    for (int i = 0; i < n; ++i) {
      const double flux_right = c.alpha[i + 1] * (i + 1 < n ? f[i + 1] : 0.0) -
                                c.beta[i + 1] * f[i];
      const double flux_left =
          i > 0 ? c.alpha[i] * f[i] - c.beta[i] * f[i - 1] : 0.0;
      rhs[i] += q * (flux_right - flux_left);
    }
  }

  // forward elimination; sub-diagonal entry of row i is -r*beta[i]
  for (int i = 1; i < n; ++i) {
    const double w = (-r * c.beta[i]) / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  f[n - 1] = rhs[n - 1] / diag[n - 1];
  for (int i = n - 2; i >= 0; --i)
    f[i] = (rhs[i] - upper[i] * f[i + 1]) / diag[i];
}

} // namespace detail

// One semi-implicit drift-diffusion step along `axis` for every compartment
// and every 1D slice. `means` are the global means (m+, m-) used in the
// drift; recompute them before the call unless running with pinned means.
inline DensityField sweep_axis(const DensityField& field, Axis axis,
                               std::pair<double, double> means,
                               const KineticParams& p, double dt,
                               SweepScheme scheme = SweepScheme::BackwardEuler) {
  const auto& g = field.grid;
  const int n = axis == Axis::Pos ? g.n_pos : g.n_neg;
  const int m = axis == Axis::Pos ? g.n_neg : g.n_pos;
  const double dw = axis == Axis::Pos ? g.dw_pos() : g.dw_neg();
  const double mean = axis == Axis::Pos ? means.first : means.second;
  if (!(dt > 0.0)) throw std::domain_error("sweep_axis: dt must be positive");

  DensityField out = field;
  std::vector<double> slice(static_cast<std::size_t>(n));
  std::vector<double> sd, su, sr;
  for (Compartment c : kCompartments) {
    const double lambda = p.lambda(axis, c);
    const double sigma = p.sigma(axis, c);
    if (lambda == 0.0 && sigma == 0.0) continue;  // identity on this layer
    const auto coeffs = detail::sweep_coeffs(n, dw, lambda, sigma, mean);
    auto& layer = out.values[index_of(c)];
    for (int s = 0; s < m; ++s) {
      for (int i = 0; i < n; ++i) {
        const int idx = axis == Axis::Pos ? g.flat(i, s) : g.flat(s, i);
        slice[static_cast<std::size_t>(i)] = layer[static_cast<std::size_t>(idx)];
      }
      detail::sweep_slice(coeffs, n, dw, dt, scheme, slice, sd, su, sr);
      for (int i = 0; i < n; ++i) {
        const int idx = axis == Axis::Pos ? g.flat(i, s) : g.flat(s, i);
        double v = slice[static_cast<std::size_t>(i)];
        if (v < 0.0) {
          if (v < -1e-13)
            throw std::runtime_error(
                "sweep_axis: negative density " + std::to_string(v) +
                " on slice " + std::to_string(s));
          v = 0.0;  // Crank-Nicolson roundoff
        }
        layer[static_cast<std::size_t>(idx)] = v;
      }
    }
  }
  return out;
}

// Incidence integral I_kappa = integral kappa(w) f_I(w) dw by midpoint rule.
inline double incidence_integral(const DensityField& f, const KineticParams& p) {
  const auto& g = f.grid;
  if (p.kernel.kind == ContactKernel::Kind::SeparableProduct &&
      (p.kernel.k_pos.size() != static_cast<std::size_t>(g.n_pos) ||
       p.kernel.k_neg.size() != static_cast<std::size_t>(g.n_neg)))
    throw std::domain_error("incidence_integral: kernel tabulation does not match grid");
  double s = 0.0;
  const auto& fI = f.values[index_of(Compartment::I)];
  for (int i = 0; i < g.n_pos; ++i) {
    const double kp = p.kernel.factor_pos(i);
    if (kp == 0.0) continue;
    for (int j = 0; j < g.n_neg; ++j) {
      s += kp * p.kernel.factor_neg(j) * fI[static_cast<std::size_t>(g.flat(i, j))];
    }
  }
  return p.beta * s * g.cell_area();
}

namespace detail {

// One explicit RK4 step of the exchange dynamics; the incidence integral is
// recomputed at every internal stage. Returns false if any cell would go
// negative (caller halves the step).
inline bool try_reaction_rk4(const DensityField& f, const KineticParams& p,
                             double dt, DensityField& out) {
  const auto& g = f.grid;
  const std::size_t ncells = static_cast<std::size_t>(g.cell_count());

  // rhs of the exchange at a given field state
  const auto rhs = [&](const DensityField& y, std::array<std::vector<double>, 4>& k) {
    const double inc = incidence_integral(y, p);
    const auto& yS = y.values[0];
    const auto& yE = y.values[1];
    const auto& yI = y.values[2];
    for (std::size_t c = 0; c < ncells; ++c) {
      const double K = yS[c] * inc;
      const double act = p.zeta_at(c) * yE[c];
      const double rem = p.gamma_at(c) * yI[c];
      k[0][c] = -K + (1.0 - p.alpha) * rem;
      k[1][c] = K - act;
      k[2][c] = (1.0 - p.eta) * act - rem;
      k[3][c] = p.eta * act + p.alpha * rem;
    }
  };

  std::array<std::vector<double>, 4> k1, k2, k3, k4;
  for (auto* k : {&k1, &k2, &k3, &k4})
    for (auto& v : *k) v.assign(ncells, 0.0);

  DensityField stage = f;
  rhs(f, k1);
  for (std::size_t J = 0; J < 4; ++J)
    for (std::size_t c = 0; c < ncells; ++c)
      stage.values[J][c] = f.values[J][c] + 0.5 * dt * k1[J][c];
  rhs(stage, k2);
  for (std::size_t J = 0; J < 4; ++J)
    for (std::size_t c = 0; c < ncells; ++c)
      stage.values[J][c] = f.values[J][c] + 0.5 * dt * k2[J][c];
  rhs(stage, k3);
  for (std::size_t J = 0; J < 4; ++J)
    for (std::size_t c = 0; c < ncells; ++c)
      stage.values[J][c] = f.values[J][c] + dt * k3[J][c];
  rhs(stage, k4);

  for (std::size_t J = 0; J < 4; ++J) {
    for (std::size_t c = 0; c < ncells; ++c) {
      const double v = f.values[J][c] +
                       (dt / 6.0) * (k1[J][c] + 2.0 * k2[J][c] + 2.0 * k3[J][c] +
                                     k4[J][c]);
      if (v < 0.0) return false;
      out.values[J][c] = v;
    }
  }
  return true;
}

} // namespace detail

// Explicit step of the compartmental exchange. If a compartment would go
// negative the step is halved and retried, up to 4 times.
inline DensityField reaction_step(const DensityField& field,
                                  const KineticParams& p, double dt) {
  if (!(dt > 0.0)) throw std::domain_error("reaction_step: dt must be positive");
  const auto ncells = static_cast<std::size_t>(field.grid.cell_count());
  if ((!p.zeta_table.empty() && p.zeta_table.size() != ncells) ||
      (!p.gamma_table.empty() && p.gamma_table.size() != ncells))
    throw std::domain_error("reaction_step: rate tabulation does not match grid");
  DensityField out = field;
  for (int halving = 0; halving <= 4; ++halving) {
    const long pieces = 1L << halving;
    const double h = dt / static_cast<double>(pieces);
    DensityField cur = field;
    DensityField next = field;
    bool ok = true;
    for (long s = 0; s < pieces && ok; ++s) {
      ok = detail::try_reaction_rk4(cur, p, h, next);
      if (ok) cur = next;
    }
    if (ok) {
      out = cur;
      return out;
    }
  }
  throw std::runtime_error("reaction_step: negativity persists after 4 halvings");
}

// One full split step: the stage sequence of the plan, with the global
// means recomputed before each drift stage unless pinned.
inline DensityField split_step(const DensityField& field, const KineticParams& p,
                               const SplitStepPlan& plan) {
  plan.validate(field.grid);
  const SweepScheme scheme = plan.order == SplitOrder::Strang
                                 ? SweepScheme::CrankNicolson
                                 : SweepScheme::BackwardEuler;
  DensityField f = field;
  for (const auto& [kind, stage_dt] : plan.stages()) {
    switch (kind) {
      case StageKind::DriftDiffusePos:
      case StageKind::DriftDiffuseNeg: {
        std::pair<double, double> means;
        if (plan.fixed_means) {
          means = *plan.fixed_means;
        } else {
          const FieldMoments mom = field_marginals(f);
          const double total = mom.rho[0] + mom.rho[1] + mom.rho[2] + mom.rho[3];
          means = {mom.mbar_pos / total, mom.mbar_neg / total};
        }
        const Axis axis =
            kind == StageKind::DriftDiffusePos ? Axis::Pos : Axis::Neg;
        f = sweep_axis(f, axis, means, p, stage_dt, scheme);
        break;
      }
      case StageKind::Reaction:
        if (p.reaction_active()) f = reaction_step(f, p, stage_dt);
        break;
    }
  }
  f.time = field.time + plan.dt;
  return f;
}

struct SteadyResult {
  DensityField field;
  bool converged = false;
  double residual = 0.0;  // L1 change per unit time at the last step
  long steps = 0;
};

// Iterate split steps until the L1 change per unit time drops below tol.
inline SteadyResult solve_to_steady(const DensityField& field0,
                                    const KineticParams& p,
                                    const SplitStepPlan& plan, double tol,
                                    long max_steps) {
  if (!(tol > 0.0)) throw std::domain_error("solve_to_steady: tol must be positive");
  SteadyResult res{field0};
  const double area = field0.grid.cell_area();
  for (long s = 0; s < max_steps; ++s) {
    DensityField next = split_step(res.field, p, plan);
    double change = 0.0;
    for (std::size_t J = 0; J < 4; ++J)
      for (std::size_t c = 0; c < next.values[J].size(); ++c)
        change += std::fabs(next.values[J][c] - res.field.values[J][c]);
    change *= area / plan.dt;
    res.field = std::move(next);
    res.residual = change;
    res.steps = s + 1;
    if (change < tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

} // namespace opdyn
