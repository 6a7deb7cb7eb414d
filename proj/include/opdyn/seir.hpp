/*
 * seir.hpp — fake-news SEIR dynamics at the mass level.
 *
 * Compartments: susceptible (ignorant), exposed (incubating), infected
 * (spreader), recovered (stifler). Mass fractions always sum to one;
 * the transfer rates cancel exactly in the sum.
 *
 *   d rho_S = -beta rho_S rho_I + (1-alpha) gamma rho_I
 *   d rho_E =  beta rho_S rho_I - zeta rho_E
 *   d rho_I =  (1-eta) zeta rho_E - gamma rho_I
 *   d rho_R =  eta zeta rho_E + alpha gamma rho_I
 *
 * In the default regime eta = 0, alpha = 1 the epidemic dies out and the
 * terminal susceptible mass solves ln(s/s0) = -(beta/gamma)(1 - s).
 */

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "opdyn/types.hpp"

namespace opdyn {

struct SeirState {
  double rho_S = 1.0;
  double rho_E = 0.0;
  double rho_I = 0.0;
  double rho_R = 0.0;

  double sum() const { return rho_S + rho_E + rho_I + rho_R; }

  std::array<double, 4> as_array() const { return {rho_S, rho_E, rho_I, rho_R}; }

  void validate(double tol = 1e-12) const {
    if (!(rho_S >= 0.0 && rho_E >= 0.0 && rho_I >= 0.0 && rho_R >= 0.0))
      throw std::domain_error("SeirState: mass fractions must be nonnegative");
    if (std::fabs(sum() - 1.0) > tol)
      throw std::domain_error("SeirState: mass fractions must sum to 1");
  }
};

inline SeirState seir_rhs(const SeirState& s, const KineticParams& p) {
  const double incidence = p.beta * s.rho_S * s.rho_I;
  const double activation = p.zeta * s.rho_E;
  const double removal = p.gamma * s.rho_I;
  SeirState d;
  d.rho_S = -incidence + (1.0 - p.alpha) * removal;
  d.rho_E = incidence - activation;
  d.rho_I = (1.0 - p.eta) * activation - removal;
  d.rho_R = p.eta * activation + p.alpha * removal;
  return d;
}

struct SeirTrajectory {
  std::vector<double> time;
  std::vector<SeirState> states;

  const SeirState& terminal() const { return states.back(); }
};

namespace detail {

inline SeirState axpy(const SeirState& s, double c, const SeirState& d) {
  return {s.rho_S + c * d.rho_S, s.rho_E + c * d.rho_E, s.rho_I + c * d.rho_I,
          s.rho_R + c * d.rho_R};
}

template <class Rhs, class State>
State rk4_step(const State& y, double dt, Rhs&& rhs) {
  const State k1 = rhs(y);
  const State k2 = rhs(axpy(y, 0.5 * dt, k1));
  const State k3 = rhs(axpy(y, 0.5 * dt, k2));
  const State k4 = rhs(axpy(y, dt, k3));
  State out = y;
  out = axpy(out, dt / 6.0, k1);
  out = axpy(out, dt / 3.0, k2);
  out = axpy(out, dt / 3.0, k3);
  out = axpy(out, dt / 6.0, k4);
  return out;
}

} // namespace detail

// Classic fixed-step 4th-order integration of the SEIR system.
inline SeirTrajectory integrate_seir(const SeirState& s0, const KineticParams& p,
                                     double t_end, double dt) {
  s0.validate(1e-9);
  if (!(dt > 0.0) || !(t_end > 0.0))
    throw std::domain_error("integrate_seir: t_end and dt must be positive");
  if (dt * std::max({p.beta, p.zeta, p.gamma}) > 0.1 + 1e-12)
    throw std::domain_error("integrate_seir: step-size guard dt*max(beta,zeta,gamma) <= 0.1 violated");

  const auto n_steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  SeirTrajectory traj;
  traj.time.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);
  traj.time.push_back(0.0);
  traj.states.push_back(s0);
  SeirState s = s0;
  for (long k = 0; k < n_steps; ++k) {
    s = detail::rk4_step(s, dt, [&](const SeirState& y) { return seir_rhs(y, p); });
    traj.time.push_back((k + 1) * dt);
    traj.states.push_back(s);
  }
  return traj;
}

struct FinalSizeResult {
  double rho_S_inf = 1.0;
  bool degenerate = false;  // no interior root (beta/gamma <= 1 with rho_S0 = 1)
};

// Root of ln(s/rho_S0) + (beta/gamma)(1-s) = 0 in (0, rho_S0), by bisection.
inline FinalSizeResult final_size(const KineticParams& p, double rho_S0) {
  if (!(p.beta > 0.0 && p.gamma > 0.0))
    throw std::domain_error("final_size: beta and gamma must be positive");
  if (!(rho_S0 > 0.0 && rho_S0 <= 1.0))
    throw std::domain_error("final_size: rho_S0 must lie in (0,1]");
  const double ratio = p.beta / p.gamma;
  const auto phi = [&](double s) { return std::log(s / rho_S0) + ratio * (1.0 - s); };

  double hi = rho_S0;
  if (rho_S0 == 1.0) {
    // phi(1) = 0 exactly; an interior root exists only beyond the threshold
    hi = 1.0 - 1e-9;
    if (phi(hi) <= 0.0) return {rho_S0, true};
  }
  double lo = 1e-300;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) < 0.0 ? lo : hi) = mid;
    if (hi - lo < 1e-10) break;
  }
  return {0.5 * (lo + hi), false};
}

// Mass-weighted first moments q±_J = rho_J m±_J, one per compartment and axis.
struct MomentState {
  std::array<double, 4> q_pos{};
  std::array<double, 4> q_neg{};

  std::pair<double, double> global_means() const {
    double mp = 0.0, mn = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      mp += q_pos[j];
      mn += q_neg[j];
    }
    return {mp, mn};
  }
};

// Moment balance in q-form (no division by compartment masses):
//   d q_S = -beta q_S rho_I            - lambda_S (q_S - rho_S mbar)
//   d q_E =  beta q_S rho_I - zeta q_E - lambda_E (q_E - rho_E mbar)
//   d q_I =  zeta q_E - gamma q_I      - lambda_I (q_I - rho_I mbar)
//   d q_R =  gamma q_I                 - lambda_R (q_R - rho_R mbar)
// The epidemic transfer terms carry the donor's moment, which is the only
// form under which the global mean is conserved for equal lambdas.
inline MomentState moment_rhs(const MomentState& m, const SeirState& s,
                              const KineticParams& p,
                              std::pair<double, double> global_means) {
  MomentState d;
  const std::array<double, 4> rho = {s.rho_S, s.rho_E, s.rho_I, s.rho_R};
  for (Axis axis : {Axis::Pos, Axis::Neg}) {
    const auto& q = axis == Axis::Pos ? m.q_pos : m.q_neg;
    auto& dq = axis == Axis::Pos ? d.q_pos : d.q_neg;
    const double mbar = axis == Axis::Pos ? global_means.first : global_means.second;
    const double transfer_SE = p.beta * q[0] * s.rho_I;
    const double transfer_EI = (1.0 - p.eta) * p.zeta * q[1];
    const double transfer_ER = p.eta * p.zeta * q[1];
    const double transfer_IR = p.alpha * p.gamma * q[2];
    const double transfer_IS = (1.0 - p.alpha) * p.gamma * q[2];
    dq[0] = -transfer_SE + transfer_IS;
    dq[1] = transfer_SE - transfer_EI - transfer_ER;
    dq[2] = transfer_EI - transfer_IR - transfer_IS;
    dq[3] = transfer_ER + transfer_IR;
    for (std::size_t j = 0; j < 4; ++j) {
      const Compartment c = kCompartments[j];
      dq[j] -= p.lambda(axis, c) * (q[j] - rho[j] * mbar);
    }
  }
  return d;
}

struct SeirMomentTrajectory {
  std::vector<double> time;
  std::vector<SeirState> states;
  std::vector<MomentState> moments;
};

// Joint RK4 integration of masses and first moments.
inline SeirMomentTrajectory integrate_seir_with_moments(
    const SeirState& s0, const MomentState& m0, const KineticParams& p,
    double t_end, double dt) {
  s0.validate(1e-9);
  if (!(dt > 0.0) || !(t_end > 0.0))
    throw std::domain_error("integrate_seir_with_moments: t_end and dt must be positive");
  if (dt * std::max({p.beta, p.zeta, p.gamma}) > 0.1 + 1e-12)
    throw std::domain_error("integrate_seir_with_moments: step-size guard violated");

  struct Joint {
    SeirState s;
    MomentState m;
  };
  const auto rhs = [&](const Joint& y) {
    Joint d;
    d.s = seir_rhs(y.s, p);
    d.m = moment_rhs(y.m, y.s, p, y.m.global_means());
    return d;
  };
  const auto jaxpy = [](const Joint& y, double c, const Joint& d) {
    Joint out;
    out.s = detail::axpy(y.s, c, d.s);
    for (std::size_t j = 0; j < 4; ++j) {
      out.m.q_pos[j] = y.m.q_pos[j] + c * d.m.q_pos[j];
      out.m.q_neg[j] = y.m.q_neg[j] + c * d.m.q_neg[j];
    }
    return out;
  };

  const auto n_steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  SeirMomentTrajectory traj;
  traj.time.push_back(0.0);
  traj.states.push_back(s0);
  traj.moments.push_back(m0);
  Joint y{s0, m0};
  for (long k = 0; k < n_steps; ++k) {
    const Joint k1 = rhs(y);
    const Joint k2 = rhs(jaxpy(y, 0.5 * dt, k1));
    const Joint k3 = rhs(jaxpy(y, 0.5 * dt, k2));
    const Joint k4 = rhs(jaxpy(y, dt, k3));
    y = jaxpy(y, dt / 6.0, k1);
    y = jaxpy(y, dt / 3.0, k2);
    y = jaxpy(y, dt / 3.0, k3);
    y = jaxpy(y, dt / 6.0, k4);
    traj.time.push_back((k + 1) * dt);
    traj.states.push_back(y.s);
    traj.moments.push_back(y.m);
  }
  return traj;
}

} // namespace opdyn
