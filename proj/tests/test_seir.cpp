#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "opdyn/seir.hpp"

using namespace opdyn;

namespace {

KineticParams epi_params(double beta, double zeta, double gamma,
                         double alpha = 1.0, double eta = 0.0) {
  KineticParams p = KineticParams::uniform_rates(1.0, 1.0, 0.5, 0.5);
  p.with_epidemic(beta, zeta, gamma, alpha, eta);
  return p;
}

// Independent final-size oracle: bisection of ln(s/s0) + R(1-s) = 0 written
// directly against the transcendental relation.
double final_size_bisect(double R, double s0) {
  auto phi = [&](double s) { return std::log(s / s0) + R * (1.0 - s); };
  double lo = 1e-15, hi = s0 == 1.0 ? 1.0 - 1e-9 : s0;
  for (int it = 0; it < 120; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("seir_rhs closed-form evaluations") {
  const KineticParams p = epi_params(0.4, 0.5, 0.2);

  // disease-free equilibrium
  const SeirState dfe{1.0, 0.0, 0.0, 0.0};
  const SeirState d0 = seir_rhs(dfe, p);
  CHECK(d0.rho_S == 0.0);
  CHECK(d0.rho_E == 0.0);
  CHECK(d0.rho_I == 0.0);
  CHECK(d0.rho_R == 0.0);

  // direct substitution
  const SeirState s{0.9, 0.05, 0.05, 0.0};
  const SeirState d = seir_rhs(s, p);
  CHECK(d.rho_S == Catch::Approx(-0.018).margin(1e-15));
  CHECK(d.rho_E == Catch::Approx(-0.007).margin(1e-15));
  CHECK(d.rho_I == Catch::Approx(0.015).margin(1e-15));
  CHECK(d.rho_R == Catch::Approx(0.010).margin(1e-15));
  CHECK(d.sum() == Catch::Approx(0.0).margin(1e-16));

  // alpha=0, eta=0: no removal channel
  const KineticParams p2 = epi_params(0.4, 0.5, 0.2, 0.0, 0.0);
  CHECK(seir_rhs(s, p2).rho_R == 0.0);
}

TEST_CASE("integrate_seir conserves mass and reaches the final size") {
  const KineticParams p = epi_params(0.4, 0.5, 0.2);

  // constant trajectory from the disease-free state
  const auto flat = integrate_seir({1.0, 0.0, 0.0, 0.0}, p, 10.0, 0.05);
  CHECK(flat.terminal().rho_S == 1.0);
  CHECK(flat.terminal().rho_R == 0.0);

  const SeirState s0{0.999, 0.0, 0.001, 0.0};
  const auto traj = integrate_seir(s0, p, 400.0, 0.05);
  for (const auto& s : traj.states)
    REQUIRE(std::fabs(s.sum() - 1.0) < 1e-10);

  // terminal state matches the transcendental relation (beta/gamma = 2)
  const double oracle = final_size_bisect(2.0, 0.999);
  CHECK(oracle == Catch::Approx(0.20285).margin(2e-5));
  CHECK(traj.terminal().rho_S == Catch::Approx(oracle).margin(2e-3));
  CHECK(traj.terminal().rho_E < 1e-6);
  CHECK(traj.terminal().rho_I < 1e-6);

  // rho_R non-decreasing in the alpha=1, eta=0 regime
  for (std::size_t k = 1; k < traj.states.size(); ++k)
    REQUIRE(traj.states[k].rho_R >= traj.states[k - 1].rho_R - 1e-14);

  CHECK_THROWS_AS(integrate_seir(s0, p, 10.0, 0.5), std::domain_error);
}

TEST_CASE("final_size roots and degenerate limits") {
  CHECK(final_size(epi_params(0.4, 0.5, 0.2), 1.0).rho_S_inf ==
        Catch::Approx(0.2031878).margin(1e-6));
  CHECK(final_size(epi_params(1.0, 0.5, 0.2), 1.0).rho_S_inf ==
        Catch::Approx(0.0069770).margin(1e-6));

  // beta/gamma -> 0+: the root approaches rho_S0
  const auto low = final_size(epi_params(1e-6, 0.5, 1.0), 0.9);
  CHECK(low.rho_S_inf == Catch::Approx(0.9).margin(1e-5));
  CHECK_FALSE(low.degenerate);

  // subcritical with rho_S0 = 1: no interior root, flagged
  const auto sub = final_size(epi_params(0.15, 0.5, 0.2), 1.0);
  CHECK(sub.degenerate);
  CHECK(sub.rho_S_inf == 1.0);

  // cross-validation against the ODE for several beta/gamma ratios
  for (double ratio : {1.5, 2.0, 3.0, 5.0}) {
    const KineticParams p = epi_params(0.2 * ratio, 0.5, 0.2);
    const SeirState s0{0.999, 0.0, 0.001, 0.0};
    const auto traj = integrate_seir(s0, p, 600.0, 0.05);
    const auto fs = final_size(p, 0.999);
    CHECK(std::fabs(fs.rho_S_inf - traj.terminal().rho_S) < 2e-3);
  }
}

TEST_CASE("moment_rhs transfer structure") {
  const KineticParams p = epi_params(0.4, 1.0, 0.2);

  // aligned means, no active epidemic flux: zero derivative
  {
    KineticParams q = epi_params(0.4, 0.5, 0.2);
    const SeirState s{0.4, 0.0, 0.0, 0.6};
    MomentState m;
    const auto rho = s.as_array();
    for (int j = 0; j < 4; ++j) {
      m.q_pos[j] = 0.37 * rho[j];
      m.q_neg[j] = 0.61 * rho[j];
    }
    const auto d = moment_rhs(m, s, q, m.global_means());
    for (int j = 0; j < 4; ++j) {
      CHECK(d.q_pos[j] == Catch::Approx(0.0).margin(1e-15));
      CHECK(d.q_neg[j] == Catch::Approx(0.0).margin(1e-15));
    }
  }

  // aligned compartment means stay aligned: d m_J = (dq_J - m drho_J)/rho_J
  // vanishes for every occupied compartment even mid-epidemic
  {
    KineticParams q = epi_params(0.4, 0.5, 0.2);
    const SeirState s{0.5, 0.2, 0.2, 0.1};
    const double mbar = 0.42;
    MomentState m;
    const auto rho = s.as_array();
    for (int j = 0; j < 4; ++j) m.q_pos[j] = mbar * rho[j];
    const auto dm = moment_rhs(m, s, q, m.global_means());
    const auto ds = seir_rhs(s, q);
    const auto drho = ds.as_array();
    for (int j = 0; j < 4; ++j) {
      const double d_mean = (dm.q_pos[j] - mbar * drho[j]) / rho[j];
      CHECK(d_mean == Catch::Approx(0.0).margin(1e-14));
    }
  }

  // single transfer channel: only E occupied, zeta=1, lambdas=0
  {
    KineticParams q;
    q.with_epidemic(0.4, 1.0, 0.2);
    const SeirState s{0.0, 1.0, 0.0, 0.0};
    MomentState m;
    m.q_pos[1] = 0.25;
    const auto d = moment_rhs(m, s, q, m.global_means());
    CHECK(d.q_pos[1] == Catch::Approx(-0.25).margin(1e-15));
    CHECK(d.q_pos[2] == Catch::Approx(0.25).margin(1e-15));
  }

  // equal lambdas: the global mean derivative cancels algebraically
  {
    const SeirState s{0.55, 0.2, 0.15, 0.1};
    MomentState m;
    m.q_pos = {0.2, 0.05, 0.09, 0.01};
    m.q_neg = {0.12, 0.13, 0.02, 0.05};
    const auto d = moment_rhs(m, s, p, m.global_means());
    double dp = 0.0, dn = 0.0;
    for (int j = 0; j < 4; ++j) {
      dp += d.q_pos[j];
      dn += d.q_neg[j];
    }
    CHECK(std::fabs(dp) < 1e-12);
    CHECK(std::fabs(dn) < 1e-12);
  }
}

TEST_CASE("moment system keeps the global mean constant over long runs") {
  const KineticParams p = epi_params(0.4, 0.5, 0.2);
  const SeirState s0{0.99, 0.0, 0.01, 0.0};
  MomentState m0;
  // compartment means: S at (0.3, 0.2), I at (0.5, 0.7)
  m0.q_pos = {0.99 * 0.3, 0.0, 0.01 * 0.5, 0.0};
  m0.q_neg = {0.99 * 0.2, 0.0, 0.01 * 0.7, 0.0};
  const auto [mp0, mn0] = m0.global_means();

  const auto traj = integrate_seir_with_moments(s0, m0, p, 100.0, 0.05);
  for (const auto& m : traj.moments) {
    const auto [mp, mn] = m.global_means();
    REQUIRE(std::fabs(mp - mp0) < 1e-8);
    REQUIRE(std::fabs(mn - mn0) < 1e-8);
  }

  // moments stay within their compartment masses
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto rho = traj.states[k].as_array();
    const auto& m = traj.moments[k];
    for (int j = 0; j < 4; ++j) {
      REQUIRE(m.q_pos[j] >= -1e-12);
      REQUIRE(m.q_pos[j] <= rho[j] + 1e-9);
    }
  }
}
