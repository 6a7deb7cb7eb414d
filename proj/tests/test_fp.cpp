#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "opdyn/beta.hpp"
#include "opdyn/density_field.hpp"
#include "opdyn/fp_solver.hpp"
#include "opdyn/seir.hpp"

using namespace opdyn;

namespace {

double max_abs_diff(const DensityField& a, const DensityField& b) {
  double worst = 0.0;
  for (std::size_t J = 0; J < 4; ++J)
    for (std::size_t c = 0; c < a.values[J].size(); ++c)
      worst = std::max(worst, std::fabs(a.values[J][c] - b.values[J][c]));
  return worst;
}

double l1_distance(const std::vector<double>& a, const std::vector<double>& b,
                   double dw) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s * dw;
}

// Beta point samples renormalized to unit mass under midpoint quadrature;
// the shape the discrete steady state converges to.
std::vector<double> normalized_samples(const BetaSpec& s, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    v[static_cast<std::size_t>(i)] = beta_pdf(s, (i + 0.5) / static_cast<double>(n));
    mass += v[static_cast<std::size_t>(i)] / n;
  }
  for (auto& x : v) x /= mass;
  return v;
}

KineticParams single_population_params(double lambda_pos, double mu_pos,
                                       double lambda_neg, double mu_neg) {
  return KineticParams::uniform_rates(
      lambda_pos, lambda_neg,
      lambda_pos > 0.0 ? std::sqrt(2.0 * lambda_pos * mu_pos) : 0.0,
      lambda_neg > 0.0 ? std::sqrt(2.0 * lambda_neg * mu_neg) : 0.0);
}

} // namespace

TEST_CASE("sweep_axis preserves the exact Beta steady state") {
  const double m = 4.0 / 25.0, mu = 0.2, lambda = 1.0;
  const OpinionGrid g(50, 8);
  const BetaSpec eq = beta_from_mean_spread(m, mu);
  const DensityField f0 =
      DensityField::product_beta(g, eq, BetaSpec(1.0, 1.0), Compartment::S);
  const KineticParams p = single_population_params(lambda, mu, 0.0, 0.2);

  DensityField f = f0;
  for (int s = 0; s < 50; ++s)
    f = sweep_axis(f, Axis::Pos, {m, 0.5}, p, g.dw_pos());
  CHECK(max_abs_diff(f, f0) < 1e-12);
  CHECK(f.total_mass() == Catch::Approx(f0.total_mass()).margin(1e-13));
}

TEST_CASE("sweep_axis frozen dynamics is the identity") {
  const OpinionGrid g(16, 16);
  const DensityField f0 = DensityField::uniform(g);
  const KineticParams p;  // all rates zero
  const DensityField f = sweep_axis(f0, Axis::Pos, {0.5, 0.5}, p, g.dw_pos());
  CHECK(max_abs_diff(f, f0) == 0.0);
}

TEST_CASE("sweep_axis conserves mass per slice") {
  const OpinionGrid g(24, 6);
  DensityField f0 = DensityField::uniform(g);
  // make slices distinguishable
  for (int i = 0; i < g.n_pos; ++i)
    for (int j = 0; j < g.n_neg; ++j) f0.at(Compartment::S, i, j) = 1.0 + 0.3 * j;
  const KineticParams p = single_population_params(1.0, 0.2, 1.0, 0.2);

  const DensityField f = sweep_axis(f0, Axis::Pos, {0.3, 0.5}, p, g.dw_pos());
  for (int j = 0; j < g.n_neg; ++j) {
    double before = 0.0, after = 0.0;
    for (int i = 0; i < g.n_pos; ++i) {
      before += f0.at(Compartment::S, i, j) * g.dw_pos();
      after += f.at(Compartment::S, i, j) * g.dw_pos();
    }
    REQUIRE(std::fabs(after - before) < 1e-14);
  }
}

TEST_CASE("sweep_axis keeps densities nonnegative from rough data") {
  const OpinionGrid g(30, 4);
  DensityField f0(g);
  f0.at(Compartment::S, 0, 0) = 30.0 * 4.0;  // single-cell spike
  const KineticParams p = single_population_params(2.0, 0.1, 2.0, 0.1);
  DensityField f = f0;
  for (int s = 0; s < 40; ++s) f = sweep_axis(f, Axis::Pos, {0.7, 0.5}, p, g.dw_pos());
  CHECK(f.min_value() >= 0.0);
  CHECK(f.total_mass() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("reaction_step no-epidemic identities") {
  const OpinionGrid g(12, 12);
  KineticParams p = single_population_params(1.0, 0.2, 1.0, 0.2);
  p.with_epidemic(0.7, 0.5, 0.3);

  // f_I = f_E = 0: nothing moves
  const DensityField f0 = DensityField::uniform(g);
  const DensityField f = reaction_step(f0, p, 0.05);
  CHECK(max_abs_diff(f, f0) == 0.0);

  // zero contact factor: kappa = beta * k(w+) with k = 0
  DensityField fi(g);
  DensityField::add_product_beta(fi, BetaSpec(2, 4), BetaSpec(2, 4), Compartment::S, 0.9);
  DensityField::add_product_beta(fi, BetaSpec(2, 4), BetaSpec(2, 4), Compartment::I, 0.1);
  KineticParams pz = p;
  pz.zeta = 0.0;
  pz.gamma = 0.0;
  pz.kernel = ContactKernel::separable(std::vector<double>(12, 0.0),
                                       std::vector<double>(12, 1.0));
  const DensityField fz = reaction_step(fi, pz, 0.05);
  CHECK(max_abs_diff(fz, fi) == 0.0);
}

TEST_CASE("reaction_step with constant kappa advances masses like the ODE") {
  const OpinionGrid g(20, 20);
  DensityField f(g);
  DensityField::add_product_beta(f, BetaSpec(2, 4), BetaSpec(1.5, 3), Compartment::S, 0.9);
  DensityField::add_product_beta(f, BetaSpec(1, 1), BetaSpec(2, 2), Compartment::E, 0.04);
  DensityField::add_product_beta(f, BetaSpec(3, 3), BetaSpec(2, 5), Compartment::I, 0.06);
  KineticParams p;
  p.with_epidemic(0.8, 0.6, 0.4);

  const double dt = 0.05;
  const DensityField out = reaction_step(f, p, dt);

  // one RK4 step of the mass ODE with the same tableau
  const SeirState s0{f.mass(Compartment::S), f.mass(Compartment::E),
                     f.mass(Compartment::I), f.mass(Compartment::R)};
  const auto traj = integrate_seir(s0, p, dt, dt);
  const SeirState expect = traj.terminal();
  CHECK(out.mass(Compartment::S) == Catch::Approx(expect.rho_S).margin(1e-12));
  CHECK(out.mass(Compartment::E) == Catch::Approx(expect.rho_E).margin(1e-12));
  CHECK(out.mass(Compartment::I) == Catch::Approx(expect.rho_I).margin(1e-12));
  CHECK(out.mass(Compartment::R) == Catch::Approx(expect.rho_R).margin(1e-12));

  // pointwise total density conserved
  for (int i = 0; i < g.n_pos; ++i)
    for (int j = 0; j < g.n_neg; ++j) {
      double before = 0.0, after = 0.0;
      for (Compartment c : kCompartments) {
        before += f.at(c, i, j);
        after += out.at(c, i, j);
      }
      REQUIRE(std::fabs(after - before) < 1e-14);
    }
}

TEST_CASE("reaction_step halves the step to dodge negativity") {
  const OpinionGrid g(4, 4);
  DensityField f(g);
  DensityField::add_product_beta(f, BetaSpec(1, 1), BetaSpec(1, 1), Compartment::E, 0.5);
  DensityField::add_product_beta(f, BetaSpec(1, 1), BetaSpec(1, 1), Compartment::I, 0.5);
  KineticParams p;
  p.with_epidemic(0.1, 30.0, 0.1);  // stiff activation empties E within the step
  const DensityField out = reaction_step(f, p, 0.2);
  CHECK(out.min_value() >= 0.0);
  CHECK(out.total_mass() == Catch::Approx(1.0).margin(1e-10));

  KineticParams brutal;
  brutal.with_epidemic(0.1, 4000.0, 0.1);
  CHECK_THROWS_AS(reaction_step(f, brutal, 1.0), std::runtime_error);
}

TEST_CASE("split_step identity when all rates vanish") {
  const OpinionGrid g(10, 10);
  const DensityField f0 = DensityField::uniform(g);
  KineticParams p;
  SplitStepPlan plan;
  plan.dt = 0.05;
  const DensityField f = split_step(f0, p, plan);
  CHECK(max_abs_diff(f, f0) == 0.0);
  CHECK(f.time == Catch::Approx(0.05));

  SplitStepPlan bad = plan;
  bad.dt = 0.5;  // violates dt <= dw on a 10-cell grid
  CHECK_THROWS_AS(split_step(f0, p, bad), std::domain_error);
}

TEST_CASE("single population relaxes to the product Beta equilibrium") {
  // free means from uniform data: the mean stays at 1/2 by symmetry and the
  // steady state is the product Beta(m=1/2, mu_axis)
  const OpinionGrid g(50, 50);
  const double mu_pos = 1.0 / 6.0, mu_neg = 0.1;
  const KineticParams p = single_population_params(1.0, mu_pos, 1.0, mu_neg);
  SplitStepPlan plan;
  plan.dt = g.dw_pos();

  const SteadyResult res =
      solve_to_steady(DensityField::uniform(g), p, plan, 1e-7, 20000);
  CHECK(res.converged);

  const FieldMoments mom = field_marginals(res.field);
  const auto gpos = normalized_samples(beta_from_mean_spread(0.5, mu_pos), g.n_pos);
  const auto gneg = normalized_samples(beta_from_mean_spread(0.5, mu_neg), g.n_neg);
  CHECK(l1_distance(mom.total_marg_pos(), gpos, g.dw_pos()) < 1e-3);
  CHECK(l1_distance(mom.total_marg_neg(), gneg, g.dw_neg()) < 1e-3);
  CHECK(mom.mbar_pos == Catch::Approx(0.5).margin(1e-9));
}

TEST_CASE("solve_to_steady converges immediately from the steady state") {
  const OpinionGrid g(40, 40);
  const double m_pos = 1.0 / 3.0, mu_pos = 1.0 / 6.0;
  const double m_neg = 4.0 / 25.0, mu_neg = 0.2;
  const KineticParams p = single_population_params(1.0, mu_pos, 1.0, mu_neg);
  const DensityField f0 = DensityField::product_beta(
      g, beta_from_mean_spread(m_pos, mu_pos), beta_from_mean_spread(m_neg, mu_neg),
      Compartment::S);
  SplitStepPlan plan;
  plan.dt = g.dw_pos();
  plan.fixed_means = {{m_pos, m_neg}};
  const SteadyResult res = solve_to_steady(f0, p, plan, 1e-9, 100);
  CHECK(res.converged);
  CHECK(res.steps == 1);
  CHECK(max_abs_diff(res.field, f0) < 1e-11);
}

TEST_CASE("fixed-mean steady state matches the analytic Beta marginals") {
  // relaxation onto pinned-mean equilibria from flat initial data
  const OpinionGrid g(50, 50);
  const double m_pos = 1.0 / 3.0, mu_pos = 1.0 / 6.0;
  const double m_neg = 4.0 / 25.0, mu_neg = 0.2;
  const KineticParams p = single_population_params(1.0, mu_pos, 1.0, mu_neg);
  SplitStepPlan plan;
  plan.dt = g.dw_pos();
  plan.fixed_means = {{m_pos, m_neg}};

  const SteadyResult res =
      solve_to_steady(DensityField::uniform(g), p, plan, 1e-8, 40000);
  CHECK(res.converged);
  const FieldMoments mom = field_marginals(res.field);
  const auto gpos = normalized_samples(beta_from_mean_spread(m_pos, mu_pos), g.n_pos);
  const auto gneg = normalized_samples(beta_from_mean_spread(m_neg, mu_neg), g.n_neg);
  CHECK(l1_distance(mom.total_marg_pos(), gpos, g.dw_pos()) < 1e-3);
  CHECK(l1_distance(mom.total_marg_neg(), gneg, g.dw_neg()) < 1e-3);
}

TEST_CASE("field_marginals on reference fields") {
  const OpinionGrid g(20, 25);

  // uniform: marginals identically 1, means 1/2
  const FieldMoments uni = field_marginals(DensityField::uniform(g));
  for (double v : uni.total_marg_pos()) CHECK(v == Catch::Approx(1.0).margin(1e-12));
  for (double v : uni.total_marg_neg()) CHECK(v == Catch::Approx(1.0).margin(1e-12));
  CHECK(uni.mbar_pos == Catch::Approx(0.5).margin(1e-12));
  CHECK(uni.mbar_neg == Catch::Approx(0.5).margin(1e-12));

  // product field: marginals separate exactly
  const BetaSpec bp(2.0, 4.0), bn(0.8, 4.2);
  const FieldMoments prod =
      field_marginals(DensityField::product_beta(g, bp, bn, Compartment::S));
  const auto gp = normalized_samples(bp, g.n_pos);
  const auto gn = normalized_samples(bn, g.n_neg);
  const auto tp = prod.total_marg_pos();
  const auto tn = prod.total_marg_neg();
  for (int i = 0; i < g.n_pos; ++i)
    REQUIRE(tp[static_cast<std::size_t>(i)] ==
            Catch::Approx(gp[static_cast<std::size_t>(i)]).margin(1e-12));
  for (int j = 0; j < g.n_neg; ++j)
    REQUIRE(tn[static_cast<std::size_t>(j)] ==
            Catch::Approx(gn[static_cast<std::size_t>(j)]).margin(1e-12));

  // single occupied cell: means are that cell's center
  DensityField one(g);
  one.at(Compartment::I, 10, 6) = 1.0 / g.cell_area();
  const FieldMoments single = field_marginals(one);
  CHECK(single.mbar_pos == Catch::Approx(g.center_pos(10)).margin(1e-12));
  CHECK(single.mbar_neg == Catch::Approx(g.center_neg(6)).margin(1e-12));
  CHECK(single.rho[index_of(Compartment::I)] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("coupled split run conserves total mass and positivity") {
  const OpinionGrid g(20, 20);
  DensityField f(g);
  DensityField::add_product_beta(f, BetaSpec(2, 4), BetaSpec(1.2, 5), Compartment::S, 0.98);
  DensityField::add_product_beta(f, BetaSpec(2, 4), BetaSpec(1.2, 5), Compartment::I, 0.02);
  KineticParams p = single_population_params(1.0, 0.2, 1.0, 0.25);
  p.with_epidemic(0.6, 0.5, 0.25);
  SplitStepPlan plan;
  plan.dt = 0.5 * g.dw_pos();

  DensityField cur = f;
  for (int s = 0; s < 400; ++s) {
    cur = split_step(cur, p, plan);
    REQUIRE(cur.min_value() >= 0.0);
  }
  CHECK(cur.total_mass() == Catch::Approx(1.0).margin(1e-10));
  // epidemic progressed: R gained mass, S lost it
  CHECK(cur.mass(Compartment::R) > 0.01);
  CHECK(cur.mass(Compartment::S) < 0.98);
}

TEST_CASE("reaction runs without contact when activation or removal act") {
  // beta = 0 must not freeze the zeta/gamma flows of occupied E and I layers
  const OpinionGrid g(8, 8);
  DensityField f(g);
  DensityField::add_product_beta(f, BetaSpec(2, 2), BetaSpec(2, 2), Compartment::E, 0.6);
  DensityField::add_product_beta(f, BetaSpec(2, 2), BetaSpec(2, 2), Compartment::I, 0.4);
  KineticParams p;
  p.with_epidemic(0.0, 1.0, 0.5);
  SplitStepPlan plan;
  plan.dt = 0.1;
  DensityField cur = f;
  for (int s = 0; s < 100; ++s) cur = split_step(cur, p, plan);
  CHECK(cur.mass(Compartment::E) < 1e-4);
  CHECK(cur.mass(Compartment::R) > 0.9);
  CHECK(cur.total_mass() == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("tabulated activation and removal rates") {
  const OpinionGrid g(10, 10);
  DensityField f(g);
  DensityField::add_product_beta(f, BetaSpec(2, 2), BetaSpec(2, 2), Compartment::S, 0.5);
  DensityField::add_product_beta(f, BetaSpec(1, 1), BetaSpec(1, 1), Compartment::E, 0.3);
  DensityField::add_product_beta(f, BetaSpec(2, 3), BetaSpec(3, 2), Compartment::I, 0.2);

  // constant tables reproduce the scalar path bit for bit
  KineticParams p;
  p.with_epidemic(0.6, 0.8, 0.4);
  KineticParams pt = p;
  pt.zeta_table.assign(static_cast<std::size_t>(g.cell_count()), 0.8);
  pt.gamma_table.assign(static_cast<std::size_t>(g.cell_count()), 0.4);
  const DensityField a = reaction_step(f, p, 0.05);
  const DensityField b = reaction_step(f, pt, 0.05);
  for (std::size_t J = 0; J < 4; ++J)
    for (std::size_t c = 0; c < a.values[J].size(); ++c)
      REQUIRE(a.values[J][c] == b.values[J][c]);

  // opinion-dependent activation: E empties faster where zeta is larger,
  // and the pointwise total is still conserved
  KineticParams pv = p;
  pv.zeta_table.resize(static_cast<std::size_t>(g.cell_count()));
  for (int i = 0; i < g.n_pos; ++i)
    for (int j = 0; j < g.n_neg; ++j)
      pv.zeta_table[static_cast<std::size_t>(g.flat(i, j))] = 2.0 * g.center_pos(i);
  const DensityField v = reaction_step(f, pv, 0.05);
  const double drained_left = f.at(Compartment::E, 1, 5) - v.at(Compartment::E, 1, 5);
  const double drained_right = f.at(Compartment::E, 8, 5) - v.at(Compartment::E, 8, 5);
  CHECK(drained_right > drained_left);
  for (int i = 0; i < g.n_pos; ++i)
    for (int j = 0; j < g.n_neg; ++j) {
      double before = 0.0, after = 0.0;
      for (Compartment c : kCompartments) {
        before += f.at(c, i, j);
        after += v.at(c, i, j);
      }
      REQUIRE(std::fabs(after - before) < 1e-14);
    }

  // tabulation mismatch is an error
  KineticParams bad = p;
  bad.zeta_table.assign(4, 1.0);
  CHECK_THROWS_AS(reaction_step(f, bad, 0.05), std::domain_error);
}

TEST_CASE("total mass is conserved to 1e-10 over ten thousand steps") {
  const OpinionGrid g(10, 10);
  DensityField f(g);
  DensityField::add_product_beta(f, BetaSpec(2, 3), BetaSpec(1.5, 4), Compartment::S, 0.95);
  DensityField::add_product_beta(f, BetaSpec(3, 3), BetaSpec(2, 2), Compartment::I, 0.05);
  KineticParams p = single_population_params(1.0, 0.2, 0.8, 0.3);
  p.with_epidemic(0.5, 0.4, 0.2);
  SplitStepPlan plan;
  plan.dt = g.dw_pos();
  for (int s = 0; s < 10000; ++s) f = split_step(f, p, plan);
  CHECK(std::fabs(f.total_mass() - 1.0) < 1e-10);
  CHECK(f.min_value() >= 0.0);
}

TEST_CASE("lie and strang splitting orders on smooth data") {
  const OpinionGrid g(20, 20);
  DensityField f0(g);
  DensityField::add_product_beta(f0, beta_from_mean_spread(0.3, 0.25),
                                 beta_from_mean_spread(0.4, 0.3), Compartment::S, 0.9);
  DensityField::add_product_beta(f0, beta_from_mean_spread(0.3, 0.15),
                                 beta_from_mean_spread(0.4, 0.2), Compartment::I, 0.1);
  KineticParams p;
  p.lambda_pos = {1.0, 0.8, 1.2, 0.6};
  p.lambda_neg = {0.9, 1.1, 0.7, 1.0};
  for (int j = 0; j < 4; ++j) {
    p.sigma_pos[j] = std::sqrt(2.0 * p.lambda_pos[j] * 0.22);
    p.sigma_neg[j] = std::sqrt(2.0 * p.lambda_neg[j] * 0.27);
  }
  p.with_epidemic(0.8, 1.0, 0.5);

  const double T = 0.5;
  const auto run = [&](SplitOrder order, double dt) {
    SplitStepPlan plan;
    plan.dt = dt;
    plan.order = order;
    plan.fixed_means = {{0.3, 0.4}};
    DensityField f = f0;
    const long n = std::lround(T / dt);
    for (long s = 0; s < n; ++s) f = split_step(f, p, plan);
    return f;
  };

  const double area = g.cell_area();
  const auto l1_field = [&](const DensityField& a, const DensityField& b) {
    double s = 0.0;
    for (std::size_t J = 0; J < 4; ++J)
      for (std::size_t c = 0; c < a.values[J].size(); ++c)
        s += std::fabs(a.values[J][c] - b.values[J][c]);
    return s * area;
  };

  for (SplitOrder order : {SplitOrder::Lie, SplitOrder::Strang}) {
    const double dt0 = 0.05;
    const DensityField ref = run(order, dt0 / 8.0);
    const double e1 = l1_field(run(order, dt0), ref);
    const double e2 = l1_field(run(order, dt0 / 2.0), ref);
    const double measured = std::log2(e1 / e2);
    if (order == SplitOrder::Lie) {
      CHECK(measured >= 0.9);
      CHECK(measured < 1.7);
    } else {
      CHECK(measured >= 1.8);
    }
  }

  // Strang error at fixed dt is below the Lie error
  const DensityField ref = run(SplitOrder::Strang, 0.05 / 16.0);
  const double e_lie = l1_field(run(SplitOrder::Lie, 0.05), ref);
  const double e_strang = l1_field(run(SplitOrder::Strang, 0.05), ref);
  CHECK(e_strang < e_lie);
}

TEST_CASE("incidence integral with separable kernels") {
  const OpinionGrid g(10, 10);
  DensityField f(g);
  DensityField::add_product_beta(f, BetaSpec(2, 2), BetaSpec(2, 2), Compartment::I, 0.5);
  KineticParams p;
  p.with_epidemic(2.0, 1.0, 1.0);

  // constant kernel: I_kappa = beta * rho_I
  CHECK(incidence_integral(f, p) == Catch::Approx(2.0 * 0.5).margin(1e-12));

  // separable kernel: midpoint sum oracle
  std::vector<double> kp(10), kn(10);
  for (int i = 0; i < 10; ++i) {
    kp[static_cast<std::size_t>(i)] = g.center_pos(i);
    kn[static_cast<std::size_t>(i)] = 1.0 - 0.5 * g.center_neg(i);
  }
  p.kernel = ContactKernel::separable(kp, kn);
  double oracle = 0.0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      oracle += kp[static_cast<std::size_t>(i)] * kn[static_cast<std::size_t>(j)] *
                f.at(Compartment::I, i, j) * g.cell_area();
  CHECK(incidence_integral(f, p) == Catch::Approx(2.0 * oracle).margin(1e-12));

  // tabulation mismatch is an error
  p.kernel = ContactKernel::separable(std::vector<double>(4, 1.0), kn);
  CHECK_THROWS_AS(incidence_integral(f, p), std::domain_error);
}
