/*
 * density_field.hpp — per-compartment opinion densities on a cell-centered
 * grid, with marginal/moment extraction and file export.
 *
 * Values are probability density per unit area; the total integral over
 * all compartments and cells is 1. Quadrature is always the midpoint rule
 * on cell centers, matching the discretization of the solver.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "opdyn/beta.hpp"
#include "opdyn/grid.hpp"
#include "opdyn/types.hpp"

namespace opdyn {

struct DensityField {
  OpinionGrid grid;
  std::array<std::vector<double>, 4> values;  // [compartment][i*n_neg + j]
  double time = 0.0;

  explicit DensityField(const OpinionGrid& g) : grid(g) {
    for (auto& v : values) v.assign(static_cast<std::size_t>(g.cell_count()), 0.0);
  }

  double at(Compartment c, int i, int j) const {
    return values[index_of(c)][static_cast<std::size_t>(grid.flat(i, j))];
  }
  double& at(Compartment c, int i, int j) {
    return values[index_of(c)][static_cast<std::size_t>(grid.flat(i, j))];
  }

  double mass(Compartment c) const {
    double s = 0.0;
    for (double v : values[index_of(c)]) s += v;
    return s * grid.cell_area();
  }

  double total_mass() const {
    double s = 0.0;
    for (Compartment c : kCompartments) s += mass(c);
    return s;
  }

  double min_value() const {
    double m = 0.0;
    for (const auto& layer : values)
      for (double v : layer) m = std::min(m, v);
    return m;
  }

  // Uniform density over the square, all mass in one compartment.
  static DensityField uniform(const OpinionGrid& g,
                              Compartment c = Compartment::S,
                              double mass = 1.0) {
    DensityField f(g);
    for (auto& v : f.values[index_of(c)]) v = mass;
    return f;
  }

  // Product Beta x Beta sampled at cell centers, normalized to the given
  // mass under midpoint quadrature.
  static DensityField product_beta(const OpinionGrid& g, const BetaSpec& pos,
                                   const BetaSpec& neg,
                                   Compartment c = Compartment::S,
                                   double mass = 1.0) {
    DensityField f(g);
    add_product_beta(f, pos, neg, c, mass);
    return f;
  }

  // Add a normalized product-Beta bump of the given mass to one compartment.
  static void add_product_beta(DensityField& f, const BetaSpec& pos,
                               const BetaSpec& neg, Compartment c, double mass) {
    const auto& g = f.grid;
    std::vector<double> gp(static_cast<std::size_t>(g.n_pos));
    std::vector<double> gn(static_cast<std::size_t>(g.n_neg));
    double sp = 0.0, sn = 0.0;
    for (int i = 0; i < g.n_pos; ++i) {
      gp[i] = beta_pdf(pos, g.center_pos(i));
      sp += gp[i] * g.dw_pos();
    }
    for (int j = 0; j < g.n_neg; ++j) {
      gn[j] = beta_pdf(neg, g.center_neg(j));
      sn += gn[j] * g.dw_neg();
    }
    for (int i = 0; i < g.n_pos; ++i)
      for (int j = 0; j < g.n_neg; ++j)
        f.at(c, i, j) += mass * (gp[i] / sp) * (gn[j] / sn);
  }
};

// Marginals, compartment masses and first moments of a field.
// marg_pos[J][i] integrates over the negative axis (carries mass rho_J);
// mean_* are per-compartment means, zero for empty compartments.
struct FieldMoments {
  std::array<std::vector<double>, 4> marg_pos;
  std::array<std::vector<double>, 4> marg_neg;
  std::array<double, 4> rho{};
  std::array<double, 4> mean_pos{};
  std::array<double, 4> mean_neg{};
  double mbar_pos = 0.0;  // sum_J rho_J m+_J
  double mbar_neg = 0.0;

  std::vector<double> total_marg_pos() const { return total(marg_pos); }
  std::vector<double> total_marg_neg() const { return total(marg_neg); }

private:
  static std::vector<double> total(const std::array<std::vector<double>, 4>& m) {
    std::vector<double> out(m[0].size(), 0.0);
    for (const auto& layer : m)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += layer[i];
    return out;
  }
};

inline FieldMoments field_marginals(const DensityField& f) {
  const auto& g = f.grid;
  FieldMoments out;
  for (std::size_t J = 0; J < 4; ++J) {
    out.marg_pos[J].assign(static_cast<std::size_t>(g.n_pos), 0.0);
    out.marg_neg[J].assign(static_cast<std::size_t>(g.n_neg), 0.0);
    double m = 0.0, sp = 0.0, sn = 0.0;
    for (int i = 0; i < g.n_pos; ++i) {
      for (int j = 0; j < g.n_neg; ++j) {
        const double v = f.values[J][static_cast<std::size_t>(g.flat(i, j))];
        out.marg_pos[J][i] += v * g.dw_neg();
        out.marg_neg[J][j] += v * g.dw_pos();
        m += v;
        sp += v * g.center_pos(i);
        sn += v * g.center_neg(j);
      }
    }
    out.rho[J] = m * g.cell_area();
    if (out.rho[J] > 0.0) {
      out.mean_pos[J] = sp / m;
      out.mean_neg[J] = sn / m;
    }
    out.mbar_pos += out.rho[J] * out.mean_pos[J];
    out.mbar_neg += out.rho[J] * out.mean_neg[J];
  }
  return out;
}

inline void write_field_csv(const DensityField& f, std::ostream& os) {
  os << "compartment,i,j,w_pos_center,w_neg_center,density\n";
  for (Compartment c : kCompartments) {
    for (int i = 0; i < f.grid.n_pos; ++i) {
      for (int j = 0; j < f.grid.n_neg; ++j) {
        os << label_of(c) << ',' << i << ',' << j << ','
           << f.grid.center_pos(i) << ',' << f.grid.center_neg(j) << ','
           << f.at(c, i, j) << '\n';
      }
    }
  }
}

inline nlohmann::json field_header_json(const DensityField& f) {
  const FieldMoments mom = field_marginals(f);
  return nlohmann::json{
      {"grid", {{"n_pos", f.grid.n_pos}, {"n_neg", f.grid.n_neg}}},
      {"time", f.time},
      {"masses",
       {{"S", mom.rho[0]}, {"E", mom.rho[1]}, {"I", mom.rho[2]}, {"R", mom.rho[3]}}},
      {"means", {{"m_pos", mom.mbar_pos}, {"m_neg", mom.mbar_neg}}}};
}

inline void write_marginals_csv(const DensityField& f, Axis axis, std::ostream& os) {
  const FieldMoments mom = field_marginals(f);
  const auto& marg = axis == Axis::Pos ? mom.marg_pos : mom.marg_neg;
  const int n = axis == Axis::Pos ? f.grid.n_pos : f.grid.n_neg;
  os << "center,S,E,I,R,total\n";
  for (int i = 0; i < n; ++i) {
    const double c = axis == Axis::Pos ? f.grid.center_pos(i) : f.grid.center_neg(i);
    double tot = 0.0;
    os << c;
    for (std::size_t J = 0; J < 4; ++J) {
      os << ',' << marg[J][i];
      tot += marg[J][i];
    }
    os << ',' << tot << '\n';
  }
}

} // namespace opdyn
