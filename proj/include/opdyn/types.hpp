/*
 * types.hpp — shared domain types: opinions, compartments, kinetic and
 * epidemiological parameters, contact kernels.
 *
 * All types are immutable value objects after construction and safe to
 * share between threads.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace opdyn {

enum class Axis { Pos, Neg };

enum class Compartment : int { S = 0, E = 1, I = 2, R = 3 };

inline constexpr std::array<Compartment, 4> kCompartments = {
    Compartment::S, Compartment::E, Compartment::I, Compartment::R};

inline constexpr std::size_t index_of(Compartment c) {
  return static_cast<std::size_t>(c);
}

inline char label_of(Compartment c) {
  constexpr char labels[4] = {'S', 'E', 'I', 'R'};
  return labels[index_of(c)];
}

inline Compartment compartment_from_label(char c) {
  switch (c) {
    case 'S': return Compartment::S;
    case 'E': return Compartment::E;
    case 'I': return Compartment::I;
    case 'R': return Compartment::R;
  }
  throw std::domain_error(std::string("unknown compartment label: ") + c);
}

// A point (w+, w-) in the unit square; the per-agent state.
struct OpinionPair {
  double w_pos = 0.0;
  double w_neg = 0.0;

  OpinionPair() = default;
  OpinionPair(double wp, double wn) : w_pos(wp), w_neg(wn) {
    if (!inside(wp) || !inside(wn))
      throw std::domain_error("OpinionPair: coordinates must lie in [0,1]");
  }

  static bool inside(double w) { return w >= 0.0 && w <= 1.0; }
};

// Contact function kappa(w) = beta * k(w+) * kbar(w-). The Constant variant
// has both factors identically 1; SeparableProduct carries the factors
// tabulated at grid cell centers.
struct ContactKernel {
  enum class Kind { Constant, SeparableProduct };

  Kind kind = Kind::Constant;
  std::vector<double> k_pos;
  std::vector<double> k_neg;

  static ContactKernel constant() { return ContactKernel{}; }

  static ContactKernel separable(std::vector<double> kp, std::vector<double> kn) {
    for (double v : kp)
      if (!(v >= 0.0)) throw std::domain_error("ContactKernel: k factors must be nonnegative");
    for (double v : kn)
      if (!(v >= 0.0)) throw std::domain_error("ContactKernel: k factors must be nonnegative");
    ContactKernel k;
    k.kind = Kind::SeparableProduct;
    k.k_pos = std::move(kp);
    k.k_neg = std::move(kn);
    return k;
  }

  double factor_pos(int i) const {
    return kind == Kind::Constant ? 1.0 : k_pos.at(static_cast<std::size_t>(i));
  }
  double factor_neg(int j) const {
    return kind == Kind::Constant ? 1.0 : k_neg.at(static_cast<std::size_t>(j));
  }
};

// Per-compartment alignment rates and noise strengths, plus the
// epidemiological rates of the fake-news SEIR dynamics.
//
// lambda: rate towards compromise (per unit time)
// sigma:  noise strength (per sqrt unit time)
// beta:   contact rate, zeta: inverse latency, gamma: inverse spreading time
// alpha:  removal probability, eta: silent-recovery probability
// confidence: bounded-confidence radii Delta± (1 = everyone interacts)
struct KineticParams {
  std::array<double, 4> lambda_pos{};
  std::array<double, 4> lambda_neg{};
  std::array<double, 4> sigma_pos{};
  std::array<double, 4> sigma_neg{};

  double beta = 0.0;
  double zeta = 0.0;
  double gamma = 0.0;
  double alpha = 1.0;
  double eta = 0.0;

  double confidence_pos = 1.0;
  double confidence_neg = 1.0;

  ContactKernel kernel = ContactKernel::constant();

  // Optional opinion-dependent activation/removal rates, tabulated at grid
  // cell centers (empty tables fall back to the constant zeta/gamma).
  std::vector<double> zeta_table;
  std::vector<double> gamma_table;

  double zeta_at(std::size_t cell) const {
    return zeta_table.empty() ? zeta : zeta_table[cell];
  }
  double gamma_at(std::size_t cell) const {
    return gamma_table.empty() ? gamma : gamma_table[cell];
  }
  bool reaction_active() const {
    return beta > 0.0 || zeta > 0.0 || gamma > 0.0 || !zeta_table.empty() ||
           !gamma_table.empty();
  }

  double lambda(Axis a, Compartment c) const {
    return a == Axis::Pos ? lambda_pos[index_of(c)] : lambda_neg[index_of(c)];
  }
  double sigma(Axis a, Compartment c) const {
    return a == Axis::Pos ? sigma_pos[index_of(c)] : sigma_neg[index_of(c)];
  }

  double max_lambda() const {
    double m = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      m = std::max({m, lambda_pos[j], lambda_neg[j]});
    }
    return m;
  }

  // All compartments share the same opinion-dynamics rates.
  static KineticParams uniform_rates(double lp, double ln, double sp, double sn) {
    KineticParams p;
    p.lambda_pos.fill(lp);
    p.lambda_neg.fill(ln);
    p.sigma_pos.fill(sp);
    p.sigma_neg.fill(sn);
    return p;
  }

  KineticParams& with_epidemic(double b, double z, double g,
                               double a = 1.0, double e = 0.0) {
    beta = b;
    zeta = z;
    gamma = g;
    alpha = a;
    eta = e;
    return *this;
  }

  // Opinion rates may be zero (frozen dynamics) in experiments; signs and
  // probability boxes are always enforced.
  void validate() const {
    auto nonneg = [](const std::array<double, 4>& a) {
      for (double v : a)
        if (!(v >= 0.0)) return false;
      return true;
    };
    if (!nonneg(lambda_pos) || !nonneg(lambda_neg) || !nonneg(sigma_pos) ||
        !nonneg(sigma_neg))
      throw std::domain_error("KineticParams: rates must be nonnegative");
    if (!(beta >= 0.0 && zeta >= 0.0 && gamma >= 0.0))
      throw std::domain_error("KineticParams: epidemiological rates must be nonnegative");
    for (const auto* table : {&zeta_table, &gamma_table})
      for (double v : *table)
        if (!(v >= 0.0))
          throw std::domain_error("KineticParams: tabulated rates must be nonnegative");
    if (!(alpha >= 0.0 && alpha <= 1.0) || !(eta >= 0.0 && eta <= 1.0))
      throw std::domain_error("KineticParams: alpha, eta must lie in [0,1]");
    if (!(confidence_pos >= 0.0 && confidence_pos <= 1.0) ||
        !(confidence_neg >= 0.0 && confidence_neg <= 1.0))
      throw std::domain_error("KineticParams: confidence radii must lie in [0,1]");
  }

  // Stricter check for epidemic runs: the SEIR rates must be active.
  void validate_epidemic() const {
    validate();
    if (!(beta > 0.0 && zeta > 0.0 && gamma > 0.0))
      throw std::domain_error("KineticParams: beta, zeta, gamma must be positive");
  }
};

} // namespace opdyn
