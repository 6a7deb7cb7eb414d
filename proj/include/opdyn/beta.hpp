/*
 * beta.hpp — closed-form Beta and Beta-mixture equilibrium analytics.
 *
 * The stationary marginal of the opinion Fokker-Planck equation with
 * diffusion D(w)² = w(1-w) is Beta(a, b) with
 *
 *   a = m/mu,  b = (1-m)/mu,  mu = sigma²/(2 lambda),
 *
 * where m is the (conserved) mean opinion. mu acts as a spread parameter:
 * Var = m(1-m) mu/(1+mu). The four-compartment system relaxes to a convex
 * mixture of two Betas sharing the mean, which is what gets fitted to data.
 *
 * Normalization constants are always evaluated through log-Gamma.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "opdyn/grid.hpp"

namespace opdyn {

struct BetaSpec {
  double a = 1.0;
  double b = 1.0;

  BetaSpec() = default;
  BetaSpec(double a_, double b_) : a(a_), b(b_) {
    if (!(a > 0.0) || !(b > 0.0))
      throw std::domain_error("BetaSpec: shape parameters must be positive");
  }

  double mean() const { return a / (a + b); }
  double spread() const { return 1.0 / (a + b); }  // mu such that a = mean/mu
  double variance() const { return a * b / ((a + b) * (a + b) * (a + b + 1.0)); }
  double log_norm() const { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }
};

// a = m/mu, b = (1-m)/mu
inline BetaSpec beta_from_mean_spread(double m, double mu) {
  if (!(m > 0.0 && m < 1.0))
    throw std::domain_error("beta_from_mean_spread: mean must lie in (0,1)");
  if (!(mu > 0.0))
    throw std::domain_error("beta_from_mean_spread: spread must be positive");
  return BetaSpec(m / mu, (1.0 - m) / mu);
}

// The spread for which Beta(m/mu, (1-m)/mu) annihilates the stationary flux
//   lambda (w - m) g + (sigma²/2) d/dw [w(1-w) g].
inline double mu_from_rates(double lambda, double sigma) {
  if (!(lambda > 0.0) || !(sigma > 0.0))
    throw std::domain_error("mu_from_rates: rates must be positive");
  return sigma * sigma / (2.0 * lambda);
}

inline double beta_pdf(const BetaSpec& spec, double w) {
  if (!(w >= 0.0 && w <= 1.0))
    throw std::domain_error("beta_pdf: w must lie in [0,1]");
  if (w == 0.0) {
    if (spec.a < 1.0) return std::numeric_limits<double>::infinity();
    if (spec.a > 1.0) return 0.0;
    return std::exp((spec.b - 1.0) * 0.0 - spec.log_norm());  // = b
  }
  if (w == 1.0) {
    if (spec.b < 1.0) return std::numeric_limits<double>::infinity();
    if (spec.b > 1.0) return 0.0;
    return std::exp(-spec.log_norm());  // = a
  }
  return std::exp((spec.a - 1.0) * std::log(w) +
                  (spec.b - 1.0) * std::log1p(-w) - spec.log_norm());
}

namespace detail {

// Continued fraction for the regularized incomplete beta (Lentz's method).
inline double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

} // namespace detail

// Regularized incomplete beta I_x(a, b) = P(W <= x) for W ~ Beta(a, b).
inline double beta_cdf(const BetaSpec& spec, double x) {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("beta_cdf: x must lie in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double a = spec.a, b = spec.b;
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - spec.log_norm());
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * detail::beta_cf(a, b, x) / a;
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

// Two-component convex mixture with a shared mean; the stationary total
// marginal of the coupled system. weight_S is the susceptible mass fraction.
struct MixtureFit {
  double weight_S = 1.0;
  double mean = 0.5;
  double mu_S = 1.0;
  double mu_R = 1.0;
  double residual = 0.0;

  MixtureFit() = default;
  MixtureFit(double w, double m, double ms, double mr, double res = 0.0)
      : weight_S(w), mean(m), mu_S(ms), mu_R(mr), residual(res) {
    if (!(w >= 0.0 && w <= 1.0))
      throw std::domain_error("MixtureFit: weight must lie in [0,1]");
    if (!(m > 0.0 && m < 1.0))
      throw std::domain_error("MixtureFit: mean must lie in (0,1)");
    if (!(ms > 0.0) || !(mr > 0.0))
      throw std::domain_error("MixtureFit: spreads must be positive");
    if (!(res >= 0.0))
      throw std::domain_error("MixtureFit: residual must be nonnegative");
  }

  BetaSpec component_S() const { return beta_from_mean_spread(mean, mu_S); }
  BetaSpec component_R() const { return beta_from_mean_spread(mean, mu_R); }
};

inline double mixture_pdf(const MixtureFit& fit, double w) {
  const double ps = fit.weight_S > 0.0 ? beta_pdf(fit.component_S(), w) : 0.0;
  const double pr = fit.weight_S < 1.0 ? beta_pdf(fit.component_R(), w) : 0.0;
  return fit.weight_S * ps + (1.0 - fit.weight_S) * pr;
}

// Number of local maxima of the mixture density sampled at `resolution`
// equally spaced interior points. Plateaus of equal samples count once;
// a boundary spike shows up as a maximum at the first or last sample.
inline int count_modes(const MixtureFit& fit, int resolution) {
  if (resolution < 64)
    throw std::domain_error("count_modes: resolution must be >= 64");
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(resolution));
  const double h = 1.0 / (resolution + 1);
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int k = 1; k <= resolution; ++k) {
    const double p = mixture_pdf(fit, k * h);
    if (p != prev) v.push_back(p);  // plateau merge
    prev = p;
  }
  int modes = 0;
  const auto n = static_cast<std::ptrdiff_t>(v.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double left = i > 0 ? v[i - 1] : -std::numeric_limits<double>::infinity();
    const double right = i < n - 1 ? v[i + 1] : -std::numeric_limits<double>::infinity();
    if (v[i] > left && v[i] > right) ++modes;
  }
  return modes;
}

// JSON round trips (flat objects, keys as documented)

inline void to_json(nlohmann::json& j, const BetaSpec& s) {
  j = nlohmann::json{{"a", s.a}, {"b", s.b}};
}

inline void from_json(const nlohmann::json& j, BetaSpec& s) {
  s = BetaSpec(j.at("a").get<double>(), j.at("b").get<double>());
}

inline void to_json(nlohmann::json& j, const MixtureFit& f) {
  j = nlohmann::json{{"weight_S", f.weight_S},
                     {"mean", f.mean},
                     {"mu_S", f.mu_S},
                     {"mu_R", f.mu_R},
                     {"residual", f.residual}};
}

inline void from_json(const nlohmann::json& j, MixtureFit& f) {
  f = MixtureFit(j.at("weight_S").get<double>(), j.at("mean").get<double>(),
                 j.at("mu_S").get<double>(), j.at("mu_R").get<double>(),
                 j.value("residual", 0.0));
}

} // namespace opdyn
