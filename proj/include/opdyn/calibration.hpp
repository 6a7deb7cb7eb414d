/*
 * calibration.hpp — least-squares fit of the two-Beta mixture equilibrium
 * to an empirical marginal histogram.
 *
 * The objective is the discrete L2 norm of (mixture density - data) over
 * bin centers. The search space is (weight_S, mean, mu_S, mu_R) inside the
 * box [0,1] x [0.01,0.99] x [0.01,2]^2; relabeling (weight, mu_S) <->
 * (1-weight, mu_R) leaves the objective invariant, so fits are returned in
 * the canonical order mu_S <= mu_R.
 *
 * fit_mixture runs a derivative-free simplex descent from Latin-hypercube
 * starts plus a coarse grid scan; brute_force_fit is the independent
 * exhaustive oracle.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "opdyn/beta.hpp"
#include "opdyn/histogram.hpp"
#include "opdyn/rng.hpp"

namespace opdyn {

struct FitBox {
  std::array<double, 4> lo{0.0, 0.01, 0.01, 0.01};
  std::array<double, 4> hi{1.0, 0.99, 2.0, 2.0};
};

namespace detail {

// Mixture density at w for raw parameters, bypassing MixtureFit validation
// (the optimizer probes the box boundary).
inline double raw_mixture_pdf(const std::array<double, 4>& t, double w) {
  const double weight = t[0];
  double v = 0.0;
  if (weight > 0.0) v += weight * beta_pdf(beta_from_mean_spread(t[1], t[2]), w);
  if (weight < 1.0) v += (1.0 - weight) * beta_pdf(beta_from_mean_spread(t[1], t[3]), w);
  return v;
}

inline bool candidate_valid(const std::array<double, 4>& t) {
  return t[0] >= 0.0 && t[0] <= 1.0 && t[1] > 0.0 && t[1] < 1.0 && t[2] > 0.0 &&
         t[3] > 0.0;
}

} // namespace detail

// sqrt( sum (model - data)^2 * dw ) over bin centers; +inf for candidates
// outside the parameter domain. The candidate density is renormalized to
// unit mass on the evaluation grid, like the histogram it is compared to,
// so a histogram built from a mixture's bin-center values is recovered with
// zero residual even when the mixture is singular at an endpoint.
inline double objective(const std::array<double, 4>& candidate,
                        const MarginalHistogram& hist) {
  if (!detail::candidate_valid(candidate))
    return std::numeric_limits<double>::infinity();
  const std::size_t n = hist.bins();
  std::vector<double> model(n);
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    model[i] = detail::raw_mixture_pdf(candidate, hist.centers[i]);
    mass += model[i];
  }
  mass *= hist.bin_width();
  if (!(mass > 0.0) || !std::isfinite(mass))
    return std::numeric_limits<double>::infinity();
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = model[i] / mass - hist.density[i];
    ss += d * d;
  }
  return std::sqrt(ss * hist.bin_width());
}

inline double objective(const MixtureFit& candidate, const MarginalHistogram& hist) {
  const std::array<double, 4> t = {candidate.weight_S, candidate.mean,
                                   candidate.mu_S, candidate.mu_R};
  return objective(t, hist);
}

namespace detail {

using Point4 = std::array<double, 4>;

inline Point4 clamp_box(Point4 p, const FitBox& box) {
  for (std::size_t k = 0; k < 4; ++k)
    p[k] = std::clamp(p[k], box.lo[k], box.hi[k]);
  return p;
}

// Nelder-Mead with box projection. Returns the best vertex.
inline std::pair<Point4, double> nelder_mead(
    const Point4& start, const MarginalHistogram& hist, const FitBox& box,
    int max_iter = 4000, double fatol = 1e-15, double xatol = 1e-12) {
  constexpr int n = 4;
  std::array<Point4, n + 1> simplex;
  std::array<double, n + 1> fval;
  simplex[0] = clamp_box(start, box);
  fval[0] = objective(simplex[0], hist);
  for (int k = 0; k < n; ++k) {
    Point4 p = simplex[0];
    const double h = (box.hi[k] - box.lo[k]) * 0.05;
    p[k] = p[k] + h <= box.hi[k] ? p[k] + h : p[k] - h;
    simplex[k + 1] = clamp_box(p, box);
    fval[k + 1] = objective(simplex[k + 1], hist);
  }

  std::array<int, n + 1> ord;
  for (int it = 0; it < max_iter; ++it) {
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fval[a] < fval[b]; });
    const int best = ord[0], worst = ord[n], second = ord[n - 1];

    double spread = 0.0;
    for (int k = 0; k < n; ++k)
      spread = std::max(spread, std::fabs(simplex[worst][k] - simplex[best][k]));
    if (std::fabs(fval[worst] - fval[best]) < fatol && spread < xatol) break;

    Point4 centroid{};
    for (int v = 0; v <= n; ++v)
      if (v != worst)
        for (int k = 0; k < n; ++k) centroid[k] += simplex[v][k] / n;

    const auto affine = [&](double t) {
      Point4 p;
      for (int k = 0; k < n; ++k)
        p[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
      return clamp_box(p, box);
    };

    const Point4 refl = affine(-1.0);
    const double f_refl = objective(refl, hist);
    if (f_refl < fval[best]) {
      const Point4 exp_p = affine(-2.0);
      const double f_exp = objective(exp_p, hist);
      if (f_exp < f_refl) {
        simplex[worst] = exp_p;
        fval[worst] = f_exp;
      } else {
        simplex[worst] = refl;
        fval[worst] = f_refl;
      }
      continue;
    }
    if (f_refl < fval[second]) {
      simplex[worst] = refl;
      fval[worst] = f_refl;
      continue;
    }
    const Point4 contr = affine(f_refl < fval[worst] ? -0.5 : 0.5);
    const double f_contr = objective(contr, hist);
    if (f_contr < std::min(f_refl, fval[worst])) {
      simplex[worst] = contr;
      fval[worst] = f_contr;
      continue;
    }
    // shrink toward the best vertex
    for (int v = 0; v <= n; ++v) {
      if (v == best) continue;
      for (int k = 0; k < n; ++k)
        simplex[v][k] = simplex[best][k] + 0.5 * (simplex[v][k] - simplex[best][k]);
      fval[v] = objective(simplex[v], hist);
    }
  }

  int best = 0;
  for (int v = 1; v <= n; ++v)
    if (fval[v] < fval[best]) best = v;
  return {simplex[best], fval[best]};
}

inline MixtureFit canonical_fit(Point4 t, double residual) {
  if (t[2] > t[3]) {
    std::swap(t[2], t[3]);
    t[0] = 1.0 - t[0];
  }
  return MixtureFit(t[0], t[1], t[2], t[3], residual);
}

} // namespace detail

// Multi-start simplex fit. Starts are Latin-hypercube samples of the box
// plus the best point of a coarse grid scan; deterministic given the seed.
inline MixtureFit fit_mixture(const MarginalHistogram& hist, int starts,
                              std::uint64_t seed = 2024) {
  if (starts < 1) throw std::domain_error("fit_mixture: starts must be >= 1");
  hist.validate();
  const FitBox box;

  std::vector<detail::Point4> initial;
  initial.reserve(static_cast<std::size_t>(starts) + 1);

  // Latin hypercube: per-dimension stratum permutations by Fisher-Yates
  std::array<std::vector<int>, 4> strata;
  for (std::size_t k = 0; k < 4; ++k) {
    auto& perm = strata[k];
    perm.resize(static_cast<std::size_t>(starts));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = starts - 1; i > 0; --i) {
      const auto j = static_cast<int>(
          hash_key(seed, 0x5a17, k, static_cast<std::uint64_t>(i)) %
          static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
  }
  for (int s = 0; s < starts; ++s) {
    detail::Point4 p;
    for (std::size_t k = 0; k < 4; ++k) {
      const double u = (strata[k][static_cast<std::size_t>(s)] +
                        uniform_at(seed, static_cast<std::uint64_t>(s), k, 1)) /
                       static_cast<double>(starts);
      p[k] = box.lo[k] + u * (box.hi[k] - box.lo[k]);
    }
    initial.push_back(p);
  }

  // coarse scan seed
  {
    constexpr int gpts = 7;
    detail::Point4 best{};
    double fbest = std::numeric_limits<double>::infinity();
    for (int a = 0; a < gpts; ++a)
      for (int b = 0; b < gpts; ++b)
        for (int c = 0; c < gpts; ++c)
          for (int d = 0; d < gpts; ++d) {
            const auto frac = [&](int k) {
              return (k + 0.5) / static_cast<double>(gpts);
            };
            const detail::Point4 p = {
                box.lo[0] + frac(a) * (box.hi[0] - box.lo[0]),
                box.lo[1] + frac(b) * (box.hi[1] - box.lo[1]),
                box.lo[2] + frac(c) * (box.hi[2] - box.lo[2]),
                box.lo[3] + frac(d) * (box.hi[3] - box.lo[3])};
            const double f = objective(p, hist);
            if (f < fbest) {
              fbest = f;
              best = p;
            }
          }
    initial.push_back(best);
  }

  detail::Point4 arg{};
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p0 : initial) {
    auto [p, f] = detail::nelder_mead(p0, hist, box);
    // deterministic tie break: lexicographic parameter order
    if (f < best || (f == best && p < arg)) {
      best = f;
      arg = p;
    }
  }
  if (!std::isfinite(best))
    throw std::runtime_error("fit_mixture: all starts diverged");

  // polish the winner until the simplex stalls
  for (int round = 0; round < 3; ++round) {
    auto [p, f] = detail::nelder_mead(arg, hist, box, 8000, 1e-16, 1e-13);
    if (f >= best) break;
    best = f;
    arg = p;
  }
  return detail::canonical_fit(arg, best);
}

// Exhaustive evaluation over a regular 4D parameter grid; the independent
// oracle for fit_mixture.
inline MixtureFit brute_force_fit(const MarginalHistogram& hist,
                                  int grid_points_per_axis) {
  if (grid_points_per_axis < 5 || grid_points_per_axis > 30)
    throw std::domain_error("brute_force_fit: grid points per axis must lie in [5,30]");
  hist.validate();
  const FitBox box;
  const int g = grid_points_per_axis;
  const auto coord = [&](std::size_t k, int i) {
    return box.lo[k] + (i + 0.5) / static_cast<double>(g) * (box.hi[k] - box.lo[k]);
  };
  detail::Point4 arg{};
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < g; ++a)
    for (int b = 0; b < g; ++b)
      for (int c = 0; c < g; ++c)
        for (int d = 0; d < g; ++d) {
          const detail::Point4 p = {coord(0, a), coord(1, b), coord(2, c),
                                    coord(3, d)};
          const double f = objective(p, hist);
          if (f < best || (f == best && p < arg)) {
            best = f;
            arg = p;
          }
        }
  return detail::canonical_fit(arg, best);
}

} // namespace opdyn
