/*
 * histogram.hpp — 1D marginal histogram on uniform bins over [0,1];
 * the empirical input to the equilibrium fit.
 */

#pragma once

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace opdyn {

// Probability density per unit length at bin centers; integrates to 1.
struct MarginalHistogram {
  std::vector<double> centers;
  std::vector<double> density;

  MarginalHistogram() = default;
  MarginalHistogram(std::vector<double> c, std::vector<double> d)
      : centers(std::move(c)), density(std::move(d)) {
    validate();
  }

  std::size_t bins() const { return centers.size(); }
  double bin_width() const { return 1.0 / static_cast<double>(bins()); }

  void validate() const {
    if (centers.empty() || centers.size() != density.size())
      throw std::domain_error("MarginalHistogram: malformed bin arrays");
    double mass = 0.0;
    for (double d : density) {
      if (!(d >= 0.0))
        throw std::domain_error("MarginalHistogram: density must be nonnegative");
      mass += d;
    }
    mass /= static_cast<double>(bins());
    if (std::fabs(mass - 1.0) > 1e-8)
      throw std::domain_error("MarginalHistogram: density must integrate to 1");
  }

  // Build from raw per-bin values on `n` uniform bins, renormalizing.
  static MarginalHistogram from_values(std::vector<double> values) {
    const auto n = values.size();
    if (n == 0) throw std::domain_error("MarginalHistogram: empty values");
    double mass = 0.0;
    for (double v : values) mass += v;
    mass /= static_cast<double>(n);
    if (!(mass > 0.0)) throw std::domain_error("MarginalHistogram: zero mass");
    std::vector<double> centers(n);
    for (std::size_t i = 0; i < n; ++i) {
      centers[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      values[i] /= mass;
    }
    return MarginalHistogram(std::move(centers), std::move(values));
  }
};

inline void write_histogram_csv(const MarginalHistogram& h, std::ostream& os) {
  os << "bin_center,density\n";
  for (std::size_t i = 0; i < h.bins(); ++i)
    os << h.centers[i] << ',' << h.density[i] << '\n';
}

} // namespace opdyn
