/*
 * grid.hpp — cell-centered discretization of the opinion square [0,1]².
 *
 * Cells tile [0,1] exactly on each axis; centers w_i = (i+1/2)Δw lie
 * strictly inside (0,1), so singular Beta profiles are never evaluated
 * at the endpoints.
 */

#pragma once

#include <stdexcept>

namespace opdyn {

struct OpinionGrid {
  int n_pos = 20;
  int n_neg = 20;

  OpinionGrid() = default;
  OpinionGrid(int np, int nn) : n_pos(np), n_neg(nn) {
    if (np < 1 || nn < 1)
      throw std::domain_error("OpinionGrid: cell counts must be >= 1");
  }

  double dw_pos() const { return 1.0 / n_pos; }
  double dw_neg() const { return 1.0 / n_neg; }
  double cell_area() const { return dw_pos() * dw_neg(); }
  int cell_count() const { return n_pos * n_neg; }

  double center_pos(int i) const { return (i + 0.5) * dw_pos(); }
  double center_neg(int j) const { return (j + 0.5) * dw_neg(); }

  // Scores of exactly 1 land in the last bin (right-closed final interval).
  int index_pos(double w) const { return clamp_index(w, n_pos); }
  int index_neg(double w) const { return clamp_index(w, n_neg); }

  int flat(int i, int j) const { return i * n_neg + j; }

  bool operator==(const OpinionGrid&) const = default;

private:
  static int clamp_index(double w, int n) {
    if (!(w >= 0.0 && w <= 1.0))
      throw std::domain_error("OpinionGrid: coordinate outside [0,1]");
    const int i = static_cast<int>(w * n);
    return i >= n ? n - 1 : i;
  }
};

} // namespace opdyn
