/*
 * records.hpp — ingestion of scored post records, time-windowed binning,
 * and a synthetic corpus generator.
 *
 * A record is (t, w_pos, w_neg, group): one sentiment-scored post. Scores
 * of text are produced upstream; here they are plain inputs. Binning always
 * aggregates over groups. Snapshot windows are half-open [t0, t1); scores
 * of exactly 1 land in the last bin.
 *
 * The generator stands in for the unavailable chat corpus: record times are
 * spread over a span, and each record is drawn from an early unimodal
 * product-Beta law or a late law (unimodal positive axis crossed with a
 * two-Beta mixture on the negative axis), with a linearly interpolated
 * choice probability that saturates at the start of the late window.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "opdyn/beta.hpp"
#include "opdyn/csv.hpp"
#include "opdyn/density_field.hpp"
#include "opdyn/grid.hpp"
#include "opdyn/histogram.hpp"
#include "opdyn/rng.hpp"

namespace opdyn {

struct SentimentRecord {
  double t = 0.0;
  double w_pos = 0.0;
  double w_neg = 0.0;
  std::string group;
};

// Parse a records CSV with header t,w_pos,w_neg,group. Rows with malformed
// fields or out-of-range scores are rejected with their file line number.
inline std::vector<SentimentRecord> load_records(const std::string& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw std::runtime_error("load_records: empty file " + path);
  const auto header = csv::split_line(lines[0]);
  const std::vector<std::string> expected = {"t", "w_pos", "w_neg", "group"};
  if (std::vector<std::string>(header.begin(), header.end()) != expected)
    throw std::runtime_error("load_records: expected header t,w_pos,w_neg,group in " + path);

  std::vector<SentimentRecord> out;
  out.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = csv::split_line(lines[li]);
    const std::string where = "line " + std::to_string(li + 1);
    if (fields.size() != 4)
      throw std::runtime_error("load_records: " + where + ": expected 4 fields, got " +
                               std::to_string(fields.size()));
    SentimentRecord r;
    r.t = csv::parse_double(fields[0], where + ", field t");
    r.w_pos = csv::parse_double(fields[1], where + ", field w_pos");
    r.w_neg = csv::parse_double(fields[2], where + ", field w_neg");
    r.group = fields[3];
    if (!std::isfinite(r.t))
      throw std::runtime_error("load_records: " + where + ", field t: not finite");
    if (!(r.w_pos >= 0.0 && r.w_pos <= 1.0))
      throw std::runtime_error("load_records: " + where + ", field w_pos: score " +
                               fields[1] + " outside [0,1]");
    if (!(r.w_neg >= 0.0 && r.w_neg <= 1.0))
      throw std::runtime_error("load_records: " + where + ", field w_neg: score " +
                               fields[2] + " outside [0,1]");
    out.push_back(std::move(r));
  }
  if (out.empty()) throw std::runtime_error("load_records: no records in " + path);
  return out;
}

inline void write_records_csv(std::span<const SentimentRecord> records,
                              std::ostream& os) {
  os << "t,w_pos,w_neg,group\n";
  os.precision(17);
  for (const auto& r : records)
    os << r.t << ',' << r.w_pos << ',' << r.w_neg << ',' << r.group << '\n';
}

struct SnapshotBinning {
  DensityField field;           // single occupied compartment (S)
  MarginalHistogram marg_pos;
  MarginalHistogram marg_neg;
};

// 2D histogram of the records inside [t0, t1), normalized to density, with
// 1D marginals by row/column summation. Groups are always aggregated.
inline SnapshotBinning bin_snapshot(std::span<const SentimentRecord> records,
                                    std::pair<double, double> window,
                                    const OpinionGrid& grid) {
  DensityField field(grid);
  long n = 0;
  for (const auto& r : records) {
    if (r.t < window.first || r.t >= window.second) continue;
    field.at(Compartment::S, grid.index_pos(r.w_pos), grid.index_neg(r.w_neg)) += 1.0;
    ++n;
  }
  if (n == 0) throw std::runtime_error("bin_snapshot: no records in window");

  const double unit = 1.0 / (static_cast<double>(n) * grid.cell_area());
  for (auto& v : field.values[index_of(Compartment::S)]) v *= unit;

  std::vector<double> mp(static_cast<std::size_t>(grid.n_pos), 0.0);
  std::vector<double> mn(static_cast<std::size_t>(grid.n_neg), 0.0);
  for (int i = 0; i < grid.n_pos; ++i)
    for (int j = 0; j < grid.n_neg; ++j) {
      const double v = field.at(Compartment::S, i, j);
      mp[static_cast<std::size_t>(i)] += v * grid.dw_neg();
      mn[static_cast<std::size_t>(j)] += v * grid.dw_pos();
    }
  return SnapshotBinning{std::move(field), MarginalHistogram::from_values(std::move(mp)),
                         MarginalHistogram::from_values(std::move(mn))};
}

struct MeanPoint {
  double t_mid = 0.0;
  double mean_pos = 0.0;
  double mean_neg = 0.0;
  long count = 0;
};

// Per-window arithmetic means over non-overlapping windows of the given
// width, starting at the earliest record; empty windows are omitted.
inline std::vector<MeanPoint> mean_trajectory(std::span<const SentimentRecord> records,
                                              double window_width) {
  if (!(window_width > 0.0))
    throw std::domain_error("mean_trajectory: window width must be positive");
  if (records.empty()) return {};
  double t_min = records[0].t, t_max = records[0].t;
  for (const auto& r : records) {
    t_min = std::min(t_min, r.t);
    t_max = std::max(t_max, r.t);
  }
  const auto n_windows =
      static_cast<std::size_t>((t_max - t_min) / window_width) + 1;
  std::vector<MeanPoint> acc(n_windows);
  for (const auto& r : records) {
    auto k = static_cast<std::size_t>((r.t - t_min) / window_width);
    if (k >= n_windows) k = n_windows - 1;
    acc[k].mean_pos += r.w_pos;
    acc[k].mean_neg += r.w_neg;
    ++acc[k].count;
  }
  std::vector<MeanPoint> out;
  for (std::size_t k = 0; k < n_windows; ++k) {
    if (acc[k].count == 0) continue;
    MeanPoint p = acc[k];
    p.t_mid = t_min + (static_cast<double>(k) + 0.5) * window_width;
    p.mean_pos /= static_cast<double>(p.count);
    p.mean_neg /= static_cast<double>(p.count);
    out.push_back(p);
  }
  return out;
}

// Synthetic corpus parameters. Defaults emulate the observed behavior:
// 4077 posts over ~190 days across 6 chats, negative opinions drifting from
// a mild unimodal law into the fitted two-Beta mixture.
struct GeneratorSpec {
  double t_span = 190.0;
  double late_fraction = 0.25;  // final fraction of the span drawn purely late
  int groups = 6;

  double early_m_pos = 0.30, early_mu_pos = 0.15;
  double early_m_neg = 0.05, early_mu_neg = 0.10;
  double late_m_pos = 0.16, late_mu_pos = 0.20;
  MixtureFit late_neg{0.5188, 0.0793, 0.3164, 0.3408};

  void validate() const {
    if (!(t_span > 0.0)) throw std::domain_error("GeneratorSpec: t_span must be positive");
    if (!(late_fraction > 0.0 && late_fraction < 1.0))
      throw std::domain_error("GeneratorSpec: late_fraction must lie in (0,1)");
    if (groups < 1) throw std::domain_error("GeneratorSpec: groups must be >= 1");
    beta_from_mean_spread(early_m_pos, early_mu_pos);
    beta_from_mean_spread(early_m_neg, early_mu_neg);
    beta_from_mean_spread(late_m_pos, late_mu_pos);
  }
};

inline void to_json(nlohmann::json& j, const GeneratorSpec& s) {
  j = nlohmann::json{{"t_span", s.t_span},
                     {"late_fraction", s.late_fraction},
                     {"groups", s.groups},
                     {"early", {{"m_pos", s.early_m_pos}, {"mu_pos", s.early_mu_pos},
                                {"m_neg", s.early_m_neg}, {"mu_neg", s.early_mu_neg}}},
                     {"late_pos", {{"m", s.late_m_pos}, {"mu", s.late_mu_pos}}},
                     {"late_neg", s.late_neg}};
}

inline void from_json(const nlohmann::json& j, GeneratorSpec& s) {
  s.t_span = j.value("t_span", s.t_span);
  s.late_fraction = j.value("late_fraction", s.late_fraction);
  s.groups = j.value("groups", s.groups);
  if (j.contains("early")) {
    const auto& e = j.at("early");
    s.early_m_pos = e.value("m_pos", s.early_m_pos);
    s.early_mu_pos = e.value("mu_pos", s.early_mu_pos);
    s.early_m_neg = e.value("m_neg", s.early_m_neg);
    s.early_mu_neg = e.value("mu_neg", s.early_mu_neg);
  }
  if (j.contains("late_pos")) {
    s.late_m_pos = j.at("late_pos").value("m", s.late_m_pos);
    s.late_mu_pos = j.at("late_pos").value("mu", s.late_mu_pos);
  }
  if (j.contains("late_neg")) s.late_neg = j.at("late_neg").get<MixtureFit>();
  s.validate();
}

// Deterministic synthetic records, t-sorted. Record times are evenly spread
// over the span; each record draws from the early law with probability
// 1 - s(t) and the late law otherwise, s(t) = min(1, t / (span*(1-late_fraction))).
inline std::vector<SentimentRecord> generate_synthetic(const GeneratorSpec& spec,
                                                       long n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw std::domain_error("generate_synthetic: n must be >= 1");

  const BetaSpec early_pos = beta_from_mean_spread(spec.early_m_pos, spec.early_mu_pos);
  const BetaSpec early_neg = beta_from_mean_spread(spec.early_m_neg, spec.early_mu_neg);
  const BetaSpec late_pos = beta_from_mean_spread(spec.late_m_pos, spec.late_mu_pos);
  const BetaSpec late_neg_S = spec.late_neg.component_S();
  const BetaSpec late_neg_R = spec.late_neg.component_R();
  const double t_late_start = spec.t_span * (1.0 - spec.late_fraction);

  std::vector<SentimentRecord> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i), 0x9e7);
    SentimentRecord r;
    r.t = spec.t_span * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double s = std::min(1.0, r.t / t_late_start);
    const bool late = rng.uniform() < s;
    if (late) {
      r.w_pos = rng.beta(late_pos.a, late_pos.b);
      const bool from_S = rng.uniform() < spec.late_neg.weight_S;
      const BetaSpec& c = from_S ? late_neg_S : late_neg_R;
      r.w_neg = rng.beta(c.a, c.b);
    } else {
      r.w_pos = rng.beta(early_pos.a, early_pos.b);
      r.w_neg = rng.beta(early_neg.a, early_neg.b);
    }
    r.group = "chat" + std::to_string(
        hash_key(seed, static_cast<std::uint64_t>(i), 0x6e0) %
        static_cast<std::uint64_t>(spec.groups));
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace opdyn
