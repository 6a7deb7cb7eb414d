/*
 * experiments.hpp — reproducible experiment commands over the library.
 *
 * Each command takes a JSON config, runs one module's primary operation and
 * writes plot-ready CSV/JSON outputs plus a manifest (resolved config, tool
 * version, seed). All randomness flows from the single manifest seed, so a
 * run is reproducible from its manifest alone. Files are written atomically
 * (temp + rename) and partial outputs are removed if a command fails.
 *
 * Config errors (unknown fields, bad values, missing files) throw
 * ConfigError; numerical failures propagate as std::runtime_error. The CLI
 * maps these to exit codes 2 and 3.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "opdyn/calibration.hpp"
#include "opdyn/csv.hpp"
#include "opdyn/density_field.hpp"
#include "opdyn/ensemble.hpp"
#include "opdyn/fp_solver.hpp"
#include "opdyn/records.hpp"
#include "opdyn/seir.hpp"
#include "opdyn/version.hpp"

namespace opdyn {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

inline double require_positive(const json& j, const std::string& key, double fallback) {
  const double v = j.value(key, fallback);
  if (!(v > 0.0)) throw ConfigError("config field '" + key + "' must be positive");
  return v;
}

inline std::array<double, 4> rate_array(const json& j, const std::string& key,
                                        double fallback) {
  std::array<double, 4> out;
  if (!j.contains(key)) {
    out.fill(fallback);
  } else if (j.at(key).is_number()) {
    out.fill(j.at(key).get<double>());
  } else {
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 4)
      throw ConfigError("config field '" + key + "' must be a number or a 4-array (S,E,I,R)");
    std::copy(v.begin(), v.end(), out.begin());
  }
  for (double v : out)
    if (!(v >= 0.0)) throw ConfigError("config field '" + key + "' must be nonnegative");
  return out;
}

} // namespace detail

// Collects output files and commits them atomically; anything already
// committed is removed again if the run fails before finish().
class OutputSink {
public:
  OutputSink(std::filesystem::path dir, bool quiet) : dir_(std::move(dir)), quiet_(quiet) {
    std::filesystem::create_directories(dir_);
  }

  ~OutputSink() {
    if (!finished_) {
      for (const auto& p : written_) {
        std::error_code ec;
        std::filesystem::remove(p, ec);
      }
    }
  }

  void write_text(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    const auto tmp = dir_ / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open " + tmp.string());
      out << content;
    }
    std::filesystem::rename(tmp, path);
    written_.push_back(path);
    if (!quiet_) std::fprintf(stdout, "wrote %s\n", path.string().c_str());
  }

  void write_json(const std::string& name, const nlohmann::json& j) {
    write_text(name, j.dump(2) + "\n");
  }

  void finish() { finished_ = true; }

  const std::filesystem::path& dir() const { return dir_; }

private:
  std::filesystem::path dir_;
  bool quiet_ = false;
  bool finished_ = false;
  std::vector<std::filesystem::path> written_;
};

inline void write_manifest(OutputSink& sink, const std::string& command,
                           std::uint64_t seed, const nlohmann::json& config) {
  sink.write_json("manifest.json",
                  nlohmann::json{{"tool", "opdyn"},
                                 {"version", kVersion},
                                 {"command", command},
                                 {"seed", seed},
                                 {"config", config}});
}

namespace detail {

inline KineticParams params_from_json(const json& cfg) {
  KineticParams p;
  p.lambda_pos = rate_array(cfg, "lambda_pos", 0.0);
  p.lambda_neg = rate_array(cfg, "lambda_neg", 0.0);
  // sigma can be given directly or implied by a spread mu (sigma^2 = 2 lambda mu)
  if (cfg.contains("mu_pos") || cfg.contains("mu_neg")) {
    if (cfg.contains("sigma_pos") || cfg.contains("sigma_neg"))
      throw ConfigError("give either sigma_* or mu_*, not both");
    const auto mp = rate_array(cfg, "mu_pos", 0.0);
    const auto mn = rate_array(cfg, "mu_neg", 0.0);
    for (std::size_t j = 0; j < 4; ++j) {
      p.sigma_pos[j] = std::sqrt(2.0 * p.lambda_pos[j] * mp[j]);
      p.sigma_neg[j] = std::sqrt(2.0 * p.lambda_neg[j] * mn[j]);
    }
  } else {
    p.sigma_pos = rate_array(cfg, "sigma_pos", 0.0);
    p.sigma_neg = rate_array(cfg, "sigma_neg", 0.0);
  }
  p.beta = cfg.value("beta", 0.0);
  p.zeta = cfg.value("zeta", 0.0);
  p.gamma = cfg.value("gamma", 0.0);
  p.alpha = cfg.value("alpha", 1.0);
  p.eta = cfg.value("eta", 0.0);
  p.confidence_pos = cfg.value("confidence_pos", 1.0);
  p.confidence_neg = cfg.value("confidence_neg", 1.0);
  if (cfg.contains("kernel")) {
    const auto& k = cfg.at("kernel");
    const std::string kind = k.value("kind", "constant");
    if (kind == "constant") {
      p.kernel = ContactKernel::constant();
    } else if (kind == "separable") {
      p.kernel = ContactKernel::separable(k.at("k_pos").get<std::vector<double>>(),
                                          k.at("k_neg").get<std::vector<double>>());
    } else {
      throw ConfigError("kernel.kind must be 'constant' or 'separable'");
    }
  }
  try {
    p.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  return p;
}

inline OpinionGrid grid_from_json(const json& cfg) {
  if (cfg.contains("grid") && cfg.at("grid").is_number_integer()) {
    const int n = cfg.at("grid").get<int>();
    if (n < 2 || n > 200) throw ConfigError("config field 'grid' must lie in [2,200]");
    return OpinionGrid(n, n);
  }
  const int np = cfg.value("n_pos", 20);
  const int nn = cfg.value("n_neg", 20);
  if (np < 2 || np > 200 || nn < 2 || nn > 200)
    throw ConfigError("grid cell counts must lie in [2,200]");
  return OpinionGrid(np, nn);
}

inline DensityField field_from_json(const json& cfg, const OpinionGrid& g) {
  if (!cfg.contains("init")) throw ConfigError("fp config needs an 'init' array");
  DensityField f(g);
  double total = 0.0;
  for (const auto& comp : cfg.at("init")) {
    const Compartment c =
        compartment_from_label(comp.value("compartment", std::string("S")).at(0));
    const double mass = comp.value("mass", 1.0);
    if (!(mass >= 0.0)) throw ConfigError("init mass must be nonnegative");
    total += mass;
    const std::string kind = comp.value("kind", "uniform");
    if (kind == "uniform") {
      for (int i = 0; i < g.n_pos; ++i)
        for (int j = 0; j < g.n_neg; ++j) f.at(c, i, j) += mass;
    } else if (kind == "product_beta") {
      DensityField::add_product_beta(
          f, beta_from_mean_spread(comp.at("m_pos").get<double>(),
                                   comp.at("mu_pos").get<double>()),
          beta_from_mean_spread(comp.at("m_neg").get<double>(),
                                comp.at("mu_neg").get<double>()),
          c, mass);
    } else {
      throw ConfigError("init kind must be 'uniform' or 'product_beta'");
    }
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw ConfigError("init masses must sum to 1");
  return f;
}

inline std::string summary_header() {
  return "time,mean_pos,mean_neg,var_pos,var_neg,frac_S,frac_E,frac_I,frac_R\n";
}

inline void append_summary_row(std::ostringstream& os, const Ensemble& e) {
  const auto [mp, mn] = ensemble_means(e);
  const auto [vp, vn] = ensemble_variances(e);
  std::array<double, 4> frac{};
  for (Compartment c : e.compartment) frac[index_of(c)] += 1.0;
  for (auto& v : frac) v /= static_cast<double>(e.size());
  os << e.time << ',' << mp << ',' << mn << ',' << vp << ',' << vn;
  for (double v : frac) os << ',' << v;
  os << '\n';
}

} // namespace detail

// particles: Euler-Maruyama run of the opinion SDE; snapshot and summary CSVs.
inline void run_particles(const nlohmann::json& cfg, OutputSink& sink) {
  const auto n = cfg.value("n_agents", 256L);
  if (n < 1) throw ConfigError("config field 'n_agents' must be >= 1");
  SimConfig sim;
  sim.dt = detail::require_positive(cfg, "dt", 0.01);
  sim.steps = cfg.value("steps", 1000L);
  if (sim.steps < 1) throw ConfigError("config field 'steps' must be >= 1");
  sim.seed = cfg.value("seed", 0ULL);
  const std::string mode = cfg.value("mode", "mckean");
  if (mode == "mckean")
    sim.mode = SimMode::McKean;
  else if (mode == "pairwise")
    sim.mode = SimMode::Pairwise;
  else
    throw ConfigError("config field 'mode' must be 'mckean' or 'pairwise'");
  const std::string diff = cfg.value("diffusion", "beta_root");
  if (diff == "beta_root")
    sim.diffusion = DiffusionKind::BetaRoot;
  else if (diff == "abs_deviation")
    sim.diffusion = DiffusionKind::AbsDeviation;
  else
    throw ConfigError("config field 'diffusion' must be 'beta_root' or 'abs_deviation'");

  const KineticParams p = detail::params_from_json(cfg);
  if (sim.dt * p.max_lambda() >= 1.0)
    throw ConfigError("config violates the stability guard dt*max(lambda) < 1");

  Ensemble e;
  const auto init = cfg.value("init", nlohmann::json{{"kind", "uniform"}});
  const std::string kind = init.value("kind", "uniform");
  if (kind == "uniform") {
    e = Ensemble::uniform_random(static_cast<std::size_t>(n), sim.seed);
  } else if (kind == "point") {
    e = Ensemble::at_point(static_cast<std::size_t>(n),
                           OpinionPair(init.value("w_pos", 0.5), init.value("w_neg", 0.5)));
  } else {
    throw ConfigError("init kind must be 'uniform' or 'point'");
  }

  const long every = cfg.value("snapshot_every", std::max(1L, sim.steps / 10));
  std::ostringstream snapshots;
  snapshots << "time,agent_id,w_pos,w_neg,compartment\n";
  snapshots.precision(17);
  std::ostringstream summary;
  summary << detail::summary_header();
  summary.precision(17);

  const auto emit_snapshot = [&](const Ensemble& cur) {
    for (std::size_t i = 0; i < cur.size(); ++i)
      snapshots << cur.time << ',' << i << ',' << cur.agents[i].w_pos << ','
                << cur.agents[i].w_neg << ',' << label_of(cur.compartment[i]) << '\n';
  };

  emit_snapshot(e);
  detail::append_summary_row(summary, e);
  for (long s = 0; s < sim.steps; ++s) {
    e = step(e, p, sim, s);
    if ((s + 1) % every == 0 || s + 1 == sim.steps) {
      emit_snapshot(e);
      detail::append_summary_row(summary, e);
    }
  }

  sink.write_text("snapshots.csv", snapshots.str());
  sink.write_text("summary.csv", summary.str());
  write_manifest(sink, "particles", sim.seed, cfg);
  sink.finish();
}

// fp: mean-field solver run, either to a fixed horizon or to steady state.
inline void run_fp(const nlohmann::json& cfg, OutputSink& sink) {
  const OpinionGrid grid = detail::grid_from_json(cfg);
  const KineticParams p = detail::params_from_json(cfg);
  DensityField f = detail::field_from_json(cfg, grid);

  SplitStepPlan plan;
  plan.dt = cfg.value("dt_factor", 1.0) * std::min(grid.dw_pos(), grid.dw_neg());
  if (!(plan.dt > 0.0)) throw ConfigError("config field 'dt_factor' must be positive");
  const std::string order = cfg.value("order", "lie");
  if (order == "lie")
    plan.order = SplitOrder::Lie;
  else if (order == "strang")
    plan.order = SplitOrder::Strang;
  else
    throw ConfigError("config field 'order' must be 'lie' or 'strang'");
  if (cfg.contains("fixed_means") && !cfg.at("fixed_means").is_null()) {
    const auto fm = cfg.at("fixed_means").get<std::vector<double>>();
    if (fm.size() != 2) throw ConfigError("config field 'fixed_means' must be [m_pos, m_neg]");
    plan.fixed_means = {{fm[0], fm[1]}};
  }

  std::ostringstream masses;
  masses << "time,rho_S,rho_E,rho_I,rho_R,m_pos,m_neg\n";
  masses.precision(17);
  const auto emit_masses = [&](const DensityField& cur) {
    const FieldMoments mom = field_marginals(cur);
    masses << cur.time << ',' << mom.rho[0] << ',' << mom.rho[1] << ','
           << mom.rho[2] << ',' << mom.rho[3] << ',' << mom.mbar_pos << ','
           << mom.mbar_neg << '\n';
  };
  emit_masses(f);

  bool converged = true;
  double residual = 0.0;
  if (cfg.contains("t_end")) {
    const double t_end = detail::require_positive(cfg, "t_end", 1.0);
    const long steps = static_cast<long>(std::ceil(t_end / plan.dt - 1e-9));
    const long every = cfg.value("report_every", std::max(1L, steps / 50));
    for (long s = 0; s < steps; ++s) {
      f = split_step(f, p, plan);
      if ((s + 1) % every == 0 || s + 1 == steps) emit_masses(f);
    }
  } else {
    const double tol = detail::require_positive(cfg, "tol", 1e-7);
    const long max_steps = cfg.value("max_steps", 200000L);
    SteadyResult res = solve_to_steady(f, p, plan, tol, max_steps);
    f = std::move(res.field);
    converged = res.converged;
    residual = res.residual;
    emit_masses(f);
  }

  std::ostringstream field_csv;
  field_csv.precision(17);
  write_field_csv(f, field_csv);
  std::ostringstream marg_pos, marg_neg;
  marg_pos.precision(17);
  marg_neg.precision(17);
  write_marginals_csv(f, Axis::Pos, marg_pos);
  write_marginals_csv(f, Axis::Neg, marg_neg);

  nlohmann::json header = field_header_json(f);
  header["converged"] = converged;
  header["residual"] = residual;

  sink.write_text("field.csv", field_csv.str());
  sink.write_json("field.json", header);
  sink.write_text("marginals_pos.csv", marg_pos.str());
  sink.write_text("marginals_neg.csv", marg_neg.str());
  sink.write_text("masses.csv", masses.str());
  write_manifest(sink, "fp", cfg.value("seed", 0ULL), cfg);
  sink.finish();
  if (!converged)
    throw std::runtime_error("fp: steady-state iteration did not converge (residual " +
                             std::to_string(residual) + ")");
}

// seir: mass-level ODE trajectory plus the final-size root.
inline void run_seir(const nlohmann::json& cfg, OutputSink& sink) {
  KineticParams p = detail::params_from_json(cfg);
  try {
    p.validate_epidemic();
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  const double t_end = detail::require_positive(cfg, "t_end", 100.0);
  const double dt = detail::require_positive(cfg, "dt", 0.05);
  SeirState s0{1.0, 0.0, 0.0, 0.0};
  if (cfg.contains("s0")) {
    const auto v = cfg.at("s0").get<std::vector<double>>();
    if (v.size() != 4) throw ConfigError("config field 's0' must be [S,E,I,R]");
    s0 = SeirState{v[0], v[1], v[2], v[3]};
  }
  try {
    s0.validate(1e-9);
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }

  std::ostringstream traj_csv;
  traj_csv.precision(17);
  nlohmann::json results;
  if (cfg.contains("moments")) {
    MomentState m0;
    const auto mp = cfg.at("moments").at("m_pos").get<std::vector<double>>();
    const auto mn = cfg.at("moments").at("m_neg").get<std::vector<double>>();
    if (mp.size() != 4 || mn.size() != 4)
      throw ConfigError("moments.m_pos and moments.m_neg must be 4-arrays");
    const auto rho = s0.as_array();
    for (std::size_t j = 0; j < 4; ++j) {
      m0.q_pos[j] = rho[j] * mp[j];
      m0.q_neg[j] = rho[j] * mn[j];
    }
    const auto traj = integrate_seir_with_moments(s0, m0, p, t_end, dt);
    traj_csv << "time,rho_S,rho_E,rho_I,rho_R,q_pos_S,q_pos_E,q_pos_I,q_pos_R,"
                "q_neg_S,q_neg_E,q_neg_I,q_neg_R\n";
    for (std::size_t k = 0; k < traj.time.size(); ++k) {
      const auto& s = traj.states[k];
      traj_csv << traj.time[k] << ',' << s.rho_S << ',' << s.rho_E << ','
               << s.rho_I << ',' << s.rho_R;
      for (double q : traj.moments[k].q_pos) traj_csv << ',' << q;
      for (double q : traj.moments[k].q_neg) traj_csv << ',' << q;
      traj_csv << '\n';
    }
    results["terminal"] = {{"rho_S", traj.states.back().rho_S},
                           {"rho_E", traj.states.back().rho_E},
                           {"rho_I", traj.states.back().rho_I},
                           {"rho_R", traj.states.back().rho_R}};
  } else {
    const auto traj = integrate_seir(s0, p, t_end, dt);
    traj_csv << "time,rho_S,rho_E,rho_I,rho_R\n";
    for (std::size_t k = 0; k < traj.time.size(); ++k) {
      const auto& s = traj.states[k];
      traj_csv << traj.time[k] << ',' << s.rho_S << ',' << s.rho_E << ','
               << s.rho_I << ',' << s.rho_R << '\n';
    }
    results["terminal"] = {{"rho_S", traj.terminal().rho_S},
                           {"rho_E", traj.terminal().rho_E},
                           {"rho_I", traj.terminal().rho_I},
                           {"rho_R", traj.terminal().rho_R}};
  }

  const FinalSizeResult fs = final_size(p, s0.rho_S);
  results["final_size"] = {{"rho_S_inf", fs.rho_S_inf}, {"degenerate", fs.degenerate}};

  sink.write_text("trajectory.csv", traj_csv.str());
  sink.write_json("results.json", results);
  write_manifest(sink, "seir", cfg.value("seed", 0ULL), cfg);
  sink.finish();
}

// steady: closed-form equilibrium curves sampled on a uniform grid.
inline void run_steady(const nlohmann::json& cfg, OutputSink& sink) {
  if (!cfg.contains("curves") || !cfg.at("curves").is_array() || cfg.at("curves").empty())
    throw ConfigError("steady config needs a nonempty 'curves' array");
  const int samples = cfg.value("samples", 400);
  if (samples < 8) throw ConfigError("config field 'samples' must be >= 8");

  struct Curve {
    std::string name;
    std::vector<double> values;
  };
  std::vector<Curve> curves;
  int idx = 0;
  for (const auto& c : cfg.at("curves")) {
    const std::string kind = c.value("kind", "beta");
    Curve curve;
    curve.values.resize(static_cast<std::size_t>(samples));
    try {
      if (kind == "beta") {
        const BetaSpec spec = beta_from_mean_spread(c.at("m").get<double>(),
                                                    c.at("mu").get<double>());
        curve.name = "beta_" + std::to_string(idx);
        for (int k = 0; k < samples; ++k)
          curve.values[static_cast<std::size_t>(k)] =
              beta_pdf(spec, (k + 0.5) / static_cast<double>(samples));
      } else if (kind == "mixture") {
        const MixtureFit fit = c.get<MixtureFit>();
        curve.name = "mixture_" + std::to_string(idx);
        for (int k = 0; k < samples; ++k)
          curve.values[static_cast<std::size_t>(k)] =
              mixture_pdf(fit, (k + 0.5) / static_cast<double>(samples));
      } else {
        throw ConfigError("curve kind must be 'beta' or 'mixture'");
      }
    } catch (const std::domain_error& e) {
      throw ConfigError(e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("curve spec: ") + e.what());
    }
    curves.push_back(std::move(curve));
    ++idx;
  }

  std::ostringstream os;
  os.precision(17);
  os << "w";
  for (const auto& c : curves) os << ',' << c.name;
  os << '\n';
  for (int k = 0; k < samples; ++k) {
    os << (k + 0.5) / static_cast<double>(samples);
    for (const auto& c : curves) os << ',' << c.values[static_cast<std::size_t>(k)];
    os << '\n';
  }
  sink.write_text("curves.csv", os.str());
  write_manifest(sink, "steady", cfg.value("seed", 0ULL), cfg);
  sink.finish();
}

namespace detail {

inline MarginalHistogram histogram_from_csv(const std::string& path) {
  const auto lines = csv::read_lines(path);
  if (lines.size() < 2) throw ConfigError("histogram file has no data rows: " + path);
  const auto header = csv::split_line(lines[0]);
  if (header.size() < 2 || header[0] != "bin_center" || header[1] != "density")
    throw ConfigError("histogram file must have header bin_center,density: " + path);
  std::vector<double> centers, density;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = csv::split_line(lines[li]);
    if (fields.size() < 2)
      throw ConfigError("histogram row " + std::to_string(li + 1) + " malformed");
    centers.push_back(csv::parse_double(fields[0], "bin_center"));
    density.push_back(csv::parse_double(fields[1], "density"));
  }
  try {
    return MarginalHistogram(std::move(centers), std::move(density));
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("histogram file: ") + e.what());
  }
}

inline void write_fit_outputs(OutputSink& sink, const MarginalHistogram& hist,
                              const MixtureFit& fit) {
  sink.write_json("fit.json", fit);
  std::ostringstream os;
  os.precision(17);
  os << "bin_center,data,model\n";
  std::vector<double> model(hist.bins());
  double mass = 0.0;
  for (std::size_t i = 0; i < hist.bins(); ++i) {
    model[i] = mixture_pdf(fit, hist.centers[i]);
    mass += model[i] * hist.bin_width();
  }
  for (std::size_t i = 0; i < hist.bins(); ++i)
    os << hist.centers[i] << ',' << hist.density[i] << ',' << model[i] / mass << '\n';
  sink.write_text("fit_curve.csv", os.str());
}

} // namespace detail

// fit: mixture equilibrium fit of a histogram CSV.
inline void run_fit(const nlohmann::json& cfg, OutputSink& sink) {
  if (!cfg.contains("input")) throw ConfigError("fit config needs 'input' (histogram CSV)");
  const std::string input = cfg.at("input").get<std::string>();
  if (!std::filesystem::exists(input))
    throw ConfigError("input file does not exist: " + input);
  const MarginalHistogram hist = detail::histogram_from_csv(input);
  const int starts = cfg.value("starts", 32);
  if (starts < 1) throw ConfigError("config field 'starts' must be >= 1");
  const auto seed = cfg.value("seed", 2024ULL);

  const MixtureFit fit = fit_mixture(hist, starts, seed);
  detail::write_fit_outputs(sink, hist, fit);
  write_manifest(sink, "fit", seed, cfg);
  sink.finish();
}

// synth: synthetic scored-post corpus.
inline void run_synth(const nlohmann::json& cfg, OutputSink& sink) {
  GeneratorSpec spec;
  try {
    if (cfg.contains("generator")) spec = cfg.at("generator").get<GeneratorSpec>();
    spec.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  const long n = cfg.value("n", 4077L);
  if (n < 1) throw ConfigError("config field 'n' must be >= 1");
  const auto seed = cfg.value("seed", 0ULL);

  const auto records = generate_synthetic(spec, n, seed);
  std::ostringstream os;
  write_records_csv(records, os);
  sink.write_text("records.csv", os.str());
  write_manifest(sink, "synth", seed, cfg);
  sink.finish();
}

// pipeline: synth -> bin the late window -> fit the negative marginal.
inline void run_pipeline(const nlohmann::json& cfg, OutputSink& sink) {
  GeneratorSpec spec;
  try {
    if (cfg.contains("generator")) spec = cfg.at("generator").get<GeneratorSpec>();
    spec.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  const long n = cfg.value("n", 4077L);
  if (n < 1) throw ConfigError("config field 'n' must be >= 1");
  const auto seed = cfg.value("seed", 0ULL);
  const OpinionGrid grid = detail::grid_from_json(cfg);
  const int starts = cfg.value("starts", 32);

  const auto records = generate_synthetic(spec, n, seed);
  std::ostringstream rec_csv;
  write_records_csv(records, rec_csv);

  std::pair<double, double> window = {spec.t_span * (1.0 - spec.late_fraction),
                                      spec.t_span + 1.0};
  if (cfg.contains("window")) {
    const auto w = cfg.at("window").get<std::vector<double>>();
    if (w.size() != 2 || !(w[0] < w[1]))
      throw ConfigError("config field 'window' must be [t0, t1] with t0 < t1");
    window = {w[0], w[1]};
  }
  const SnapshotBinning snap = bin_snapshot(records, window, grid);

  std::ostringstream hist_neg, hist_pos;
  hist_neg.precision(17);
  hist_pos.precision(17);
  write_histogram_csv(snap.marg_neg, hist_neg);
  write_histogram_csv(snap.marg_pos, hist_pos);

  std::ostringstream field_csv;
  field_csv.precision(17);
  write_field_csv(snap.field, field_csv);

  const double mean_window = cfg.value("mean_window", spec.t_span / 4.0);
  if (!(mean_window > 0.0)) throw ConfigError("config field 'mean_window' must be positive");
  std::ostringstream means_csv;
  means_csv.precision(17);
  means_csv << "t_mid,mean_pos,mean_neg,count\n";
  for (const auto& pt : mean_trajectory(records, mean_window))
    means_csv << pt.t_mid << ',' << pt.mean_pos << ',' << pt.mean_neg << ','
              << pt.count << '\n';

  const MixtureFit fit = fit_mixture(snap.marg_neg, starts, seed + 1);

  sink.write_text("records.csv", rec_csv.str());
  sink.write_text("hist_neg.csv", hist_neg.str());
  sink.write_text("hist_pos.csv", hist_pos.str());
  sink.write_text("field.csv", field_csv.str());
  sink.write_json("field.json", field_header_json(snap.field));
  sink.write_text("means.csv", means_csv.str());
  detail::write_fit_outputs(sink, snap.marg_neg, fit);
  write_manifest(sink, "pipeline", seed, cfg);
  sink.finish();
}

// Dispatch by command name; the CLI and tests share this entry point.
inline void run_command(const std::string& command, const nlohmann::json& cfg,
                        const std::filesystem::path& out_dir, bool quiet = true) {
  OutputSink sink(out_dir, quiet);
  if (command == "particles")
    run_particles(cfg, sink);
  else if (command == "fp")
    run_fp(cfg, sink);
  else if (command == "seir")
    run_seir(cfg, sink);
  else if (command == "steady")
    run_steady(cfg, sink);
  else if (command == "fit")
    run_fit(cfg, sink);
  else if (command == "synth")
    run_synth(cfg, sink);
  else if (command == "pipeline")
    run_pipeline(cfg, sink);
  else
    throw ConfigError("unknown command: " + command);
}

} // namespace opdyn
