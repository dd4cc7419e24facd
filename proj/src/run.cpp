#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nmss/config.hpp"
#include "nmss/lindblad.hpp"

#ifndef NMSS_VERSION
#define NMSS_VERSION "unknown"
#endif

namespace nmss {
namespace {

using json = nlohmann::ordered_json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Row {
  std::vector<double> values;
  bool converged = true;
  bool truncation_limited = false;
  std::string error;

  std::string status() const {
    if (!error.empty()) return "error: " + error;
    std::string s;
    if (!converged) s += "not_converged";
    if (truncation_limited) s += s.empty() ? "truncation_limited" : ";truncation_limited";
    return s.empty() ? "ok" : s;
  }
  bool flagged() const { return !error.empty() || !converged || truncation_limited; }
};

std::vector<std::string> header(Mode m) {
  switch (m) {
    case Mode::SteadyState:
    case Mode::Sweep:
    case Mode::Nss:
      return {"omega", "tau", "phi", "rho_ee", "re_rho_eg", "im_rho_eg", "bloch_x", "bloch_y", "bloch_z", "nss",
              "converged", "discarded_weight"};
    case Mode::Blp: return {"omega", "tau", "phi", "blp_n", "converged"};
    case Mode::GammaEff: return {"omega", "tau", "phi", "gamma_eff", "rho_ee", "converged"};
    case Mode::MarkovBaseline: return {"omega", "gamma", "gamma_phi", "rho_ee", "re_rho_eg", "im_rho_eg"};
  }
  return {};
}

Row evaluate(const RunConfig& cfg, const PointParams& p) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const SystemParams& sp = p.system;
  Row row;
  const std::vector<double> key{sp.omega, sp.tau, sp.phi};
  const std::size_t width = header(cfg.mode).size();
  try {
    switch (cfg.mode) {
      case Mode::SteadyState:
      case Mode::Sweep:
      case Mode::Nss: {
        const SteadyStateResult ss = steady_state_nm(sp, p.numerics);
        const QubitDensityMatrix& r = ss.state;
        const BlochVector b = r.bloch();
        double n = nan;
        if (sp.omega > 0.0) n = nss(r, sp.omega).value;
        row.values = {sp.omega, sp.tau, sp.phi, r.rho_ee(), r.rho_eg().real(), r.rho_eg().imag(),
                      b.x, b.y, b.z, n, ss.converged ? 1.0 : 0.0, ss.cum_discarded};
        row.converged = ss.converged;
        row.truncation_limited = ss.truncation_limited;
        if (sp.omega == 0.0) row.error = "nss undefined without drive";
        break;
      }
      case Mode::Blp: {
        const BlpResult res = blp(sp, p.numerics, cfg.blp_stride);
        row.values = {sp.omega, sp.tau, sp.phi, res.value, res.tail_converged ? 1.0 : 0.0};
        row.converged = res.tail_converged;
        row.truncation_limited = res.truncation_limited;
        break;
      }
      case Mode::GammaEff: {
        const SteadyStateResult ss = steady_state_nm(sp, p.numerics);
        row.converged = ss.converged;
        row.truncation_limited = ss.truncation_limited;
        const EffectiveRate er = effective_decay_rate(ss, p.numerics);
        row.values = {sp.omega, sp.tau, sp.phi, er.gamma_eff, er.rho_ee, ss.converged ? 1.0 : 0.0};
        break;
      }
      case Mode::MarkovBaseline: {
        const QubitDensityMatrix r = steady_state({cfg.baseline_gamma, cfg.baseline_gamma_phi, sp.omega, sp.delta});
        row.values = {sp.omega, cfg.baseline_gamma, cfg.baseline_gamma_phi, r.rho_ee(), r.rho_eg().real(),
                      r.rho_eg().imag()};
        break;
      }
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  if (row.values.size() != width) {
    row.values = key;
    if (cfg.mode == Mode::MarkovBaseline) row.values = {sp.omega, cfg.baseline_gamma, cfg.baseline_gamma_phi};
    row.values.resize(width, nan);
  }
  // Keep the status cell a single CSV field.
  std::replace(row.error.begin(), row.error.end(), ',', ';');
  std::replace(row.error.begin(), row.error.end(), '\n', ' ');
  return row;
}

json numerics_json(const NumericsParams& np) {
  return {{"dt", np.dt},           {"d_bin", np.d_bin},   {"d_max", np.d_max},   {"svd_cutoff", np.svd_cutoff},
          {"t_max", np.t_max},     {"ss_tol", np.ss_tol}, {"ss_window", np.ss_window}};
}

json resolved_json(const RunConfig& cfg) {
  json j;
  j["mode"] = mode_name(cfg.mode);
  j["omega"] = cfg.omegas;
  j["tau"] = cfg.taus;
  j["phi"] = cfg.phis;
  j["delta"] = cfg.system.delta;
  j["gamma_l"] = cfg.system.gamma_l;
  j["gamma_r"] = cfg.system.gamma_r;
  j["numerics"] = numerics_json(cfg.numerics);
  if (cfg.auto_dt) j["numerics"]["dt"] = "auto";
  j["baseline_gamma"] = cfg.baseline_gamma;
  j["baseline_gamma_phi"] = cfg.baseline_gamma_phi;
  j["record_stride"] = cfg.record_stride;
  j["blp_stride"] = cfg.blp_stride;
  j["out"] = cfg.out_prefix;
  j["explicit_keys"] = cfg.explicit_keys;
  return j;
}

}  // namespace

RunSummary run(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<PointParams> points = cfg.points();
  std::vector<Row> rows(points.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) rows[i] = evaluate(cfg, points[i]);
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(points.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  RunSummary summary;
  summary.csv_path = cfg.out_prefix + ".csv";
  summary.meta_path = cfg.out_prefix + ".meta.json";
  summary.rows = rows.size();

  std::ofstream csv(summary.csv_path);
  if (!csv) throw std::runtime_error("cannot write '" + summary.csv_path + "'");
  csv << "# nmss " << NMSS_VERSION << "\n# mode = " << mode_name(cfg.mode) << "\n";
  if (cfg.mode == Mode::MarkovBaseline) {
    csv << "# baseline_gamma = " << fmt(cfg.baseline_gamma) << "\n# baseline_gamma_phi = "
        << fmt(cfg.baseline_gamma_phi) << "\n";
  } else {
    const NumericsParams& np = cfg.numerics;
    csv << "# gamma_l = " << fmt(cfg.system.gamma_l) << "\n# gamma_r = " << fmt(cfg.system.gamma_r)
        << "\n# delta = " << fmt(cfg.system.delta) << "\n# dt = " << (cfg.auto_dt ? std::string("auto") : fmt(np.dt))
        << "\n# d_bin = " << np.d_bin << "\n# d_max = " << np.d_max << "\n# svd_cutoff = " << fmt(np.svd_cutoff)
        << "\n# t_max = " << fmt(np.t_max) << "\n# ss_tol = " << fmt(np.ss_tol) << "\n# ss_window = "
        << fmt(np.ss_window) << "\n";
    if (cfg.mode == Mode::Blp) csv << "# blp_stride = " << cfg.blp_stride << "\n";
  }
  csv << "# points = " << rows.size() << "\n";

  const auto cols = header(cfg.mode);
  for (const auto& c : cols) csv << c << ',';
  csv << "status\n";
  json point_meta = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const bool integral = cols[c] == "converged";
      csv << (integral && !std::isnan(r.values[c]) ? std::to_string(static_cast<int>(r.values[c])) : fmt(r.values[c]))
          << ',';
    }
    csv << r.status() << '\n';
    if (r.flagged()) ++summary.flagged_rows;

    json pm;
    pm["omega"] = points[i].system.omega;
    pm["tau"] = points[i].system.tau;
    pm["phi"] = points[i].system.phi;
    if (cfg.mode != Mode::MarkovBaseline) pm["dt"] = points[i].numerics.dt;
    pm["converged"] = r.converged;
    pm["truncation_limited"] = r.truncation_limited;
    pm["status"] = r.status();
    point_meta.push_back(pm);
  }
  if (!csv) throw std::runtime_error("error writing '" + summary.csv_path + "'");

  json meta;
  meta["software"] = "nmss";
  meta["version"] = NMSS_VERSION;
  meta["config"] = resolved_json(cfg);
  meta["threads"] = n_threads;
  meta["wall_time_s"] = wall;
  meta["rows"] = rows.size();
  meta["flagged_rows"] = summary.flagged_rows;
  meta["points"] = point_meta;
  std::ofstream mf(summary.meta_path);
  if (!mf) throw std::runtime_error("cannot write '" + summary.meta_path + "'");
  mf << meta.dump(2) << '\n';
  if (!mf) throw std::runtime_error("error writing '" + summary.meta_path + "'");
  return summary;
}

}  // namespace nmss
