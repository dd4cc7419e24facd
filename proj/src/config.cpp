#include "nmss/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <type_traits>
#include <sstream>

namespace nmss {
namespace {

struct Entry {
  std::string value;
  int line = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& key, int line, const std::string& what) {
  std::ostringstream msg;
  msg << "config line " << line << ", key '" << key << "': " << what;
  throw ConfigError(msg.str());
}

double to_double(const std::string& key, const Entry& e, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
    fail(key, e.line, "malformed number '" + t + "'");
  return v;
}

long to_integer(const std::string& key, const Entry& e) {
  const std::string t = trim(e.value);
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) fail(key, e.line, "malformed integer '" + t + "'");
  return v;
}

// "a, b, c" or "start:stop:count" (inclusive, linear).
std::vector<double> to_list(const std::string& key, const Entry& e) {
  std::vector<double> out;
  const std::string& v = e.value;
  if (v.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(v);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) fail(key, e.line, "range must be start:stop:count");
    const double a = to_double(key, e, parts[0]);
    const double b = to_double(key, e, parts[1]);
    const long n = to_integer(key, Entry{parts[2], e.line});
    if (n < 1) fail(key, e.line, "range count must be >= 1");
    if (n == 1 && a != b) fail(key, e.line, "a one-point range needs start == stop");
    for (long i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1));
    return out;
  }
  std::stringstream ss(v);
  for (std::string p; std::getline(ss, p, ',');) out.push_back(to_double(key, e, p));
  if (out.empty()) fail(key, e.line, "empty list");
  return out;
}

}  // namespace

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::SteadyState: return "steady-state";
    case Mode::Sweep: return "sweep";
    case Mode::Nss: return "nss";
    case Mode::Blp: return "blp";
    case Mode::GammaEff: return "gamma-eff";
    case Mode::MarkovBaseline: return "markov-baseline";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::SteadyState, Mode::Sweep, Mode::Nss, Mode::Blp, Mode::GammaEff, Mode::MarkovBaseline})
    if (s == mode_name(m)) return m;
  throw ConfigError("unknown mode '" + s +
                    "' (expected steady-state, sweep, nss, blp, gamma-eff or markov-baseline)");
}

std::vector<PointParams> RunConfig::points() const {
  std::vector<PointParams> out;
  const std::vector<double> tau_axis = mode == Mode::MarkovBaseline ? std::vector<double>{0.0} : taus;
  const std::vector<double> phi_axis = mode == Mode::MarkovBaseline ? std::vector<double>{0.0} : phis;
  for (double tau : tau_axis)
    for (double phi : phi_axis)
      for (double omega : omegas) {
        PointParams p{system, numerics};
        p.system.omega = omega;
        p.system.tau = tau;
        p.system.phi = phi;
        if (auto_dt && mode != Mode::MarkovBaseline) p.numerics.dt = nmss::auto_dt(p.system);
        out.push_back(p);
      }
  return out;
}

RunConfig parse_config(const std::string& text, std::optional<Mode> mode_override) {
  std::map<std::string, Entry> entries;
  RunConfig cfg;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line, line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(key, line_no, "empty key");
    if (value.empty()) fail(key, line_no, "empty value");
    if (entries.count(key)) fail(key, line_no, "duplicate key (first set on line " +
                                                   std::to_string(entries[key].line) + ")");
    entries[key] = {value, line_no};
    cfg.explicit_keys.push_back(key);
  }

  using Setter = std::function<void(const std::string&, const Entry&)>;
  auto real = [](double& field) -> Setter {
    return [&field](const std::string& k, const Entry& e) { field = to_double(k, e, e.value); };
  };
  auto count = [](auto& field, long min) -> Setter {
    return [&field, min](const std::string& k, const Entry& e) {
      const long v = to_integer(k, e);
      if (v < min) fail(k, e.line, "must be >= " + std::to_string(min));
      field = static_cast<std::remove_reference_t<decltype(field)>>(v);
    };
  };
  auto list = [](std::vector<double>& field) -> Setter {
    return [&field](const std::string& k, const Entry& e) { field = to_list(k, e); };
  };

  const std::map<std::string, Setter> setters{
      {"mode", [&](const std::string&, const Entry& e) {
         try {
           cfg.mode = parse_mode(e.value);
         } catch (const ConfigError& err) {
           fail("mode", e.line, err.what());
         }
       }},
      {"omega", list(cfg.omegas)},
      {"tau", list(cfg.taus)},
      {"phi", list(cfg.phis)},
      {"delta", real(cfg.system.delta)},
      {"gamma_l", real(cfg.system.gamma_l)},
      {"gamma_r", real(cfg.system.gamma_r)},
      {"dt", [&](const std::string& k, const Entry& e) {
         if (e.value == "auto")
           cfg.auto_dt = true;
         else
           cfg.numerics.dt = to_double(k, e, e.value);
       }},
      {"d_bin", count(cfg.numerics.d_bin, 2)},
      {"d_max", count(cfg.numerics.d_max, 1)},
      {"svd_cutoff", real(cfg.numerics.svd_cutoff)},
      {"t_max", real(cfg.numerics.t_max)},
      {"ss_tol", real(cfg.numerics.ss_tol)},
      {"ss_window", real(cfg.numerics.ss_window)},
      {"baseline_gamma", real(cfg.baseline_gamma)},
      {"baseline_gamma_phi", real(cfg.baseline_gamma_phi)},
      {"record_stride", count(cfg.record_stride, 1)},
      {"blp_stride", count(cfg.blp_stride, 1)},
      {"threads", count(cfg.threads, 1)},
      {"out", [&](const std::string&, const Entry& e) { cfg.out_prefix = e.value; }},
  };

  for (const auto& [key, entry] : entries) {
    const auto it = setters.find(key);
    if (it == setters.end()) fail(key, entry.line, "unknown key");
    it->second(key, entry);
  }

  auto line_of = [&](const std::string& k) { return entries.count(k) ? entries.at(k).line : 0; };
  if (mode_override)
    cfg.mode = *mode_override;
  else if (!entries.count("mode"))
    fail("mode", 0, "missing required key");
  if (!entries.count("omega")) fail("omega", 0, "missing required key");
  if (cfg.mode != Mode::MarkovBaseline && !entries.count("tau")) fail("tau", 0, "missing required key");
  if (cfg.taus.empty()) cfg.taus = {0.0};
  if (cfg.phis.empty()) cfg.phis = {0.0};
  for (double w : cfg.omegas)
    if (w < 0.0) fail("omega", line_of("omega"), "drive amplitudes must be nonnegative");

  if (cfg.mode == Mode::MarkovBaseline) {
    try {
      steady_state({cfg.baseline_gamma, cfg.baseline_gamma_phi, 1.0, 0.0});
    } catch (const std::exception& err) {
      fail("baseline_gamma", line_of("baseline_gamma"), err.what());
    }
    return cfg;
  }

  if (cfg.mode == Mode::SteadyState && cfg.omegas.size() * cfg.taus.size() * cfg.phis.size() != 1)
    fail("mode", line_of("mode"), "steady-state takes a single (omega, tau, phi) point; use sweep for grids");

  for (const auto& p : cfg.points()) {
    try {
      p.system.validate();
    } catch (const InvalidInput& err) {
      fail("gamma_l", line_of("gamma_l"), err.what());
    }
    try {
      p.numerics.validate(p.system);
    } catch (const InvalidInput& err) {
      // tau / dt mismatches are reported against whichever of the two was set.
      const std::string msg = err.what();
      const std::string key = msg.find("tau / dt") != std::string::npos && entries.count("tau") ? "tau" : "dt";
      fail(key, line_of(key), msg + " (omega=" + std::to_string(p.system.omega) +
                                  ", tau=" + std::to_string(p.system.tau) + ")");
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path, std::optional<Mode> mode_override) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), mode_override);
}

}  // namespace nmss
