#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nmss/config.hpp"
#include "nmss/lindblad.hpp"

using namespace nmss;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string temp_prefix(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("nmss_test_" + name)).string();
}

}  // namespace

TEST_CASE("parse_config: minimal config gets defaults") {
  const auto cfg = parse_config("mode = steady-state\nomega = 1\ntau = 0.5\n");
  CHECK(cfg.mode == Mode::SteadyState);
  CHECK(cfg.numerics.dt == doctest::Approx(0.005));
  CHECK(cfg.numerics.d_bin == 3);
  CHECK(cfg.numerics.d_max == 32);
  CHECK(cfg.phis == std::vector<double>{0.0});
  CHECK(cfg.points().size() == 1);
}

TEST_CASE("parse_config: tau must be a multiple of dt") {
  const std::string err = error_of("mode = steady-state\nomega = 1\ntau = 0.5\ndt = 0.003\n");
  CHECK(err.find("tau") != std::string::npos);
  CHECK(err.find("line 3") != std::string::npos);
  CHECK(err.find("nearest admissible dt") != std::string::npos);
}

TEST_CASE("parse_config: the two-delay drive sweep plans tau x omega rows") {
  const auto cfg = parse_config(
      "# steady states for two delays\n"
      "mode = sweep\n"
      "omega = 0.1:4:40\n"
      "tau = 0.5, 3\n"
      "phi = 0\n"
      "dt = auto\n");
  const auto pts = cfg.points();
  REQUIRE(pts.size() == 80);
  CHECK(pts[0].system.tau == 0.5);
  CHECK(pts[39].system.tau == 0.5);
  CHECK(pts[40].system.tau == 3.0);
  CHECK(pts[0].system.omega == doctest::Approx(0.1));
  CHECK(pts[39].system.omega == doctest::Approx(4.0));
  for (const auto& p : pts) {
    CHECK_NOTHROW(p.numerics.validate(p.system));
    CHECK(p.numerics.dt * std::max(p.system.gamma(), p.system.omega) <= NumericsParams::kMaxRateStep + 1e-12);
  }
}

TEST_CASE("parse_config: errors name the key and line") {
  CHECK(error_of("mode = sweep\nomega = 1\ntau = 0\nbogus = 3\n").find("line 4, key 'bogus'") != std::string::npos);
  CHECK(error_of("mode = sweep\nomega = 1x\ntau = 0\n").find("key 'omega'") != std::string::npos);
  CHECK(error_of("mode = sweep\ntau = 0\n").find("omega") != std::string::npos);
  CHECK(error_of("omega = 1\ntau = 0\n").find("mode") != std::string::npos);
  CHECK(error_of("mode = sweep\nomega = 1\nomega = 2\ntau = 0\n").find("duplicate") != std::string::npos);
  CHECK(error_of("mode = walk\nomega = 1\ntau = 0\n").find("unknown mode") != std::string::npos);
  CHECK(error_of("mode = sweep\nomega = 1\ntau = 0\nd_bin = 1\n").find("d_bin") != std::string::npos);
  CHECK(error_of("mode = sweep\nomega = 1\ntau = 0\ndt = 0.1\n").find("dt") != std::string::npos);
  CHECK(error_of("mode = steady-state\nomega = 1, 2\ntau = 0\n").find("single") != std::string::npos);
  CHECK(error_of("mode = sweep\nomega = 1\ntau = 0\njunk\n").find("line 4") != std::string::npos);
}

TEST_CASE("parse_config: mode override") {
  const auto cfg = parse_config("omega = 1\ntau = 0\n", Mode::GammaEff);
  CHECK(cfg.mode == Mode::GammaEff);
  CHECK(parse_config("mode = sweep\nomega = 1\ntau = 0\n", Mode::Blp).mode == Mode::Blp);
}

TEST_CASE("run: markov baseline traces the boundary, deterministically") {
  auto cfg = parse_config("mode = markov-baseline\nomega = 0:2:9\nbaseline_gamma = 1\n");
  cfg.out_prefix = temp_prefix("baseline");
  cfg.threads = 3;
  const auto s1 = run(cfg);
  const std::string first = slurp(s1.csv_path);
  run(cfg);
  CHECK(slurp(s1.csv_path) == first);

  const auto lines = data_lines(first);
  REQUIRE(lines.size() == 10);
  CHECK(lines[0] == "omega,gamma,gamma_phi,rho_ee,re_rho_eg,im_rho_eg,status");
  const auto boundary = markov_boundary({0.25}, 1.0);
  double omega, gamma, gphi, ree, re, im;
  REQUIRE(std::sscanf(lines[2].c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &omega, &gamma, &gphi, &ree, &re, &im) == 6);
  CHECK(omega == doctest::Approx(0.25));
  CHECK(ree == doctest::Approx(boundary[0].state.rho_ee()).epsilon(1e-9));
  CHECK(im == doctest::Approx(boundary[0].state.rho_eg().imag()).epsilon(1e-9));
  CHECK(lines[2].substr(lines[2].rfind(',') + 1) == "ok");

  const auto meta = nlohmann::json::parse(slurp(s1.meta_path));
  CHECK(meta["config"]["mode"] == "markov-baseline");
  CHECK(meta["points"].size() == 9);
  CHECK(meta.contains("wall_time_s"));
  CHECK(meta.contains("version"));
}

TEST_CASE("run: steady-state rows carry status; failures stay in the row") {
  auto cfg = parse_config("mode = sweep\nomega = 0, 1\ntau = 0\ndt = 0.01\nt_max = 20\nd_max = 8\n");
  cfg.out_prefix = temp_prefix("sweep");
  cfg.threads = 2;
  const auto s = run(cfg);
  const auto lines = data_lines(slurp(s.csv_path));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] ==
        "omega,tau,phi,rho_ee,re_rho_eg,im_rho_eg,bloch_x,bloch_y,bloch_z,nss,converged,discarded_weight,status");
  CHECK(lines[1].find("error: nss undefined") != std::string::npos);
  CHECK(lines[2].substr(lines[2].rfind(',') + 1) == "ok");
  CHECK(s.flagged_rows == 1);

  cfg.mode = Mode::GammaEff;
  const auto g = run(cfg);
  const auto glines = data_lines(slurp(g.csv_path));
  REQUIRE(glines.size() == 3);
  CHECK(glines[0] == "omega,tau,phi,gamma_eff,rho_ee,converged,status");
  CHECK(glines[1].find(",nan,") != std::string::npos);
  CHECK(glines[1].find("error:") != std::string::npos);
}

TEST_CASE("run: unwritable prefix is fatal") {
  auto cfg = parse_config("mode = markov-baseline\nomega = 1\n");
  cfg.out_prefix = "/nonexistent_dir_for_nmss/out";
  CHECK_THROWS(run(cfg));
}
