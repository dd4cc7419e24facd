#pragma once

// Flat `key = value` run configuration and the batch driver behind the CLI.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nmss/feedback.hpp"
#include "nmss/measures.hpp"

namespace nmss {

enum class Mode { SteadyState, Sweep, Nss, Blp, GammaEff, MarkovBaseline };

const char* mode_name(Mode m);
Mode parse_mode(const std::string& s);

/// Parse failure; the message names the key and line.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct PointParams {
  SystemParams system;
  NumericsParams numerics;
};

struct RunConfig {
  Mode mode = Mode::SteadyState;
  SystemParams system;
  NumericsParams numerics;
  /// dt chosen per point from the rate bound and tau.
  bool auto_dt = false;

  std::vector<double> omegas;
  std::vector<double> taus;
  std::vector<double> phis;

  /// markov-baseline only.
  double baseline_gamma = 1.0;
  double baseline_gamma_phi = 0.0;

  std::string out_prefix = "nmss_out";
  std::size_t record_stride = 1000;
  std::size_t blp_stride = 4;
  unsigned threads = 1;

  /// Keys given explicitly, in file order, for the metadata echo.
  std::vector<std::string> explicit_keys;

  /// Grid points in output order: tau outermost, then phi, then omega.
  std::vector<PointParams> points() const;
};

/// `mode_override` replaces (or supplies) the file's mode.
RunConfig parse_config(const std::string& text, std::optional<Mode> mode_override = std::nullopt);
RunConfig load_config(const std::string& path, std::optional<Mode> mode_override = std::nullopt);

struct RunSummary {
  std::string csv_path;
  std::string meta_path;
  std::size_t rows = 0;
  std::size_t flagged_rows = 0;
};

/// Runs every grid point and writes `<prefix>.csv` and `<prefix>.meta.json`.
RunSummary run(const RunConfig& config);

}  // namespace nmss
