#pragma once

// Experiment driver: configuration, integral cache, run records and the
// subcommands behind the eqt_cli tool.

#include "eqt/calibration.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace eqt {

struct KRange {
  int min = 0;
  int max = 0;
  int step = 1;
  std::vector<int> values() const;
};

struct ExperimentConfig {
  static constexpr int kSchemaVersion = 1;

  ProjectiveModel model;
  LinearizedTorusAction action;
  DiagonalSymmetry symmetry;
  Observable observable;
  IsotypeLabel isotype;
  KRange k_range;
  int n_samples = 0;
  std::uint64_t seed = 0;
  int fit_order = 2;
  /// Optional probe point for the kernel command, as moduli squared.
  std::optional<std::vector<double>> kernel_u;
  std::string output_dir = "out";

  /// Throws CONFIG_INVALID on unknown keys, missing fields or shape errors.
  static ExperimentConfig from_json(const nlohmann::json &j);
  static ExperimentConfig load(const std::filesystem::path &path);
  /// Canonical form; equal configs serialize identically.
  nlohmann::json to_json() const;
  /// SHA-256 of the canonical form, output_dir excluded.
  std::string hash() const;
};

std::string sha256_hex(const std::string &data);

/// Content-addressed store of Monte-Carlo integrals with checksums.
class IntegralCache {
public:
  explicit IntegralCache(std::filesystem::path dir);

  std::optional<ReducedIntegral> get(const std::string &key);
  void put(const std::string &key, const ReducedIntegral &value);
  std::filesystem::path path_for(const std::string &key) const;

  int hits() const { return hits_; }
  int corrupt() const { return corrupt_; }

private:
  std::filesystem::path dir_;
  int hits_ = 0;
  int corrupt_ = 0;
};

/// Cache key for an integral: (config subhash, seed, n_samples).
std::string integral_key(const std::string &kind, const ExperimentConfig &cfg,
                         const Support &support, std::uint64_t seed, int n_samples);

struct RunRecord {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  CalibrationRecord calibration;
  std::vector<std::string> artifacts;
  std::map<std::string, double> timings_ms;
  nlohmann::json to_json() const;
};

nlohmann::json calibration_to_json(const CalibrationRecord &rec);

struct CliOptions {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool force_wrong_sign = false;
};

/// Exit code for an error: 2 config, 3 hypothesis violation, 4 numeric.
int exit_code_for(const Error &e);

int cmd_analyze(const CliOptions &opts, std::ostream &out);
int cmd_trace(const CliOptions &opts, std::ostream &out);
int cmd_predict(const CliOptions &opts, std::ostream &out);
int cmd_compare(const CliOptions &opts, std::ostream &out);
int cmd_kernel(const CliOptions &opts, std::ostream &out);
int cmd_selftest(const CliOptions &opts, std::ostream &out);

/// Dispatches a subcommand, mapping errors to exit codes.
int run_command(const std::string &name, const CliOptions &opts, std::ostream &out,
                std::ostream &err);

} // namespace eqt
