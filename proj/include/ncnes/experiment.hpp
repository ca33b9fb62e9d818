#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ncnes/parallel.hpp"

namespace ncnes {

enum class Algo { ncnes, ncs_c };

struct ExperimentConfig {
  RunConfig run;
  ExecPlan plan;
  std::string objective_id;
  int dimension = 0;
  double noise_sd = 0.0;
  Algo algo = Algo::ncnes;
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir = "out";
  bool quiet = false;
};

// Command-line overrides applied to the raw key/value view of the config
// file before resolution and validation.
struct ConfigOverrides {
  std::vector<std::uint64_t> seeds;  // replaces the seed list when nonempty
  std::optional<std::string> mode;
  std::optional<std::string> algo;
  std::optional<std::string> out_dir;
  std::optional<double> phi;
  bool quiet = false;
};

// Either a fully validated config or the complete list of violations
// (parse errors, unknown keys, and every failed invariant).
struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty() && config.has_value(); }
};

ParseResult parse_config(const std::string& path,
                         const ConfigOverrides& overrides = {});
ParseResult parse_config_text(std::string_view text,
                              const ConfigOverrides& overrides = {});

// Curve CSV schema (bit-exact): header
//   iteration,evals,best_fitness,mean_pairwise_db,
//   process_mean_fitness_1..process_mean_fitness_<lambda>
// one row per iteration, reals rendered with 17 significant digits ("%.17g"),
// rows terminated with '\n'.
std::string curve_to_csv(const RunReport& report, int lambda);
void emit_curves(const RunReport& report, const std::string& path, int lambda);

// Reads a curve CSV produced by curve_to_csv; throws std::runtime_error on
// schema violations.
std::vector<CurvePoint> read_curve_csv(std::istream& in);
std::vector<CurvePoint> read_curve_csv_file(const std::string& path);

// Lower-middle/upper-middle averaged median; empty input is an error.
double median(std::vector<double> values);

// Runs every seed, writes out_dir/curve_seed_<seed>.csv plus
// out_dir/summary.csv, prints a per-seed summary unless quiet.
// Returns 0 on success, 1 when any run fails.
int run_experiment(const ExperimentConfig& cfg);

// File names used by run_experiment.
std::string curve_filename(std::uint64_t seed);
inline constexpr const char* kSummaryFilename = "summary.csv";

}  // namespace ncnes
