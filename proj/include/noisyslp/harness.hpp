#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "noisyslp/config.hpp"
#include "noisyslp/solver.hpp"

namespace nslp {

/// Exit codes shared by all commands.
enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitStalled = 2, kExitVerifyFailed = 3 };

/// Shortest round-trippable form: %.17g, with inf/-inf/nan spelled out.
std::string format_double(double v);

std::string iterate_csv_header();
void write_iterate_csv(std::ostream& os, std::uint64_t seed, const std::vector<IterateRecord>& records,
                       bool header = true);

/// Final state of one seeded run.
struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::optional<Termination> termination;
  int iterations = 0;
  double phi_true = 0.0;
  double phi_hat = 0.0;
  double psi_true = 0.0;
  double psi_hat = 0.0;
  double dist_opt = 0.0;     // NaN without a known optimum
  double feasibility = 0.0;  // NaN for unconstrained problems
};

SeedOutcome make_outcome(const CompositeProblem& problem, std::uint64_t seed, const RunResult& r);
SeedOutcome make_failure(std::uint64_t seed, const std::string& error, const std::vector<IterateRecord>& partial);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  int count = 0;  // finite samples used
};

/// Linear-interpolation quantiles of the finite entries (NaN when none).
Quartiles quartiles(std::vector<double> xs);

struct RunSummary {
  std::vector<SeedOutcome> runs;
  int n_failed = 0;
  int n_critical = 0;
  int n_stalled = 0;
  int n_iterlimit = 0;
  Quartiles phi_true, phi_hat, psi_true, psi_hat, dist_opt, feasibility;
};

RunSummary summarize(std::vector<SeedOutcome> runs);
Json to_json(const SeedOutcome& o);
Json to_json(const RunSummary& s);

/// One seeded solve of a config with its resolved vartheta.
struct SolveOutput {
  double vartheta = 0.0;
  RunResult result;
  SeedOutcome outcome;
};

SolveOutput solve_one(const RunConfig& cfg, std::uint64_t seed);

/// One point of the sweep grid with its per-seed outcomes.
struct SweepCell {
  std::size_t index = 0;
  VarthetaSetting vartheta_setting;
  double vartheta = 0.0;
  std::optional<double> eps_f;
  std::optional<double> eps_img;
  NoiseModel noise;
  std::uint64_t stream = 0;
  RunSummary summary;
};

/// Cells in axis order (vartheta, eps_f, eps_img), each run over all seeds.
/// Cell i uses RNG stream cfg.stream + i. Results do not depend on `jobs`.
std::vector<SweepCell> run_sweep(const RunConfig& cfg, int jobs);

std::string sweep_runs_csv_header();
void write_sweep_runs_csv(std::ostream& os, const std::vector<SweepCell>& cells);
std::string sweep_summary_csv_header();
void write_sweep_summary_csv(std::ostream& os, const std::vector<SweepCell>& cells);
Json sweep_to_json(const RunConfig& cfg, const std::vector<SweepCell>& cells);

/// Directory for relative output prefixes: $NOISYSLP_OUTPUT_DIR or ".".
std::string default_output_dir();

/// Output prefix from the override, the config, or the problem name, placed
/// under default_output_dir() when relative. Parent directories are created.
std::string resolve_output_prefix(const RunConfig& cfg, const std::optional<std::string>& override_prefix,
                                  const std::string& suffix);

int cmd_solve(const std::string& config_path, const std::optional<std::string>& output,
              std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err);
int cmd_sweep(const std::string& config_path, int jobs, const std::optional<std::string>& output, std::ostream& out,
              std::ostream& err);

}  // namespace nslp
