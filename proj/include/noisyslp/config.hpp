#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisyslp/oracle.hpp"
#include "noisyslp/polyhedral.hpp"
#include "noisyslp/problems.hpp"
#include "noisyslp/solver.hpp"

namespace nslp {

using Json = nlohmann::json;

/// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemConfig {
  std::string name;
  Json params = Json::object();
};

/// A fixed vartheta, or the required stabilization of the cell's noise
/// model multiplied by `factor`.
struct VarthetaSetting {
  bool required = false;
  double value = 0.0;
  double factor = 1.0;
};

struct SweepAxes {
  std::vector<VarthetaSetting> vartheta;
  std::vector<double> eps_f;
  std::vector<double> eps_img;

  bool empty() const { return vartheta.empty() && eps_f.empty() && eps_img.empty(); }
};

struct RunConfig {
  ProblemConfig problem;
  NoiseModel noise = NoNoise{};
  SolverConfig solver;
  VarthetaSetting vartheta;
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t stream = 0;
  SweepAxes sweep;
  std::string output;  // path prefix; empty means derived from the problem name
};

RunConfig parse_run_config(const Json& j);
RunConfig load_run_config(const std::string& path);
Json to_json(const RunConfig& c);

Json to_json(const PolyhedralSpec& s);
PolyhedralSpec spec_from_json(const Json& j);

Json to_json(const NoiseModel& n);
NoiseModel noise_from_json(const Json& j);

Json to_json(const SolverConfig& c);
SolverConfig solver_from_json(const Json& j, SolverConfig base = {});

Json to_json(const VarthetaSetting& v);
VarthetaSetting vartheta_from_json(const Json& j);

/// Builds a benchmark problem by name with parameter overrides.
CompositeProblem make_problem(const ProblemConfig& pc);

/// "synthetic:MxN" or a PGM path.
Matrix load_image(const std::string& source);

/// vartheta for a setting under a problem and noise model.
double resolve_vartheta(const VarthetaSetting& v, const CompositeProblem& problem, const NoiseModel& noise,
                        double rho_u);

}  // namespace nslp
