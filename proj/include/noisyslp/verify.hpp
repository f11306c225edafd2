#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "noisyslp/config.hpp"
#include "noisyslp/lp.hpp"

namespace nslp {

enum class Mutation { None, M2Half };

struct VerifyOptions {
  std::uint64_t seed = 0;
  int instances = 200;
  int lp_instances = 500;
  Mutation inject = Mutation::None;
};

struct PropertyResult {
  std::string name;
  int instances = 0;
  int violations = 0;
  double worst_slack = 0.0;    // min over instances of (rhs - lhs); negative means violated
  bool informational = false;  // reported but never fails the suite
  Json first_violation;        // replay data for the first violating instance
  std::string note;
};

std::vector<PropertyResult> run_verify(const VerifyOptions& opts);

/// Minimum of c.x over the vertices of {A_ub x <= b_ub, lower <= x <= upper}
/// by enumerating every choice of n active constraints. Bounds must be finite
/// and A_eq empty. Returns +inf when no vertex is feasible.
double enumerate_vertices_min(const LpProblem& p, double tol = 1e-9);

/// Runs the suite, prints one line per property, and serializes violating
/// instances under `out_dir`. Exit 0 when all non-informational properties pass, 3 otherwise.
int cmd_verify(const VerifyOptions& opts, const std::optional<std::string>& out_dir, std::ostream& out,
               std::ostream& err);

}  // namespace nslp
