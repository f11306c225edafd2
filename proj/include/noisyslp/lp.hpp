#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "noisyslp/types.hpp"

namespace nslp {

/// min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper.
/// Bounds may be infinite.
struct LpProblem {
  Vector c;
  SparseMatrix a_ub;
  Vector b_ub;
  SparseMatrix a_eq;
  Vector b_eq;
  Vector lower;
  Vector upper;

  Index num_vars() const { return c.size(); }

  /// Throws InvalidArgument on inconsistent shapes or lower > upper.
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

std::string_view to_string(LpStatus s);

/// Basis of an optimal solution in the internal column order: the
/// structural variables, then one slack per row of A_ub.
struct LpBasis {
  std::vector<Index> basic;  // one column per row of [A_ub; A_eq]
  Vector values;             // all structural and slack columns
};

struct LpSolution {
  LpStatus status = LpStatus::IterLimit;
  Vector x;
  double objective = 0.0;
  long pivots = 0;
  /// Set when optimal and no artificial column remains basic.
  std::optional<LpBasis> basis;
};

struct LpOptions {
  double feas_tol = 1e-9;
  double opt_tol = 1e-9;
  int refactor_every = 50;
};

/// Bounded-variable revised primal simplex. Deterministic: pricing is
/// Dantzig with lowest-index ties and switches to Bland's rule on every
/// degenerate pivot, so the method cannot cycle. Nonbasic variables whose
/// box contains zero start at zero, which makes zero the tie-break for
/// components with no influence on the objective.
///
/// A warm start from another problem with the same shape is used when it is
/// primal feasible for `p` (for example the optimum of the same LP with a
/// smaller box); otherwise the solve starts cold.
LpSolution solve_lp(const LpProblem& p, const LpOptions& opts = {}, const LpBasis* warm = nullptr);

}  // namespace nslp
