#pragma once

#include "noisyslp/lp.hpp"
#include "noisyslp/polyhedral.hpp"

namespace nslp {

/// LP whose first n variables are the step d, boxed by ||d||_inf <= radius,
/// followed by the epigraph auxiliaries. Its optimal value plus
/// `constant` equals min_{||d||_inf <= radius} omega(f_hat + j_hat d).
struct Subproblem {
  LpProblem lp;
  double constant = 0.0;
  Index n = 0;
};

Subproblem build_subproblem(const PolyhedralSpec& spec, const Eigen::Ref<const Vector>& f_hat,
                            const Eigen::Ref<const Matrix>& j_hat, double radius_lp);

/// Minimizer of the linearized model over the LP trust region.
struct LpStep {
  LpStatus status = LpStatus::IterLimit;
  Vector d;
  double model_value = 0.0;  // omega(f_hat + j_hat d)
  std::optional<LpBasis> basis;  // warm start for the same data at a larger radius
};

/// Thrown when an LP required by the solver does not reach optimality.
class LpFailure : public std::runtime_error {
 public:
  LpFailure(LpStatus s, const std::string& where)
      : std::runtime_error(where + ": LP status " + std::string(to_string(s))), status(s) {}
  LpStatus status;
};

/// Solves the LP subproblem. Throws LpFailure unless the status is Optimal.
LpStep solve_subproblem(const PolyhedralSpec& spec, const Eigen::Ref<const Vector>& f_hat,
                        const Eigen::Ref<const Matrix>& j_hat, double radius_lp, const LpBasis* warm = nullptr);

/// phi_hat - min_{||d||_inf <= radius} l_hat(d), clamped at zero.
double criticality(const PolyhedralSpec& spec, const Eigen::Ref<const Vector>& f_hat,
                   const Eigen::Ref<const Matrix>& j_hat, double radius);

}  // namespace nslp
