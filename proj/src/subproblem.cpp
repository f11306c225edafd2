#include "noisyslp/subproblem.hpp"

#include <algorithm>

namespace nslp {

namespace {

SparseMatrix with_cols(const SparseMatrix& a, Index cols) {
  if (a.cols() == cols) return a;
  SparseMatrix out(a.rows(), cols);
  return out;
}

}  // namespace

Subproblem build_subproblem(const PolyhedralSpec& spec, const Eigen::Ref<const Vector>& f_hat,
                            const Eigen::Ref<const Matrix>& j_hat, double radius_lp) {
  require(radius_lp > 0.0, "LP trust radius must be positive");
  LinearObjectiveBlock blk = epigraph_block(spec, f_hat, j_hat);
  const Index n = blk.n;
  const Index nv = n + blk.n_aux;

  Subproblem sp;
  sp.n = n;
  sp.constant = blk.constant;
  sp.lp.c = std::move(blk.cost);
  sp.lp.lower.resize(nv);
  sp.lp.upper.resize(nv);
  sp.lp.lower.head(n).setConstant(-radius_lp);
  sp.lp.upper.head(n).setConstant(radius_lp);
  sp.lp.lower.tail(blk.n_aux) = blk.aux_lower;
  sp.lp.upper.tail(blk.n_aux) = blk.aux_upper;
  sp.lp.a_ub = with_cols(blk.a_ub, nv);
  sp.lp.b_ub = std::move(blk.b_ub);
  sp.lp.a_eq = with_cols(blk.a_eq, nv);
  sp.lp.b_eq = std::move(blk.b_eq);
  return sp;
}

LpStep solve_subproblem(const PolyhedralSpec& spec, const Eigen::Ref<const Vector>& f_hat,
                        const Eigen::Ref<const Matrix>& j_hat, double radius_lp, const LpBasis* warm) {
  const Subproblem sp = build_subproblem(spec, f_hat, j_hat, radius_lp);
  LpSolution sol = solve_lp(sp.lp, {}, warm);
  if (sol.status != LpStatus::Optimal) throw LpFailure(sol.status, "LP subproblem");
  LpStep step;
  step.status = sol.status;
  step.d = sol.x.head(sp.n);
  // Evaluate the model at the returned step rather than trusting the LP
  // objective, so that l_hat(d) is consistent with eval_omega.
  const Vector z = f_hat + j_hat * step.d;
  step.model_value = eval_omega(spec, z);
  step.basis = std::move(sol.basis);
  return step;
}

double criticality(const PolyhedralSpec& spec, const Eigen::Ref<const Vector>& f_hat,
                   const Eigen::Ref<const Matrix>& j_hat, double radius) {
  require(radius > 0.0, "criticality radius must be positive");
  const LpStep step = solve_subproblem(spec, f_hat, j_hat, radius);
  return std::max(0.0, eval_omega(spec, f_hat) - step.model_value);
}

}  // namespace nslp
