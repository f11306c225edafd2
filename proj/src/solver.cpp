#include "noisyslp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "noisyslp/subproblem.hpp"

namespace nslp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double curvature_term(const Eigen::Ref<const Matrix>& b, const Eigen::Ref<const Vector>& d) {
  if (b.size() == 0) return 0.0;
  return 0.5 * d.dot(b * d);
}

// x / y with y == 0 mapped to +inf and the flag raised.
double safe_div(double x, double y, bool& flag) {
  if (y == 0.0) {
    flag = true;
    return kInf;
  }
  return x / y;
}

}  // namespace

void SolverConfig::validate() const {
  require(rho_u > 0.0 && rho_u < rho_s && rho_s < 1.0, "need 0 < rho_u < rho_s < 1");
  require(kappa_l > 0.0 && kappa_l <= kappa_u && kappa_u < 1.0, "need 0 < kappa_l <= kappa_u < 1");
  require(eta > 0.0 && eta < 1.0, "need 0 < eta < 1");
  require(tau > 0.0 && tau < 1.0, "need 0 < tau < 1");
  require(theta_shrink > 0.0, "need theta_shrink > 0");
  require(delta_lp_0 > 0.0 && delta_lp_0 <= delta_lp_max, "need 0 < delta_lp_0 <= delta_lp_max");
  require(delta_lp_max >= 1.0, "need delta_lp_max >= 1");
  require(delta_0 > 0.0, "need delta_0 > 0");
  require(vartheta >= 0.0 && std::isfinite(vartheta), "vartheta must be finite and non-negative");
  require(max_iter >= 0, "max_iter must be non-negative");
  require(tol_criticality >= 0.0 && tol_lp_radius >= 0.0, "tolerances must be non-negative");
  require(max_cauchy_backtracks >= 0, "max_cauchy_backtracks must be non-negative");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Critical: return "Critical";
    case Termination::Stalled: return "Stalled";
    case Termination::IterLimit: return "IterLimit";
  }
  return "?";
}

NoiseConstants make_noise_constants(double lip_omega, const MapConstants& map, NoiseLevels eps, Index n) {
  NoiseConstants c;
  c.gamma = std::sqrt(static_cast<double>(n));
  c.m0 = 2.0 * lip_omega * eps.eps_f;
  c.m1 = lip_omega * eps.eps_fprime;
  c.beta = map.beta ? *map.beta : kNaN;
  c.m2 = (map.lip_fprime && map.beta) ? lip_omega * *map.lip_fprime + 0.5 * *map.beta : kNaN;
  c.l_ell = map.lip_f ? c.gamma * lip_omega * (*map.lip_f + eps.eps_fprime) : kNaN;
  return c;
}

double model_linear(const SolverState& s, const PolyhedralSpec& spec, const Eigen::Ref<const Vector>& d) {
  require(d.size() == s.j_hat.cols(), "step dimension mismatch");
  return eval_omega(spec, s.f_hat + s.j_hat * d);
}

double model_quadratic(const SolverState& s, const PolyhedralSpec& spec, const Eigen::Ref<const Matrix>& b,
                       const Eigen::Ref<const Vector>& d) {
  return model_linear(s, spec, d) + curvature_term(b, d);
}

CauchyStep cauchy_search(const SolverState& s, const PolyhedralSpec& spec, const Eigen::Ref<const Matrix>& b,
                         const Eigen::Ref<const Vector>& d_lp, const SolverConfig& cfg) {
  CauchyStep out;
  const double nrm = d_lp.norm();
  if (nrm == 0.0) {
    out.d = Vector::Zero(d_lp.size());
    return out;
  }
  out.alpha = std::min(1.0, s.delta / nrm);
  for (;;) {
    out.d = out.alpha * d_lp;
    const double l = model_linear(s, spec, out.d);
    const double q = l + curvature_term(b, out.d);
    if (s.phi_hat_x - q >= cfg.eta * (s.phi_hat_x - l)) break;
    if (out.backtracks >= cfg.max_cauchy_backtracks) {
      throw CauchyFailure("Cauchy search exceeded " + std::to_string(cfg.max_cauchy_backtracks) + " backtracks");
    }
    out.alpha *= cfg.tau;
    ++out.backtracks;
  }
  return out;
}

Vector improve_step(const SolverState& s, const PolyhedralSpec& spec, const Eigen::Ref<const Matrix>& b,
                    const Eigen::Ref<const Vector>& d_c, const SolverConfig& cfg) {
  if (cfg.step_mode == StepMode::CauchyOnly) return d_c;
  const Index n = d_c.size();
  const double q_c = model_quadratic(s, spec, b, d_c);

  // Gradient of the affine piece of l_hat that is active at d_c.
  const Vector g = s.j_hat.transpose() * omega_smooth_gradient(spec, s.f_hat + s.j_hat * d_c);
  if (g.norm() == 0.0) return d_c;

  Vector d_n;
  const double lam_floor = 1e-8;
  if (b.size() == 0 || b.isZero(0.0)) {
    d_n = -g / lam_floor;
  } else {
    // Smallest lam on a geometric ladder with B + (lam - floor) I positive definite.
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    double lam = 0.0;
    for (int attempt = 0; attempt < 80; ++attempt) {
      Matrix h = b;
      h.diagonal().array() += lam - lam_floor;
      if (Eigen::LLT<Matrix>(h).info() == Eigen::Success) {
        h.diagonal().array() += lam_floor;
        d_n = Eigen::LLT<Matrix>(h).solve(-g);
        break;
      }
      lam = lam == 0.0 ? 2.0 * lam_floor * scale : 4.0 * lam;
    }
    if (d_n.size() != n || !d_n.allFinite()) return d_c;
  }

  const double dn_norm = d_n.norm();
  if (dn_norm == 0.0 || !std::isfinite(dn_norm)) return d_c;
  double t = std::min(1.0, s.delta / dn_norm);
  Vector best = d_c;
  double best_q = q_c;
  for (int j = 0; j < 30; ++j, t *= 0.5) {
    const Vector cand = t * d_n;
    const double q = model_quadratic(s, spec, b, cand);
    if (q < best_q) {
      best_q = q;
      best = cand;
    }
  }
  // Guard the trust-region bound against rounding.
  const double bn = best.norm();
  if (bn > s.delta) {
    Vector scaled = best * (s.delta / bn);
    if (model_quadratic(s, spec, b, scaled) <= q_c) return scaled;
    return d_c;
  }
  return best;
}

double stabilized_ratio(const SolverState& s, const PolyhedralSpec& spec, const Eigen::Ref<const Matrix>& b,
                        const Eigen::Ref<const Vector>& d, double phi_hat_trial, double vartheta) {
  const double den = s.phi_hat_x - model_quadratic(s, spec, b, d) + vartheta;
  if (den == 0.0) return -kInf;
  return (s.phi_hat_x - phi_hat_trial + vartheta) / den;
}

Radii update_radii(const SolverState& s, const SolverConfig& cfg, double rho_hat, double alpha,
                   const Eigen::Ref<const Vector>& d, const Eigen::Ref<const Vector>& /*d_c*/) {
  Radii r;
  const double d_lp = d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
  if (rho_hat >= cfg.rho_u) {
    r.delta_lp = alpha == 1.0 ? std::min(2.0 * s.delta_lp, cfg.delta_lp_max) : s.delta_lp;
  } else {
    r.delta_lp = std::min(cfg.theta_shrink * d_lp, s.delta_lp);
  }
  if (rho_hat >= cfg.rho_s) {
    r.delta = 2.0 * s.delta;
  } else {
    r.delta = std::clamp(0.5 * s.delta, cfg.kappa_l * d.norm(), cfg.kappa_u * s.delta);
  }
  return r;
}

double required_stabilization(const NoiseConstants& c, double rho_u) {
  require(rho_u > 0.0 && rho_u < 1.0, "need 0 < rho_u < 1");
  return (c.m0 + c.m1) / (1.0 - rho_u);
}

CriticalRegion critical_region_constants(const NoiseConstants& c, const SolverConfig& cfg, double delta) {
  require(!std::isnan(c.m2) && !std::isnan(c.l_ell) && !std::isnan(c.beta),
          "critical region constants need L^F, L^F' and beta");
  const double g = c.gamma;
  const double dmax = cfg.delta_lp_max;
  CriticalRegion r;
  bool flag = false;
  r.a = std::min({cfg.theta_shrink * g * g, cfg.delta_0, cfg.delta_lp_0 * g, g / dmax});
  const double b1 = safe_div((1.0 - cfg.rho_u) * cfg.eta *
                                 std::min(cfg.theta_shrink * cfg.theta_shrink, cfg.kappa_l * cfg.kappa_l),
                             g * c.m2 * dmax, flag);
  const double b2 = safe_div(g, c.l_ell, flag);
  const double b3 = safe_div(2.0 * (1.0 - cfg.eta) * cfg.tau, c.beta * g * dmax, flag);
  r.b = std::min({b1, b2, b3});
  r.delta_min = std::min(r.a, r.b * delta);
  const double num = cfg.vartheta * (1.0 - cfg.rho_u) * g * dmax;
  const double t1 = std::sqrt(safe_div(num, cfg.rho_u * cfg.eta * r.b, flag));
  const double t2 = safe_div(num, cfg.rho_u * cfg.eta * r.a, flag);
  r.delta_max = std::max(t1, t2);
  r.degenerate = flag;
  return r;
}

NoiseConstants problem_noise_constants(const CompositeProblem& problem, const NoiseModel& noise) {
  std::optional<ImageDims> dims;
  if (problem.map.image) dims = ImageDims{problem.map.image->rows, problem.map.image->cols};
  return make_noise_constants(problem.lipschitz_omega(), problem.map.constants, noise_levels(noise, dims),
                              problem.map.n);
}

double required_stabilization(const CompositeProblem& problem, const NoiseModel& noise, double rho_u) {
  return required_stabilization(problem_noise_constants(problem, noise), rho_u);
}

RunResult run(const CompositeProblem& problem, const NoiseModel& noise, const SolverConfig& cfg,
              std::uint64_t seed, std::uint64_t stream) {
  cfg.validate();
  require(problem.x0.size() == problem.map.n, "x0 dimension mismatch");
  require(problem.spec.dim() == problem.map.p, "spec dimension does not match the map output");

  const PolyhedralSpec& spec = problem.spec;
  const Curvature curv =
      cfg.curvature.value_or(problem.default_exact_curvature ? Curvature::Exact : Curvature::Zero);
  const bool use_b = curv == Curvature::Exact && static_cast<bool>(problem.map.curvature);

  NoisyOracle oracle(problem.map, noise, seed, stream);
  RunResult res;
  SolverState s;
  s.x = problem.x0;
  s.delta = cfg.delta_0;
  s.delta_lp = cfg.delta_lp_0;

  bool have_eval = false;
  bool x_changed = true;
  bool eval_changed = true;  // f_hat or j_hat differ from the last iteration
  double phi_true = 0.0, psi_true = 0.0, psi_hat_1 = 0.0;
  Vector f_trial;
  std::vector<std::pair<double, LpBasis>> warm;

  auto fail = [&](const std::string& what) { throw SolverError(what, res.records); };

  for (s.k = 0;; ++s.k) {
    if (!have_eval || cfg.evaluation == Evaluation::EachIteration) {
      NoisyEval e = oracle.eval(s.x);
      s.f_hat = std::move(e.f);
      s.j_hat = std::move(e.jac);
      have_eval = true;
      eval_changed = true;
    }
    if (x_changed) {
      s.b = use_b ? problem.map.curvature(s.x) : Matrix();
    }
    s.phi_hat_x = eval_omega(spec, s.f_hat);

    IterateRecord rec;
    rec.k = s.k;
    rec.delta = s.delta;
    rec.delta_lp = s.delta_lp;
    rec.phi_hat = s.phi_hat_x;

    // Optimal bases for the current (f_hat, j_hat) keyed by radius. The
    // optimum for a smaller box is a feasible start for a larger one.
    if (eval_changed) warm.clear();
    auto solve_at = [&](double radius) {
      const LpBasis* start = nullptr;
      double best = -1.0;
      for (const auto& [r, b] : warm) {
        if (r <= radius && r > best) {
          best = r;
          start = &b;
        }
      }
      LpStep st = solve_subproblem(spec, s.f_hat, s.j_hat, radius, start);
      if (st.basis) warm.emplace_back(radius, std::move(*st.basis));
      st.basis.reset();
      return st;
    };

    LpStep lp;
    try {
      if (s.delta_lp == 1.0) {
        lp = solve_at(s.delta_lp);
        psi_hat_1 = std::max(0.0, s.phi_hat_x - lp.model_value);
      } else if (eval_changed && s.delta_lp > 1.0) {
        psi_hat_1 = std::max(0.0, s.phi_hat_x - solve_at(1.0).model_value);
        lp = solve_at(s.delta_lp);
      } else {
        lp = solve_at(s.delta_lp);
        if (eval_changed) psi_hat_1 = std::max(0.0, s.phi_hat_x - solve_at(1.0).model_value);
      }
      rec.psi_hat_1 = psi_hat_1;
      if (cfg.log_true && x_changed) {
        const Vector f = problem.map.eval(s.x);
        phi_true = eval_omega(spec, f);
        psi_true = criticality(spec, f, problem.map.jac(s.x), 1.0);
      }
    } catch (const LpFailure& e) {
      fail(std::string("iteration ") + std::to_string(s.k) + ": " + e.what());
    }
    x_changed = false;
    eval_changed = false;
    rec.phi_true = cfg.log_true ? phi_true : kNaN;
    rec.psi_true_1 = cfg.log_true ? psi_true : kNaN;

    std::optional<Termination> term;
    if (rec.psi_hat_1 < cfg.tol_criticality) {
      term = Termination::Critical;
    } else if (s.delta_lp < cfg.tol_lp_radius) {
      term = Termination::Stalled;
    } else if (s.k >= cfg.max_iter) {
      term = Termination::IterLimit;
    } else if (lp.d.cwiseAbs().maxCoeff() == 0.0) {
      res.warnings.push_back("iteration " + std::to_string(s.k) + ": zero LP step with positive criticality");
      term = Termination::Stalled;
    }
    if (term) {
      rec.termination = term;
      res.records.push_back(rec);
      res.termination = *term;
      break;
    }

    CauchyStep cs;
    try {
      cs = cauchy_search(s, spec, s.b, lp.d, cfg);
    } catch (const CauchyFailure& e) {
      fail(std::string("iteration ") + std::to_string(s.k) + ": " + e.what());
    }
    const Vector d = improve_step(s, spec, s.b, cs.d, cfg);

    if (cfg.check_invariants) {
      const double q_d = model_quadratic(s, spec, s.b, d);
      const double q_c = model_quadratic(s, spec, s.b, cs.d);
      const double psi_lp = s.phi_hat_x - lp.model_value;
      const double slack = 1e-8 * (1.0 + std::abs(s.phi_hat_x));
      const bool ok = s.phi_hat_x - q_d >= s.phi_hat_x - q_c - slack &&
                      s.phi_hat_x - q_c >= cfg.eta * cs.alpha * psi_lp - slack &&
                      cfg.eta * cs.alpha * psi_lp >= cfg.eta * cs.alpha * std::min(s.delta_lp, 1.0) * rec.psi_hat_1 - slack &&
                      d.norm() <= s.delta * (1.0 + 1e-12);
      if (!ok) fail("iteration " + std::to_string(s.k) + ": model-decrease chain violated");
    }

    const Vector x_trial = s.x + d;
    f_trial = oracle.value(x_trial);
    const double phi_trial = eval_omega(spec, f_trial);
    const double rho = stabilized_ratio(s, spec, s.b, d, phi_trial, cfg.vartheta);
    if (rho == -kInf) {
      res.warnings.push_back("iteration " + std::to_string(s.k) + ": zero ratio denominator, step rejected");
    }
    const Radii r = update_radii(s, cfg, rho, cs.alpha, d, cs.d);

    rec.accepted = rho >= cfg.rho_u;
    rec.rho_hat = rho;
    rec.alpha = cs.alpha;
    rec.step_norm_2 = d.norm();
    rec.step_norm_lp = d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
    res.records.push_back(rec);

    if (rec.accepted) {
      s.x = x_trial;
      x_changed = true;
      if (cfg.evaluation == Evaluation::OnAccept) {
        s.f_hat = f_trial;
        s.j_hat = oracle.jacobian(s.x);
        eval_changed = true;
      }
    }
    s.delta = r.delta;
    s.delta_lp = r.delta_lp;
  }
  res.x_final = s.x;
  return res;
}

}  // namespace nslp
