#include "noisyslp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "noisyslp/harness.hpp"
#include "noisyslp/solver.hpp"
#include "noisyslp/subproblem.hpp"

namespace nslp {

namespace {

constexpr double kSlack = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

class Rand {
 public:
  Rand(std::uint64_t seed, std::uint64_t stream) : g_(seed, stream) {}

  double unif(double a, double b) { return std::uniform_real_distribution<double>(a, b)(g_); }
  double log_unif(double a, double b) { return std::exp(unif(std::log(a), std::log(b))); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(g_); }
  Vector vec(Index n, double a, double b) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = unif(a, b);
    return v;
  }
  Matrix mat(Index r, Index c, double a, double b) {
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) m(i, j) = unif(a, b);
    return m;
  }
  /// Uniform direction scaled to the given l2 norm.
  Vector direction(Index n, double norm) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Vector v(n);
    do {
      for (Index i = 0; i < n; ++i) v[i] = nd(g_);
    } while (v.norm() == 0.0);
    return v * (norm / v.norm());
  }
  Philox& gen() { return g_; }

 private:
  Philox g_;
};

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json mat_json(const Matrix& m) {
  Json a = Json::array();
  for (Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

/// Symmetric matrix with spectral norm exactly beta (zero when beta == 0).
Matrix random_curvature(Rand& r, Index n, double beta) {
  if (beta == 0.0) return Matrix::Zero(n, n);
  const Matrix m = r.mat(n, n, -1.0, 1.0);
  Matrix s = 0.5 * (m + m.transpose());
  const double nrm = Eigen::SelfAdjointEigenSolver<Matrix>(s, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
  if (nrm == 0.0) return beta * Matrix::Identity(n, n);
  return s * (beta / nrm);
}

struct Instance {
  PolyhedralSpec spec;
  Vector f;
  Matrix j;
};

Instance random_instance(Rand& r) {
  Instance in;
  const Index n = r.integer(1, 4);
  const int kind = r.integer(0, 2);
  if (kind == 0) {
    in.spec = PolyhedralSpec::penalty(r.unif(0.1, 3.0), r.integer(0, 2), r.integer(0, 2));
  } else if (kind == 1) {
    const Index p = r.integer(1, 4);
    std::vector<AffinePiece> pieces;
    const int k = r.integer(1, 4);
    for (int i = 0; i < k; ++i) pieces.push_back({r.vec(p, -2.0, 2.0), r.unif(-1.0, 1.0)});
    in.spec = PolyhedralSpec::max_affine(std::move(pieces));
  } else {
    in.spec = PolyhedralSpec::identity();
  }
  const Index p = in.spec.dim();
  in.f = r.vec(p, -3.0, 3.0);
  in.j = r.mat(p, n, -2.0, 2.0);
  return in;
}

Json instance_json(const Instance& in) {
  return {{"spec", to_json(in.spec)}, {"f_hat", vec_json(in.f)}, {"j_hat", mat_json(in.j)}};
}

SolverState state_of(const Instance& in, double delta, double delta_lp) {
  SolverState s;
  s.x = Vector::Zero(in.j.cols());
  s.f_hat = in.f;
  s.j_hat = in.j;
  s.phi_hat_x = eval_omega(in.spec, in.f);
  s.delta = delta;
  s.delta_lp = delta_lp;
  return s;
}

class Tally {
 public:
  Tally(std::string name, bool informational = false) {
    r_.name = std::move(name);
    r_.informational = informational;
    r_.worst_slack = kInf;
  }
  void check(double lhs, double rhs, const std::function<Json()>& replay) {
    ++r_.instances;
    const double slack = rhs - lhs;
    r_.worst_slack = std::min(r_.worst_slack, slack);
    if (!(slack >= 0.0)) {
      if (r_.violations == 0) {
        r_.first_violation = replay();
        r_.first_violation["lhs"] = lhs;
        r_.first_violation["rhs"] = rhs;
      }
      ++r_.violations;
    }
  }
  PropertyResult& result() { return r_; }

 private:
  PropertyResult r_;
};

PropertyResult check_critical_normalization(const VerifyOptions& o) {
  Tally t("critical_normalization");
  Rand r(o.seed, 1);
  for (int i = 0; i < o.instances; ++i) {
    const Instance in = random_instance(r);
    const double psi1 = criticality(in.spec, in.f, in.j, 1.0);
    double lhs = -kInf, rhs = kInf;
    double worst = kInf;
    for (double d : {0.1, 0.5, 2.0, 10.0}) {
      const double psid = criticality(in.spec, in.f, in.j, d);
      const double bound = std::min(d, 1.0) * psi1 - kSlack * (1.0 + psi1);
      if (psid - bound < worst) {
        worst = psid - bound;
        lhs = bound;
        rhs = psid;
      }
    }
    t.check(lhs, rhs, [&] {
      Json j = instance_json(in);
      j["index"] = i;
      return j;
    });
  }
  return t.result();
}

PropertyResult check_model_decrease(const VerifyOptions& o) {
  Tally t("model_decrease_chain");
  Rand r(o.seed, 2);
  SolverConfig cfg;
  for (int i = 0; i < o.instances;) {
    const Instance in = random_instance(r);
    const double beta = r.unif(0.0, 10.0);
    const Matrix b = random_curvature(r, in.j.cols(), beta);
    const double delta = r.log_unif(1e-2, 5.0);
    const double delta_lp = r.log_unif(1e-2, 10.0);
    const double psi1 = criticality(in.spec, in.f, in.j, 1.0);
    if (psi1 < 1e-9) continue;  // the solver terminates before stepping
    ++i;
    const SolverState s = state_of(in, delta, delta_lp);
    const LpStep lp = solve_subproblem(in.spec, in.f, in.j, delta_lp);
    const CauchyStep cs = cauchy_search(s, in.spec, b, lp.d, cfg);
    const Vector d = improve_step(s, in.spec, b, cs.d, cfg);
    const double phi = s.phi_hat_x;
    const double dec_d = phi - model_quadratic(s, in.spec, b, d);
    const double dec_c = phi - model_quadratic(s, in.spec, b, cs.d);
    const double psi_lp = phi - lp.model_value;
    const double c1 = dec_d - dec_c;
    const double c2 = dec_c - cfg.eta * cs.alpha * psi_lp;
    const double c3 = cfg.eta * cs.alpha * psi_lp - cfg.eta * cs.alpha * std::min(delta_lp, 1.0) * psi1;
    const double c4 = delta - d.norm();
    const double worst = std::min({c1, c2, c3, c4 / std::max(1.0, delta)});
    t.check(-worst, kSlack, [&] {
      Json j = instance_json(in);
      j["index"] = i - 1;
      j["b"] = mat_json(b);
      j["delta"] = delta;
      j["delta_lp"] = delta_lp;
      j["d"] = vec_json(d);
      j["d_c"] = vec_json(cs.d);
      j["alpha"] = cs.alpha;
      return j;
    });
  }
  return t.result();
}

PropertyResult check_error_bound(const VerifyOptions& o) {
  Tally t("exact_model_trial_diff");
  Rand r(o.seed, 3);
  const CompositeProblem prob = quadratic_l1();
  const double lw = prob.lipschitz_omega();
  for (int i = 0; i < o.instances; ++i) {
    const double eps_f = r.unif(0.0, 0.1);
    const double eps_fp = r.unif(0.0, 1e-3);
    const double beta = r.log_unif(1e-3, 1.0);
    const Index n = prob.map.n;
    const Matrix b = (i % 2 == 0) ? Matrix(-beta * Matrix::Identity(n, n)) : random_curvature(r, n, beta);
    const Vector x = r.direction(n, r.unif(0.0, 1000.0));
    const Vector d = r.direction(n, r.log_unif(1e-3, 100.0));
    MapConstants mc = prob.map.constants;
    mc.beta = beta;
    NoiseConstants c = make_noise_constants(lw, mc, {eps_f, eps_fp}, n);
    if (o.inject == Mutation::M2Half) c.m2 *= 0.5;

    NoisyOracle oracle(prob.map, BallUniform{eps_f, eps_fp}, o.seed, 1000 + static_cast<std::uint64_t>(i));
    const NoisyEval e = oracle.eval(x);
    const double phi_trial = eval_omega(prob.spec, oracle.value(x + d));
    SolverState s;
    s.x = x;
    s.f_hat = e.f;
    s.j_hat = e.jac;
    const double q = model_quadratic(s, prob.spec, b, d);
    const double nd = d.norm();
    t.check(std::abs(phi_trial - q), c.m0 + c.m1 * nd + c.m2 * nd * nd + kSlack, [&] {
      return Json{{"index", i},          {"problem", "quadratic_l1"}, {"x", vec_json(x)},
                  {"d", vec_json(d)},    {"b", mat_json(b)},          {"eps_f", eps_f},
                  {"eps_fprime", eps_fp}, {"beta", beta},              {"m0", c.m0},
                  {"m1", c.m1},          {"m2", c.m2},                {"oracle_seed", o.seed},
                  {"oracle_stream", 1000 + i}};
    });
  }
  return t.result();
}

std::vector<PropertyResult> check_linear_zero(const VerifyOptions& o) {
  Tally t("linear_zero_convexity");
  Tally lit("linear_zero_convexity_literal_constant", true);
  Rand r(o.seed, 4);
  const CompositeProblem prob = quadratic_l1();
  const double lw = prob.lipschitz_omega();
  const Index n = prob.map.n;
  const double gamma = std::sqrt(static_cast<double>(n));
  for (int i = 0; i < o.instances; ++i) {
    const double eps_f = r.unif(0.0, 0.1);
    const double eps_fp = r.unif(0.0, 1e-3);
    const Vector x = r.direction(n, r.unif(0.0, 2000.0));
    const Vector d = r.direction(n, r.log_unif(1e-3, 100.0));
    NoisyOracle oracle(prob.map, BallUniform{eps_f, eps_fp}, o.seed, 2000 + static_cast<std::uint64_t>(i));
    const NoisyEval e = oracle.eval(x);
    SolverState s;
    s.f_hat = e.f;
    s.j_hat = e.jac;
    const double lhs = std::abs(model_linear(s, prob.spec, d) - model_linear(s, prob.spec, Vector::Zero(n)));
    const double dlp = d.cwiseAbs().maxCoeff();
    const NoiseConstants c = make_noise_constants(lw, prob.map.constants, {eps_f, eps_fp}, n);
    auto replay = [&] {
      return Json{{"index", i}, {"x", vec_json(x)}, {"d", vec_json(d)}, {"eps_f", eps_f}, {"eps_fprime", eps_fp},
                  {"oracle_seed", o.seed}, {"oracle_stream", 2000 + i}};
    };
    t.check(lhs, c.l_ell * dlp + kSlack, replay);
    const double literal = gamma * lw * (*prob.map.constants.lip_fprime + eps_fp);
    lit.check(lhs, literal * dlp + kSlack, replay);
  }
  lit.result().note = "gamma L^w (L^F' + eps_F') in place of gamma L^w (L^F + eps_F')";
  return {t.result(), lit.result()};
}

PropertyResult check_cauchy_bound(const VerifyOptions& o) {
  Tally t("cauchy_step_size_bound");
  Rand r(o.seed, 5);
  const CompositeProblem prob = quadratic_l1();
  const double lw = prob.lipschitz_omega();
  const Index n = prob.map.n;
  SolverConfig cfg;
  for (int i = 0; i < o.instances;) {
    const double eps_f = r.unif(0.0, 0.1);
    const double eps_fp = r.unif(0.0, 1e-3);
    const double beta = r.log_unif(1e-4, 1.0);
    const Matrix b = random_curvature(r, n, beta);
    const Vector x = r.direction(n, r.unif(0.0, 1000.0));
    const double delta = r.log_unif(1e-3, 10.0);
    const double delta_lp = r.log_unif(1e-3, 10.0);
    const auto stream = 3000 + static_cast<std::uint64_t>(i);
    NoisyOracle oracle(prob.map, BallUniform{eps_f, eps_fp}, o.seed, stream);
    const NoisyEval e = oracle.eval(x);
    const double psi1 = criticality(prob.spec, e.f, e.jac, 1.0);
    if (psi1 < 1e-9) continue;
    ++i;
    MapConstants mc = prob.map.constants;
    mc.beta = beta;
    const NoiseConstants c = make_noise_constants(lw, mc, {eps_f, eps_fp}, n);
    SolverState s;
    s.x = x;
    s.f_hat = e.f;
    s.j_hat = e.jac;
    s.phi_hat_x = eval_omega(prob.spec, e.f);
    s.delta = delta;
    s.delta_lp = delta_lp;
    const LpStep lp = solve_subproblem(prob.spec, e.f, e.jac, delta_lp);
    const CauchyStep cs = cauchy_search(s, prob.spec, b, lp.d, cfg);
    const double g = c.gamma;
    const double bound =
        std::min({delta / g, delta_lp, psi1 / c.l_ell,
                  std::min(1.0, 1.0 / delta_lp) * 2.0 * (1.0 - cfg.eta) * cfg.tau * psi1 / (beta * g * g)});
    t.check(bound - kSlack, cs.d.cwiseAbs().maxCoeff(), [&] {
      return Json{{"index", i - 1}, {"x", vec_json(x)},     {"b", mat_json(b)},         {"beta", beta},
                  {"delta", delta}, {"delta_lp", delta_lp}, {"eps_f", eps_f},          {"eps_fprime", eps_fp},
                  {"psi_hat_1", psi1}, {"alpha", cs.alpha}, {"oracle_seed", o.seed}, {"oracle_stream", stream}};
    });
  }
  return t.result();
}

std::vector<PropertyResult> check_epi(const VerifyOptions& o) {
  Tally t("epi_convergence");
  Tally z("noiseless_identity");
  Rand r(o.seed, 6);
  const CompositeProblem prob = quadratic_l1();
  const double lw = prob.lipschitz_omega();
  const Index n = prob.map.n;
  for (int p = 0; p < 20; ++p) {
    const Vector x = r.direction(n, r.log_unif(1e-2, 1000.0));
    const Vector f = prob.map.eval(x);
    const Matrix jac = prob.map.jac(x);
    const double psi = criticality(prob.spec, f, jac, 1.0);
    for (int level = 0; level < 8; ++level) {
      const double eps = 0.1 * std::ldexp(1.0, -level);
      const auto stream = 4000 + static_cast<std::uint64_t>(p * 8 + level);
      NoisyOracle oracle(prob.map, BallUniform{eps, eps}, o.seed, stream);
      const NoisyEval e = oracle.eval(x);
      const double psi_hat = criticality(prob.spec, e.f, e.jac, 1.0);
      t.check(std::abs(psi_hat - psi), lw * (eps + eps) + kSlack, [&] {
        return Json{{"point", p}, {"x", vec_json(x)}, {"eps", eps}, {"psi", psi}, {"psi_hat", psi_hat},
                    {"oracle_seed", o.seed}, {"oracle_stream", stream}};
      });
    }
  }
  for (int i = 0; i < o.instances; ++i) {
    const Vector x = r.direction(n, r.log_unif(1e-2, 1000.0));
    NoisyOracle oracle(prob.map, NoNoise{}, o.seed, 0);
    const NoisyEval e = oracle.eval(x);
    const double a = criticality(prob.spec, e.f, e.jac, 1.0);
    const double b = criticality(prob.spec, prob.map.eval(x), prob.map.jac(x), 1.0);
    z.check(std::abs(a - b), 0.0, [&] { return Json{{"index", i}, {"x", vec_json(x)}}; });
  }
  return {t.result(), z.result()};
}

LpProblem random_lp(Rand& r) {
  LpProblem p;
  const Index n = r.integer(1, 4);
  const Index m = r.integer(0, 6);
  p.c = r.vec(n, -1.0, 1.0);
  const Matrix a = r.mat(m, n, -1.0, 1.0);
  p.a_ub = a.sparseView();
  p.b_ub = r.vec(m, -0.5, 1.0);
  p.a_eq.resize(0, n);
  p.b_eq.resize(0);
  p.lower.resize(n);
  p.upper.resize(n);
  for (Index j = 0; j < n; ++j) {
    const double lo = r.unif(-2.0, 0.5);
    p.lower[j] = lo;
    p.upper[j] = lo + r.unif(0.1, 3.0);
  }
  return p;
}

PropertyResult check_lp(const VerifyOptions& o) {
  Tally t("lp_vertex_enumeration");
  Rand r(o.seed, 7);
  for (int i = 0; i < o.lp_instances; ++i) {
    const LpProblem p = random_lp(r);
    const double ref = enumerate_vertices_min(p);
    const LpSolution sol = solve_lp(p);
    double err = 0.0;
    if (std::isinf(ref)) {
      err = sol.status == LpStatus::Infeasible ? 0.0 : kInf;
    } else {
      err = sol.status == LpStatus::Optimal ? std::abs(sol.objective - ref) : kInf;
    }
    t.check(err, 1e-9, [&] {
      return Json{{"index", i},
                  {"c", vec_json(p.c)},
                  {"a_ub", mat_json(Matrix(p.a_ub))},
                  {"b_ub", vec_json(p.b_ub)},
                  {"lower", vec_json(p.lower)},
                  {"upper", vec_json(p.upper)},
                  {"status", std::string(to_string(sol.status))},
                  {"enumerated", std::isinf(ref) ? Json("infeasible") : Json(ref)}};
    });
  }
  return t.result();
}

}  // namespace

double enumerate_vertices_min(const LpProblem& p, double tol) {
  const Index n = p.num_vars();
  require(p.a_eq.rows() == 0, "vertex enumeration supports inequality rows only");
  require(p.lower.allFinite() && p.upper.allFinite(), "vertex enumeration needs finite bounds");
  const Matrix a(p.a_ub);
  const Index m = a.rows();
  // Constraint k: g_k . x <= h_k.
  Matrix g(m + 2 * n, n);
  Vector h(m + 2 * n);
  g.topRows(m) = a;
  h.head(m) = p.b_ub;
  for (Index j = 0; j < n; ++j) {
    g.row(m + j) = Vector::Unit(n, j).transpose();
    h[m + j] = p.upper[j];
    g.row(m + n + j) = -Vector::Unit(n, j).transpose();
    h[m + n + j] = -p.lower[j];
  }
  const Index total = g.rows();
  double best = kInf;
  std::vector<Index> pick(static_cast<std::size_t>(n));
  std::function<void(Index, Index)> rec = [&](Index start, Index depth) {
    if (depth == n) {
      Matrix sub(n, n);
      Vector rhs(n);
      for (Index k = 0; k < n; ++k) {
        sub.row(k) = g.row(pick[static_cast<std::size_t>(k)]);
        rhs[k] = h[pick[static_cast<std::size_t>(k)]];
      }
      Eigen::FullPivLU<Matrix> lu(sub);
      if (lu.rank() < n) return;
      const Vector x = lu.solve(rhs);
      if (((g * x - h).array() <= tol * (1.0 + h.cwiseAbs().array())).all()) best = std::min(best, p.c.dot(x));
      return;
    }
    for (Index k = start; k < total; ++k) {
      pick[static_cast<std::size_t>(depth)] = k;
      rec(k + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

std::vector<PropertyResult> run_verify(const VerifyOptions& opts) {
  require(opts.instances >= 1 && opts.lp_instances >= 1, "instance counts must be positive");
  std::vector<PropertyResult> out;
  out.push_back(check_critical_normalization(opts));
  out.push_back(check_model_decrease(opts));
  out.push_back(check_error_bound(opts));
  for (auto& r : check_linear_zero(opts)) out.push_back(std::move(r));
  out.push_back(check_cauchy_bound(opts));
  for (auto& r : check_epi(opts)) out.push_back(std::move(r));
  out.push_back(check_lp(opts));
  return out;
}

int cmd_verify(const VerifyOptions& opts, const std::optional<std::string>& out_dir, std::ostream& out,
               std::ostream& err) {
  std::vector<PropertyResult> results;
  try {
    results = run_verify(opts);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  bool all_ok = true;
  for (const auto& r : results) {
    const bool ok = r.violations == 0;
    const char* tag = r.informational ? "INFO" : (ok ? "PASS" : "FAIL");
    out << tag << ' ' << r.name << " instances=" << r.instances << " violations=" << r.violations
        << " worst_slack=" << format_double(r.worst_slack);
    if (!r.note.empty()) out << " (" << r.note << ")";
    out << '\n';
    if (ok || r.informational) continue;
    all_ok = false;
    try {
      namespace fs = std::filesystem;
      const fs::path dir = out_dir ? fs::path(*out_dir) : fs::path(default_output_dir());
      fs::create_directories(dir);
      const fs::path file = dir / ("verify_failure_" + r.name + ".json");
      Json j = {{"property", r.name},
                {"seed", opts.seed},
                {"mutation", opts.inject == Mutation::M2Half ? "m2-half" : "none"},
                {"instance", r.first_violation}};
      std::ofstream f(file);
      f << j.dump(2) << '\n';
      out << "  failing instance written to " << file.string() << '\n';
    } catch (const std::exception& e) {
      err << "warning: could not serialize failing instance: " << e.what() << '\n';
    }
  }
  return all_ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace nslp
