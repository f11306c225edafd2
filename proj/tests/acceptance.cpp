// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any fails. Configurations are pinned inline so edits to
// the shipped configs/ cannot move these results.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "noisyslp/harness.hpp"
#include "noisyslp/rng.hpp"
#include "noisyslp/subproblem.hpp"
#include "noisyslp/verify.hpp"

using namespace nslp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Sweep results do not depend on the job count, so use every core.
int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

RunConfig cfg_from(const char* json) { return parse_run_config(Json::parse(json)); }

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const SweepCell& cell(const std::vector<SweepCell>& cells, bool required, std::optional<double> eps_f = {}) {
  for (const auto& c : cells)
    if (c.vartheta_setting.required == required && (!eps_f || c.eps_f == eps_f)) return c;
  throw std::runtime_error("sweep cell not found");
}

Outcome noiseless() {
  const RunConfig cfg = cfg_from(R"({
    "problem": "quadratic_l1", "noise": {"model": "none"},
    "solver": {"vartheta": 0, "max_iter": 100}})");
  const SolveOutput out = solve_one(cfg, 0);
  const double xinf = out.result.x_final.cwiseAbs().maxCoeff();
  const double psi = out.outcome.psi_true;
  return {psi <= 1e-6 && xinf <= 1e-4 && out.outcome.iterations <= 100,
          "Psi(1)=" + num(psi) + " |x|inf=" + num(xinf) + " iters=" + std::to_string(out.outcome.iterations)};
}

Outcome classical_failure() {
  const RunConfig cfg = cfg_from(R"({
    "problem": "quadratic_l1", "noise": {"model": "ball_uniform", "eps_f": 0.1, "eps_jac": 1e-5},
    "solver": {"max_iter": 50}, "seed_count": 100,
    "sweep": {"vartheta": [0, "required"]}})");
  const auto cells = run_sweep(cfg, jobs());
  const RunSummary& c = cell(cells, false).summary;
  const RunSummary& s = cell(cells, true).summary;
  const bool ok = c.n_stalled >= 25 && c.n_stalled <= 65 && s.n_stalled == 0 && c.n_failed == 0 &&
                  s.n_failed == 0 && s.phi_true.median * 10.0 <= c.phi_true.median;
  return {ok, "classical stalled=" + std::to_string(c.n_stalled) + " median=" + num(c.phi_true.median) +
                  "; stabilized stalled=" + std::to_string(s.n_stalled) + " median=" + num(s.phi_true.median)};
}

Outcome rosenbrock() {
  const RunConfig cfg = cfg_from(R"({
    "problem": "rosenbrock_l1", "noise": {"model": "ball_uniform", "eps_f": 0.1, "eps_jac": 1e-5},
    "solver": {"max_iter": 50}, "seed_count": 100,
    "sweep": {"vartheta": [0, "required"], "eps_f": [1e-3, 1e-2, 1e-1]}})");
  const auto cells = run_sweep(cfg, jobs());
  bool ok = true;
  std::string detail;
  for (double e : {1e-3, 1e-2, 1e-1}) {
    const double mc = cell(cells, false, e).summary.dist_opt.median;
    const double ms = cell(cells, true, e).summary.dist_opt.median;
    ok = ok && (e == 1e-1 ? ms < mc : ms <= mc);
    detail += "eps=" + num(e) + " classical=" + num(mc) + " stabilized=" + num(ms) + "; ";
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome stabilization_ratio() {
  bool ok = true;
  std::string detail;
  for (Index m : {32, 64}) {
    const CompositeProblem p = tv_reconstruction(synthetic_image(m, m));
    const double t1 = required_stabilization(p, ImageRedraw{0.01}, 0.1);
    const double t5 = required_stabilization(p, ImageRedraw{0.05}, 0.1);
    const double t10 = required_stabilization(p, ImageRedraw{0.1}, 0.1);
    const double r1 = t5 / t1, r2 = t10 / t5;
    ok = ok && std::abs(r1 - 5.10) <= 0.02 && std::abs(r2 - 2.049) <= 0.01;
    detail += "M=" + std::to_string(m) + " ratios " + num(r1) + " " + num(r2) + "; ";
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome tv_sweet_spot() {
  const RunConfig cfg = cfg_from(R"({
    "problem": {"name": "tv_reconstruction", "params": {"image": "synthetic:32x32", "lambda": 5e-3}},
    "noise": {"model": "image_redraw", "eps_img": 0.1},
    "solver": {"max_iter": 100, "step_mode": "cauchy_only", "curvature": "zero", "log_true": false},
    "seeds": [0],
    "sweep": {"vartheta": [0, 1e-3, 1e-2, 1e-1, 1, 10, 100, 1e3, 1e4]}})");
  const auto cells = run_sweep(cfg, jobs());
  std::vector<double> phi;
  std::string detail = "phi by vartheta:";
  for (const auto& c : cells) {
    if (c.summary.n_failed > 0) return {false, "run failed at vartheta=" + num(c.vartheta)};
    phi.push_back(c.summary.phi_true.median);
    detail += " " + num(phi.back());
  }
  const double best = *std::min_element(phi.begin(), phi.end());
  return {best <= 0.9 * phi.front() && best <= 0.9 * phi.back(), detail};
}

Outcome hs71() {
  const RunConfig cfg = cfg_from(R"({
    "problem": {"name": "hs71_penalty", "params": {"nu": 100}},
    "noise": {"model": "ball_uniform", "eps_f": 0.1, "eps_jac": 0},
    "solver": {"max_iter": 100, "step_mode": "cauchy_only"}, "seed_count": 10,
    "sweep": {"vartheta": [0, 1e-2, 1e-1, 1, 10, 100, 1e3, 1e4]}})");
  const auto cells = run_sweep(cfg, jobs());
  const double base = cells.front().summary.feasibility.median;
  double best = base, best_v = 0.0;
  for (const auto& c : cells)
    if (c.summary.feasibility.median < best) {
      best = c.summary.feasibility.median;
      best_v = c.vartheta;
    }
  return {best <= base / 3.0, "vartheta=0 median residual=" + num(base) + " best=" + num(best) + " at vartheta=" +
                                  num(best_v)};
}

Outcome inequality_suite() {
  VerifyOptions o;
  o.seed = 0;
  o.instances = 200;
  const auto results = run_verify(o);
  const char* wanted[] = {"critical_normalization", "model_decrease_chain", "exact_model_trial_diff",
                          "linear_zero_convexity", "cauchy_step_size_bound"};
  bool ok = true;
  std::string detail;
  for (const char* w : wanted) {
    auto it = std::find_if(results.begin(), results.end(), [&](const PropertyResult& r) { return r.name == w; });
    if (it == results.end()) return {false, std::string("missing property ") + w};
    ok = ok && it->violations == 0 && it->instances >= 200;
    detail += std::string(w) + " " + std::to_string(it->violations) + "/" + std::to_string(it->instances) + "; ";
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

double unif(Philox& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

LpProblem random_lp(Philox& rng) {
  auto unif = [&](double lo, double hi) { return ::unif(rng, lo, hi); };
  LpProblem p;
  const Index n = std::uniform_int_distribution<Index>(1, 4)(rng);
  const Index m = std::uniform_int_distribution<Index>(0, 6)(rng);
  p.c = Vector(n);
  for (Index i = 0; i < n; ++i) p.c[i] = unif(-1, 1);
  Matrix a(m, n);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = unif(-1, 1);
  p.a_ub = a.sparseView();
  p.b_ub = Vector(m);
  for (Index i = 0; i < m; ++i) p.b_ub[i] = unif(0, 1);  // the origin stays feasible
  p.a_eq = SparseMatrix(0, n);
  p.b_eq = Vector(0);
  p.lower = Vector(n);
  p.upper = Vector(n);
  for (Index i = 0; i < n; ++i) {
    p.lower[i] = -unif(0.1, 2.0);
    p.upper[i] = unif(0.1, 2.0);
  }
  return p;
}

Outcome lp_oracle() {
  Philox rng(20240611, 77);
  int bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const LpProblem p = random_lp(rng);
    const LpSolution r = solve_lp(p);
    const double ref = enumerate_vertices_min(p);
    const double diff = r.status == LpStatus::Optimal ? std::abs(r.objective - ref) : INFINITY;
    worst = std::max(worst, diff);
    bad += !(diff <= 1e-9);
  }
  return {bad == 0, "mismatches=" + std::to_string(bad) + "/500 worst=" + num(worst)};
}

Outcome epi_convergence() {
  const CompositeProblem prob = quadratic_l1();
  const double lw = prob.lipschitz_omega();
  Philox rng(99, 5);
  int bad = 0;
  double worst_ratio = 0.0;
  std::vector<double> bounds;
  for (int p = 0; p < 20; ++p) {
    Vector x(prob.map.n);
    for (Index i = 0; i < x.size(); ++i) x[i] = unif(rng, -1, 1) * std::pow(10.0, unif(rng, -2, 3));
    const double psi = criticality(prob.spec, prob.map.eval(x), prob.map.jac(x), 1.0);
    for (int level = 0; level < 8; ++level) {
      const double eps = 0.1 * std::ldexp(1.0, -level);
      NoisyOracle oracle(prob.map, BallUniform{eps, eps}, 7, static_cast<std::uint64_t>(p * 8 + level));
      const NoisyEval e = oracle.eval(x);
      const double psi_hat = criticality(prob.spec, e.f, e.jac, 1.0);
      const double bound = lw * (eps + eps);
      if (p == 0) bounds.push_back(bound);
      worst_ratio = std::max(worst_ratio, std::abs(psi_hat - psi) / bound);
      bad += std::abs(psi_hat - psi) > bound;
    }
  }
  bool shrinking = true;
  for (std::size_t i = 1; i < bounds.size(); ++i) shrinking = shrinking && bounds[i] < bounds[i - 1];
  shrinking = shrinking && bounds.back() <= bounds.front() / 100.0;
  return {bad == 0 && shrinking,
          "violations=" + std::to_string(bad) + "/160 worst |dPsi|/bound=" + num(worst_ratio) +
              " bound " + num(bounds.front()) + " -> " + num(bounds.back())};
}

Outcome delta_max_order() {
  const CompositeProblem prob = quadratic_l1();
  const NoiseModel noise = BallUniform{0.1, 1e-5};
  SolverConfig cfg;
  cfg.vartheta = required_stabilization(prob, noise, cfg.rho_u);
  const NoiseConstants c = problem_noise_constants(prob, noise);
  const CriticalRegion r = critical_region_constants(c, cfg, cfg.delta_0);
  return {!r.degenerate && r.delta_max >= 6e2 && r.delta_max <= 6e4,
          "delta_max=" + num(r.delta_max) + " vartheta*=" + num(cfg.vartheta)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "noiseless_correctness", 1, noiseless},
      {2, "classical_failure_statistic", 30, classical_failure},
      {3, "rosenbrock_comparison", 60, rosenbrock},
      {4, "stabilization_formula_ratio", 1, stabilization_ratio},
      {5, "tv_sweet_spot", 600, tv_sweet_spot},
      {6, "hs71_improvement", 60, hs71},
      {7, "inequality_suite", 60, inequality_suite},
      {8, "lp_oracle_equivalence", 10, lp_oracle},
      {9, "epi_convergence", 10, epi_convergence},
      {10, "delta_max_order", 1, delta_max_order},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool ok = o.pass && in_time;
    failures += !ok;
    std::printf("%s %2d %s [%.2fs, budget %.0fs%s] %s\n", ok ? "PASS" : "FAIL", c.id, c.name, secs, c.budget_s,
                in_time ? "" : ", over budget", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
