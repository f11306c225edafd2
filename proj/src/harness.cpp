#include "noisyslp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <initializer_list>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>

#include "noisyslp/subproblem.hpp"

namespace nslp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Json num_json(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

Json quartiles_json(const Quartiles& q) {
  return {{"q1", num_json(q.q1)}, {"median", num_json(q.median)}, {"q3", num_json(q.q3)}, {"count", q.count}};
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

// Quotes a CSV field when needed.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

/// Refuses to write over the config that is being run.
void check_outputs(const std::string& config_path, const std::string& prefix,
                   std::initializer_list<const char*> suffixes) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path cfg = fs::weakly_canonical(config_path, ec);
  if (ec) return;
  for (const char* suf : suffixes) {
    const fs::path target = fs::weakly_canonical(prefix + suf, ec);
    if (!ec && target == cfg) {
      throw std::runtime_error("output " + target.string() + " would overwrite the config; choose another --output");
    }
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string iterate_csv_header() {
  return "seed,k,accepted,rho_hat,alpha,step_norm_2,step_norm_lp,delta,delta_lp,phi_hat,phi_true,psi_hat_1,"
         "psi_true_1,termination";
}

void write_iterate_csv(std::ostream& os, std::uint64_t seed, const std::vector<IterateRecord>& records, bool header) {
  if (header) os << iterate_csv_header() << '\n';
  for (const auto& r : records) {
    os << seed << ',' << r.k << ',' << (r.accepted ? 1 : 0) << ',' << format_double(r.rho_hat) << ','
       << format_double(r.alpha) << ',' << format_double(r.step_norm_2) << ',' << format_double(r.step_norm_lp) << ','
       << format_double(r.delta) << ',' << format_double(r.delta_lp) << ',' << format_double(r.phi_hat) << ','
       << format_double(r.phi_true) << ',' << format_double(r.psi_hat_1) << ',' << format_double(r.psi_true_1)
       << ',' << (r.termination ? to_string(*r.termination) : "") << '\n';
  }
}

SeedOutcome make_outcome(const CompositeProblem& problem, std::uint64_t seed, const RunResult& r) {
  SeedOutcome o;
  o.seed = seed;
  o.ok = true;
  o.termination = r.termination;
  o.iterations = r.records.empty() ? 0 : r.records.back().k;
  const Vector f = problem.map.eval(r.x_final);
  o.phi_true = eval_omega(problem.spec, f);
  o.psi_true = criticality(problem.spec, f, problem.map.jac(r.x_final), 1.0);
  o.phi_hat = r.records.empty() ? kNaN : r.records.back().phi_hat;
  o.psi_hat = r.records.empty() ? kNaN : r.records.back().psi_hat_1;
  o.dist_opt = problem.known_optimum ? (r.x_final - *problem.known_optimum).norm() : kNaN;
  o.feasibility = problem.feasibility_residual ? problem.feasibility_residual(r.x_final) : kNaN;
  return o;
}

SeedOutcome make_failure(std::uint64_t seed, const std::string& error, const std::vector<IterateRecord>& partial) {
  SeedOutcome o;
  o.seed = seed;
  o.ok = false;
  o.error = error;
  o.iterations = partial.empty() ? 0 : partial.back().k;
  o.phi_true = o.phi_hat = o.psi_true = o.psi_hat = o.dist_opt = o.feasibility = kNaN;
  return o;
}

Quartiles quartiles(std::vector<double> xs) {
  xs.erase(std::remove_if(xs.begin(), xs.end(), [](double v) { return !std::isfinite(v); }), xs.end());
  Quartiles q;
  q.count = static_cast<int>(xs.size());
  if (xs.empty()) {
    q.q1 = q.median = q.q3 = kNaN;
    return q;
  }
  std::sort(xs.begin(), xs.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return xs[lo] + w * (xs[hi] - xs[lo]);
  };
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  return q;
}

RunSummary summarize(std::vector<SeedOutcome> runs) {
  RunSummary s;
  s.runs = std::move(runs);
  std::vector<double> a, b, c, d, e, f;
  for (const auto& o : s.runs) {
    if (!o.ok) {
      ++s.n_failed;
      continue;
    }
    switch (*o.termination) {
      case Termination::Critical: ++s.n_critical; break;
      case Termination::Stalled: ++s.n_stalled; break;
      case Termination::IterLimit: ++s.n_iterlimit; break;
    }
    a.push_back(o.phi_true);
    b.push_back(o.phi_hat);
    c.push_back(o.psi_true);
    d.push_back(o.psi_hat);
    e.push_back(o.dist_opt);
    f.push_back(o.feasibility);
  }
  s.phi_true = quartiles(a);
  s.phi_hat = quartiles(b);
  s.psi_true = quartiles(c);
  s.psi_hat = quartiles(d);
  s.dist_opt = quartiles(e);
  s.feasibility = quartiles(f);
  return s;
}

Json to_json(const SeedOutcome& o) {
  Json j = {{"seed", o.seed},
            {"ok", o.ok},
            {"termination", o.termination ? Json(to_string(*o.termination)) : Json(nullptr)},
            {"iterations", o.iterations},
            {"phi_true", num_json(o.phi_true)},
            {"phi_hat", num_json(o.phi_hat)},
            {"psi_true", num_json(o.psi_true)},
            {"psi_hat", num_json(o.psi_hat)},
            {"dist_opt", num_json(o.dist_opt)},
            {"feasibility", num_json(o.feasibility)}};
  if (!o.ok) j["error"] = o.error;
  return j;
}

Json to_json(const RunSummary& s) {
  Json runs = Json::array();
  for (const auto& o : s.runs) runs.push_back(to_json(o));
  return {{"runs", runs},
          {"counts",
           {{"seeds", s.runs.size()},
            {"failed", s.n_failed},
            {"critical", s.n_critical},
            {"stalled", s.n_stalled},
            {"iter_limit", s.n_iterlimit}}},
          {"phi_true", quartiles_json(s.phi_true)},
          {"phi_hat", quartiles_json(s.phi_hat)},
          {"psi_true", quartiles_json(s.psi_true)},
          {"psi_hat", quartiles_json(s.psi_hat)},
          {"dist_opt", quartiles_json(s.dist_opt)},
          {"feasibility", quartiles_json(s.feasibility)}};
}

SolveOutput solve_one(const RunConfig& cfg, std::uint64_t seed) {
  const CompositeProblem problem = make_problem(cfg.problem);
  SolveOutput out;
  SolverConfig sc = cfg.solver;
  out.vartheta = resolve_vartheta(cfg.vartheta, problem, cfg.noise, sc.rho_u);
  sc.vartheta = out.vartheta;
  out.result = run(problem, cfg.noise, sc, seed, cfg.stream);
  out.outcome = make_outcome(problem, seed, out.result);
  return out;
}

std::vector<SweepCell> run_sweep(const RunConfig& cfg, int jobs) {
  require(jobs >= 1, "jobs must be at least 1");
  const CompositeProblem problem = make_problem(cfg.problem);

  std::vector<VarthetaSetting> vts = cfg.sweep.vartheta;
  if (vts.empty()) vts.push_back(cfg.vartheta);
  std::vector<std::optional<double>> efs, eis;
  for (double v : cfg.sweep.eps_f) efs.emplace_back(v);
  for (double v : cfg.sweep.eps_img) eis.emplace_back(v);
  if (efs.empty()) efs.emplace_back();
  if (eis.empty()) eis.emplace_back();

  std::vector<SweepCell> cells;
  for (const auto& vt : vts) {
    for (const auto& ef : efs) {
      for (const auto& ei : eis) {
        SweepCell c;
        c.index = cells.size();
        c.vartheta_setting = vt;
        c.eps_f = ef;
        c.eps_img = ei;
        c.noise = cfg.noise;
        if (ef) {
          const auto* b = std::get_if<BallUniform>(&cfg.noise);
          c.noise = BallUniform{*ef, b ? b->eps_jac : 0.0};
        }
        if (ei) c.noise = ImageRedraw{*ei};
        c.vartheta = resolve_vartheta(vt, problem, c.noise, cfg.solver.rho_u);
        c.stream = cfg.stream + c.index;
        cells.push_back(std::move(c));
      }
    }
  }

  const std::size_t ns = cfg.seeds.size();
  std::vector<SeedOutcome> outcomes(cells.size() * ns);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= outcomes.size()) return;
      const SweepCell& c = cells[t / ns];
      const std::uint64_t seed = cfg.seeds[t % ns];
      SolverConfig sc = cfg.solver;
      sc.vartheta = c.vartheta;
      try {
        outcomes[t] = make_outcome(problem, seed, run(problem, c.noise, sc, seed, c.stream));
      } catch (const SolverError& e) {
        outcomes[t] = make_failure(seed, e.what(), e.records);
      } catch (const std::exception& e) {
        outcomes[t] = make_failure(seed, e.what(), {});
      }
    }
  };
  const int nthreads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), outcomes.size()));
  std::vector<std::thread> pool;
  for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::vector<SeedOutcome> runs(outcomes.begin() + static_cast<std::ptrdiff_t>(i * ns),
                                  outcomes.begin() + static_cast<std::ptrdiff_t>((i + 1) * ns));
    cells[i].summary = summarize(std::move(runs));
  }
  return cells;
}

std::string sweep_runs_csv_header() {
  return "cell,vartheta,eps_f,eps_img,stream,seed,status,termination,iterations,phi_true,phi_hat,psi_true,psi_hat,"
         "dist_opt,feasibility,error";
}

void write_sweep_runs_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
  os << sweep_runs_csv_header() << '\n';
  for (const auto& c : cells) {
    for (const auto& o : c.summary.runs) {
      os << c.index << ',' << format_double(c.vartheta) << ',' << opt_double(c.eps_f) << ',' << opt_double(c.eps_img)
         << ',' << c.stream << ',' << o.seed << ',' << (o.ok ? "ok" : "error") << ','
         << (o.termination ? to_string(*o.termination) : "") << ',' << o.iterations << ','
         << format_double(o.phi_true) << ',' << format_double(o.phi_hat) << ',' << format_double(o.psi_true) << ','
         << format_double(o.psi_hat) << ',' << format_double(o.dist_opt) << ',' << format_double(o.feasibility)
         << ',' << csv_field(o.error) << '\n';
    }
  }
}

std::string sweep_summary_csv_header() {
  std::string h = "cell,vartheta,eps_f,eps_img,stream,seeds,failed,critical,stalled,iter_limit";
  for (const char* m : {"phi_true", "phi_hat", "psi_true", "psi_hat", "dist_opt", "feasibility"}) {
    for (const char* q : {"q1", "median", "q3"}) h += std::string(",") + m + "_" + q;
  }
  return h;
}

void write_sweep_summary_csv(std::ostream& os, const std::vector<SweepCell>& cells) {
  os << sweep_summary_csv_header() << '\n';
  for (const auto& c : cells) {
    const RunSummary& s = c.summary;
    os << c.index << ',' << format_double(c.vartheta) << ',' << opt_double(c.eps_f) << ',' << opt_double(c.eps_img)
       << ',' << c.stream << ',' << s.runs.size() << ',' << s.n_failed << ',' << s.n_critical << ',' << s.n_stalled
       << ',' << s.n_iterlimit;
    for (const Quartiles* q : {&s.phi_true, &s.phi_hat, &s.psi_true, &s.psi_hat, &s.dist_opt, &s.feasibility}) {
      os << ',' << format_double(q->q1) << ',' << format_double(q->median) << ',' << format_double(q->q3);
    }
    os << '\n';
  }
}

Json sweep_to_json(const RunConfig& cfg, const std::vector<SweepCell>& cells) {
  Json arr = Json::array();
  for (const auto& c : cells) {
    arr.push_back({{"cell", c.index},
                   {"vartheta_setting", to_json(c.vartheta_setting)},
                   {"vartheta", num_json(c.vartheta)},
                   {"eps_f", c.eps_f ? Json(*c.eps_f) : Json(nullptr)},
                   {"eps_img", c.eps_img ? Json(*c.eps_img) : Json(nullptr)},
                   {"noise", to_json(c.noise)},
                   {"stream", c.stream},
                   {"summary", to_json(c.summary)}});
  }
  return {{"config", to_json(cfg)}, {"cells", arr}};
}

std::string default_output_dir() {
  const char* env = std::getenv("NOISYSLP_OUTPUT_DIR");
  return (env && *env) ? std::string(env) : std::string(".");
}

std::string resolve_output_prefix(const RunConfig& cfg, const std::optional<std::string>& override_prefix,
                                  const std::string& suffix) {
  namespace fs = std::filesystem;
  std::string prefix = override_prefix ? *override_prefix : cfg.output;
  if (prefix.empty()) prefix = cfg.problem.name + suffix;
  fs::path p(prefix);
  if (p.is_relative()) p = fs::path(default_output_dir()) / p;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p.string();
}

int cmd_solve(const std::string& config_path, const std::optional<std::string>& output,
              std::optional<std::uint64_t> seed, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_run_config(config_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  const std::uint64_t s = seed.value_or(cfg.seeds.front());
  try {
    const std::string prefix = resolve_output_prefix(cfg, output, "_solve");
    check_outputs(config_path, prefix, {".csv", ".json"});
    SolveOutput so;
    std::vector<IterateRecord> records;
    std::string failure;
    try {
      so = solve_one(cfg, s);
      records = so.result.records;
    } catch (const SolverError& e) {
      failure = e.what();
      records = e.records;
    }
    {
      auto f = open_out(prefix + ".csv");
      write_iterate_csv(f, s, records);
    }
    Json j = {{"config", to_json(cfg)}, {"seed", s}, {"stream", cfg.stream}};
    if (!failure.empty()) {
      j["error"] = failure;
      j["records"] = records.size();
      auto f = open_out(prefix + ".json");
      f << j.dump(2) << '\n';
      err << "error: " << failure << '\n';
      return kExitError;
    }
    j["vartheta"] = num_json(so.vartheta);
    j["outcome"] = to_json(so.outcome);
    j["records"] = records.size();
    Json x = Json::array();
    for (Index i = 0; i < so.result.x_final.size(); ++i) x.push_back(so.result.x_final[i]);
    j["x_final"] = x;
    j["warnings"] = so.result.warnings;
    {
      auto f = open_out(prefix + ".json");
      f << j.dump(2) << '\n';
    }
    out << "termination=" << to_string(so.result.termination) << " iterations=" << so.outcome.iterations
        << " phi_true=" << format_double(so.outcome.phi_true) << " psi_true_1=" << format_double(so.outcome.psi_true)
        << '\n'
        << "wrote " << prefix << ".csv and " << prefix << ".json\n";
    for (const auto& w : so.result.warnings) err << "warning: " << w << '\n';
    return so.result.termination == Termination::Stalled ? kExitStalled : kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_sweep(const std::string& config_path, int jobs, const std::optional<std::string>& output, std::ostream& out,
              std::ostream& err) {
  try {
    const RunConfig cfg = load_run_config(config_path);
    if (cfg.sweep.empty()) {
      err << "error: sweep needs at least one axis in \"sweep\"\n";
      return kExitError;
    }
    const std::string prefix = resolve_output_prefix(cfg, output, "_sweep");
    check_outputs(config_path, prefix, {"_runs.csv", "_summary.csv", ".json"});
    const auto cells = run_sweep(cfg, jobs);
    {
      auto f = open_out(prefix + "_runs.csv");
      write_sweep_runs_csv(f, cells);
    }
    {
      auto f = open_out(prefix + "_summary.csv");
      write_sweep_summary_csv(f, cells);
    }
    {
      auto f = open_out(prefix + ".json");
      f << sweep_to_json(cfg, cells).dump(2) << '\n';
    }
    std::size_t complete = 0;
    for (const auto& c : cells) {
      if (c.summary.n_failed == 0) ++complete;
      out << "cell " << c.index << " vartheta=" << format_double(c.vartheta) << " stalled=" << c.summary.n_stalled
          << "/" << c.summary.runs.size() << " failed=" << c.summary.n_failed
          << " median_phi_true=" << format_double(c.summary.phi_true.median) << '\n';
    }
    out << "wrote " << prefix << "_runs.csv, " << prefix << "_summary.csv and " << prefix << ".json\n";
    if (10 * complete < 9 * cells.size()) {
      err << "error: only " << complete << " of " << cells.size() << " cells completed\n";
      return kExitError;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace nslp
