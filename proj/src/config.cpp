#include "noisyslp/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "noisyslp/pgm.hpp"

namespace nslp {

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

double get_number(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

Vector get_vector(const Json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + " must be an array of numbers");
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(what + " must be an array of numbers");
    out[static_cast<Index>(i)] = v[i].get<double>();
  }
  return out;
}

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::vector<double> positive_grid(const Json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + " must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(what + " entries must be numbers");
    const double x = e.get<double>();
    if (!std::isfinite(x) || x < 0.0) throw ConfigError(what + " entries must be finite and non-negative");
    out.push_back(x);
  }
  return out;
}

}  // namespace

// Polyhedral spec -----------------------------------------------------------

Json to_json(const PolyhedralSpec& s) {
  if (s.get_if<Identity>()) return {{"variant", "identity"}};
  if (const auto* p = s.get_if<CompositePenalty>()) {
    return {{"variant", "composite_penalty"}, {"nu", p->nu}, {"n_ineq", p->n_ineq}, {"n_eq", p->n_eq}};
  }
  const auto* m = s.get_if<MaxAffine>();
  Json pieces = Json::array();
  for (const auto& pc : m->pieces) pieces.push_back({{"a", vector_json(pc.a)}, {"b", pc.b}});
  return {{"variant", "max_affine"}, {"pieces", pieces}};
}

PolyhedralSpec spec_from_json(const Json& j) {
  try {
    const std::string v = j.at("variant").get<std::string>();
    if (v == "identity") {
      check_keys(j, {"variant"}, "spec");
      return PolyhedralSpec::identity();
    }
    if (v == "composite_penalty") {
      check_keys(j, {"variant", "nu", "n_ineq", "n_eq"}, "spec");
      return PolyhedralSpec::penalty(get_number(j, "nu", "spec"), j.value("n_ineq", Index{0}),
                                     j.value("n_eq", Index{0}));
    }
    if (v == "max_affine") {
      check_keys(j, {"variant", "pieces"}, "spec");
      std::vector<AffinePiece> pieces;
      for (const auto& pc : j.at("pieces")) {
        check_keys(pc, {"a", "b"}, "spec.pieces[]");
        pieces.push_back({get_vector(pc.at("a"), "spec.pieces[].a"), get_number(pc, "b", "spec.pieces[]")});
      }
      return PolyhedralSpec::max_affine(std::move(pieces));
    }
    throw ConfigError("unknown spec variant '" + v + "'");
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("spec: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("spec: ") + e.what());
  }
}

// Noise ---------------------------------------------------------------------

Json to_json(const NoiseModel& n) {
  if (const auto* b = std::get_if<BallUniform>(&n)) {
    return {{"model", "ball_uniform"}, {"eps_f", b->eps_f}, {"eps_jac", b->eps_jac}};
  }
  if (const auto* i = std::get_if<ImageRedraw>(&n)) return {{"model", "image_redraw"}, {"eps_img", i->eps_img}};
  return {{"model", "none"}};
}

NoiseModel noise_from_json(const Json& j) {
  try {
    const std::string m = j.at("model").get<std::string>();
    if (m == "none") {
      check_keys(j, {"model"}, "noise");
      return NoNoise{};
    }
    if (m == "ball_uniform") {
      check_keys(j, {"model", "eps_f", "eps_jac"}, "noise");
      BallUniform b{j.contains("eps_f") ? get_number(j, "eps_f", "noise") : 0.0,
                    j.contains("eps_jac") ? get_number(j, "eps_jac", "noise") : 0.0};
      if (b.eps_f < 0.0 || b.eps_jac < 0.0) throw ConfigError("noise levels must be non-negative");
      return b;
    }
    if (m == "image_redraw") {
      check_keys(j, {"model", "eps_img"}, "noise");
      ImageRedraw r{get_number(j, "eps_img", "noise")};
      if (r.eps_img < 0.0) throw ConfigError("noise levels must be non-negative");
      return r;
    }
    throw ConfigError("unknown noise model '" + m + "'");
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("noise: ") + e.what());
  }
}

// Solver --------------------------------------------------------------------

Json to_json(const SolverConfig& c) {
  Json j = {{"delta_lp_0", c.delta_lp_0},
            {"delta_lp_max", c.delta_lp_max},
            {"delta_0", c.delta_0},
            {"rho_u", c.rho_u},
            {"rho_s", c.rho_s},
            {"kappa_l", c.kappa_l},
            {"kappa_u", c.kappa_u},
            {"theta_shrink", c.theta_shrink},
            {"eta", c.eta},
            {"tau", c.tau},
            {"max_iter", c.max_iter},
            {"tol_criticality", c.tol_criticality},
            {"tol_lp_radius", c.tol_lp_radius},
            {"step_mode", c.step_mode == StepMode::CauchyOnly ? "cauchy_only" : "improve_smooth"},
            {"evaluation", c.evaluation == Evaluation::EachIteration ? "each_iteration" : "on_accept"},
            {"max_cauchy_backtracks", c.max_cauchy_backtracks},
            {"log_true", c.log_true},
            {"check_invariants", c.check_invariants}};
  if (c.curvature) j["curvature"] = *c.curvature == Curvature::Exact ? "exact" : "zero";
  return j;
}

SolverConfig solver_from_json(const Json& j, SolverConfig c) {
  check_keys(j,
             {"delta_lp_0", "delta_lp_max", "delta_0", "rho_u", "rho_s", "kappa_l", "kappa_u", "theta_shrink", "eta",
              "tau", "vartheta", "max_iter", "tol_criticality", "tol_lp_radius", "step_mode", "curvature",
              "evaluation", "max_cauchy_backtracks", "log_true", "check_invariants"},
             "solver");
  try {
    auto num = [&](const char* k, double& dst) {
      if (j.contains(k)) dst = get_number(j, k, "solver");
    };
    num("delta_lp_0", c.delta_lp_0);
    num("delta_lp_max", c.delta_lp_max);
    num("delta_0", c.delta_0);
    num("rho_u", c.rho_u);
    num("rho_s", c.rho_s);
    num("kappa_l", c.kappa_l);
    num("kappa_u", c.kappa_u);
    num("theta_shrink", c.theta_shrink);
    num("eta", c.eta);
    num("tau", c.tau);
    num("tol_criticality", c.tol_criticality);
    num("tol_lp_radius", c.tol_lp_radius);
    if (j.contains("max_iter")) c.max_iter = j.at("max_iter").get<int>();
    if (j.contains("max_cauchy_backtracks")) c.max_cauchy_backtracks = j.at("max_cauchy_backtracks").get<int>();
    if (j.contains("log_true")) c.log_true = j.at("log_true").get<bool>();
    if (j.contains("check_invariants")) c.check_invariants = j.at("check_invariants").get<bool>();
    if (j.contains("step_mode")) {
      const auto s = j.at("step_mode").get<std::string>();
      if (s == "cauchy_only") c.step_mode = StepMode::CauchyOnly;
      else if (s == "improve_smooth") c.step_mode = StepMode::ImproveSmooth;
      else throw ConfigError("unknown step_mode '" + s + "'");
    }
    if (j.contains("curvature")) {
      const auto s = j.at("curvature").get<std::string>();
      if (s == "exact") c.curvature = Curvature::Exact;
      else if (s == "zero") c.curvature = Curvature::Zero;
      else throw ConfigError("unknown curvature '" + s + "'");
    }
    if (j.contains("evaluation")) {
      const auto s = j.at("evaluation").get<std::string>();
      if (s == "each_iteration") c.evaluation = Evaluation::EachIteration;
      else if (s == "on_accept") c.evaluation = Evaluation::OnAccept;
      else throw ConfigError("unknown evaluation '" + s + "'");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
  return c;
}

Json to_json(const VarthetaSetting& v) {
  if (!v.required) return v.value;
  if (v.factor == 1.0) return "required";
  return {{"required_times", v.factor}};
}

VarthetaSetting vartheta_from_json(const Json& j) {
  VarthetaSetting v;
  if (j.is_number()) {
    v.value = j.get<double>();
    if (!std::isfinite(v.value) || v.value < 0.0) throw ConfigError("vartheta must be finite and non-negative");
  } else if (j.is_string() && j.get<std::string>() == "required") {
    v.required = true;
  } else if (j.is_object() && j.size() == 1 && j.contains("required_times") && j["required_times"].is_number()) {
    v.required = true;
    v.factor = j["required_times"].get<double>();
    if (!std::isfinite(v.factor) || v.factor < 0.0) throw ConfigError("required_times must be non-negative");
  } else {
    throw ConfigError("vartheta must be a number, \"required\" or {\"required_times\": k}");
  }
  return v;
}

double resolve_vartheta(const VarthetaSetting& v, const CompositeProblem& problem, const NoiseModel& noise,
                        double rho_u) {
  if (!v.required) return v.value;
  return v.factor * required_stabilization(problem, noise, rho_u);
}

// Run config ----------------------------------------------------------------

RunConfig parse_run_config(const Json& j) {
  check_keys(j, {"problem", "noise", "solver", "seeds", "seed_count", "stream", "sweep", "output"}, "config");
  RunConfig c;
  try {
    const Json& p = j.at("problem");
    if (p.is_string()) {
      c.problem.name = p.get<std::string>();
    } else {
      check_keys(p, {"name", "params"}, "problem");
      c.problem.name = p.at("name").get<std::string>();
      if (p.contains("params")) {
        c.problem.params = p.at("params");
        if (!c.problem.params.is_object()) throw ConfigError("problem.params must be an object");
      }
    }
    if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
    if (j.contains("solver")) {
      const Json& s = j.at("solver");
      c.solver = solver_from_json(s);
      if (s.contains("vartheta")) c.vartheta = vartheta_from_json(s.at("vartheta"));
    }
    if (j.contains("seeds") && j.contains("seed_count")) throw ConfigError("give either seeds or seed_count");
    if (j.contains("seeds")) {
      c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } else if (j.contains("seed_count")) {
      const long n = j.at("seed_count").get<long>();
      if (n <= 0) throw ConfigError("seed_count must be positive");
      c.seeds.clear();
      for (long i = 0; i < n; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
    }
    if (c.seeds.empty()) throw ConfigError("seed list must be non-empty");
    if (j.contains("stream")) c.stream = j.at("stream").get<std::uint64_t>();
    if (j.contains("sweep")) {
      const Json& s = j.at("sweep");
      check_keys(s, {"vartheta", "eps_f", "eps_img"}, "sweep");
      if (s.contains("vartheta")) {
        if (!s.at("vartheta").is_array()) throw ConfigError("sweep.vartheta must be an array");
        for (const auto& v : s.at("vartheta")) c.sweep.vartheta.push_back(vartheta_from_json(v));
      }
      if (s.contains("eps_f")) c.sweep.eps_f = positive_grid(s.at("eps_f"), "sweep.eps_f");
      if (s.contains("eps_img")) c.sweep.eps_img = positive_grid(s.at("eps_img"), "sweep.eps_img");
      if (!c.sweep.eps_f.empty() && std::holds_alternative<ImageRedraw>(c.noise)) {
        throw ConfigError("sweep.eps_f needs ball_uniform noise");
      }
      if (!c.sweep.eps_img.empty() && !std::holds_alternative<ImageRedraw>(c.noise)) {
        throw ConfigError("sweep.eps_img needs image_redraw noise");
      }
    }
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  // Fail early on unknown problems or bad parameters.
  try {
    (void)make_problem(c.problem);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_run_config(j);
}

Json to_json(const RunConfig& c) {
  Json solver = to_json(c.solver);
  solver["vartheta"] = to_json(c.vartheta);
  Json j = {{"problem", {{"name", c.problem.name}, {"params", c.problem.params}}},
            {"noise", to_json(c.noise)},
            {"solver", solver},
            {"seeds", c.seeds},
            {"stream", c.stream}};
  if (!c.sweep.empty()) {
    Json s = Json::object();
    if (!c.sweep.vartheta.empty()) {
      Json a = Json::array();
      for (const auto& v : c.sweep.vartheta) a.push_back(to_json(v));
      s["vartheta"] = a;
    }
    if (!c.sweep.eps_f.empty()) s["eps_f"] = c.sweep.eps_f;
    if (!c.sweep.eps_img.empty()) s["eps_img"] = c.sweep.eps_img;
    j["sweep"] = s;
  }
  if (!c.output.empty()) j["output"] = c.output;
  return j;
}

// Problems ------------------------------------------------------------------

Matrix load_image(const std::string& source) {
  const std::string prefix = "synthetic:";
  if (source.rfind(prefix, 0) == 0) {
    const std::string dims = source.substr(prefix.size());
    const auto x = dims.find('x');
    if (x == std::string::npos) throw ConfigError("synthetic image must be given as synthetic:MxN");
    try {
      std::size_t u1 = 0, u2 = 0;
      const long m = std::stol(dims.substr(0, x), &u1);
      const long n = std::stol(dims.substr(x + 1), &u2);
      if (u1 != x || u2 != dims.size() - x - 1) throw std::invalid_argument("trailing");
      return synthetic_image(m, n);
    } catch (const InvalidArgument&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("synthetic image must be given as synthetic:MxN");
    }
  }
  return read_pgm(source);
}

CompositeProblem make_problem(const ProblemConfig& pc) {
  const Json& p = pc.params;
  const std::string where = "problem.params";
  auto opt_vec = [&](const char* k) -> std::optional<Vector> {
    if (!p.contains(k)) return std::nullopt;
    return get_vector(p.at(k), where + "." + k);
  };
  auto num = [&](const char* k, double dflt) { return p.contains(k) ? get_number(p, k, where) : dflt; };
  try {
    if (pc.name == "quadratic_l1") {
      check_keys(p, {"n", "diag", "lambda", "x0", "domain_radius"}, where);
      const Index n = p.value("n", Index{8});
      return quadratic_l1(n, opt_vec("diag"), num("lambda", 1e-2), opt_vec("x0"), num("domain_radius", 2000.0));
    }
    if (pc.name == "rosenbrock_l1") {
      check_keys(p, {"a", "b", "lambda", "x0", "box"}, where);
      return rosenbrock_l1(num("a", 1.0), num("b", 100.0), num("lambda", 1e-1), opt_vec("x0"), num("box", 2.0));
    }
    if (pc.name == "tv_reconstruction") {
      check_keys(p, {"image", "lambda"}, where);
      return tv_reconstruction(load_image(p.value("image", std::string("synthetic:32x32"))), num("lambda", 5e-3));
    }
    if (pc.name == "hs71_penalty") {
      check_keys(p, {"nu", "x0"}, where);
      return hs71_penalty(num("nu", 100.0), opt_vec("x0"));
    }
  } catch (const Json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const PgmError& e) {
    throw ConfigError(std::string("image: ") + e.what());
  }
  throw ConfigError("unknown problem '" + pc.name + "'");
}

}  // namespace nslp
