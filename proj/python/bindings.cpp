#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "noisyslp/config.hpp"
#include "noisyslp/harness.hpp"
#include "noisyslp/lp.hpp"
#include "noisyslp/pgm.hpp"
#include "noisyslp/problems.hpp"
#include "noisyslp/solver.hpp"
#include "noisyslp/subproblem.hpp"
#include "noisyslp/verify.hpp"

namespace py = pybind11;
using namespace nslp;

namespace {

py::dict record_dict(const IterateRecord& r) {
  py::dict d;
  d["k"] = r.k;
  d["accepted"] = r.accepted;
  d["rho_hat"] = r.rho_hat;
  d["alpha"] = r.alpha;
  d["step_norm_2"] = r.step_norm_2;
  d["step_norm_lp"] = r.step_norm_lp;
  d["delta"] = r.delta;
  d["delta_lp"] = r.delta_lp;
  d["phi_hat"] = r.phi_hat;
  d["phi_true"] = r.phi_true;
  d["psi_hat_1"] = r.psi_hat_1;
  d["psi_true_1"] = r.psi_true_1;
  d["termination"] = r.termination ? py::object(py::str(to_string(*r.termination))) : py::object(py::none());
  return d;
}

py::list records_list(const std::vector<IterateRecord>& recs) {
  py::list out;
  for (const auto& r : recs) out.append(record_dict(r));
  return out;
}

// Config handling goes through JSON text so Python and the CLI share one parser.
RunConfig config_from_text(const std::string& text) {
  try {
    return parse_run_config(Json::parse(text));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

LpProblem make_lp(const Vector& c, const Matrix& a_ub, const Vector& b_ub, const Matrix& a_eq, const Vector& b_eq,
                  const Vector& lower, const Vector& upper) {
  LpProblem p;
  p.c = c;
  p.a_ub = a_ub.sparseView();
  p.b_ub = b_ub;
  p.a_eq = a_eq.sparseView();
  p.b_eq = b_eq;
  p.lower = lower;
  p.upper = upper;
  if (p.a_ub.rows() == 0) p.a_ub.resize(0, c.size());
  if (p.a_eq.rows() == 0) p.a_eq.resize(0, c.size());
  return p;
}

NoiseModel noise_from_text(const std::string& text) { return noise_from_json(Json::parse(text)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Noise-tolerant SLP trust-region solver (C++ core)";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<PgmError>(m, "PgmError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<PolyhedralSpec>(m, "PolyhedralSpec")
      .def_static("identity", &PolyhedralSpec::identity)
      .def_static("penalty", &PolyhedralSpec::penalty, py::arg("nu"), py::arg("n_ineq"), py::arg("n_eq"))
      .def_static(
          "max_affine",
          [](const std::vector<std::pair<Vector, double>>& pieces) {
            std::vector<AffinePiece> ps;
            for (const auto& [a, b] : pieces) ps.push_back({a, b});
            return PolyhedralSpec::max_affine(std::move(ps));
          },
          py::arg("pieces"))
      .def_property_readonly("dim", &PolyhedralSpec::dim)
      .def("__call__", [](const PolyhedralSpec& s, const Vector& z) { return eval_omega(s, z); })
      .def("lipschitz", [](const PolyhedralSpec& s) { return lipschitz_omega(s); })
      .def("__repr__", [](const PolyhedralSpec& s) { return "PolyhedralSpec(" + to_json(s).dump() + ")"; });

  py::class_<CompositeProblem>(m, "Problem")
      .def_readonly("name", &CompositeProblem::name)
      .def_readonly("spec", &CompositeProblem::spec)
      .def_readonly("x0", &CompositeProblem::x0)
      .def_readonly("known_optimum", &CompositeProblem::known_optimum)
      .def_property_readonly("n", [](const CompositeProblem& p) { return p.map.n; })
      .def_property_readonly("p", [](const CompositeProblem& p) { return p.map.p; })
      .def("F", [](const CompositeProblem& p, const Vector& x) { return p.map.eval(x); })
      .def("jacobian", [](const CompositeProblem& p, const Vector& x) { return p.map.jac(x); })
      .def("phi", &CompositeProblem::phi)
      .def("feasibility", [](const CompositeProblem& p, const Vector& x) -> std::optional<double> {
        if (!p.feasibility_residual) return std::nullopt;
        return p.feasibility_residual(x);
      })
      .def("criticality", [](const CompositeProblem& p, const Vector& x, double radius) {
        return criticality(p.spec, p.map.eval(x), p.map.jac(x), radius);
      }, py::arg("x"), py::arg("radius") = 1.0)
      .def("required_stabilization", [](const CompositeProblem& p, const std::string& noise_json, double rho_u) {
        return required_stabilization(p, noise_from_text(noise_json), rho_u);
      }, py::arg("noise_json"), py::arg("rho_u") = 0.1);

  m.def("make_problem", [](const std::string& name, const std::string& params_json) {
    return make_problem({name, Json::parse(params_json)});
  }, py::arg("name"), py::arg("params_json") = "{}");

  m.def("eval_omega", [](const PolyhedralSpec& s, const Vector& z) { return eval_omega(s, z); });
  m.def("criticality", [](const PolyhedralSpec& s, const Vector& f, const Matrix& j, double radius) {
    return criticality(s, f, j, radius);
  }, py::arg("spec"), py::arg("f"), py::arg("jac"), py::arg("radius") = 1.0);

  m.def("solve_lp", [](const Vector& c, const Matrix& a_ub, const Vector& b_ub, const Matrix& a_eq,
                       const Vector& b_eq, const Vector& lower, const Vector& upper) {
    const LpSolution s = solve_lp(make_lp(c, a_ub, b_ub, a_eq, b_eq, lower, upper));
    py::dict d;
    d["status"] = std::string(to_string(s.status));
    d["x"] = s.x;
    d["objective"] = s.objective;
    d["pivots"] = s.pivots;
    return d;
  }, py::arg("c"), py::arg("a_ub"), py::arg("b_ub"), py::arg("a_eq"), py::arg("b_eq"), py::arg("lower"),
        py::arg("upper"));

  m.def("solve_json", [](const std::string& config, std::optional<std::uint64_t> seed) {
    const RunConfig cfg = config_from_text(config);
    const std::uint64_t s = seed.value_or(cfg.seeds.front());
    SolveOutput out;
    {
      py::gil_scoped_release release;
      out = solve_one(cfg, s);
    }
    py::dict d;
    d["seed"] = s;
    d["vartheta"] = out.vartheta;
    d["termination"] = to_string(out.result.termination);
    d["x_final"] = out.result.x_final;
    d["records"] = records_list(out.result.records);
    d["outcome"] = py::module_::import("json").attr("loads")(to_json(out.outcome).dump());
    d["warnings"] = out.result.warnings;
    return d;
  }, py::arg("config"), py::arg("seed") = py::none());

  m.def("sweep_json", [](const std::string& config, int jobs) {
    const RunConfig cfg = config_from_text(config);
    if (cfg.sweep.empty()) throw ConfigError("sweep needs at least one axis in \"sweep\"");
    std::vector<SweepCell> cells;
    {
      py::gil_scoped_release release;
      cells = run_sweep(cfg, jobs);
    }
    std::ostringstream runs, summary;
    write_sweep_runs_csv(runs, cells);
    write_sweep_summary_csv(summary, cells);
    py::dict d;
    d["json"] = sweep_to_json(cfg, cells).dump();
    d["runs_csv"] = runs.str();
    d["summary_csv"] = summary.str();
    return d;
  }, py::arg("config"), py::arg("jobs") = 1);

  m.def("normalize_config", [](const std::string& config) { return to_json(config_from_text(config)).dump(); });

  m.def("verify", [](std::uint64_t seed, int instances, bool inject_m2_half) {
    VerifyOptions o;
    o.seed = seed;
    o.instances = instances;
    o.inject = inject_m2_half ? Mutation::M2Half : Mutation::None;
    std::vector<PropertyResult> res;
    {
      py::gil_scoped_release release;
      res = run_verify(o);
    }
    py::list out;
    for (const auto& r : res) {
      py::dict d;
      d["name"] = r.name;
      d["instances"] = r.instances;
      d["violations"] = r.violations;
      d["worst_slack"] = r.worst_slack;
      d["informational"] = r.informational;
      d["passed"] = r.informational || r.violations == 0;
      out.append(d);
    }
    return out;
  }, py::arg("seed") = 0, py::arg("instances") = 200, py::arg("inject_m2_half") = false);

  m.def("synthetic_image", &synthetic_image, py::arg("rows"), py::arg("cols"));
  m.def("read_pgm", &read_pgm, py::arg("path"));
  m.def("parse_pgm", [](const py::bytes& b) { return parse_pgm(std::string(b)); }, py::arg("data"));
  m.def("write_pgm", [](const Matrix& img, const std::string& path, bool plain) {
    write_pgm(img, path, plain ? PgmFormat::Plain : PgmFormat::Raw);
  }, py::arg("image"), py::arg("path"), py::arg("plain") = false);
}
