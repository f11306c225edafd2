#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "noisyslp/harness.hpp"

using namespace nslp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot read " << p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

bool numeric(const std::string& s, double& v) {
  if (s == "nan") {
    v = std::nan("");
    return true;
  }
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return !s.empty() && end == s.c_str() + s.size();
}

// Header must match byte for byte; cells compare numerically to a relative
// tolerance so the golden files survive libm differences.
void compare_csv(const std::string& got, const std::string& want, double rtol = 1e-9) {
  const auto gl = split(got, '\n');
  const auto wl = split(want, '\n');
  REQUIRE(gl.size() == wl.size());
  CHECK(gl[0] == wl[0]);
  for (std::size_t i = 1; i < gl.size(); ++i) {
    const auto gf = split(gl[i], ',');
    const auto wf = split(wl[i], ',');
    REQUIRE(gf.size() == wf.size());
    for (std::size_t k = 0; k < gf.size(); ++k) {
      double a = 0, b = 0;
      if (numeric(wf[k], b)) {
        REQUIRE(numeric(gf[k], a));
        if (std::isnan(b)) {
          CHECK(std::isnan(a));
        } else {
          INFO("line " << i << " field " << k);
          CHECK(std::abs(a - b) <= rtol * std::max(1.0, std::abs(b)));
        }
      } else {
        CHECK(gf[k] == wf[k]);
      }
    }
  }
}

// Same keys and value kinds everywhere; numbers within tolerance.
void compare_json(const Json& got, const Json& want, const std::string& path = "$") {
  INFO(path);
  if (want.is_number()) {
    REQUIRE(got.is_number());
    const double a = got.get<double>(), b = want.get<double>();
    CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)));
    return;
  }
  REQUIRE(got.type() == want.type());
  if (want.is_object()) {
    for (auto it = want.begin(); it != want.end(); ++it) {
      REQUIRE_MESSAGE(got.contains(it.key()), "missing key " << it.key());
      compare_json(got.at(it.key()), it.value(), path + "." + it.key());
    }
    CHECK(got.size() == want.size());
  } else if (want.is_array()) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) compare_json(got[i], want[i], path + "[" + std::to_string(i) + "]");
  } else {
    CHECK(got == want);
  }
}

struct TempDir {
  fs::path path;
  TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig small_config() { return load_run_config(NOISYSLP_DATA_DIR "/golden_sweep.json"); }

}  // namespace

TEST_CASE("double formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(format_double(INFINITY) == "inf");
  for (double v : {1.0 / 3.0, 1e-300, 6.02214076e23, -0.0}) CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
}

TEST_CASE("quartiles") {
  const Quartiles q = quartiles({4, 1, 3, 2, std::nan(""), INFINITY});
  CHECK(q.count == 4);
  CHECK(q.q1 == doctest::Approx(1.75));
  CHECK(q.median == doctest::Approx(2.5));
  CHECK(q.q3 == doctest::Approx(3.25));
  CHECK(std::isnan(quartiles({}).median));
  CHECK(quartiles({7}).q1 == 7.0);
}

TEST_CASE("iterate csv golden") {
  const RunConfig cfg = load_run_config(NOISYSLP_CONFIG_DIR "/quadratic_noiseless.json");
  const SolveOutput out = solve_one(cfg, 0);
  std::ostringstream ss;
  write_iterate_csv(ss, 0, out.result.records);
  compare_csv(ss.str(), slurp(fs::path(NOISYSLP_GOLDEN_DIR) / "quadratic_noiseless.csv"));
  CHECK(split(ss.str(), '\n')[0] == iterate_csv_header());
}

TEST_CASE("solve json golden") {
  TempDir tmp("noisyslp_solve_golden");
  std::ostringstream out, err;
  const int rc = cmd_solve(NOISYSLP_CONFIG_DIR "/quadratic_noiseless.json", (tmp.path / "run").string(), std::nullopt,
                           out, err);
  CHECK(rc == kExitOk);
  const Json got = Json::parse(slurp(tmp.path / "run.json"));
  const Json want = Json::parse(slurp(fs::path(NOISYSLP_GOLDEN_DIR) / "quadratic_noiseless.json"));
  compare_json(got, want);
  compare_csv(slurp(tmp.path / "run.csv"), slurp(fs::path(NOISYSLP_GOLDEN_DIR) / "quadratic_noiseless.csv"));
}

TEST_CASE("sweep outputs golden and independent of jobs") {
  const RunConfig cfg = small_config();
  const auto one = run_sweep(cfg, 1);
  const auto three = run_sweep(cfg, 3);
  std::ostringstream r1, r3, s1, s3;
  write_sweep_runs_csv(r1, one);
  write_sweep_runs_csv(r3, three);
  write_sweep_summary_csv(s1, one);
  write_sweep_summary_csv(s3, three);
  CHECK(r1.str() == r3.str());
  CHECK(s1.str() == s3.str());
  CHECK(sweep_to_json(cfg, one).dump() == sweep_to_json(cfg, three).dump());

  compare_csv(r1.str(), slurp(fs::path(NOISYSLP_GOLDEN_DIR) / "sweep_runs.csv"));
  compare_csv(s1.str(), slurp(fs::path(NOISYSLP_GOLDEN_DIR) / "sweep_summary.csv"));
  compare_json(sweep_to_json(cfg, one), Json::parse(slurp(fs::path(NOISYSLP_GOLDEN_DIR) / "sweep.json")));

  REQUIRE(one.size() == 4);
  for (const auto& c : one) {
    const RunSummary& s = c.summary;
    CHECK(s.n_failed + s.n_critical + s.n_stalled + s.n_iterlimit == static_cast<int>(s.runs.size()));
    CHECK(c.stream == cfg.stream + c.index);
  }
  CHECK(one[0].vartheta == 0.0);
  CHECK(one[2].vartheta > 0.0);
}

TEST_CASE("degenerate sweep equals solve") {
  RunConfig cfg = parse_run_config(Json::parse(R"({
    "problem": "rosenbrock_l1",
    "noise": {"model": "ball_uniform", "eps_f": 0.01, "eps_jac": 1e-5},
    "seeds": [3],
    "sweep": {"vartheta": [0]}
  })"));
  const auto cells = run_sweep(cfg, 1);
  const SolveOutput so = solve_one(cfg, 3);
  REQUIRE(cells.size() == 1);
  const SeedOutcome& a = cells[0].summary.runs[0];
  CHECK(a.phi_true == so.outcome.phi_true);
  CHECK(a.dist_opt == so.outcome.dist_opt);
  CHECK(a.iterations == so.outcome.iterations);
}

TEST_CASE("output prefix resolution") {
  TempDir tmp("noisyslp_prefix");
  RunConfig cfg = small_config();
  setenv("NOISYSLP_OUTPUT_DIR", tmp.path.c_str(), 1);
  CHECK(default_output_dir() == tmp.path.string());
  CHECK(resolve_output_prefix(cfg, std::nullopt, "_sweep") == (tmp.path / "quadratic_l1_sweep").string());
  CHECK(resolve_output_prefix(cfg, std::string("a/b/c"), "") == (tmp.path / "a/b/c").string());
  CHECK(fs::is_directory(tmp.path / "a/b"));
  CHECK(resolve_output_prefix(cfg, (tmp.path / "abs").string(), "") == (tmp.path / "abs").string());
  cfg.output = "named";
  CHECK(resolve_output_prefix(cfg, std::nullopt, "_x") == (tmp.path / "named").string());
  unsetenv("NOISYSLP_OUTPUT_DIR");
  CHECK(default_output_dir() == ".");
}

TEST_CASE("command exit codes") {
  TempDir tmp("noisyslp_exit");
  std::ostringstream out, err;
  CHECK(cmd_solve(NOISYSLP_DATA_DIR "/stall_seed.json", (tmp.path / "s").string(), std::nullopt, out, err) ==
        kExitStalled);
  const std::string csv = slurp(tmp.path / "s.csv");
  CHECK(csv.find("Stalled") != std::string::npos);
  CHECK(cmd_solve(NOISYSLP_DATA_DIR "/malformed.json", std::nullopt, std::nullopt, out, err) == kExitError);
  CHECK(cmd_sweep(NOISYSLP_CONFIG_DIR "/quadratic_noiseless.json", 1, (tmp.path / "w").string(), out, err) ==
        kExitError);
  CHECK(err.str().find("error") != std::string::npos);
}

TEST_CASE("outputs never overwrite the config") {
  TempDir tmp("noisyslp_clobber");
  const fs::path cfg = tmp.path / "run.json";
  fs::copy_file(NOISYSLP_CONFIG_DIR "/quadratic_noiseless.json", cfg);
  const std::string before = slurp(cfg);
  std::ostringstream out, err;
  CHECK(cmd_solve(cfg.string(), (tmp.path / "run").string(), std::nullopt, out, err) == kExitError);
  CHECK(err.str().find("overwrite") != std::string::npos);
  CHECK(slurp(cfg) == before);
}
