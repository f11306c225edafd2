#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisyslp/oracle.hpp"
#include "noisyslp/polyhedral.hpp"
#include "noisyslp/problems.hpp"

namespace nslp {

enum class StepMode { CauchyOnly, ImproveSmooth };

/// When the noisy values at the current iterate are drawn.
///  - OnAccept: F_hat(x_k) is the value drawn when x_k was the trial point
///    and F_hat'(x_k) is drawn once on acceptance; rejected iterations keep
///    both. Either way phi_hat(x_k) is one number per iteration.
///  - EachIteration: (F_hat, F_hat') are redrawn at x_k every iteration.
enum class Evaluation { OnAccept, EachIteration };

enum class Curvature { Exact, Zero };

/// Parameters of the noise-tolerant SLP trust-region method. Defaults are
/// the values used for the published experiments.
struct SolverConfig {
  double delta_lp_0 = 1.0;
  double delta_lp_max = 10.0;
  double delta_0 = 1.0;
  double rho_u = 0.1;
  double rho_s = 0.5;
  double kappa_l = 0.1;
  double kappa_u = 0.8;
  double theta_shrink = 0.5;
  double eta = 0.1;
  double tau = 0.5;
  double vartheta = 0.0;
  int max_iter = 50;
  double tol_criticality = 1e-6;
  double tol_lp_radius = 1e-10;
  StepMode step_mode = StepMode::ImproveSmooth;
  /// Unset: the problem's default.
  std::optional<Curvature> curvature;
  Evaluation evaluation = Evaluation::OnAccept;
  int max_cauchy_backtracks = 60;
  /// Log noise-free phi and Psi(1) per iteration (one extra LP each time x changes).
  bool log_true = true;
  /// Assert the model-decrease chain every iteration.
  bool check_invariants = false;

  void validate() const;
};

struct SolverState {
  int k = 0;
  Vector x;
  double delta = 1.0;
  double delta_lp = 1.0;
  double phi_hat_x = 0.0;
  Vector f_hat;
  Matrix j_hat;
  Matrix b;  // curvature at x_k; an empty matrix means zero
};

enum class Termination { Critical, Stalled, IterLimit };

std::string to_string(Termination t);

struct IterateRecord {
  int k = 0;
  bool accepted = false;
  double rho_hat = 0.0;
  double alpha = 0.0;
  double step_norm_2 = 0.0;
  double step_norm_lp = 0.0;
  double delta = 0.0;
  double delta_lp = 0.0;
  double phi_hat = 0.0;
  double phi_true = 0.0;
  double psi_hat_1 = 0.0;
  double psi_true_1 = 0.0;
  std::optional<Termination> termination;
};

/// Constants of the error bounds that depend on the noise levels.
struct NoiseConstants {
  double m0 = 0.0;     // 2 L^w eps_F
  double m1 = 0.0;     // L^w eps_F'
  double m2 = 0.0;     // L^w L^F' + beta / 2 (NaN when unknown)
  double l_ell = 0.0;  // gamma L^w (L^F + eps_F') (NaN when unknown)
  double gamma = 1.0;  // sqrt(n): ||d||_2 <= gamma ||d||_inf
  double beta = 0.0;   // curvature bound (NaN when unknown)
};

/// l_ell bounds |l_hat(d) - l_hat(0)| / ||d||_inf, so it uses the bound L^F
/// on ||F'|| (not the Lipschitz constant of F').
NoiseConstants make_noise_constants(double lip_omega, const MapConstants& map, NoiseLevels eps, Index n);

// Models -------------------------------------------------------------------

double model_linear(const SolverState& s, const PolyhedralSpec& spec, const Eigen::Ref<const Vector>& d);
double model_quadratic(const SolverState& s, const PolyhedralSpec& spec, const Eigen::Ref<const Matrix>& b,
                       const Eigen::Ref<const Vector>& d);

/// Raised when the Cauchy line search exceeds its backtrack limit.
class CauchyFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CauchyStep {
  double alpha = 1.0;
  Vector d;
  int backtracks = 0;
};

CauchyStep cauchy_search(const SolverState& s, const PolyhedralSpec& spec, const Eigen::Ref<const Matrix>& b,
                         const Eigen::Ref<const Vector>& d_lp, const SolverConfig& cfg);

/// Returns d with ||d||_2 <= delta and q_hat(d) <= q_hat(d_c).
Vector improve_step(const SolverState& s, const PolyhedralSpec& spec, const Eigen::Ref<const Matrix>& b,
                    const Eigen::Ref<const Vector>& d_c, const SolverConfig& cfg);

/// (phi_hat(x) - phi_hat(x + d) + vartheta) / (phi_hat(x) - q_hat(d) + vartheta);
/// -inf when the denominator vanishes.
double stabilized_ratio(const SolverState& s, const PolyhedralSpec& spec, const Eigen::Ref<const Matrix>& b,
                        const Eigen::Ref<const Vector>& d, double phi_hat_trial, double vartheta);

struct Radii {
  double delta = 0.0;
  double delta_lp = 0.0;
};

Radii update_radii(const SolverState& s, const SolverConfig& cfg, double rho_hat, double alpha,
                   const Eigen::Ref<const Vector>& d, const Eigen::Ref<const Vector>& d_c);

// Constants ----------------------------------------------------------------

/// (M0 + M1) / (1 - rho_u).
double required_stabilization(const NoiseConstants& c, double rho_u);

struct CriticalRegion {
  double a = 0.0;
  double b = 0.0;
  double delta_min = 0.0;
  double delta_max = 0.0;
  bool degenerate = false;  // some term divided by zero and became +inf
};

CriticalRegion critical_region_constants(const NoiseConstants& c, const SolverConfig& cfg, double delta);

// Driver -------------------------------------------------------------------

struct RunResult {
  Vector x_final;
  std::vector<IterateRecord> records;
  Termination termination = Termination::IterLimit;
  std::vector<std::string> warnings;
};

/// LP failures and Cauchy backtrack overflow abort a run; the records
/// gathered so far are attached.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<IterateRecord> recs)
      : std::runtime_error(what), records(std::move(recs)) {}
  std::vector<IterateRecord> records;
};

RunResult run(const CompositeProblem& problem, const NoiseModel& noise, const SolverConfig& cfg,
              std::uint64_t seed, std::uint64_t stream = 0);

/// vartheta* for a problem and noise model (image dims come from the map).
double required_stabilization(const CompositeProblem& problem, const NoiseModel& noise, double rho_u);

/// Noise constants for a problem under a noise model.
NoiseConstants problem_noise_constants(const CompositeProblem& problem, const NoiseModel& noise);

}  // namespace nslp
