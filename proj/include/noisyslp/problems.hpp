#pragma once

#include <functional>
#include <optional>
#include <string>

#include "noisyslp/oracle.hpp"
#include "noisyslp/polyhedral.hpp"

namespace nslp {

/// phi(x) = omega(F(x)) together with a start point and whatever
/// constants are known for it.
struct CompositeProblem {
  std::string name;
  SmoothMap map;
  PolyhedralSpec spec;
  Vector x0;
  std::optional<Vector> known_optimum;
  /// Max constraint violation for penalty reformulations; empty otherwise.
  std::function<double(const Vector&)> feasibility_residual;
  /// Whether the quadratic model defaults to the exact curvature.
  bool default_exact_curvature = true;
  /// Radius (l2 around x0, or the documented box) on which map constants hold.
  std::string constants_domain;

  double lipschitz_omega() const { return nslp::lipschitz_omega(spec); }
  double phi(const Vector& x) const { return eval_omega(spec, map.eval(x)); }
};

/// Diagonal used by the l1-penalized quadratic: 10^-5, 10^-4.75, ..., in
/// steps of 10^0.25.
Vector default_quadratic_diag(Index n = 8);

/// F(x) = (0.5 <x, D x>, x), omega = f + lambda ||x||_1. Constants are
/// valid on the l2 ball of `domain_radius` around the origin.
CompositeProblem quadratic_l1(Index n = 8, std::optional<Vector> diag = std::nullopt, double lambda = 1e-2,
                              std::optional<Vector> x0 = std::nullopt, double domain_radius = 2000.0);

/// F(x, y) = (R(x, y), x - a, y - a^2) with R the Rosenbrock function.
/// Constants are valid on the box |x|, |y| <= box.
CompositeProblem rosenbrock_l1(double a = 1.0, double b = 100.0, double lambda = 1e-1,
                               std::optional<Vector> x0 = std::nullopt, double box = 2.0);

/// Anisotropic TV difference operator for an image stored column-major.
SparseMatrix tv_operator(Index rows, Index cols);

/// F(x) = (0.5 ||X - Y||_F^2, A x), omega = fidelity + lambda TV(X).
CompositeProblem tv_reconstruction(const Matrix& image, double lambda = 5e-3);

/// Deterministic piecewise-constant test image with values in [0, 1].
Matrix synthetic_image(Index rows, Index cols);

/// HS71 as an exact penalty: F = (f, g, h) with bounds folded into g.
CompositeProblem hs71_penalty(double nu = 100.0, std::optional<Vector> x0 = std::nullopt);

}  // namespace nslp
