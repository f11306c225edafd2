#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>

#include "noisyslp/rng.hpp"
#include "noisyslp/types.hpp"

namespace nslp {

/// Constants of the smooth inner map, valid on the region a problem
/// declares. Absent values are unknown.
struct MapConstants {
  std::optional<double> lip_f;        // L^F   (bound on ||F'||)
  std::optional<double> lip_fprime;   // L^F'  (Lipschitz constant of F')
  std::optional<double> beta;         // bound on <d, B d> / ||d||^2
};

/// First output component is 0.5 ||x - y||^2 against a target image y
/// stored column-major as rows x cols. Required by the ImageRedraw model.
struct ImageFidelity {
  Vector target;
  Index rows = 0;
  Index cols = 0;
};

/// Smooth map F : R^n -> R^p with its Jacobian and optional curvature.
struct SmoothMap {
  Index n = 0;
  Index p = 0;
  std::function<Vector(const Vector&)> eval;
  std::function<Matrix(const Vector&)> jac;
  std::function<Matrix(const Vector&)> curvature;  // may be empty
  MapConstants constants;
  std::optional<ImageFidelity> image;
};

struct NoNoise {};

/// F and F' perturbed by uniform samples from Euclidean balls.
struct BallUniform {
  double eps_f = 0.0;
  double eps_jac = 0.0;
};

/// Target image redrawn per evaluation with entrywise U(-eps, eps) noise,
/// clipped back to [0, 1].
struct ImageRedraw {
  double eps_img = 0.0;
};

using NoiseModel = std::variant<NoNoise, BallUniform, ImageRedraw>;

/// Uniform sample from the closed ball of `radius` in R^dim.
Vector sample_ball(Philox& rng, Index dim, double radius);

struct NoisyEval {
  Vector f;
  Matrix jac;
};

/// Noisy view of a smooth map. One instance per run; not thread-safe.
class NoisyOracle {
 public:
  NoisyOracle(const SmoothMap& map, NoiseModel noise, std::uint64_t seed, std::uint64_t stream = 0);

  /// (F_hat(x), F_hat'(x)); advances the generator.
  NoisyEval eval(const Vector& x);
  /// F_hat(x) only; advances the generator.
  Vector value(const Vector& x);
  /// F_hat'(x) only; advances the generator.
  Matrix jacobian(const Vector& x);

  const SmoothMap& map() const { return map_; }
  const NoiseModel& noise() const { return noise_; }
  Philox& rng() { return rng_; }

 private:
  Vector redraw_target();

  const SmoothMap& map_;
  NoiseModel noise_;
  Philox rng_;
};

struct ImageDims {
  Index rows = 0;
  Index cols = 0;
};

struct NoiseLevels {
  double eps_f = 0.0;
  double eps_fprime = 0.0;
};

/// Uniform bounds (eps_F, eps_F') implied by a noise model. ImageRedraw
/// needs the image dimensions.
NoiseLevels noise_levels(const NoiseModel& noise, std::optional<ImageDims> dims = std::nullopt);

}  // namespace nslp
