#include "noisyslp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace nslp {

Vector sample_ball(Philox& rng, Index dim, double radius) {
  require(radius >= 0.0, "ball radius must be non-negative");
  Vector v(dim);
  if (dim == 0) return v;
  std::normal_distribution<double> normal(0.0, 1.0);
  double norm = 0.0;
  do {
    for (Index i = 0; i < dim; ++i) v[i] = normal(rng);
    norm = v.norm();
  } while (norm == 0.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double scale = radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
  v *= scale / norm;
  // Rounding can push the norm a hair past the radius.
  const double got = v.norm();
  if (got > radius) v *= radius / got;
  return v;
}

NoisyOracle::NoisyOracle(const SmoothMap& map, NoiseModel noise, std::uint64_t seed, std::uint64_t stream)
    : map_(map), noise_(std::move(noise)), rng_(seed, stream) {
  if (std::holds_alternative<ImageRedraw>(noise_)) {
    require(map_.image.has_value(), "ImageRedraw noise requires a map with an image fidelity term");
  }
}

Vector NoisyOracle::redraw_target() {
  const auto& img = *map_.image;
  const double eps = std::get<ImageRedraw>(noise_).eps_img;
  std::uniform_real_distribution<double> unif(-eps, eps);
  Vector y = img.target;
  for (Index i = 0; i < y.size(); ++i) y[i] = std::clamp(y[i] + unif(rng_), 0.0, 1.0);
  return y;
}

NoisyEval NoisyOracle::eval(const Vector& x) {
  require(x.size() == map_.n, "oracle input dimension mismatch");
  NoisyEval out{map_.eval(x), map_.jac(x)};
  if (const auto* ball = std::get_if<BallUniform>(&noise_)) {
    out.f += sample_ball(rng_, map_.p, ball->eps_f);
    const Vector dj = sample_ball(rng_, map_.p * map_.n, ball->eps_jac);
    out.jac += Eigen::Map<const Matrix>(dj.data(), map_.p, map_.n);
  } else if (std::holds_alternative<ImageRedraw>(noise_)) {
    const Vector y = redraw_target();
    const Vector r = x - y;
    out.f[0] = 0.5 * r.squaredNorm();
    out.jac.row(0) = r.transpose();
  }
  return out;
}

Vector NoisyOracle::value(const Vector& x) {
  require(x.size() == map_.n, "oracle input dimension mismatch");
  Vector f = map_.eval(x);
  if (const auto* ball = std::get_if<BallUniform>(&noise_)) {
    f += sample_ball(rng_, map_.p, ball->eps_f);
  } else if (std::holds_alternative<ImageRedraw>(noise_)) {
    const Vector y = redraw_target();
    f[0] = 0.5 * (x - y).squaredNorm();
  }
  return f;
}

Matrix NoisyOracle::jacobian(const Vector& x) {
  require(x.size() == map_.n, "oracle input dimension mismatch");
  Matrix j = map_.jac(x);
  if (const auto* ball = std::get_if<BallUniform>(&noise_)) {
    const Vector dj = sample_ball(rng_, map_.p * map_.n, ball->eps_jac);
    j += Eigen::Map<const Matrix>(dj.data(), map_.p, map_.n);
  } else if (std::holds_alternative<ImageRedraw>(noise_)) {
    j.row(0) = (x - redraw_target()).transpose();
  }
  return j;
}

NoiseLevels noise_levels(const NoiseModel& noise, std::optional<ImageDims> dims) {
  if (const auto* ball = std::get_if<BallUniform>(&noise)) return {ball->eps_f, ball->eps_jac};
  if (const auto* img = std::get_if<ImageRedraw>(&noise)) {
    require(dims.has_value(), "ImageRedraw noise levels need the image dimensions");
    const double mn = static_cast<double>(dims->rows * dims->cols);
    const double e = img->eps_img;
    return {(e + 0.5 * e * e) * mn, e * std::sqrt(mn)};
  }
  return {0.0, 0.0};
}

}  // namespace nslp
