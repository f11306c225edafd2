#include <doctest.h>

#include "helpers.hpp"
#include "noisyslp/problems.hpp"

using namespace nslp;

namespace {

void check_jacobian(const CompositeProblem& p, double lo, double hi, std::uint64_t seed, int points = 100) {
  Philox rng(seed);
  for (int t = 0; t < points; ++t) {
    const Vector x = test::uniform_vector(rng, p.map.n, lo, hi);
    const Matrix j = p.map.jac(x);
    const Matrix fd = test::fd_jacobian(p.map.eval, x, 1e-6 * std::max(1.0, x.cwiseAbs().maxCoeff()));
    const double scale = std::max(1.0, j.cwiseAbs().maxCoeff());
    CHECK((j - fd).cwiseAbs().maxCoeff() <= 1e-5 * scale);
  }
}

}  // namespace

TEST_CASE("quadratic l1") {
  const auto p = quadratic_l1();
  CHECK(p.phi(Vector::Zero(8)) == 0.0);
  CHECK(p.phi(Vector::Unit(8, 0)) == doctest::Approx(0.5e-5 + 1e-2));
  CHECK(p.lipschitz_omega() == doctest::Approx(std::sqrt(1.0 + 8e-4)));
  CHECK(p.x0[0] == 1000.0);
  CHECK(p.phi(p.x0) == doctest::Approx(15.0));
  const Vector diag = default_quadratic_diag(8);
  CHECK(diag[0] == doctest::Approx(1e-5));
  CHECK(diag[7] == doctest::Approx(std::pow(10.0, -3.25)));
  check_jacobian(p, -100, 100, 1);

  Philox rng(2);
  const Matrix b = p.map.curvature(Vector::Zero(8));
  for (int t = 0; t < 100; ++t) {
    const Vector d = test::uniform_vector(rng, 8, -1, 1);
    CHECK(d.dot(b * d) <= *p.map.constants.beta * d.squaredNorm() * (1 + 1e-12));
  }
}

TEST_CASE("rosenbrock l1") {
  const auto p = rosenbrock_l1();
  CHECK(p.phi(Vector::Ones(2)) == 0.0);
  Vector x0(2);
  x0 << -1.5, 0.0;
  CHECK(p.phi(x0) == doctest::Approx(512.5 + 0.1 * 3.5));
  CHECK(p.map.jac(Vector::Ones(2)).row(0).norm() == 0.0);
  check_jacobian(p, -2, 2, 3);
  // Curvature is the Hessian of the first component.
  Philox rng(4);
  for (int t = 0; t < 20; ++t) {
    const Vector x = test::uniform_vector(rng, 2, -2, 2);
    auto grad = [&](const Vector& v) { return Vector(p.map.jac(v).row(0).transpose()); };
    CHECK((p.map.curvature(x) - test::fd_jacobian(grad, x)).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("tv reconstruction") {
  const Matrix y = synthetic_image(8, 8);
  const auto p = tv_reconstruction(y, 5e-3);
  const Vector vy = Eigen::Map<const Vector>(y.data(), y.size());
  CHECK(p.map.eval(vy)[0] == 0.0);

  Matrix flat = Matrix::Constant(8, 8, 0.3);
  const auto pf = tv_reconstruction(flat);
  CHECK(pf.phi(Eigen::Map<const Vector>(flat.data(), 64)) == 0.0);

  Matrix two(2, 2);
  two << 0, 1, 0, 1;
  const auto p2 = tv_reconstruction(two, 1.0);
  const Vector x2 = Eigen::Map<const Vector>(two.data(), 4);
  CHECK(p2.phi(x2) == doctest::Approx(2.0));

  const SparseMatrix a = tv_operator(5, 7);
  CHECK(a.rows() == 4 * 7 + 5 * 6);
  const Matrix ad(a);
  for (Index r = 0; r < ad.rows(); ++r) {
    CHECK((ad.row(r).array() == 1.0).count() == 1);
    CHECK((ad.row(r).array() == -1.0).count() == 1);
    CHECK((ad.row(r).array() != 0.0).count() == 2);
  }

  check_jacobian(p, 0, 1, 5, 20);
  // Fidelity gradient is x - y.
  Philox rng(6);
  const Vector x = test::uniform_vector(rng, 64, 0, 1);
  CHECK((p.map.jac(x).row(0).transpose() - (x - vy)).norm() == 0.0);

  Matrix bad = Matrix::Constant(2, 2, 1.5);
  CHECK_THROWS_AS(tv_reconstruction(bad), InvalidArgument);
}

TEST_CASE("synthetic image") {
  const Matrix a = synthetic_image(32, 32);
  const Matrix b = synthetic_image(32, 32);
  CHECK(a == b);
  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() <= 1.0);
  const SparseMatrix op = tv_operator(32, 32);
  const Vector v = Eigen::Map<const Vector>(a.data(), a.size());
  CHECK((op * v).lpNorm<1>() > 0.0);
}

TEST_CASE("hs71 penalty") {
  const auto p = hs71_penalty(100.0);
  const Vector f = p.map.eval(Vector::Ones(4));
  CHECK(f[10] == -36.0);
  Vector xs(4);
  xs << 1.0, 4.74, 3.82, 1.38;
  CHECK(p.feasibility_residual(xs) <= 0.05);  // four-digit rounding of the optimum
  CHECK(p.feasibility_residual(*p.known_optimum) <= 1e-5);
  Vector strict(4);
  strict << 2.0, 3.0, 3.0, 2.0;  // g < 0 everywhere, but h != 0
  const Vector fs = p.map.eval(strict);
  CHECK(p.phi(strict) == doctest::Approx(fs[0] + 100.0 * std::abs(fs[10])));
  // A strictly feasible point for g with h = 0 has zero penalty.
  Vector onh(4);
  onh << 2.0, 2.0, 2.0 * std::sqrt(2.0), 2.0 * std::sqrt(2.0) + 0.0;
  onh[3] = std::sqrt(40.0 - onh.head(3).squaredNorm());
  const Vector fo = p.map.eval(onh);
  REQUIRE((fo.segment(1, 9).array() < 0.0).all());
  CHECK(p.phi(onh) == doctest::Approx(fo[0]));
  CHECK(p.x0 == (Vector(4) << 1, 5, 5, 1).finished());
  check_jacobian(p, 1, 5, 7);
}
