#include <doctest.h>

#include <functional>
#include <limits>

#include <Eigen/LU>

#include "helpers.hpp"
#include "noisyslp/polyhedral.hpp"
#include "noisyslp/subproblem.hpp"

using namespace nslp;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Exact min of omega(c + J d) over the box: a convex piecewise-linear
// function attains its minimum at an intersection of n hyperplanes drawn
// from the kinks (z_i = 0 on penalized rows) and the box faces.
double kink_vertex_min(const PolyhedralSpec& spec, const Vector& c, const Matrix& j, double radius) {
  const auto* cp = spec.get_if<CompositePenalty>();
  REQUIRE(cp != nullptr);
  const Index n = j.cols();
  std::vector<Vector> rows;
  std::vector<double> rhs;
  for (Index i = 1; i < spec.dim(); ++i) {
    rows.push_back(j.row(i).transpose());
    rhs.push_back(-c[i]);
  }
  for (Index k = 0; k < n; ++k) {
    rows.push_back(Vector::Unit(n, k));
    rhs.push_back(radius);
    rows.push_back(Vector::Unit(n, k));
    rhs.push_back(-radius);
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pick(static_cast<std::size_t>(n));
  std::function<void(std::size_t, Index)> rec = [&](std::size_t start, Index depth) {
    if (depth == n) {
      Matrix a(n, n);
      Vector b(n);
      for (Index k = 0; k < n; ++k) {
        a.row(k) = rows[pick[static_cast<std::size_t>(k)]].transpose();
        b[k] = rhs[pick[static_cast<std::size_t>(k)]];
      }
      Eigen::FullPivLU<Matrix> lu(a);
      if (lu.rank() < n) return;
      const Vector d = lu.solve(b);
      if (d.cwiseAbs().maxCoeff() > radius * (1.0 + 1e-12)) return;
      best = std::min(best, eval_omega(spec, c + j * d));
      return;
    }
    for (std::size_t k = start; k < rows.size(); ++k) {
      pick[static_cast<std::size_t>(depth)] = k;
      rec(k + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("eval_omega on small inputs") {
  CHECK(eval_omega(PolyhedralSpec::penalty(1.0, 1, 1), vec({2, -3, 4})) == doctest::Approx(6.0));
  CHECK(eval_omega(PolyhedralSpec::identity(), vec({5})) == 5.0);
  const auto ma = PolyhedralSpec::max_affine({{vec({1, 0}), 0.0}, {vec({0, 1}), 1.0}, {vec({-1, -1}), 0.0}});
  CHECK(eval_omega(ma, vec({3, 1})) == doctest::Approx(3.0));
  CHECK(eval_omega(ma, vec({-2, -2})) == doctest::Approx(4.0));
  CHECK_THROWS_AS(eval_omega(PolyhedralSpec::penalty(1.0, 1, 1), vec({1, 2})), InvalidArgument);
}

TEST_CASE("penalty at a strictly feasible residual is the objective") {
  Vector z = Vector::Constant(11, -0.5);
  z[0] = 17.25;
  z[10] = 0.0;
  CHECK(eval_omega(PolyhedralSpec::penalty(100.0, 9, 1), z) == 17.25);
}

TEST_CASE("lipschitz constant of omega") {
  CHECK(lipschitz_omega(PolyhedralSpec::identity()) == 1.0);
  CHECK(lipschitz_omega(PolyhedralSpec::penalty(1e-2, 0, 8)) == doctest::Approx(std::sqrt(1.0 + 8e-4)).epsilon(1e-12));
  CHECK(lipschitz_omega(PolyhedralSpec::penalty(1e-2, 0, 8)) == doctest::Approx(1.00039992).epsilon(1e-8));

  Philox rng(11);
  const std::vector<PolyhedralSpec> specs = {
      PolyhedralSpec::identity(), PolyhedralSpec::penalty(3.0, 2, 3), PolyhedralSpec::penalty(100.0, 9, 1),
      PolyhedralSpec::max_affine({{vec({1, -2, 0.5}), 0.3}, {vec({-1, 1, 2}), -1.0}})};
  for (const auto& s : specs) {
    const double lip = lipschitz_omega(s);
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
      const Vector z = test::uniform_vector(rng, s.dim(), -5, 5);
      const Vector w = test::uniform_vector(rng, s.dim(), -5, 5);
      worst = std::max(worst, std::abs(eval_omega(s, z) - eval_omega(s, w)) - lip * (z - w).norm());
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("epigraph block hand examples") {
  {
    Matrix j(1, 1);
    j << 1.0;
    const LpStep st = solve_subproblem(PolyhedralSpec::identity(), vec({0}), j, 1.0);
    CHECK(st.model_value == doctest::Approx(-1.0));
    CHECK(st.d[0] == doctest::Approx(-1.0));
  }
  {
    Matrix j(2, 1);
    j << 0.0, -1.0;
    const LpStep st = solve_subproblem(PolyhedralSpec::penalty(1.0, 0, 1), vec({0, 3}), j, 1.0);
    CHECK(st.model_value == doctest::Approx(2.0));
    CHECK(st.d[0] == doctest::Approx(1.0));
  }
  {
    // MaxAffine: max(z, -z) = |z| with z = 2 + d on [-1, 1] is 1 at d = -1.
    Matrix j(1, 1);
    j << 1.0;
    const auto abs_spec = PolyhedralSpec::max_affine({{vec({1}), 0.0}, {vec({-1}), 0.0}});
    const LpStep st = solve_subproblem(abs_spec, vec({2}), j, 1.0);
    CHECK(st.model_value == doctest::Approx(1.0));
  }
}

TEST_CASE("penalty subproblem matches the kink-vertex oracle") {
  Philox rng(2024);
  std::uniform_int_distribution<int> un(1, 3), um(0, 2);
  std::uniform_real_distribution<double> urad(0.05, 2.0), unu(0.1, 5.0);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    const Index n = un(rng);
    const Index mi = um(rng);
    const Index me = std::min<Index>(um(rng), 4 - mi);
    const auto spec = PolyhedralSpec::penalty(unu(rng), mi, me);
    const Vector c = test::uniform_vector(rng, spec.dim(), -2, 2);
    const Matrix j = test::uniform_matrix(rng, spec.dim(), n, -2, 2);
    const double radius = urad(rng);
    const LpStep st = solve_subproblem(spec, c, j, radius);
    const double ref = kink_vertex_min(spec, c, j, radius);
    CHECK(std::abs(st.model_value - ref) <= 1e-6);
    CHECK(st.d.cwiseAbs().maxCoeff() <= radius * (1.0 + 1e-12));

    // The LP is never beaten by a coarse grid.
    if (n <= 2) {
      double grid = std::numeric_limits<double>::infinity();
      const int g = 60;
      for (int a = 0; a <= g; ++a) {
        for (int b = 0; b <= (n == 2 ? g : 0); ++b) {
          Vector d(n);
          d[0] = radius * (2.0 * a / g - 1.0);
          if (n == 2) d[1] = radius * (2.0 * b / g - 1.0);
          grid = std::min(grid, eval_omega(spec, c + j * d));
        }
      }
      CHECK(st.model_value <= grid + 1e-9);
    }
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("smooth gradient of omega") {
  const auto spec = PolyhedralSpec::penalty(2.0, 1, 1);
  const Vector g = omega_smooth_gradient(spec, vec({1.0, 0.5, -3.0}));
  CHECK(g[0] == 1.0);
  CHECK(g[1] == 2.0);
  CHECK(g[2] == -2.0);
  const Vector g0 = omega_smooth_gradient(spec, vec({1.0, -0.5, 0.0}));
  CHECK(g0[1] == 0.0);
  CHECK(g0[2] == 0.0);
}
