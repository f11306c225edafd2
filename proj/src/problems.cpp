#include "noisyslp/problems.hpp"

#include <cmath>
#include <memory>

namespace nslp {

Vector default_quadratic_diag(Index n) {
  Vector d(n);
  for (Index i = 0; i < n; ++i) d[i] = std::pow(10.0, -5.0 + 0.25 * static_cast<double>(i));
  return d;
}

CompositeProblem quadratic_l1(Index n, std::optional<Vector> diag, double lambda, std::optional<Vector> x0,
                              double domain_radius) {
  require(n > 0, "quadratic_l1 needs n > 0");
  Vector dvec = diag ? *diag : default_quadratic_diag(n);
  require(dvec.size() == n, "quadratic_l1 diagonal has the wrong length");
  require((dvec.array() > 0.0).all(), "quadratic_l1 diagonal entries must be positive");
  require(lambda > 0.0, "quadratic_l1 needs lambda > 0");

  CompositeProblem prob;
  prob.name = "quadratic_l1";
  prob.spec = PolyhedralSpec::penalty(lambda, 0, n);
  prob.map.n = n;
  prob.map.p = 1 + n;
  prob.map.eval = [dvec](const Vector& x) {
    Vector f(x.size() + 1);
    f[0] = 0.5 * x.dot(dvec.cwiseProduct(x));
    f.tail(x.size()) = x;
    return f;
  };
  prob.map.jac = [dvec](const Vector& x) {
    const Index k = x.size();
    Matrix j = Matrix::Zero(k + 1, k);
    j.row(0) = dvec.cwiseProduct(x).transpose();
    j.bottomRows(k).setIdentity();
    return j;
  };
  prob.map.curvature = [dvec](const Vector&) { return Matrix(dvec.asDiagonal()); };
  const double dmax = dvec.maxCoeff();
  prob.map.constants.lip_fprime = dmax;
  prob.map.constants.beta = dmax;
  prob.map.constants.lip_f = std::sqrt(1.0 + dmax * dmax * domain_radius * domain_radius);
  prob.constants_domain = "l2 ball of radius " + std::to_string(domain_radius) + " around 0";

  if (x0) {
    require(x0->size() == n, "quadratic_l1 x0 has the wrong length");
    prob.x0 = *x0;
  } else {
    prob.x0 = Vector::Zero(n);
    prob.x0[0] = 1000.0;
  }
  prob.known_optimum = Vector::Zero(n);
  return prob;
}

CompositeProblem rosenbrock_l1(double a, double b, double lambda, std::optional<Vector> x0, double box) {
  require(b > 0.0, "rosenbrock_l1 needs b > 0");
  require(lambda > 0.0, "rosenbrock_l1 needs lambda > 0");
  CompositeProblem prob;
  prob.name = "rosenbrock_l1";
  prob.spec = PolyhedralSpec::penalty(lambda, 0, 2);
  prob.map.n = 2;
  prob.map.p = 3;
  prob.map.eval = [a, b](const Vector& v) {
    const double x = v[0], y = v[1];
    Vector f(3);
    f << (a - x) * (a - x) + b * (y - x * x) * (y - x * x), x - a, y - a * a;
    return f;
  };
  prob.map.jac = [a, b](const Vector& v) {
    const double x = v[0], y = v[1];
    Matrix j(3, 2);
    j << -2.0 * (a - x) - 4.0 * b * x * (y - x * x), 2.0 * b * (y - x * x),  //
        1.0, 0.0,                                                           //
        0.0, 1.0;
    return j;
  };
  prob.map.curvature = [b](const Vector& v) {
    const double x = v[0], y = v[1];
    Matrix h(2, 2);
    h << 2.0 - 4.0 * b * y + 12.0 * b * x * x, -4.0 * b * x,  //
        -4.0 * b * x, 2.0 * b;
    return h;
  };
  // Frobenius bounds of the Hessian and gradient of R on the box.
  const double r = box;
  const double h11 = 2.0 + 4.0 * b * r + 12.0 * b * r * r;
  const double h12 = 4.0 * b * r;
  const double h22 = 2.0 * b;
  const double hess = std::sqrt(h11 * h11 + 2.0 * h12 * h12 + h22 * h22);
  const double g1 = 2.0 * (std::abs(a) + r) + 4.0 * b * r * (r + r * r);
  const double g2 = 2.0 * b * (r + r * r);
  prob.map.constants.lip_fprime = hess;
  prob.map.constants.beta = hess;
  prob.map.constants.lip_f = std::sqrt(1.0 + g1 * g1 + g2 * g2);
  prob.constants_domain = "box |x|,|y| <= " + std::to_string(box);

  if (x0) {
    require(x0->size() == 2, "rosenbrock_l1 x0 must have two entries");
    prob.x0 = *x0;
  } else {
    prob.x0 = Vector(2);
    prob.x0 << -1.5, 0.0;
  }
  Vector opt(2);
  opt << a, a * a;
  prob.known_optimum = opt;
  return prob;
}

SparseMatrix tv_operator(Index rows, Index cols) {
  require(rows >= 1 && cols >= 1, "image must be non-empty");
  const Index nrows = (rows - 1) * cols + rows * (cols - 1);
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(2 * nrows));
  auto at = [rows](Index i, Index j) { return i + j * rows; };
  Index r = 0;
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i + 1 < rows; ++i, ++r) {
      trips.emplace_back(r, at(i + 1, j), 1.0);
      trips.emplace_back(r, at(i, j), -1.0);
    }
  }
  for (Index j = 0; j + 1 < cols; ++j) {
    for (Index i = 0; i < rows; ++i, ++r) {
      trips.emplace_back(r, at(i, j + 1), 1.0);
      trips.emplace_back(r, at(i, j), -1.0);
    }
  }
  SparseMatrix a(nrows, rows * cols);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

CompositeProblem tv_reconstruction(const Matrix& image, double lambda) {
  require(image.size() > 0, "image must be non-empty");
  require((image.array() >= 0.0).all() && (image.array() <= 1.0).all(),
          "image entries must lie in [0, 1]");
  require(lambda > 0.0, "tv_reconstruction needs lambda > 0");
  const Index rows = image.rows();
  const Index cols = image.cols();
  const Index n = rows * cols;
  const SparseMatrix a = tv_operator(rows, cols);
  const Index m = a.rows();
  const Vector y = Eigen::Map<const Vector>(image.data(), n);

  CompositeProblem prob;
  prob.name = "tv_reconstruction";
  prob.spec = PolyhedralSpec::penalty(lambda, 0, m);
  prob.map.n = n;
  prob.map.p = 1 + m;
  prob.map.eval = [a, y](const Vector& x) {
    Vector f(1 + a.rows());
    f[0] = 0.5 * (x - y).squaredNorm();
    f.tail(a.rows()) = a * x;
    return f;
  };
  auto jac_template = std::make_shared<Matrix>(Matrix::Zero(1 + m, n));
  jac_template->bottomRows(m) = Matrix(a);
  prob.map.jac = [jac_template, y](const Vector& x) {
    Matrix j = *jac_template;
    j.row(0) = (x - y).transpose();
    return j;
  };
  prob.map.curvature = [n](const Vector&) { return Matrix(Matrix::Identity(n, n)); };
  prob.map.constants.lip_fprime = 1.0;
  prob.map.constants.beta = 1.0;
  // ||F'|| <= sqrt(||x - y||^2 + ||A||^2) with ||A||^2 <= 8 on [0, 1]^n.
  prob.map.constants.lip_f = std::sqrt(static_cast<double>(n) + 8.0);
  prob.constants_domain = "box [0, 1]^n";
  prob.map.image = ImageFidelity{y, rows, cols};
  prob.x0 = Vector::Zero(n);
  prob.default_exact_curvature = false;
  return prob;
}

Matrix synthetic_image(Index rows, Index cols) {
  require(rows >= 8 && cols >= 8, "synthetic image needs at least 8x8 pixels");
  Matrix img = Matrix::Constant(rows, cols, 0.2);
  img.block(rows / 4, cols / 4, rows / 2, cols / 2).setConstant(0.8);
  const double ci = 0.5 * static_cast<double>(rows - 1);
  const double cj = 0.5 * static_cast<double>(cols - 1);
  const double rad = 0.125 * static_cast<double>(std::min(rows, cols));
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      const double di = static_cast<double>(i) - ci;
      const double dj = static_cast<double>(j) - cj;
      if (di * di + dj * dj <= rad * rad) img(i, j) = 0.5;
    }
  }
  return img;
}

CompositeProblem hs71_penalty(double nu, std::optional<Vector> x0) {
  require(nu > 0.0, "hs71_penalty needs nu > 0");
  CompositeProblem prob;
  prob.name = "hs71_penalty";
  prob.spec = PolyhedralSpec::penalty(nu, 9, 1);
  prob.map.n = 4;
  prob.map.p = 11;
  prob.map.eval = [](const Vector& x) {
    Vector f(11);
    f[0] = x[0] * x[3] * (x[0] + x[1] + x[2]) + x[2];
    f[1] = 25.0 - x[0] * x[1] * x[2] * x[3];
    for (Index i = 0; i < 4; ++i) {
      f[2 + i] = 1.0 - x[i];
      f[6 + i] = x[i] - 5.0;
    }
    f[10] = x.squaredNorm() - 40.0;
    return f;
  };
  prob.map.jac = [](const Vector& x) {
    Matrix j = Matrix::Zero(11, 4);
    j(0, 0) = x[3] * (2.0 * x[0] + x[1] + x[2]);
    j(0, 1) = x[0] * x[3];
    j(0, 2) = x[0] * x[3] + 1.0;
    j(0, 3) = x[0] * (x[0] + x[1] + x[2]);
    j(1, 0) = -x[1] * x[2] * x[3];
    j(1, 1) = -x[0] * x[2] * x[3];
    j(1, 2) = -x[0] * x[1] * x[3];
    j(1, 3) = -x[0] * x[1] * x[2];
    for (Index i = 0; i < 4; ++i) {
      j(2 + i, i) = -1.0;
      j(6 + i, i) = 1.0;
    }
    j.row(10) = 2.0 * x.transpose();
    return j;
  };
  prob.feasibility_residual = [](const Vector& x) {
    double g = std::max(25.0 - x[0] * x[1] * x[2] * x[3], 0.0);
    for (Index i = 0; i < 4; ++i) g = std::max({g, 1.0 - x[i], x[i] - 5.0});
    return std::max(g, std::abs(x.squaredNorm() - 40.0));
  };
  prob.default_exact_curvature = false;
  if (x0) {
    require(x0->size() == 4, "hs71_penalty x0 must have four entries");
    prob.x0 = *x0;
  } else {
    prob.x0 = Vector(4);
    prob.x0 << 1.0, 5.0, 5.0, 1.0;
  }
  Vector opt(4);
  opt << 1.0, 4.742999, 3.821151, 1.379408;
  prob.known_optimum = opt;
  return prob;
}

}  // namespace nslp
