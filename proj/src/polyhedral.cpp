#include "noisyslp/polyhedral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nslp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DimVisitor {
  Index operator()(const Identity&) const { return 1; }
  Index operator()(const MaxAffine& m) const {
    require(!m.pieces.empty(), "MaxAffine needs at least one piece");
    const Index p = m.pieces.front().a.size();
    require(p > 0, "MaxAffine pieces must have positive dimension");
    for (const auto& piece : m.pieces) {
      require(piece.a.size() == p, "MaxAffine pieces have inconsistent dimension");
    }
    return p;
  }
  Index operator()(const CompositePenalty& c) const {
    require(c.nu > 0.0, "CompositePenalty requires nu > 0");
    require(c.n_ineq >= 0 && c.n_eq >= 0, "CompositePenalty counts must be >= 0");
    return 1 + c.n_ineq + c.n_eq;
  }
};

void check_dim(const PolyhedralSpec& spec, Index got) {
  if (got != spec.dim()) {
    throw InvalidArgument("omega input has dimension " + std::to_string(got) +
                          ", expected " + std::to_string(spec.dim()));
  }
}

// Rows of `jac` as sparse entries; structural zeros of the Jacobian are
// dropped so that large sparse problems (TV) stay sparse in the LP.
void push_row(std::vector<Triplet>& out, Index row, const Eigen::Ref<const Matrix>& jac,
              Index jrow, double scale) {
  for (Index col = 0; col < jac.cols(); ++col) {
    const double v = jac(jrow, col);
    if (v != 0.0) out.emplace_back(row, col, scale * v);
  }
}

}  // namespace

PolyhedralSpec::PolyhedralSpec(Variant v) : v_(std::move(v)) {
  dim_ = std::visit(DimVisitor{}, v_);
}

double eval_omega(const PolyhedralSpec& spec, const Eigen::Ref<const Vector>& z) {
  check_dim(spec, z.size());
  if (spec.get_if<Identity>()) return z[0];
  if (const auto* m = spec.get_if<MaxAffine>()) {
    double best = -kInf;
    for (const auto& piece : m->pieces) best = std::max(best, piece.a.dot(z) + piece.b);
    return best;
  }
  const auto& c = *spec.get_if<CompositePenalty>();
  double pen = 0.0;
  for (Index i = 0; i < c.n_ineq; ++i) pen += std::max(z[1 + i], 0.0);
  for (Index j = 0; j < c.n_eq; ++j) pen += std::abs(z[1 + c.n_ineq + j]);
  return z[0] + c.nu * pen;
}

Vector omega_smooth_gradient(const PolyhedralSpec& spec, const Eigen::Ref<const Vector>& z) {
  check_dim(spec, z.size());
  Vector g = Vector::Zero(z.size());
  if (spec.get_if<Identity>()) {
    g[0] = 1.0;
    return g;
  }
  if (const auto* m = spec.get_if<MaxAffine>()) {
    Index arg = 0;
    double best = -kInf;
    for (std::size_t i = 0; i < m->pieces.size(); ++i) {
      const double v = m->pieces[i].a.dot(z) + m->pieces[i].b;
      if (v > best) {
        best = v;
        arg = static_cast<Index>(i);
      }
    }
    return m->pieces[static_cast<std::size_t>(arg)].a;
  }
  const auto& c = *spec.get_if<CompositePenalty>();
  g[0] = 1.0;
  for (Index i = 0; i < c.n_ineq; ++i) g[1 + i] = z[1 + i] > 0.0 ? c.nu : 0.0;
  for (Index j = 0; j < c.n_eq; ++j) {
    const double v = z[1 + c.n_ineq + j];
    g[1 + c.n_ineq + j] = v > 0.0 ? c.nu : (v < 0.0 ? -c.nu : 0.0);
  }
  return g;
}

double lipschitz_omega(const PolyhedralSpec& spec) {
  if (spec.get_if<Identity>()) return 1.0;
  if (const auto* m = spec.get_if<MaxAffine>()) {
    double best = 0.0;
    for (const auto& piece : m->pieces) best = std::max(best, piece.a.norm());
    return best;
  }
  const auto& c = *spec.get_if<CompositePenalty>();
  const double m = static_cast<double>(c.n_ineq + c.n_eq);
  return std::sqrt(1.0 + c.nu * c.nu * m);
}

LinearObjectiveBlock epigraph_block(const PolyhedralSpec& spec,
                                    const Eigen::Ref<const Vector>& c,
                                    const Eigen::Ref<const Matrix>& jac) {
  check_dim(spec, c.size());
  require(jac.rows() == c.size(), "Jacobian row count must match omega dimension");
  const Index n = jac.cols();

  LinearObjectiveBlock blk;
  blk.n = n;

  if (spec.get_if<Identity>()) {
    blk.cost = jac.row(0).transpose();
    blk.constant = c[0];
    blk.aux_lower.resize(0);
    blk.aux_upper.resize(0);
    blk.a_ub.resize(0, n);
    blk.b_ub.resize(0);
    blk.a_eq.resize(0, n);
    blk.b_eq.resize(0);
    return blk;
  }

  if (const auto* m = spec.get_if<MaxAffine>()) {
    // a_i.(c + J d) + b_i - t <= 0
    const Index k = static_cast<Index>(m->pieces.size());
    blk.n_aux = 1;
    blk.aux_lower = Vector::Constant(1, -kInf);
    blk.aux_upper = Vector::Constant(1, kInf);
    blk.cost = Vector::Zero(n + 1);
    blk.cost[n] = 1.0;
    std::vector<Triplet> trips;
    blk.b_ub.resize(k);
    for (Index i = 0; i < k; ++i) {
      const auto& piece = m->pieces[static_cast<std::size_t>(i)];
      const Vector row = jac.transpose() * piece.a;
      for (Index col = 0; col < n; ++col) {
        if (row[col] != 0.0) trips.emplace_back(i, col, row[col]);
      }
      trips.emplace_back(i, n, -1.0);
      blk.b_ub[i] = -(piece.a.dot(c) + piece.b);
    }
    blk.a_ub.resize(k, n + 1);
    blk.a_ub.setFromTriplets(trips.begin(), trips.end());
    blk.a_eq.resize(0, n + 1);
    blk.b_eq.resize(0);
    return blk;
  }

  const auto& pen = *spec.get_if<CompositePenalty>();
  const Index ni = pen.n_ineq;
  const Index ne = pen.n_eq;
  // aux layout: s (ni), p (ne), q (ne)
  blk.n_aux = ni + 2 * ne;
  const Index nv = n + blk.n_aux;
  blk.aux_lower = Vector::Zero(blk.n_aux);
  blk.aux_upper = Vector::Constant(blk.n_aux, kInf);
  blk.cost = Vector::Zero(nv);
  blk.cost.head(n) = jac.row(0).transpose();
  blk.cost.tail(blk.n_aux).setConstant(pen.nu);
  blk.constant = c[0];

  // J_i d - s_i <= -c_i
  std::vector<Triplet> ub;
  blk.b_ub.resize(ni);
  for (Index i = 0; i < ni; ++i) {
    push_row(ub, i, jac, 1 + i, 1.0);
    ub.emplace_back(i, n + i, -1.0);
    blk.b_ub[i] = -c[1 + i];
  }
  blk.a_ub.resize(ni, nv);
  blk.a_ub.setFromTriplets(ub.begin(), ub.end());

  // J_j d - p_j + q_j = -c_j
  std::vector<Triplet> eq;
  blk.b_eq.resize(ne);
  for (Index j = 0; j < ne; ++j) {
    push_row(eq, j, jac, 1 + ni + j, 1.0);
    eq.emplace_back(j, n + ni + j, -1.0);
    eq.emplace_back(j, n + ni + ne + j, 1.0);
    blk.b_eq[j] = -c[1 + ni + j];
  }
  blk.a_eq.resize(ne, nv);
  blk.a_eq.setFromTriplets(eq.begin(), eq.end());
  return blk;
}

}  // namespace nslp
