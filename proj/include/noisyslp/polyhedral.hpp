#pragma once

#include <variant>
#include <vector>

#include "noisyslp/types.hpp"

namespace nslp {

/// omega(z) = z_0.
struct Identity {};

struct AffinePiece {
  Vector a;
  double b = 0.0;
};

/// omega(z) = max_i (a_i . z + b_i).
struct MaxAffine {
  std::vector<AffinePiece> pieces;
};

/// Exact l1 penalty. Input layout z = (z_0, z_ineq, z_eq) and
/// omega(z) = z_0 + nu * (sum max(z_ineq, 0) + sum |z_eq|).
struct CompositePenalty {
  double nu = 1.0;
  Index n_ineq = 0;
  Index n_eq = 0;
};

/// Convex polyhedral outer function. Immutable once constructed.
class PolyhedralSpec {
 public:
  using Variant = std::variant<Identity, MaxAffine, CompositePenalty>;

  PolyhedralSpec() : PolyhedralSpec(Identity{}) {}
  PolyhedralSpec(Variant v);  // NOLINT: implicit by design of the variant API

  static PolyhedralSpec identity() { return PolyhedralSpec(Identity{}); }
  static PolyhedralSpec penalty(double nu, Index n_ineq, Index n_eq) {
    return PolyhedralSpec(CompositePenalty{nu, n_ineq, n_eq});
  }
  static PolyhedralSpec max_affine(std::vector<AffinePiece> pieces) {
    return PolyhedralSpec(MaxAffine{std::move(pieces)});
  }

  /// Input dimension p.
  Index dim() const { return dim_; }
  const Variant& variant() const { return v_; }

  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }

 private:
  Variant v_;
  Index dim_ = 1;
};

double eval_omega(const PolyhedralSpec& spec, const Eigen::Ref<const Vector>& z);

/// Gradient of omega at z with kinks resolved to zero on the penalized
/// coordinates (and the first maximizing piece for MaxAffine).
Vector omega_smooth_gradient(const PolyhedralSpec& spec,
                             const Eigen::Ref<const Vector>& z);

double lipschitz_omega(const PolyhedralSpec& spec);

/// Linear encoding of min_d omega(c + J d). Variables are (d, aux) with
/// d in R^n first. The block value is constant + cost . (d, aux).
struct LinearObjectiveBlock {
  Index n = 0;
  Index n_aux = 0;
  Vector aux_lower;
  Vector aux_upper;
  Vector cost;        // length n + n_aux
  double constant = 0.0;
  SparseMatrix a_ub;  // rows over (d, aux)
  Vector b_ub;
  SparseMatrix a_eq;
  Vector b_eq;
};

LinearObjectiveBlock epigraph_block(const PolyhedralSpec& spec,
                                    const Eigen::Ref<const Vector>& c,
                                    const Eigen::Ref<const Matrix>& jac);

}  // namespace nslp
