#include "noisyslp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/SparseLU>

namespace nslp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;
constexpr double kDegenerateStep = 1e-12;

struct Eta {
  Index row;
  double pivot;
  std::vector<std::pair<Index, double>> entries;  // off-pivot nonzeros of w
};

/// Working state of the bounded revised simplex on the standard form
/// [A_ub I; A_eq 0] x = b with artificial columns appended as needed.
class Simplex {
 public:
  Simplex(const LpProblem& p, const LpOptions& opts) : opts_(opts) {
    n_struct_ = p.num_vars();
    m_ub_ = p.a_ub.rows();
    m_ = m_ub_ + p.a_eq.rows();
    b_.resize(m_);
    b_ << p.b_ub, p.b_eq;

    // Column storage (CSC).
    col_ptr_.push_back(0);
    for (Index j = 0; j < n_struct_; ++j) {
      for (SparseMatrix::InnerIterator it(p.a_ub, j); it; ++it) push_entry(it.row(), it.value());
      for (SparseMatrix::InnerIterator it(p.a_eq, j); it; ++it) push_entry(m_ub_ + it.row(), it.value());
      col_ptr_.push_back(static_cast<Index>(row_idx_.size()));
    }
    lo_.assign(p.lower.data(), p.lower.data() + n_struct_);
    up_.assign(p.upper.data(), p.upper.data() + n_struct_);
    for (Index i = 0; i < m_ub_; ++i) {
      push_entry(i, 1.0);
      col_ptr_.push_back(static_cast<Index>(row_idx_.size()));
      lo_.push_back(0.0);
      up_.push_back(kInf);
    }
    cost_orig_.assign(p.c.data(), p.c.data() + n_struct_);
    cost_orig_.resize(lo_.size(), 0.0);
    max_pivots_ = 50L * static_cast<long>(m_ + n_struct_ + m_ub_);
    if (max_pivots_ < 100) max_pivots_ = 100;
  }

  LpSolution solve(const LpBasis* warm) {
    LpSolution sol;
    if (warm == nullptr || !try_warm(*warm)) crash();
    if (n_artificial_ > 0) {
      std::vector<double> cost1(ncols(), 0.0);
      for (Index j = first_art_; j < ncols(); ++j) cost1[static_cast<std::size_t>(j)] = 1.0;
      const LpStatus st = iterate(cost1);
      if (st == LpStatus::IterLimit) return finish(sol, st);
      double infeas = 0.0;
      for (Index j = first_art_; j < ncols(); ++j) infeas += std::abs(x_[static_cast<std::size_t>(j)]);
      double bscale = 1.0;
      for (Index i = 0; i < m_; ++i) bscale = std::max(bscale, std::abs(b_[i]));
      if (st != LpStatus::Optimal || infeas > 1e-8 * bscale) return finish(sol, LpStatus::Infeasible);
      for (Index j = first_art_; j < ncols(); ++j) {
        up_[static_cast<std::size_t>(j)] = 0.0;
        if (pos_[static_cast<std::size_t>(j)] < 0) x_[static_cast<std::size_t>(j)] = 0.0;
      }
    }
    std::vector<double> cost2 = cost_orig_;
    cost2.resize(ncols(), 0.0);
    return finish(sol, iterate(cost2));
  }

 private:
  Index ncols() const { return static_cast<Index>(lo_.size()); }

  void push_entry(Index row, double v) {
    if (v == 0.0) return;
    row_idx_.push_back(row);
    vals_.push_back(v);
  }

  std::size_t u(Index j) const { return static_cast<std::size_t>(j); }

  double column_dot(Index j, const Vector& y) const {
    double s = 0.0;
    for (Index k = col_ptr_[u(j)]; k < col_ptr_[u(j + 1)]; ++k) s += vals_[u(k)] * y[row_idx_[u(k)]];
    return s;
  }

  static double initial_value(double lo, double up) {
    if (lo <= 0.0 && 0.0 <= up) return 0.0;
    if (lo > 0.0) return lo;
    return up;
  }

  /// Initial basis from singleton columns (slacks and structural columns
  /// with a single nonzero) whose required value lies within bounds;
  /// artificial columns cover the remaining rows.
  void crash() {
    const Index nc = ncols();
    x_.resize(u(nc));
    for (Index j = 0; j < nc; ++j) x_[u(j)] = initial_value(lo_[u(j)], up_[u(j)]);
    pos_.assign(u(nc), -1);
    basis_.assign(u(m_), -1);

    Vector r = b_;
    for (Index j = 0; j < nc; ++j) {
      if (x_[u(j)] == 0.0) continue;
      for (Index k = col_ptr_[u(j)]; k < col_ptr_[u(j + 1)]; ++k) r[row_idx_[u(k)]] -= vals_[u(k)] * x_[u(j)];
    }

    std::vector<std::vector<Index>> singles(u(m_));
    for (Index j = 0; j < nc; ++j) {
      if (col_ptr_[u(j + 1)] - col_ptr_[u(j)] == 1) singles[u(row_idx_[u(col_ptr_[u(j)])])].push_back(j);
    }

    first_art_ = nc;
    for (Index i = 0; i < m_; ++i) {
      bool placed = false;
      for (Index j : singles[u(i)]) {
        if (pos_[u(j)] >= 0) continue;
        const double a = vals_[u(col_ptr_[u(j)])];
        const double v = x_[u(j)] + r[i] / a;
        if (v >= lo_[u(j)] - opts_.feas_tol && v <= up_[u(j)] + opts_.feas_tol) {
          x_[u(j)] = std::clamp(v, lo_[u(j)], up_[u(j)]);
          pos_[u(j)] = i;
          basis_[u(i)] = j;
          placed = true;
          break;
        }
      }
      if (placed) continue;
      const double sign = r[i] >= 0.0 ? 1.0 : -1.0;
      push_entry(i, sign);
      col_ptr_.push_back(static_cast<Index>(row_idx_.size()));
      lo_.push_back(0.0);
      up_.push_back(kInf);
      x_.push_back(std::abs(r[i]));
      const Index j = ncols() - 1;
      pos_.push_back(i);
      basis_[u(i)] = j;
      ++n_artificial_;
    }
  }

  /// Adopts a basis and point when they are primal feasible here.
  bool try_warm(const LpBasis& w) {
    const Index nc = ncols();
    if (w.values.size() != nc || static_cast<Index>(w.basic.size()) != m_) return false;
    pos_.assign(u(nc), -1);
    basis_.assign(u(m_), -1);
    for (Index i = 0; i < m_; ++i) {
      const Index j = w.basic[u(i)];
      if (j < 0 || j >= nc || pos_[u(j)] >= 0) return false;
      pos_[u(j)] = i;
      basis_[u(i)] = j;
    }
    x_.assign(w.values.data(), w.values.data() + nc);
    for (Index j = 0; j < nc; ++j) {
      if (pos_[u(j)] < 0 && (x_[u(j)] < lo_[u(j)] || x_[u(j)] > up_[u(j)])) return false;
    }
    first_art_ = nc;
    if (!refactor()) return false;
    for (Index i = 0; i < m_; ++i) {
      const Index j = basis_[u(i)];
      const double tol = opts_.feas_tol * std::max(1.0, std::abs(x_[u(j)]));
      if (!std::isfinite(x_[u(j)]) || x_[u(j)] < lo_[u(j)] - tol || x_[u(j)] > up_[u(j)] + tol) return false;
    }
    return true;
  }

  bool refactor() {
    etas_.clear();
    since_refactor_ = 0;
    if (m_ == 0) return true;
    std::vector<Triplet> trips;
    for (Index i = 0; i < m_; ++i) {
      const Index j = basis_[u(i)];
      for (Index k = col_ptr_[u(j)]; k < col_ptr_[u(j + 1)]; ++k) trips.emplace_back(row_idx_[u(k)], i, vals_[u(k)]);
    }
    SparseMatrix bmat(m_, m_);
    bmat.setFromTriplets(trips.begin(), trips.end());
    bmat.makeCompressed();
    lu_.analyzePattern(bmat);
    lu_.factorize(bmat);
    if (lu_.info() != Eigen::Success) return false;

    // x_B = B^{-1} (b - N x_N)
    Vector rhs = b_;
    for (Index j = 0; j < ncols(); ++j) {
      if (pos_[u(j)] >= 0 || x_[u(j)] == 0.0) continue;
      for (Index k = col_ptr_[u(j)]; k < col_ptr_[u(j + 1)]; ++k) rhs[row_idx_[u(k)]] -= vals_[u(k)] * x_[u(j)];
    }
    const Vector xb = lu_.solve(rhs);
    for (Index i = 0; i < m_; ++i) x_[u(basis_[u(i)])] = xb[i];
    return true;
  }

  /// v <- B^{-1} v
  void ftran(Vector& v) const {
    if (m_ > 0) {
      tmp_ = lu_.solve(v);
      v.swap(tmp_);
    }
    for (const auto& e : etas_) {
      const double vr = v[e.row] / e.pivot;
      if (vr != 0.0) {
        for (const auto& [i, w] : e.entries) v[i] -= w * vr;
      }
      v[e.row] = vr;
    }
  }

  /// c <- B^{-T} c
  void btran(Vector& c) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = c[it->row];
      for (const auto& [i, w] : it->entries) s -= c[i] * w;
      c[it->row] = s / it->pivot;
    }
    if (m_ > 0) {
      tmp_ = lu_.transpose().solve(c);
      c.swap(tmp_);
    }
  }

  LpStatus iterate(const std::vector<double>& cost) {
    if (!refactor()) return LpStatus::IterLimit;
    bool bland = false;
    bool fresh = true;  // factorization is fresh and no pivot since
    while (true) {
      if (since_refactor_ >= opts_.refactor_every) {
        if (!refactor()) return LpStatus::IterLimit;
        fresh = true;
      }
      Vector& y = y_;
      y.resize(m_);
      for (Index i = 0; i < m_; ++i) y[i] = cost[u(basis_[u(i)])];
      btran(y);

      Index enter = -1;
      double enter_dir = 0.0;
      double best = 0.0;
      for (Index j = 0; j < ncols(); ++j) {
        if (pos_[u(j)] >= 0) continue;
        const double lo = lo_[u(j)];
        const double up = up_[u(j)];
        if (lo == up) continue;
        const double xj = x_[u(j)];
        const double dj = cost[u(j)] - column_dot(j, y);
        double dir = 0.0;
        if (dj < -opts_.opt_tol && xj < up) dir = 1.0;
        else if (dj > opts_.opt_tol && xj > lo) dir = -1.0;
        if (dir == 0.0) continue;
        if (bland) {
          enter = j;
          enter_dir = dir;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          enter = j;
          enter_dir = dir;
        }
      }

      if (enter < 0) {
        if (fresh) return LpStatus::Optimal;
        // Confirm optimality on a fresh factorization.
        if (!refactor()) return LpStatus::IterLimit;
        fresh = true;
        continue;
      }

      Vector& w = w_;
      w.setZero(m_);
      for (Index k = col_ptr_[u(enter)]; k < col_ptr_[u(enter + 1)]; ++k) w[row_idx_[u(k)]] = vals_[u(k)];
      ftran(w);
      double theta = enter_dir > 0 ? up_[u(enter)] - x_[u(enter)] : x_[u(enter)] - lo_[u(enter)];
      Index leave = -1;
      double leave_w = 0.0;
      for (Index i = 0; i < m_; ++i) {
        const double wi = w[i];
        if (std::abs(wi) <= kPivotTol) continue;
        const double delta = -enter_dir * wi;
        const Index jb = basis_[u(i)];
        double lim;
        if (delta < 0.0) {
          if (lo_[u(jb)] == -kInf) continue;
          lim = (x_[u(jb)] - lo_[u(jb)]) / (-delta);
        } else {
          if (up_[u(jb)] == kInf) continue;
          lim = (up_[u(jb)] - x_[u(jb)]) / delta;
        }
        lim = std::max(lim, 0.0);
        const double tie = theta == kInf ? 0.0 : 1e-12 * std::max(1.0, theta);
        if (lim < theta - tie) {
          theta = lim;
          leave = i;
          leave_w = std::abs(wi);
        } else if (lim <= theta + tie && leave >= 0) {
          const bool better = bland ? jb < basis_[u(leave)] : std::abs(wi) > leave_w;
          if (better) {
            theta = std::min(theta, lim);
            leave = i;
            leave_w = std::abs(wi);
          }
        }
      }
      if (theta == kInf) return LpStatus::Unbounded;

      const double step = enter_dir * theta;
      x_[u(enter)] += step;
      for (Index i = 0; i < m_; ++i) {
        if (w[i] != 0.0) x_[u(basis_[u(i)])] -= step * w[i];
      }
      bland = theta <= kDegenerateStep;
      fresh = false;

      if (leave < 0) {
        x_[u(enter)] = enter_dir > 0 ? up_[u(enter)] : lo_[u(enter)];
      } else {
        const Index jout = basis_[u(leave)];
        const double delta = -enter_dir * w[leave];
        x_[u(jout)] = delta < 0.0 ? lo_[u(jout)] : up_[u(jout)];
        pos_[u(jout)] = -1;
        basis_[u(leave)] = enter;
        pos_[u(enter)] = leave;
        Eta e;
        e.row = leave;
        e.pivot = w[leave];
        for (Index i = 0; i < m_; ++i) {
          if (i != leave && w[i] != 0.0) e.entries.emplace_back(i, w[i]);
        }
        etas_.push_back(std::move(e));
        ++since_refactor_;
      }
      if (++pivots_ > max_pivots_) return LpStatus::IterLimit;
    }
  }

  LpSolution& finish(LpSolution& sol, LpStatus st) {
    sol.status = st;
    sol.pivots = pivots_;
    sol.x.resize(n_struct_);
    for (Index j = 0; j < n_struct_; ++j) sol.x[j] = x_.empty() ? 0.0 : x_[u(j)];
    if (st == LpStatus::Optimal) {
      for (Index j = 0; j < n_struct_; ++j) sol.x[j] = std::clamp(sol.x[j], lo_[u(j)], up_[u(j)]);
    }
    double obj = 0.0;
    for (Index j = 0; j < n_struct_; ++j) obj += cost_orig_[u(j)] * sol.x[j];
    sol.objective = obj;
    if (st == LpStatus::Optimal) {
      const bool clean = std::all_of(basis_.begin(), basis_.end(), [&](Index j) { return j < first_art_; });
      if (clean) {
        LpBasis b;
        b.basic = basis_;
        b.values = Eigen::Map<const Vector>(x_.data(), first_art_);
        sol.basis = std::move(b);
      }
    }
    return sol;
  }

  LpOptions opts_;
  Index n_struct_ = 0;
  Index m_ub_ = 0;
  Index m_ = 0;
  Vector b_;
  std::vector<Index> col_ptr_;
  std::vector<Index> row_idx_;
  std::vector<double> vals_;
  std::vector<double> lo_, up_, cost_orig_, x_;
  std::vector<Index> pos_, basis_;
  Index first_art_ = 0;
  Index n_artificial_ = 0;
  mutable Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  Vector y_, w_;         // work buffers for btran and ftran
  mutable Vector tmp_;
  int since_refactor_ = 0;
  long pivots_ = 0;
  long max_pivots_ = 0;
};

}  // namespace

std::string_view to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    case LpStatus::IterLimit: return "IterLimit";
  }
  return "?";
}

void LpProblem::validate() const {
  const Index n = c.size();
  require(lower.size() == n && upper.size() == n, "LP bounds must match the number of variables");
  require(a_ub.cols() == n || a_ub.rows() == 0, "A_ub column count mismatch");
  require(a_eq.cols() == n || a_eq.rows() == 0, "A_eq column count mismatch");
  require(a_ub.rows() == b_ub.size(), "A_ub rows must match b_ub");
  require(a_eq.rows() == b_eq.size(), "A_eq rows must match b_eq");
  for (Index j = 0; j < n; ++j) {
    require(!(lower[j] > upper[j]), "LP lower bound exceeds upper bound");
  }
}

LpSolution solve_lp(const LpProblem& p, const LpOptions& opts, const LpBasis* warm) {
  p.validate();
  LpProblem q = p;
  if (q.a_ub.cols() != q.c.size()) q.a_ub.resize(0, q.c.size());
  if (q.a_eq.cols() != q.c.size()) q.a_eq.resize(0, q.c.size());
  Simplex s(q, opts);
  return s.solve(warm);
}

}  // namespace nslp
