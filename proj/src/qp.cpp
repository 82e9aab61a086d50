#include "cbfshield/qp.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cbfshield::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense view of every finite constraint as a_k·x >= b_k. Order: inequalities,
// then finite lower bounds, then finite upper bounds.
struct ConstraintSet {
  Eigen::MatrixXd normals;  // n x m
  Eigen::VectorXd rhs;
  std::vector<ConstraintId> ids;
  Eigen::VectorXd normal_norms;

  explicit ConstraintSet(const QpProblem& p) {
    const int n = p.num_vars();
    int count = static_cast<int>(p.ineq.size());
    for (int i = 0; i < n; ++i) count += std::isfinite(p.lo[i]) + std::isfinite(p.hi[i]);
    normals = Eigen::MatrixXd::Zero(n, count);
    rhs.resize(count);
    int k = 0;
    for (int i = 0; i < static_cast<int>(p.ineq.size()); ++i, ++k) {
      normals.col(k) = p.ineq[i].a;
      rhs[k] = p.ineq[i].b;
      ids.push_back({ConstraintId::Kind::Inequality, i});
    }
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(p.lo[i])) continue;
      normals(i, k) = 1.0;
      rhs[k++] = p.lo[i];
      ids.push_back({ConstraintId::Kind::BoxLower, i});
    }
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(p.hi[i])) continue;
      normals(i, k) = -1.0;
      rhs[k++] = -p.hi[i];
      ids.push_back({ConstraintId::Kind::BoxUpper, i});
    }
    normal_norms = normals.colwise().norm().transpose();
  }

  int size() const { return static_cast<int>(ids.size()); }
};

// Symmetric Givens reflection acting on (a, b). Returns false when both are zero.
struct Reflection {
  double c = 1.0, s = 0.0, h = 0.0;
  static Reflection zeroing(double a, double b) {
    Reflection g;
    g.h = std::hypot(a, b);
    if (g.h > 0.0) {
      g.c = a / g.h;
      g.s = b / g.h;
    }
    return g;
  }
  void apply(double& a, double& b) const {
    const double ta = a, tb = b;
    a = c * ta + s * tb;
    b = s * ta - c * tb;
  }
};

}  // namespace

QpProblem QpProblem::unconstrained(Eigen::MatrixXd H, Eigen::VectorXd f) {
  const auto n = f.size();
  QpProblem p;
  p.H = std::move(H);
  p.f = std::move(f);
  p.lo = Eigen::VectorXd::Constant(n, -kInf);
  p.hi = Eigen::VectorXd::Constant(n, kInf);
  return p;
}

void QpProblem::validate() const {
  const auto n = f.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "QP has no variables");
  if (H.rows() != n || H.cols() != n) throw Error(ErrorCode::InvalidArgument, "H must be n x n");
  if (lo.size() != n || hi.size() != n) throw Error(ErrorCode::InvalidArgument, "box bounds must have n entries");
  if (!H.allFinite() || !f.allFinite()) throw Error(ErrorCode::InvalidArgument, "H and f must be finite");
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw Error(ErrorCode::InvalidArgument, "H is not symmetric");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > hi[i] || lo[i] == kInf || hi[i] == -kInf) {
      throw Error(ErrorCode::InvalidArgument, "box bound " + std::to_string(i) + " is inconsistent");
    }
  }
  for (std::size_t k = 0; k < ineq.size(); ++k) {
    if (ineq[k].a.size() != n || !ineq[k].a.allFinite() || !std::isfinite(ineq[k].b)) {
      throw Error(ErrorCode::InvalidArgument, "inequality " + std::to_string(k) + " is malformed");
    }
  }
}

std::string ConstraintId::to_string() const {
  switch (kind) {
    case Kind::Inequality: return "ineq " + std::to_string(index);
    case Kind::BoxLower: return "box lo " + std::to_string(index);
    case Kind::BoxUpper: return "box hi " + std::to_string(index);
  }
  return "?";
}

double KktReport::max() const {
  return std::max({stationarity, primal_infeasibility, dual_infeasibility, complementarity});
}

KktReport kkt_report(const QpProblem& problem, const Eigen::VectorXd& x, const std::vector<ConstraintId>& active,
                     const std::vector<double>& multipliers) {
  KktReport rep;
  Eigen::VectorXd grad = problem.H * x + problem.f;
  auto slack_of = [&](const ConstraintId& id) {
    switch (id.kind) {
      case ConstraintId::Kind::Inequality: return problem.ineq[id.index].a.dot(x) - problem.ineq[id.index].b;
      case ConstraintId::Kind::BoxLower: return x[id.index] - problem.lo[id.index];
      case ConstraintId::Kind::BoxUpper: return problem.hi[id.index] - x[id.index];
    }
    return 0.0;
  };
  for (std::size_t k = 0; k < active.size(); ++k) {
    const ConstraintId& id = active[k];
    const double mu = multipliers[k];
    switch (id.kind) {
      case ConstraintId::Kind::Inequality: grad -= mu * problem.ineq[id.index].a; break;
      case ConstraintId::Kind::BoxLower: grad[id.index] -= mu; break;
      case ConstraintId::Kind::BoxUpper: grad[id.index] += mu; break;
    }
    rep.dual_infeasibility = std::max(rep.dual_infeasibility, -mu);
    rep.complementarity = std::max(rep.complementarity, std::abs(mu * slack_of(id)));
  }
  rep.stationarity = grad.cwiseAbs().maxCoeff();
  for (std::size_t k = 0; k < problem.ineq.size(); ++k) {
    rep.primal_infeasibility = std::max(rep.primal_infeasibility, -slack_of({ConstraintId::Kind::Inequality, int(k)}));
  }
  for (int i = 0; i < problem.num_vars(); ++i) {
    rep.primal_infeasibility = std::max({rep.primal_infeasibility, problem.lo[i] - x[i], x[i] - problem.hi[i]});
  }
  return rep;
}

QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings, QpWorkspace* workspace) {
  problem.validate();
  if (!(settings.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "QP tolerance must be > 0");

  QpWorkspace local;
  QpWorkspace& ws = workspace ? *workspace : local;
  const int n = problem.num_vars();
  const ConstraintSet cs(problem);

  const Eigen::LLT<Eigen::MatrixXd> llt(problem.H);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "H is not positive definite");

  // Invariant: Jᵀ N_active = [R; 0] with J = L⁻ᵀ Q, so J Jᵀ = H⁻¹.
  Eigen::MatrixXd& J = ws.J_;
  Eigen::MatrixXd& R = ws.R_;
  J = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
  R = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd x = llt.solve(-problem.f);

  std::vector<int> active;  // indices into cs
  std::vector<double> u;
  std::vector<char> is_active(cs.size(), 0);
  std::set<ConstraintId> hint;
  if (ws.use_warm_start) hint.insert(ws.warm_start_hint.begin(), ws.warm_start_hint.end());
  int iterations = 0;

  auto snapshot = [&]() {
    QpSolution s;
    s.x = x;
    for (std::size_t k = 0; k < active.size(); ++k) {
      s.active_set.push_back(cs.ids[active[k]]);
      s.multipliers.push_back(u[k]);
    }
    s.iterations = iterations;
    s.objective = problem.objective(x);
    s.kkt_residual = kkt_report(problem, x, s.active_set, s.multipliers).max();
    return s;
  };

  auto slack = [&](int k) { return cs.normals.col(k).dot(x) - cs.rhs[k]; };

  auto drop = [&](int pos) {
    const int q = static_cast<int>(active.size());
    for (int k = pos; k < q - 1; ++k) R.col(k) = R.col(k + 1);
    R.col(q - 1).setZero();
    is_active[active[pos]] = 0;
    active.erase(active.begin() + pos);
    u.erase(u.begin() + pos);
    const int nq = q - 1;
    for (int j = pos; j < nq; ++j) {
      const Reflection g = Reflection::zeroing(R(j, j), R(j + 1, j));
      if (g.h == 0.0) continue;
      for (int k = j; k < nq; ++k) g.apply(R(j, k), R(j + 1, k));
      R(j + 1, j) = 0.0;
      for (int row = 0; row < n; ++row) g.apply(J(row, j), J(row, j + 1));
    }
  };

  Eigen::VectorXd& d = ws.d_;
  Eigen::VectorXd& z = ws.z_;
  Eigen::VectorXd& r = ws.r_;

  for (;;) {
    // Choose the most violated constraint (scaled by normal length), preferring
    // hinted constraints; ties resolve to the lowest index.
    int p = -1;
    double worst = 0.0;
    bool p_hinted = false;
    const double x_scale = x.cwiseAbs().maxCoeff();
    for (int k = 0; k < cs.size(); ++k) {
      if (is_active[k]) continue;
      const double s = slack(k);
      const double threshold = 1e-12 * (1.0 + std::abs(cs.rhs[k]) + cs.normal_norms[k] * x_scale);
      if (s >= -threshold) continue;
      const double score = s / cs.normal_norms[k];
      const bool hinted = hint.count(cs.ids[k]) > 0;
      if (p < 0 || (hinted && !p_hinted) || (hinted == p_hinted && score < worst)) {
        p = k;
        worst = score;
        p_hinted = hinted;
      }
    }
    if (p < 0) break;

    double u_new = 0.0;
    const auto a_p = cs.normals.col(p);
    for (;;) {
      if (++iterations > settings.max_iter) {
        throw QpError(QpFailure::MaxIterations,
                      "active-set iteration limit " + std::to_string(settings.max_iter) + " reached", snapshot(),
                      cs.ids[p]);
      }
      const int q = static_cast<int>(active.size());
      d.noalias() = J.transpose() * a_p;
      const double tail_sq = d.tail(n - q).squaredNorm();
      z.noalias() = J.rightCols(n - q) * d.tail(n - q);
      r = R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));

      // Partial (dual) step: largest step before an active multiplier hits zero.
      double t1 = kInf;
      int l = -1;
      for (int j = 0; j < q; ++j) {
        if (r[j] <= 0.0) continue;
        const double ratio = u[j] / r[j];
        if (ratio < t1 || (ratio == t1 && cs.ids[active[j]] < cs.ids[active[l]])) {
          t1 = ratio;
          l = j;
        }
      }
      // Full (primal) step: makes constraint p active.
      const bool dependent = tail_sq <= 1e-24 * std::max(1.0, d.squaredNorm());
      const double t2 = dependent ? kInf : -slack(p) / tail_sq;
      const double t = std::min(t1, t2);

      if (t == kInf) {
        throw QpError(QpFailure::Infeasible,
                      "constraints are inconsistent: " + cs.ids[p].to_string() +
                          " cannot be satisfied together with the active set",
                      snapshot(), cs.ids[p]);
      }
      for (int j = 0; j < q; ++j) u[j] -= t * r[j];
      u_new += t;
      if (!dependent) x += t * z;

      if (t2 <= t1) {
        // Add p: rotate d so that only its first q+1 entries are nonzero.
        for (int j = n - 1; j > q; --j) {
          const Reflection g = Reflection::zeroing(d[j - 1], d[j]);
          if (g.h == 0.0) continue;
          g.apply(d[j - 1], d[j]);
          d[j] = 0.0;
          for (int row = 0; row < n; ++row) g.apply(J(row, j - 1), J(row, j));
        }
        R.col(q).head(q + 1) = d.head(q + 1);
        active.push_back(p);
        u.push_back(u_new);
        is_active[p] = 1;
        break;
      }
      u[l] = 0.0;
      drop(l);
    }
  }

  QpSolution sol = snapshot();
  if (ws.use_warm_start) ws.warm_start_hint = sol.active_set;
  return sol;
}

}  // namespace cbfshield::qp
