#pragma once

#include "cbfshield/error.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace cbfshield::qp {

/// a·x >= b
struct LinearInequality {
  Eigen::VectorXd a;
  double b = 0.0;
};

/// minimize ½xᵀHx + fᵀx  s.t.  a_k·x >= b_k,  lo <= x <= hi.
/// H must be symmetric positive definite. Infinite bounds are ignored.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  std::vector<LinearInequality> ineq;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  /// Problem with no constraints and an unbounded box.
  static QpProblem unconstrained(Eigen::MatrixXd H, Eigen::VectorXd f);

  int num_vars() const { return static_cast<int>(f.size()); }
  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(H * x) + f.dot(x); }
  /// Throws InvalidArgument on shape mismatch, asymmetry > 1e-12, lo > hi or
  /// non-finite data. Positive definiteness is checked by the factorization.
  void validate() const;
};

struct ConstraintId {
  enum class Kind { Inequality, BoxLower, BoxUpper };
  Kind kind = Kind::Inequality;
  int index = 0;

  auto operator<=>(const ConstraintId&) const = default;
  std::string to_string() const;
};

struct QpSettings {
  double tol = 1e-9;
  int max_iter = 100;
  double feasibility_tol = 1e-8;
};

struct QpSolution {
  Eigen::VectorXd x;
  std::vector<ConstraintId> active_set;
  /// Multiplier of each active constraint, parallel to active_set.
  std::vector<double> multipliers;
  int iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;
};

enum class QpFailure { Infeasible, MaxIterations };

/// Solver failure with the state at the point of failure.
class QpError : public Error {
 public:
  QpError(QpFailure failure, const std::string& message, QpSolution state, std::optional<ConstraintId> blocking)
      : Error(failure == QpFailure::Infeasible ? ErrorCode::Infeasible : ErrorCode::MaxIterations, message),
        failure_(failure),
        state_(std::move(state)),
        blocking_(blocking) {}

  QpFailure failure() const { return failure_; }
  const QpSolution& state() const { return state_; }
  /// Constraint that could not be satisfied (Infeasible) or was being added.
  const std::optional<ConstraintId>& blocking() const { return blocking_; }

 private:
  QpFailure failure_;
  QpSolution state_;
  std::optional<ConstraintId> blocking_;
};

/// Reusable scratch space. One workspace per thread; the previous active set
/// is kept as an ordering hint for the next solve.
class QpWorkspace {
 public:
  std::vector<ConstraintId> warm_start_hint;
  bool use_warm_start = true;

 private:
  friend QpSolution solve_qp(const QpProblem&, const QpSettings&, QpWorkspace*);
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  Eigen::VectorXd d_, z_, r_;
};

/// Unique global minimizer of a strictly convex QP by a dual active-set
/// method: start from the unconstrained minimum and add violated constraints
/// one at a time, dropping ones whose multipliers would turn negative.
/// Throws QpError on infeasibility or when max_iter is exceeded.
QpSolution solve_qp(const QpProblem& problem, const QpSettings& settings = {}, QpWorkspace* workspace = nullptr);

struct KktReport {
  double stationarity = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double complementarity = 0.0;
  double max() const;
};

/// KKT residuals of (x, multipliers) recomputed from the problem data.
KktReport kkt_report(const QpProblem& problem, const Eigen::VectorXd& x, const std::vector<ConstraintId>& active,
                     const std::vector<double>& multipliers);

/// Plain-text problem/solution dump for bug reports; values printed with 17
/// significant digits so a dump reloads bit-exactly.
void write_dump(std::ostream& os, const QpProblem& problem, const QpSolution* solution, const std::string& note = {});
QpProblem read_dump(std::istream& is);

}  // namespace cbfshield::qp
