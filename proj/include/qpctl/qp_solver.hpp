// Copyright 2026 The qpctl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

namespace qpctl {

/// Dense convex QP in standard form:
///
///   min  1/2 x'Px + c'x
///   s.t. A_eq x  = b_eq
///        A_in x <= b_in
///
/// with the Lagrangian convention
///
///   L = 1/2 x'Px + c'x + y_eq'(A_eq x - b_eq) + y_in'(A_in x - b_in),
///
/// so stationarity reads Px + c + A_eq'y_eq + A_in'y_in = 0 and y_in >= 0.
/// Note for consumers assembling spring-equilibrium problems: a contact
/// force lambda that enters the force balance as +J'lambda corresponds to
/// the equality dual with flipped sign, lambda = -y_eq (covered by a test).
struct QpProblem {
  Eigen::MatrixXd P;  // n x n, symmetric PSD (symmetrized internally)
  Eigen::VectorXd c;  // n
  Eigen::MatrixXd A_eq;  // m_eq x n
  Eigen::VectorXd b_eq;  // m_eq
  Eigen::MatrixXd A_in;  // m_in x n
  Eigen::VectorXd b_in;  // m_in

  struct WarmStart {
    Eigen::VectorXd x;
    Eigen::VectorXd y_eq;
    Eigen::VectorXd y_in;
  };
  std::optional<WarmStart> warm_start;

  Eigen::Index num_vars() const { return c.size(); }
};

enum class QpStatus { optimal, infeasible, max_iterations };

const char* to_string(QpStatus status);

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y_eq;
  Eigen::VectorXd y_in;  // >= 0 at an optimum
  QpStatus status{QpStatus::optimal};
  double kkt_residual{0.0};
  int iterations{0};
  /// Inequality rows active at the solution, ascending.
  std::vector<int> active_set;
};

/// Raised on structurally bad problems (dimension mismatch, reduced Hessian
/// not positive definite on the equality nullspace).
class QpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Max-norm KKT residual of a candidate primal/dual point: the largest of
/// stationarity, equality/inequality violation, dual negativity, and
/// complementarity.
double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& y_eq, const Eigen::VectorXd& y_in);

/// Dense active-set QP solver for the small problems this project builds
/// (tens of variables). Equality constraints are eliminated through a
/// nullspace basis, inequalities are handled by a dual active-set iteration
/// starting from the unconstrained minimum, and the final active set is
/// re-solved as one KKT system so that warm and cold solves of the same
/// problem agree bit for bit. Blocking-constraint ties are broken by lowest
/// row index. A warm start naming the correct active set finishes in a
/// single KKT solve.
///
/// Holds scratch workspace: use one instance per concurrent consumer.
class QpSolver {
 public:
  struct Options {
    double tolerance = 1e-9;
    int max_iterations = 200;
  };

  QpSolver() = default;
  explicit QpSolver(Options options) : options_(options) {}

  QpSolution solve(const QpProblem& problem);

  const Options& options() const { return options_; }

 private:
  Options options_;

  QpSolution solve_equality_constrained(const QpProblem& problem,
                                        const std::vector<int>& active,
                                        const std::vector<int>& kept_eq) const;
};

}  // namespace qpctl
