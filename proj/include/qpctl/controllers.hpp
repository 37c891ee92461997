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
#include <string>
#include <vector>

#include "qpctl/contact_sensing.hpp"
#include "qpctl/kinematics.hpp"
#include "qpctl/qp_solver.hpp"
#include "qpctl/quasistatic.hpp"

namespace qpctl {

enum class ControllerKind { greedy, nullspace, frictionless_qp, frictional_qp };

const char* to_string(ControllerKind kind);
ControllerKind controller_kind_from_string(const std::string& name);

/// What the controller tracks: a joint-space reference sample, or a planar
/// end-effector position reference for a chosen body point.
struct TrackingObjective {
  enum class Mode { joint_space, task_space };
  Mode mode{Mode::joint_space};
  BodyPoint task_point;            // task_space only
  double dls_damping{1e-3};        // greedy task-space step damping
};

struct ControllerParams {
  ControllerKind kind{ControllerKind::frictional_qp};
  double lambda_max{15.0};  // [N] upper bound on contact force magnitudes
  double epsilon{1e-2};     // command regularizer weight, > 0
  std::optional<double> nullspace_lambda_target;  // defaults to lambda_max
  TrackingObjective objective;

  void validate() const;
};

struct ControllerInput {
  long tick{0};
  Eigen::VectorXd q;            // measured state
  Eigen::VectorXd q_cmd_prev;   // command issued at the previous tick
  Eigen::VectorXd q_ref_next;   // reference sample for the next tick (joint mode)
  Eigen::Vector2d p_ref_next{Eigen::Vector2d::Zero()};  // task mode
  ContactSet estimated_contacts;
  DampingState damping;
  ForceRecords lambda_pred_prev;  // predictions made one tick ago
};

struct SolverDiagnostics {
  QpStatus status{QpStatus::optimal};
  int iterations{0};
  double kkt_residual{0.0};
  bool fault{false};          // fallback to hold-last-command taken
  double solve_seconds{0.0};  // QP assembly + solve
  std::vector<int> break_away_dropped;  // null-space rows removed this tick
};

struct ControllerOutput {
  Eigen::VectorXd q_cmd_next;
  Eigen::VectorXd q_pred;       // predicted q^{l+1}
  Eigen::VectorXd lambda_pred;  // per estimated contact, order of the input set
  ForceRecords lambda_pred_records;  // identity-tagged copy of lambda_pred
  SolverDiagnostics diagnostics;
};

/// Task-space tracking cost, quadratic in q_cmd^{l+1}: the linearized
/// end-effector error ||p(q) + J (q_cmd - q) - p_ref||^2 plus
/// epsilon ||q_cmd - q_cmd_prev||^2 (J has a nullspace, so the regularizer
/// keeps the cost positive definite). Returns (H, g) with cost
/// 1/2 q_cmd'H q_cmd + g'q_cmd up to a constant.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> assemble_task_space_objective(
    const RobotModel& model, const ControllerInput& input,
    const TrackingObjective& objective, double epsilon);

/// The four controllers under comparison. Stateless apart from the QP warm
/// start carried across ticks (which never changes the solution, only the
/// path to it); one instance per scenario.
class Controller {
 public:
  Controller(RobotModel model, ControllerParams params);

  ControllerOutput step(const ControllerInput& input);

  const ControllerParams& params() const { return params_; }

 private:
  ControllerOutput step_greedy(const ControllerInput& input);
  ControllerOutput step_nullspace(const ControllerInput& input);
  ControllerOutput step_qp(const ControllerInput& input, bool frictional);

  Eigen::VectorXd clamp_command(const Eigen::VectorXd& target,
                                const Eigen::VectorXd& q_cmd_prev) const;
  Eigen::VectorXd reference_displacement(const ControllerInput& input) const;
  ControllerOutput predict(const ControllerInput& input, Eigen::VectorXd q_cmd,
                           SolverDiagnostics diag) const;

  RobotModel model_;
  ControllerParams params_;
  QpSolver solver_;
  std::optional<QpProblem::WarmStart> warm_start_;
};

}  // namespace qpctl
