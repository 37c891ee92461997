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

#include "qpctl/controllers.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace qpctl {

const char* to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::greedy: return "greedy";
    case ControllerKind::nullspace: return "nullspace";
    case ControllerKind::frictionless_qp: return "frictionless_qp";
    case ControllerKind::frictional_qp: return "frictional_qp";
  }
  return "unknown";
}

ControllerKind controller_kind_from_string(const std::string& name) {
  if (name == "greedy") return ControllerKind::greedy;
  if (name == "nullspace") return ControllerKind::nullspace;
  if (name == "frictionless_qp") return ControllerKind::frictionless_qp;
  if (name == "frictional_qp") return ControllerKind::frictional_qp;
  throw std::invalid_argument("unknown controller: " + name);
}

void ControllerParams::validate() const {
  if (!(lambda_max > 0.0)) throw std::invalid_argument("controller: lambda_max must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("controller: epsilon must be > 0");
  if (nullspace_lambda_target && !(*nullspace_lambda_target > 0.0))
    throw std::invalid_argument("controller: lambda_target must be > 0");
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> assemble_task_space_objective(
    const RobotModel& model, const ControllerInput& input,
    const TrackingObjective& objective, double epsilon) {
  if (objective.mode != TrackingObjective::Mode::task_space)
    throw std::invalid_argument("assemble_task_space_objective: not in task mode");
  const int n = model.num_joints();
  const Eigen::MatrixXd jac = point_jacobian(model, input.q, objective.task_point);
  const Eigen::Vector2d p_now = body_point_position(model, input.q, objective.task_point);
  const Eigen::Vector2d r0 = p_now - jac * input.q - input.p_ref_next;
  Eigen::MatrixXd H = 2.0 * (jac.transpose() * jac +
                             epsilon * Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd g = 2.0 * (jac.transpose() * r0 - epsilon * input.q_cmd_prev);
  return {std::move(H), std::move(g)};
}

Controller::Controller(RobotModel model, ControllerParams params)
    : model_(std::move(model)), params_(std::move(params)) {
  model_.validate();
  params_.validate();
}

Eigen::VectorXd Controller::clamp_command(const Eigen::VectorXd& target,
                                          const Eigen::VectorXd& q_cmd_prev) const {
  Eigen::VectorXd cmd = target.cwiseMin(q_cmd_prev + model_.rate_bound)
                            .cwiseMax(q_cmd_prev - model_.rate_bound);
  if (model_.joint_limits) {
    for (int i = 0; i < model_.num_joints(); ++i)
      cmd[i] = std::clamp(cmd[i], (*model_.joint_limits)[i][0],
                          (*model_.joint_limits)[i][1]);
  }
  return cmd;
}

// Direction the reference asks the joints to move: q_ref - q in joint mode,
// one damped-least-squares step toward p_ref in task mode.
Eigen::VectorXd Controller::reference_displacement(const ControllerInput& input) const {
  if (params_.objective.mode == TrackingObjective::Mode::joint_space)
    return input.q_ref_next - input.q;
  const Eigen::MatrixXd jac =
      point_jacobian(model_, input.q, params_.objective.task_point);
  const Eigen::Vector2d err =
      input.p_ref_next - body_point_position(model_, input.q, params_.objective.task_point);
  const int n = model_.num_joints();
  const double mu2 = params_.objective.dls_damping * params_.objective.dls_damping;
  return (jac.transpose() * jac + mu2 * Eigen::MatrixXd::Identity(n, n))
      .ldlt()
      .solve(jac.transpose() * err);
}

// Predictions for a decided command: the closed-form equilibrium under the
// estimated contact model, recorded per contact identity.
ControllerOutput Controller::predict(const ControllerInput& input,
                                     Eigen::VectorXd q_cmd,
                                     SolverDiagnostics diag) const {
  ControllerOutput out;
  const EquilibriumResult eq = equilibrium_step(
      input.q, q_cmd, model_.joint_stiffness, input.estimated_contacts);
  out.q_cmd_next = std::move(q_cmd);
  out.q_pred = eq.q_next;
  out.lambda_pred = eq.lambda;
  for (int i = 0; i < input.estimated_contacts.num_contacts(); ++i) {
    const Contact& c = input.estimated_contacts.contacts[i];
    out.lambda_pred_records.push_back(
        {c.body_point_index, c.obstacle_index, eq.lambda[i]});
  }
  out.diagnostics = std::move(diag);
  return out;
}

ControllerOutput Controller::step(const ControllerInput& input) {
  if (input.q.size() != model_.num_joints() ||
      input.q_cmd_prev.size() != model_.num_joints())
    throw std::invalid_argument("controller: input dimension mismatch");
  if (params_.objective.mode == TrackingObjective::Mode::joint_space &&
      input.q_ref_next.size() != model_.num_joints())
    throw std::invalid_argument("controller: reference dimension mismatch");

  switch (params_.kind) {
    case ControllerKind::greedy: return step_greedy(input);
    case ControllerKind::nullspace: return step_nullspace(input);
    case ControllerKind::frictionless_qp: return step_qp(input, false);
    case ControllerKind::frictional_qp: return step_qp(input, true);
  }
  throw std::logic_error("controller: bad kind");
}

ControllerOutput Controller::step_greedy(const ControllerInput& input) {
  const Eigen::VectorXd target = input.q + reference_displacement(input);
  return predict(input, clamp_command(target, input.q_cmd_prev), {});
}

ControllerOutput Controller::step_nullspace(const ControllerInput& input) {
  const ContactSet& est = input.estimated_contacts;
  if (est.empty()) return step_greedy(input);

  const Eigen::VectorXd dq_ref = reference_displacement(input);

  // Break-away: a contact whose point the reference commands to move along
  // +u (separation) is removed so tracking can continue. Rows the reference
  // still presses on (or slides along) are kept at the target force.
  SolverDiagnostics diag;
  std::vector<int> kept;
  for (int i = 0; i < est.num_contacts(); ++i) {
    if (est.J_u.row(i).dot(dq_ref) > 0.0)
      diag.break_away_dropped.push_back(i);
    else
      kept.push_back(i);
  }
  if (kept.empty()) {
    return predict(input, clamp_command(input.q + dq_ref, input.q_cmd_prev), diag);
  }

  Eigen::MatrixXd J(kept.size(), model_.num_joints());
  for (size_t i = 0; i < kept.size(); ++i) J.row(i) = est.J_u.row(kept[i]);
  const double target_force = params_.nullspace_lambda_target.value_or(params_.lambda_max);

  // Null-space tracking plus the range-space command that realizes the
  // target contact force under the quasistatic model.
  const Eigen::MatrixXd pinv = weighted_pseudoinverse(J, model_.joint_stiffness);
  const Eigen::VectorXd dq_track = dq_ref - pinv * (J * dq_ref);
  const Eigen::VectorXd dq_force =
      -(model_.joint_stiffness.cwiseInverse().asDiagonal() *
        (J.transpose() * Eigen::VectorXd::Constant(J.rows(), target_force)));
  const Eigen::VectorXd q_cmd_intent = input.q + dq_track + dq_force;

  // Predictions come from the controller's own model at the intended
  // command: kept rows carry the target force, dropped rows predict release.
  ControllerOutput out;
  out.q_cmd_next = clamp_command(q_cmd_intent, input.q_cmd_prev);
  out.q_pred = input.q + dq_track;
  out.lambda_pred = Eigen::VectorXd::Zero(est.num_contacts());
  for (int idx : kept) out.lambda_pred[idx] = target_force;
  for (int i = 0; i < est.num_contacts(); ++i) {
    const Contact& c = est.contacts[i];
    out.lambda_pred_records.push_back(
        {c.body_point_index, c.obstacle_index, out.lambda_pred[i]});
  }
  out.diagnostics = std::move(diag);
  return out;
}

ControllerOutput Controller::step_qp(const ControllerInput& input, bool frictional) {
  const auto t_begin = std::chrono::steady_clock::now();
  const int n = model_.num_joints();
  const ContactSet& est = input.estimated_contacts;
  const int m = est.num_contacts();
  const int nv = 2 * n + m;  // [q_next, q_cmd, lambda]

  QpProblem qp;
  qp.P = Eigen::MatrixXd::Zero(nv, nv);
  qp.c = Eigen::VectorXd::Zero(nv);

  if (params_.objective.mode == TrackingObjective::Mode::joint_space) {
    if (frictional) {
      const double w = input.damping.w;
      qp.P.block(n, n, n, n) =
          2.0 * (1.0 + w) * Eigen::MatrixXd::Identity(n, n);
      qp.c.segment(n, n) = -2.0 * input.q_ref_next - 2.0 * w * input.q_cmd_prev;
    } else {
      qp.P.topLeftCorner(n, n) = 2.0 * Eigen::MatrixXd::Identity(n, n);
      qp.c.head(n) = -2.0 * input.q_ref_next;
      qp.P.block(n, n, n, n) = 2.0 * params_.epsilon * Eigen::MatrixXd::Identity(n, n);
      qp.c.segment(n, n) = -2.0 * params_.epsilon * input.q_ref_next;
    }
  } else {
    auto [H, g] =
        assemble_task_space_objective(model_, input, params_.objective, params_.epsilon);
    if (frictional) {
      const double w = input.damping.w;
      H += 2.0 * w * Eigen::MatrixXd::Identity(n, n);
      g -= 2.0 * w * input.q_cmd_prev;
    }
    qp.P.block(n, n, n, n) = H;
    qp.c.segment(n, n) = g;
  }

  // Quasistatic dynamics: K q_next - K q_cmd - J'lambda = 0 and
  // J q_next = J q.
  qp.A_eq = Eigen::MatrixXd::Zero(n + m, nv);
  qp.b_eq = Eigen::VectorXd::Zero(n + m);
  qp.A_eq.topLeftCorner(n, n) = Eigen::MatrixXd(model_.joint_stiffness.asDiagonal());
  qp.A_eq.block(0, n, n, n) = -Eigen::MatrixXd(model_.joint_stiffness.asDiagonal());
  if (m > 0) {
    qp.A_eq.topRightCorner(n, m) = -est.J_u.transpose();
    qp.A_eq.block(n, 0, m, n) = est.J_u;
    qp.b_eq.tail(m) = est.J_u * input.q;
  }

  // lambda <= lambda_max and the rate bound |q_cmd - q_cmd_prev| <= dq_max.
  const int n_limits = model_.joint_limits ? 2 * n : 0;
  qp.A_in = Eigen::MatrixXd::Zero(m + 2 * n + n_limits, nv);
  qp.b_in = Eigen::VectorXd::Zero(m + 2 * n + n_limits);
  for (int i = 0; i < m; ++i) {
    qp.A_in(i, 2 * n + i) = 1.0;
    qp.b_in[i] = params_.lambda_max;
  }
  qp.A_in.block(m, n, n, n) = Eigen::MatrixXd::Identity(n, n);
  qp.b_in.segment(m, n) = input.q_cmd_prev + model_.rate_bound;
  qp.A_in.block(m + n, n, n, n) = -Eigen::MatrixXd::Identity(n, n);
  qp.b_in.segment(m + n, n) = -(input.q_cmd_prev - model_.rate_bound);
  if (model_.joint_limits) {
    for (int i = 0; i < n; ++i) {
      qp.A_in(m + 2 * n + i, n + i) = 1.0;
      qp.b_in[m + 2 * n + i] = (*model_.joint_limits)[i][1];
      qp.A_in(m + 2 * n + n + i, n + i) = -1.0;
      qp.b_in[m + 2 * n + n + i] = -(*model_.joint_limits)[i][0];
    }
  }
  qp.warm_start = warm_start_;

  SolverDiagnostics diag;
  ControllerOutput out;
  try {
    const QpSolution sol = solver_.solve(qp);
    diag.status = sol.status;
    diag.iterations = sol.iterations;
    diag.kkt_residual = sol.kkt_residual;
    if (sol.status != QpStatus::optimal) throw QpError(to_string(sol.status));
    warm_start_ = QpProblem::WarmStart{sol.x, sol.y_eq, sol.y_in};
    out.q_cmd_next = sol.x.segment(n, n);
    out.q_pred = sol.x.head(n);
    out.lambda_pred = sol.x.tail(m);
    for (int i = 0; i < m; ++i) {
      const Contact& c = est.contacts[i];
      out.lambda_pred_records.push_back(
          {c.body_point_index, c.obstacle_index, out.lambda_pred[i]});
    }
    out.diagnostics = diag;
  } catch (const QpError&) {
    // Hold the last command; safest quasistatic action.
    diag.fault = true;
    warm_start_.reset();
    out = predict(input, input.q_cmd_prev, diag);
  }
  out.diagnostics.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return out;
}

}  // namespace qpctl
