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

#include "qpctl/quasistatic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace qpctl {

namespace {

void check_state_dims(const Eigen::VectorXd& q_now, const Eigen::VectorXd& q_cmd,
                      const Eigen::VectorXd& stiffness) {
  if (q_now.size() != q_cmd.size() || q_now.size() != stiffness.size())
    throw std::invalid_argument("quasistatic: state/command/stiffness size mismatch");
  if ((stiffness.array() <= 0.0).any())
    throw std::invalid_argument("quasistatic: stiffness must be positive diagonal");
}

Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {-v.y(), v.x()}; }

}  // namespace

ContactSet assemble_contact_set(std::vector<Contact> contacts) {
  ContactSet out;
  if (contacts.empty()) {
    out.J_u.resize(0, 0);
    return out;
  }
  const Eigen::Index n = contacts.front().position_jacobian.cols();
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(contacts.size()), n);
  int nb = 0;
  for (int idx = 0; idx < static_cast<int>(contacts.size()); ++idx) {
    Contact c = std::move(contacts[idx]);
    const double dn = c.direction.norm();
    if (dn < 1e-12)
      throw std::invalid_argument("assemble_contact_set: zero force direction");
    c.direction /= dn;
    if (c.position_jacobian.rows() != 2 || c.position_jacobian.cols() != n)
      throw std::invalid_argument("assemble_contact_set: bad position Jacobian");
    Eigen::VectorXd row = (c.direction.transpose() * c.position_jacobian).transpose();

    // Rank filter: keep the row only if independent of those already kept.
    Eigen::VectorXd resid = row;
    for (int k = 0; k < nb; ++k)
      resid -= basis.row(k).dot(resid) * basis.row(k).transpose();
    if (resid.norm() <= 1e-10 * std::max(1.0, row.norm())) {
      out.dropped.push_back(idx);
      continue;
    }
    basis.row(nb++) = resid.transpose() / resid.norm();
    out.contacts.push_back(std::move(c));
  }

  out.J_u.resize(out.num_contacts(), n);
  for (int i = 0; i < out.num_contacts(); ++i)
    out.J_u.row(i) =
        out.contacts[i].direction.transpose() * out.contacts[i].position_jacobian;
  return out;
}

ContactSet build_contact_jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                                  std::vector<Contact> contacts) {
  for (Contact& c : contacts) {
    c.position_jacobian = point_jacobian(model, q, c.body_point);
    c.point = body_point_position(model, q, c.body_point);
  }
  return assemble_contact_set(std::move(contacts));
}

EquilibriumResult equilibrium_step(const Eigen::VectorXd& q_now,
                                   const Eigen::VectorXd& q_cmd_next,
                                   const Eigen::VectorXd& stiffness,
                                   const ContactSet& contacts) {
  check_state_dims(q_now, q_cmd_next, stiffness);
  EquilibriumResult res;
  res.q_used = q_now;
  res.J_u = contacts.J_u;
  const Eigen::VectorXd dq_cmd = q_cmd_next - q_now;
  if (contacts.empty()) {
    res.q_next = q_cmd_next;
    res.lambda.resize(0);
    return res;
  }
  const Eigen::MatrixXd& J = contacts.J_u;
  const Eigen::VectorXd k_inv = stiffness.cwiseInverse();
  const Eigen::MatrixXd S = J * k_inv.asDiagonal() * J.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  const Eigen::VectorXd jdq = J * dq_cmd;
  res.lambda = -llt.solve(jdq);
  if (llt.info() != Eigen::Success ||
      (S * res.lambda + jdq).lpNorm<Eigen::Infinity>() >
          1e-8 * std::max(1.0, jdq.lpNorm<Eigen::Infinity>()))
    throw std::runtime_error(
        "equilibrium_step: J K^-1 J' is singular (rank precondition violated)");
  res.q_next = q_now + dq_cmd + k_inv.asDiagonal() * (J.transpose() * res.lambda);
  return res;
}

Eigen::MatrixXd weighted_pseudoinverse(const Eigen::MatrixXd& J,
                                       const Eigen::VectorXd& weight_diag) {
  if (J.cols() != weight_diag.size())
    throw std::invalid_argument("weighted_pseudoinverse: dimension mismatch");
  if ((weight_diag.array() <= 0.0).any())
    throw std::invalid_argument("weighted_pseudoinverse: weight must be positive diagonal");
  const Eigen::VectorXd w_inv = weight_diag.cwiseInverse();
  const Eigen::MatrixXd S = J * w_inv.asDiagonal() * J.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("weighted_pseudoinverse: J is rank deficient");
  const Eigen::MatrixXd pinv = w_inv.asDiagonal() * J.transpose() * llt.solve(
      Eigen::MatrixXd::Identity(J.rows(), J.rows()));
  // Guard against a Cholesky that "succeeded" on a near-singular S.
  if (((J * pinv) - Eigen::MatrixXd::Identity(J.rows(), J.rows()))
          .lpNorm<Eigen::Infinity>() > 1e-6)
    throw std::runtime_error("weighted_pseudoinverse: J is numerically rank deficient");
  return pinv;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> null_space_projectors(
    const Eigen::MatrixXd& J, const Eigen::VectorXd& weight_diag) {
  const Eigen::MatrixXd pinv = weighted_pseudoinverse(J, weight_diag);
  const Eigen::MatrixXd p_range = J.transpose() * pinv.transpose();
  const Eigen::MatrixXd p_null =
      Eigen::MatrixXd::Identity(J.cols(), J.cols()) - p_range;
  return {p_range, p_null};
}

EquilibriumResult projection_step(const Eigen::VectorXd& q_now,
                                  const Eigen::VectorXd& q_cmd_next,
                                  const Eigen::VectorXd& stiffness,
                                  const ContactSet& contacts) {
  check_state_dims(q_now, q_cmd_next, stiffness);
  EquilibriumResult res;
  res.q_used = q_now;
  res.J_u = contacts.J_u;
  const Eigen::VectorXd dq_cmd = q_cmd_next - q_now;
  if (contacts.empty()) {
    res.q_next = q_cmd_next;
    res.lambda.resize(0);
    return res;
  }
  const Eigen::MatrixXd& J = contacts.J_u;
  const Eigen::MatrixXd pinv = weighted_pseudoinverse(J, stiffness);
  res.q_next = q_now + dq_cmd - pinv * (J * dq_cmd);
  res.lambda = -pinv.transpose() * (stiffness.asDiagonal() * dq_cmd);
  return res;
}

SimResult simulate_step(const Scene& scene, const RobotModel& model,
                        const Eigen::VectorXd& q_now,
                        const Eigen::VectorXd& q_cmd_next, int substeps,
                        const SimParams& params) {
  if (substeps < 1) throw std::invalid_argument("simulate_step: substeps must be >= 1");
  check_state_dims(q_now, q_cmd_next, model.joint_stiffness);

  const int n = model.num_joints();
  QpSolver solver;
  Eigen::VectorXd q_k = q_now;
  std::vector<ContactCandidate> candidates;
  Eigen::VectorXd duals;
  bool converged = false;
  int iter = 0;
  double last_step = std::numeric_limits<double>::infinity();

  // Once a (collision point, obstacle) pair has been seen near contact it
  // stays in the working set, re-linearized at every iterate. Otherwise a
  // step that overshoots the curved constraint surface by more than the
  // activation distance makes the candidate set flicker and the iteration
  // cycle instead of converging.
  std::set<std::pair<int, int>> working_set;

  for (; iter < substeps; ++iter) {
    candidates = detect_contacts(scene, model, q_k, params.activation_distance);
    for (const ContactCandidate& cand : candidates)
      working_set.insert({cand.body_point_index, cand.obstacle_index});
    if (working_set.size() != candidates.size()) {
      candidates.clear();
      for (const auto& [pi, oi] : working_set) {
        const BodyPoint& bp = scene.collision_points[pi];
        const Eigen::Vector2d p = body_point_position(model, q_k, bp);
        const SignedDistanceResult sd = signed_distance(scene.obstacles[oi], p);
        candidates.push_back({bp, pi, oi, p, sd.normal, -sd.distance});
      }
    }
    Eigen::VectorXd q_next;
    if (candidates.empty()) {
      q_next = q_cmd_next;
      duals.resize(0);
    } else {
      QpProblem qp;
      qp.P = Eigen::MatrixXd(model.joint_stiffness.asDiagonal());
      qp.c = -(model.joint_stiffness.asDiagonal() * q_cmd_next);
      qp.A_eq.resize(0, n);
      qp.b_eq.resize(0);
      qp.A_in.resize(static_cast<int>(candidates.size()), n);
      qp.b_in.resize(static_cast<int>(candidates.size()));
      for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
        const ContactCandidate& cand = candidates[i];
        const Eigen::MatrixXd jac = point_jacobian(model, q_k, cand.body_point);
        const Eigen::RowVectorXd grad = cand.normal.transpose() * jac;
        // phi + grad (q - q_k) >= 0   =>   -grad q <= phi - grad q_k
        qp.A_in.row(i) = -grad;
        qp.b_in[i] = -cand.penetration_depth - grad.dot(q_k);
      }
      const QpSolution sol = solver.solve(qp);
      if (sol.status != QpStatus::optimal)
        throw SimulationError(std::string("simulate_step: contact QP ") +
                              to_string(sol.status) + " at iteration " +
                              std::to_string(iter));
      q_next = sol.x;
      duals = sol.y_in;
    }
    last_step = (q_next - q_k).lpNorm<Eigen::Infinity>();
    q_k = q_next;
    if (last_step <= params.convergence_tol) {
      converged = true;
      ++iter;
      break;
    }
  }
  if (!converged)
    throw SimulationError("simulate_step: no convergence after " +
                          std::to_string(substeps) + " substeps, last step " +
                          std::to_string(last_step) + " rad");

  // Contact forces from the final solve; friction folds a clamped tangential
  // component (displacement accumulated within this step) into the direction.
  std::vector<Contact> contacts;
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
    const double f_n = duals.size() > static_cast<Eigen::Index>(i) ? duals[i] : 0.0;
    if (f_n <= 1e-9) continue;
    const ContactCandidate& cand = candidates[i];
    const Obstacle& obs = scene.obstacles[cand.obstacle_index];
    Eigen::Vector2d force_vec = f_n * cand.normal;
    if (obs.friction_coefficient > 0.0 && params.tangential_stiffness > 0.0) {
      const Eigen::Vector2d tangent = perp(cand.normal);
      const Eigen::Vector2d p_start = body_point_position(model, q_now, cand.body_point);
      const Eigen::Vector2d p_end = body_point_position(model, q_k, cand.body_point);
      const double slip = tangent.dot(p_end - p_start);
      const double cap = obs.friction_coefficient * f_n;
      const double f_t = -std::clamp(params.tangential_stiffness * slip, -cap, cap);
      force_vec += f_t * tangent;
    }
    Contact c;
    c.body_point = cand.body_point;
    c.body_point_index = cand.body_point_index;
    c.obstacle_index = cand.obstacle_index;
    c.force = force_vec.norm();
    c.direction = force_vec / c.force;
    contacts.push_back(std::move(c));
  }

  SimResult res;
  res.q = q_k;
  res.contacts = build_contact_jacobian(model, q_k, std::move(contacts));
  res.sqp_iterations = iter;
  return res;
}

}  // namespace qpctl
