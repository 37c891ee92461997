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

#include <stdexcept>
#include <utility>
#include <vector>

#include "qpctl/geometry.hpp"
#include "qpctl/kinematics.hpp"
#include "qpctl/qp_solver.hpp"

namespace qpctl {

/// One point contact on the arm. direction is the unit force direction u
/// (from the environment onto the arm); force is the magnitude, >= 0.
/// (body_point_index, obstacle_index) identify the contact across ticks;
/// synthetic contacts may leave them at -1.
struct Contact {
  BodyPoint body_point;
  int body_point_index{-1};
  int obstacle_index{-1};
  Eigen::Vector2d point{Eigen::Vector2d::Zero()};      // p_W^C
  Eigen::Vector2d direction{Eigen::Vector2d::Zero()};  // u, unit
  double force{0.0};
  Eigen::MatrixXd position_jacobian;  // 2 x n_q, at the configuration of record
};

/// Active contacts plus the stacked contact Jacobian: row i of J_u maps
/// joint velocity to the contact-point velocity along u_i. Rows that would
/// make J_u rank-deficient are dropped at construction (lowest index kept).
struct ContactSet {
  std::vector<Contact> contacts;
  Eigen::MatrixXd J_u;  // n_c x n_q
  std::vector<int> dropped;  // input indices removed by the rank filter

  int num_contacts() const { return static_cast<int>(contacts.size()); }
  bool empty() const { return contacts.empty(); }
};

/// Fills world points, position Jacobians, and the stacked J_u for the given
/// contacts (body point + unit direction required), applying the rank filter.
ContactSet build_contact_jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                                  std::vector<Contact> contacts);

/// Stacks J_u from contacts whose position Jacobians are already filled
/// (directions are normalized, the rank filter applies as above).
ContactSet assemble_contact_set(std::vector<Contact> contacts);

struct EquilibriumResult {
  Eigen::VectorXd q_next;
  Eigen::VectorXd lambda;  // [N], one per contact
  Eigen::MatrixXd J_u;     // model used
  Eigen::VectorXd q_used;
};

/// Closed-form next equilibrium under stiffness control with bi-lateral
/// frictionless contacts:
///   lambda = -(J K^-1 J')^-1 J (q_cmd - q)
///   q_next = q + (I - K^-1 J' (J K^-1 J')^-1 J)(q_cmd - q).
/// With an empty contact set, q_next = q_cmd and lambda is empty.
EquilibriumResult equilibrium_step(const Eigen::VectorXd& q_now,
                                   const Eigen::VectorXd& q_cmd_next,
                                   const Eigen::VectorXd& stiffness,
                                   const ContactSet& contacts);

/// W-weighted pseudo-inverse J^{W+} = W^-1 J' (J W^-1 J')^-1 for full-row-rank
/// J and positive diagonal W. Satisfies J J^{W+} = I.
Eigen::MatrixXd weighted_pseudoinverse(const Eigen::MatrixXd& J,
                                       const Eigen::VectorXd& weight_diag);

/// Torque-space projectors P_R(W) = J'(J^{W+})' and P_N(W) = I - P_R(W).
/// P_R + P_N = I, both idempotent, and J W^-1 P_N(W) = 0.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> null_space_projectors(
    const Eigen::MatrixXd& J, const Eigen::VectorXd& weight_diag);

/// The same step as equilibrium_step, written through the
/// stiffness-consistent projection:
///   q_next = q + (I - J^{K+} J)(q_cmd - q)
///   lambda = -(J^{K+})' K (q_cmd - q).
/// Equivalent to equilibrium_step on every full-rank instance.
EquilibriumResult projection_step(const Eigen::VectorXd& q_now,
                                  const Eigen::VectorXd& q_cmd_next,
                                  const Eigen::VectorXd& stiffness,
                                  const ContactSet& contacts);

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimParams {
  double activation_distance{1e-4};  // [m]
  double tangential_stiffness{1e4};  // k_t [N/m]
  double convergence_tol{1e-8};      // [rad]
};

struct SimResult {
  Eigen::VectorXd q;
  ContactSet contacts;  // ground truth: total-force directions, f > 0 only
  int sqp_iterations{0};
};

/// Ground-truth quasistatic state after commanding q_cmd_next from q_now:
/// minimizes the spring energy subject to uni-lateral non-penetration by a
/// sequential QP (detect contacts, linearize signed distances, solve, repeat
/// until the step is below tolerance or the substep cap is hit). Normal
/// forces are the QP duals; with friction, a regularized Coulomb tangential
/// force (clamped to mu times the normal force, displacement measured within
/// this step) is folded into the reported force direction.
/// Throws SimulationError on non-convergence within `substeps`.
SimResult simulate_step(const Scene& scene, const RobotModel& model,
                        const Eigen::VectorXd& q_now,
                        const Eigen::VectorXd& q_cmd_next, int substeps,
                        const SimParams& params = {});

}  // namespace qpctl
