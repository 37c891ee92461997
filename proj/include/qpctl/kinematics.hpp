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

#include <array>
#include <optional>
#include <vector>

namespace qpctl {

struct BasePose {
  Eigen::Vector2d position{0.0, 0.0};
  double angle{0.0};
};

/// Planar arm with N revolute joints. Link i spans joint i to joint i+1 along
/// the link-frame x axis. Angles are unbounded (no wrap-around); joint limits,
/// when present, are enforced by the controllers clamping the command.
struct RobotModel {
  std::vector<double> link_lengths;  // [m], one per link, > 0
  Eigen::VectorXd joint_stiffness;   // diagonal of K_q [N*m/rad], > 0
  Eigen::VectorXd rate_bound;        // per-joint |dq_cmd| per control step [rad], > 0
  std::optional<std::vector<std::array<double, 2>>> joint_limits;  // [rad]
  BasePose base_pose;

  int num_joints() const { return static_cast<int>(link_lengths.size()); }

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

/// A material point fixed to one link, expressed in that link's frame.
struct BodyPoint {
  int link_index{1};  // 1-based, in [1, n_q]
  Eigen::Vector2d local_offset{Eigen::Vector2d::Zero()};  // [m]
};

struct LinkFrame {
  double angle{0.0};                            // world orientation of link x axis
  Eigen::Vector2d origin{Eigen::Vector2d::Zero()};  // world position of proximal joint
};

/// Frames of links 1..N at configuration q. Frame i composes joints 1..i.
std::vector<LinkFrame> forward_kinematics(const RobotModel& model,
                                          const Eigen::VectorXd& q);

/// World position of a body point at configuration q.
Eigen::Vector2d body_point_position(const RobotModel& model,
                                    const Eigen::VectorXd& q,
                                    const BodyPoint& point);

/// 2 x n_q position Jacobian of a body point: column j is the partial of the
/// world position with respect to q_j. Columns of joints distal to the
/// point's link are zero.
Eigen::MatrixXd point_jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                               const BodyPoint& point);

}  // namespace qpctl
