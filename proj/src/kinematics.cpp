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

#include "qpctl/kinematics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qpctl {

void RobotModel::validate() const {
  const int n = num_joints();
  if (n < 1) throw std::invalid_argument("RobotModel: need at least one joint");
  for (int i = 0; i < n; ++i) {
    if (!(link_lengths[i] > 0.0) || !std::isfinite(link_lengths[i]))
      throw std::invalid_argument("RobotModel: link length " + std::to_string(i + 1) +
                                  " must be positive");
  }
  if (joint_stiffness.size() != n)
    throw std::invalid_argument("RobotModel: joint_stiffness size mismatch");
  if ((joint_stiffness.array() <= 0.0).any())
    throw std::invalid_argument("RobotModel: joint stiffness must be positive");
  if (rate_bound.size() != n)
    throw std::invalid_argument("RobotModel: rate_bound size mismatch");
  if ((rate_bound.array() <= 0.0).any())
    throw std::invalid_argument("RobotModel: rate bound must be positive");
  if (joint_limits) {
    if (static_cast<int>(joint_limits->size()) != n)
      throw std::invalid_argument("RobotModel: joint_limits size mismatch");
    for (const auto& lim : *joint_limits)
      if (!(lim[0] <= lim[1]))
        throw std::invalid_argument("RobotModel: joint limit interval inverted");
  }
}

namespace {

void check_q(const RobotModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.num_joints())
    throw std::invalid_argument("kinematics: q has " + std::to_string(q.size()) +
                                " entries, model has " +
                                std::to_string(model.num_joints()) + " joints");
}

void check_point(const RobotModel& model, const BodyPoint& point) {
  if (point.link_index < 1 || point.link_index > model.num_joints())
    throw std::invalid_argument("kinematics: body point link index " +
                                std::to_string(point.link_index) + " out of range");
  if (!point.local_offset.allFinite())
    throw std::invalid_argument("kinematics: body point offset not finite");
}

}  // namespace

std::vector<LinkFrame> forward_kinematics(const RobotModel& model,
                                          const Eigen::VectorXd& q) {
  check_q(model, q);
  const int n = model.num_joints();
  std::vector<LinkFrame> frames(n);
  double angle = model.base_pose.angle;
  Eigen::Vector2d origin = model.base_pose.position;
  for (int i = 0; i < n; ++i) {
    angle += q[i];
    frames[i].angle = angle;
    frames[i].origin = origin;
    origin += model.link_lengths[i] * Eigen::Vector2d(std::cos(angle), std::sin(angle));
  }
  return frames;
}

Eigen::Vector2d body_point_position(const RobotModel& model, const Eigen::VectorXd& q,
                                    const BodyPoint& point) {
  check_q(model, q);
  check_point(model, point);
  const auto frames = forward_kinematics(model, q);
  const LinkFrame& f = frames[point.link_index - 1];
  const double c = std::cos(f.angle), s = std::sin(f.angle);
  return f.origin + Eigen::Vector2d(c * point.local_offset.x() - s * point.local_offset.y(),
                                    s * point.local_offset.x() + c * point.local_offset.y());
}

Eigen::MatrixXd point_jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                               const BodyPoint& point) {
  check_q(model, q);
  check_point(model, point);
  const int n = model.num_joints();
  const auto frames = forward_kinematics(model, q);
  const Eigen::Vector2d p = body_point_position(model, q, point);

  // Revolute joint j rotates everything distal to it about the joint origin:
  // dp/dq_j = rot90(p - o_j) for j <= link_index, zero otherwise.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2, n);
  for (int j = 0; j < point.link_index; ++j) {
    const Eigen::Vector2d r = p - frames[j].origin;
    jac(0, j) = -r.y();
    jac(1, j) = r.x();
  }
  return jac;
}

}  // namespace qpctl
