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

#include <variant>
#include <vector>

#include "qpctl/kinematics.hpp"

namespace qpctl {

/// Solid half-plane {p : n.p <= offset}; the free side is along +n.
struct HalfPlane {
  Eigen::Vector2d normal{0.0, 1.0};  // unit
  double offset{0.0};
};

struct Circle {
  Eigen::Vector2d center{Eigen::Vector2d::Zero()};
  double radius{1.0};
};

struct Capsule {
  Eigen::Vector2d p0{Eigen::Vector2d::Zero()};
  Eigen::Vector2d p1{1.0, 0.0};
  double radius{0.1};
};

struct Obstacle {
  std::variant<HalfPlane, Circle, Capsule> shape;
  double friction_coefficient{0.0};  // mu >= 0
  double contact_stiffness{1e5};     // k_n [N/m] > 0

  void validate() const;  // throws std::invalid_argument
};

struct Scene {
  std::vector<Obstacle> obstacles;
  std::vector<BodyPoint> collision_points;  // sampled along the arm's links
};

struct SignedDistanceResult {
  double distance;          // < 0 inside the obstacle
  Eigen::Vector2d normal;   // unit, outward gradient of the distance field
  Eigen::Vector2d witness;  // closest point on the obstacle boundary
};

/// Signed distance from a query point to one obstacle. Degenerate queries
/// (circle center, capsule axis) return a fixed deterministic normal.
SignedDistanceResult signed_distance(const Obstacle& obstacle,
                                     const Eigen::Vector2d& point);

struct ContactCandidate {
  BodyPoint body_point;
  int body_point_index{0};  // index into Scene::collision_points
  int obstacle_index{0};
  Eigen::Vector2d world_point;  // arm-side contact point p_W^C
  Eigen::Vector2d normal;       // unit, from obstacle into the arm
  double penetration_depth;     // -signed_distance, >= 0 when touching
};

/// All (collision point, obstacle) pairs with signed distance <= activation.
/// Ordered by body-point index, then obstacle index.
std::vector<ContactCandidate> detect_contacts(const Scene& scene,
                                              const RobotModel& model,
                                              const Eigen::VectorXd& q,
                                              double activation_distance);

/// Evenly spaced collision points on every link: fractions k/count of the
/// link length for k = 1..count.
std::vector<BodyPoint> sample_collision_points(const RobotModel& model,
                                               int points_per_link);

}  // namespace qpctl
