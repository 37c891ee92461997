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

#include "qpctl/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace qpctl {

namespace {

constexpr double kUnitTol = 1e-9;

Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {-v.y(), v.x()}; }

SignedDistanceResult sd_half_plane(const HalfPlane& hp, const Eigen::Vector2d& p) {
  const double d = hp.normal.dot(p) - hp.offset;
  return {d, hp.normal, p - d * hp.normal};
}

SignedDistanceResult sd_circle(const Circle& c, const Eigen::Vector2d& p) {
  const Eigen::Vector2d r = p - c.center;
  const double len = r.norm();
  // Deterministic tie-break at the center: +x.
  const Eigen::Vector2d n = len > kUnitTol ? Eigen::Vector2d(r / len)
                                           : Eigen::Vector2d(1.0, 0.0);
  return {len - c.radius, n, c.center + c.radius * n};
}

SignedDistanceResult sd_capsule(const Capsule& cap, const Eigen::Vector2d& p) {
  const Eigen::Vector2d ab = cap.p1 - cap.p0;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - cap.p0).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Eigen::Vector2d closest = cap.p0 + t * ab;
  const Eigen::Vector2d r = p - closest;
  const double len = r.norm();
  Eigen::Vector2d n;
  if (len > kUnitTol) {
    n = r / len;
  } else if (len2 > 0.0) {
    // On the axis: deterministic tie-break, left of the segment direction.
    n = perp(ab).normalized();
  } else {
    n = Eigen::Vector2d(1.0, 0.0);
  }
  return {len - cap.radius, n, closest + cap.radius * n};
}

}  // namespace

void Obstacle::validate() const {
  if (friction_coefficient < 0.0)
    throw std::invalid_argument("Obstacle: friction coefficient must be >= 0");
  if (!(contact_stiffness > 0.0))
    throw std::invalid_argument("Obstacle: contact stiffness must be > 0");
  if (const auto* hp = std::get_if<HalfPlane>(&shape)) {
    if (std::abs(hp->normal.norm() - 1.0) > 1e-9)
      throw std::invalid_argument("Obstacle: half-plane normal must be unit length");
  } else if (const auto* c = std::get_if<Circle>(&shape)) {
    if (!(c->radius > 0.0)) throw std::invalid_argument("Obstacle: circle radius must be > 0");
  } else if (const auto* cap = std::get_if<Capsule>(&shape)) {
    if (!(cap->radius > 0.0)) throw std::invalid_argument("Obstacle: capsule radius must be > 0");
  }
}

SignedDistanceResult signed_distance(const Obstacle& obstacle,
                                     const Eigen::Vector2d& point) {
  if (!point.allFinite()) throw std::invalid_argument("signed_distance: non-finite query");
  return std::visit(
      [&](const auto& shape) -> SignedDistanceResult {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, HalfPlane>) return sd_half_plane(shape, point);
        if constexpr (std::is_same_v<T, Circle>) return sd_circle(shape, point);
        if constexpr (std::is_same_v<T, Capsule>) return sd_capsule(shape, point);
      },
      obstacle.shape);
}

std::vector<ContactCandidate> detect_contacts(const Scene& scene,
                                              const RobotModel& model,
                                              const Eigen::VectorXd& q,
                                              double activation_distance) {
  if (activation_distance < 0.0)
    throw std::invalid_argument("detect_contacts: activation distance must be >= 0");
  std::vector<ContactCandidate> out;
  for (int pi = 0; pi < static_cast<int>(scene.collision_points.size()); ++pi) {
    const BodyPoint& bp = scene.collision_points[pi];
    const Eigen::Vector2d p = body_point_position(model, q, bp);
    for (int oi = 0; oi < static_cast<int>(scene.obstacles.size()); ++oi) {
      const SignedDistanceResult sd = signed_distance(scene.obstacles[oi], p);
      if (sd.distance <= activation_distance) {
        out.push_back({bp, pi, oi, p, sd.normal, -sd.distance});
      }
    }
  }
  return out;
}

std::vector<BodyPoint> sample_collision_points(const RobotModel& model,
                                               int points_per_link) {
  if (points_per_link < 1)
    throw std::invalid_argument("sample_collision_points: need at least one point per link");
  std::vector<BodyPoint> points;
  points.reserve(model.num_joints() * points_per_link);
  for (int link = 1; link <= model.num_joints(); ++link) {
    const double len = model.link_lengths[link - 1];
    for (int k = 1; k <= points_per_link; ++k) {
      points.push_back({link, {len * static_cast<double>(k) / points_per_link, 0.0}});
    }
  }
  return points;
}

}  // namespace qpctl
