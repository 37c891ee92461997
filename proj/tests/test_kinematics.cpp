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
#include <numbers>
#include <random>

#include "doctest.h"
#include "test_util.hpp"

using namespace qpctl;
using test::fd_point_jacobian;
using test::make_arm;
using test::random_vector;

TEST_SUITE_BEGIN("kinematics");

TEST_CASE("straight two-link arm reaches along x") {
  const RobotModel m = make_arm({1.0, 1.0}, {800.0, 600.0});
  const Eigen::Vector2d tip =
      body_point_position(m, Eigen::Vector2d(0.0, 0.0), BodyPoint{2, {1.0, 0.0}});
  CHECK(tip.x() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(tip.y() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rigid rotation of the base joint") {
  const RobotModel m = make_arm({1.0, 1.0}, {800.0, 600.0});
  const Eigen::Vector2d tip = body_point_position(
      m, Eigen::Vector2d(std::numbers::pi / 2, 0.0), BodyPoint{2, {1.0, 0.0}});
  CHECK(tip.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(tip.y() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("frames compose joints cumulatively") {
  const RobotModel m = make_arm({0.5, 0.4, 0.3}, {800.0, 600.0, 600.0});
  const Eigen::Vector3d q(0.3, -0.2, 0.7);
  const auto frames = forward_kinematics(m, q);
  CHECK(frames.size() == 3);
  CHECK(frames[0].angle == doctest::Approx(0.3));
  CHECK(frames[1].angle == doctest::Approx(0.1));
  CHECK(frames[2].angle == doctest::Approx(0.8));
  // frame 2 origin is the tip of link 1
  CHECK(frames[1].origin.x() == doctest::Approx(0.5 * std::cos(0.3)));
  CHECK(frames[1].origin.y() == doctest::Approx(0.5 * std::sin(0.3)));
}

TEST_CASE("tip displacement matches path integration of J q_dot") {
  // Independent oracle: integrate J(q(t)) dq/dt along a straight
  // configuration path with Simpson's rule and compare with FK.
  const RobotModel m = make_arm({0.6, 0.5, 0.4}, {800.0, 600.0, 400.0});
  const BodyPoint tip{3, {0.4, 0.0}};
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd q0 = random_vector(rng, 3, -1.5, 1.5);
    const Eigen::VectorXd q1 = random_vector(rng, 3, -1.5, 1.5);
    const Eigen::VectorXd dq = q1 - q0;
    const int steps = 2000;
    Eigen::Vector2d integrated = Eigen::Vector2d::Zero();
    for (int k = 0; k < steps; ++k) {
      const double a = static_cast<double>(k) / steps;
      const double b = static_cast<double>(k + 1) / steps;
      const double mid = 0.5 * (a + b);
      const Eigen::Vector2d fa = point_jacobian(m, q0 + a * dq, tip) * dq;
      const Eigen::Vector2d fm = point_jacobian(m, q0 + mid * dq, tip) * dq;
      const Eigen::Vector2d fb = point_jacobian(m, q0 + b * dq, tip) * dq;
      integrated += (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    }
    const Eigen::Vector2d direct =
        body_point_position(m, q1, tip) - body_point_position(m, q0, tip);
    CHECK((integrated - direct).norm() <= 1e-6);
  }
}

TEST_CASE("one-link tip Jacobian is the unit tangent") {
  const RobotModel m = make_arm({1.0}, {800.0});
  const Eigen::MatrixXd jac =
      point_jacobian(m, Eigen::VectorXd::Zero(1), BodyPoint{1, {1.0, 0.0}});
  CHECK(jac(0, 0) == doctest::Approx(0.0));
  CHECK(jac(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("joints distal to the point have zero columns") {
  const RobotModel m = make_arm({0.5, 0.4, 0.3}, {800.0, 600.0, 600.0});
  std::mt19937_64 rng(7);
  const Eigen::VectorXd q = random_vector(rng, 3, -2.0, 2.0);
  const Eigen::MatrixXd jac = point_jacobian(m, q, BodyPoint{1, {0.25, 0.05}});
  CHECK(jac.col(1).norm() == 0.0);
  CHECK(jac.col(2).norm() == 0.0);
  CHECK(jac.col(0).norm() > 0.0);
}

TEST_CASE("analytic Jacobian matches finite differences") {
  const RobotModel m = make_arm({0.6, 0.5, 0.4, 0.3}, {800.0, 600.0, 600.0, 400.0});
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd q = random_vector(rng, 4, -3.0, 3.0);
    const BodyPoint point{1 + static_cast<int>(rng() % 4),
                          {std::uniform_real_distribution<double>(0.0, 0.4)(rng),
                           std::uniform_real_distribution<double>(-0.05, 0.05)(rng)}};
    const Eigen::MatrixXd analytic = point_jacobian(m, q, point);
    const Eigen::MatrixXd fd = fd_point_jacobian(m, q, point);
    CHECK((analytic - fd).lpNorm<Eigen::Infinity>() <= 1e-5);
  }
}

TEST_CASE("forward kinematics is 2*pi periodic per joint") {
  const RobotModel m = make_arm({0.7, 0.3}, {800.0, 600.0});
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd q = random_vector(rng, 2, -3.0, 3.0);
    for (int j = 0; j < 2; ++j) {
      Eigen::VectorXd q_shift = q;
      q_shift[j] += 2.0 * std::numbers::pi;
      const Eigen::Vector2d a = body_point_position(m, q, BodyPoint{2, {0.3, 0.0}});
      const Eigen::Vector2d b = body_point_position(m, q_shift, BodyPoint{2, {0.3, 0.0}});
      CHECK((a - b).norm() <= 1e-9);
    }
  }
}

TEST_CASE("base pose shifts and rotates the chain") {
  RobotModel m = make_arm({1.0}, {500.0});
  m.base_pose.position = {2.0, -1.0};
  m.base_pose.angle = std::numbers::pi / 2;
  const Eigen::Vector2d tip =
      body_point_position(m, Eigen::VectorXd::Zero(1), BodyPoint{1, {1.0, 0.0}});
  CHECK(tip.x() == doctest::Approx(2.0));
  CHECK(tip.y() == doctest::Approx(0.0));
}

TEST_CASE("dimension and range errors") {
  const RobotModel m = make_arm({1.0, 1.0}, {800.0, 600.0});
  CHECK_THROWS_AS(forward_kinematics(m, Eigen::VectorXd::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(point_jacobian(m, Eigen::VectorXd::Zero(2), BodyPoint{3, {0.0, 0.0}}),
                  std::invalid_argument);
  RobotModel bad = m;
  bad.link_lengths[0] = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_SUITE_END();
