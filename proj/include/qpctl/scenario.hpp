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

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "qpctl/contact_sensing.hpp"
#include "qpctl/controllers.hpp"
#include "qpctl/geometry.hpp"
#include "qpctl/kinematics.hpp"

namespace qpctl {

/// Piecewise-linear reference: first-order hold between knots, clamped to the
/// first/last knot outside their time range.
struct ReferenceTrajectory {
  TrackingObjective::Mode mode{TrackingObjective::Mode::joint_space};
  struct JointKnot {
    double t;
    Eigen::VectorXd q;
  };
  struct TaskKnot {
    double t;
    Eigen::Vector2d p;
  };
  std::vector<JointKnot> joint_knots;
  std::vector<TaskKnot> task_knots;

  Eigen::VectorXd sample_joint(double t) const;
  Eigen::Vector2d sample_task(double t) const;
};

struct SimConfig {
  double activation_distance{1e-4};
  double tangential_stiffness{1e4};
  int substep_cap{50};
  double convergence_tol{1e-8};
};

/// One closed-loop experiment: robot, scene, reference, controller, sensing,
/// timing. Loaded from a versioned JSON file.
struct Scenario {
  int version{1};
  std::string name;
  RobotModel model;
  Scene scene;
  ReferenceTrajectory reference;
  ControllerParams controller;
  DampingState damping_init;  // carries a, alpha, w_max
  SensingConfig sensing;      // rng_seed is overwritten by Scenario::rng_seed
  double control_rate{200.0};  // [Hz]
  double duration{10.0};       // [s]
  std::uint64_t rng_seed{0};
  SimConfig sim;
  int fault_tolerance_ticks{50};
  std::optional<std::array<double, 2>> separation_window;  // [s, s]
  std::optional<Eigen::VectorXd> q_start;  // defaults to the t=0 reference

  void validate() const;  // throws std::invalid_argument
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);

/// Canonical serialization used for the manifest's config hash.
std::string canonical_json(const Scenario& scenario);

/// FNV-1a hash of the canonical serialization.
std::uint64_t config_hash(const Scenario& scenario);

}  // namespace qpctl
