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

#include <cstdint>
#include <utility>
#include <vector>

#include "qpctl/quasistatic.hpp"

namespace qpctl {

/// Synthetic contact sensing: thresholding plus noise drawn from a
/// counter-based generator keyed on (seed, tick, contact index), so estimates
/// are reproducible bit for bit. Latency is realized by the caller feeding
/// the true contact set from latency_ticks ago (with that tick's index).
struct SensingConfig {
  double f_threshold{5.0};        // [N]
  double direction_noise_std{0.0};  // [rad]
  double magnitude_noise_std{0.0};  // [N]
  double point_noise_std{0.0};      // [m]
  std::uint64_t rng_seed{0};
  int latency_ticks{0};

  void validate() const;  // throws std::invalid_argument
};

/// Noisy, thresholded estimate of a true contact set. Directions are rotated
/// by the angular noise and stay unit length; J_u is rebuilt from the noisy
/// directions (same rank filter as construction). Contacts whose noisy
/// magnitude falls below f_threshold are removed.
ContactSet estimate_contacts(const ContactSet& true_contacts,
                             const SensingConfig& cfg, long tick);

/// (identity, magnitude) view of a contact set, used to align predictions
/// with estimates across ticks.
struct ContactForceRecord {
  int body_point_index{-1};
  int obstacle_index{-1};
  double magnitude{0.0};
};
using ForceRecords = std::vector<ContactForceRecord>;

ForceRecords force_records(const ContactSet& contacts);

/// Aligns two record lists by contact identity over their union; a contact
/// missing on one side contributes magnitude 0 there.
std::pair<Eigen::VectorXd, Eigen::VectorXd> align_by_identity(
    const ForceRecords& a, const ForceRecords& b);

/// Force-prediction discrepancy e = 1 - exp(-max_i |pred_i - est_i| / a),
/// in [0, 1]. Vectors of unequal length are padded with zeros (missing
/// counterpart contributes its full magnitude).
double force_discrepancy(const Eigen::VectorXd& lambda_pred,
                         const Eigen::VectorXd& lambda_est, double a);

/// Adaptive damping weight state: w = w_max [alpha e^l + (1-alpha) e^{l-1}],
/// a two-tap filter on the discrepancy sequence.
struct DampingState {
  double e_prev{0.0};   // previous discrepancy, in [0, 1]
  double w{0.0};        // current weight, in [0, w_max]
  double a{5.0};        // error scale [N], > 0
  double alpha{0.9};    // filter coefficient, in (0, 1]
  double w_max{10.0};

  void validate() const;
};

DampingState update_damping_weight(DampingState state, double e_now);

}  // namespace qpctl
