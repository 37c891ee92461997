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

#include <string>
#include <vector>

#include "qpctl/scenario.hpp"

namespace qpctl {

/// One control-tick record. `time`, `q`, `q_cmd`, `q_ref` describe the state
/// after the tick: the command issued, the reference it chased, and the
/// simulator's resulting configuration.
struct StepLog {
  long tick{0};
  double time{0.0};
  Eigen::VectorXd q;      // q^{l+1}
  Eigen::VectorXd q_prev; // q^l
  Eigen::VectorXd q_cmd;  // q_cmd^{l+1}
  Eigen::VectorXd q_ref;  // q_ref^{l+1} (joint mode; empty in task mode)
  Eigen::VectorXd q_pred; // controller-predicted q^{l+1}
  ForceRecords true_forces;
  ForceRecords est_forces;
  ForceRecords pred_forces;
  Eigen::MatrixXd est_J_u;  // contact model the controller saw
  int est_dropped_rows{0};  // estimated contacts removed by the rank filter
  double e_lambda{0.0};
  double w{0.0};
  double tracking_error{0.0};
  double v_q{0.0};  // finite-difference joint-velocity norm [rad/s]
  QpStatus solver_status{QpStatus::optimal};
  int solver_iterations{0};
  double solver_kkt_residual{0.0};
  bool fault{false};
  double solve_seconds{0.0};  // controller assembly + solve; not serialized
  int sim_iterations{0};
  double min_signed_distance{0.0};  // over collision points, after the tick
};

struct RunResult {
  Scenario scenario;  // as executed (seed overrides applied)
  std::vector<StepLog> logs;
  bool aborted{false};
  std::string abort_reason;
  int fault_count{0};
};

/// Fixed-rate closed loop: sample reference, estimate contacts (with
/// latency), run the controller, step the simulator, log. Deterministic
/// given (scenario, seed). Faults fall back to holding the last command;
/// more than scenario.fault_tolerance_ticks consecutive faults abort the run
/// with a partial log.
RunResult run_scenario(const Scenario& scenario);

struct RunMetrics {
  double peak_true_force{0.0};
  double mean_true_force_in_contact{0.0};
  double tracking_rmse{0.0};
  double peak_vq_in_window{0.0};  // separation window if set, else whole run
  double contact_toggles_per_second{0.0};
  double median_solve_seconds{0.0};
  int fault_count{0};
  bool aborted{false};
};

RunMetrics compute_metrics(const RunResult& run);

struct ComparisonEntry {
  ControllerKind kind{ControllerKind::greedy};
  std::vector<RunResult> runs;      // one per repeat, seed = base + repeat
  std::vector<RunMetrics> metrics;  // parallel to runs
};

struct ComparisonReport {
  Scenario scenario;
  int repeats{1};
  std::vector<ComparisonEntry> entries;
};

/// Runs every controller on the same scenario for `repeats` seeds
/// (independent runs, executed concurrently) and collects metrics.
ComparisonReport compare_controllers(const Scenario& scenario,
                                     const std::vector<ControllerKind>& controllers,
                                     int repeats = 1);

}  // namespace qpctl
