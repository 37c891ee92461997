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

#include "qpctl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>

#include "qpctl/quasistatic.hpp"

namespace qpctl {

namespace {

double min_scene_distance(const Scene& scene, const RobotModel& model,
                          const Eigen::VectorXd& q) {
  double dmin = std::numeric_limits<double>::infinity();
  for (const BodyPoint& bp : scene.collision_points) {
    const Eigen::Vector2d p = body_point_position(model, q, bp);
    for (const Obstacle& obs : scene.obstacles)
      dmin = std::min(dmin, signed_distance(obs, p).distance);
  }
  return dmin;
}

double peak_force(const ForceRecords& records) {
  double peak = 0.0;
  for (const auto& r : records) peak = std::max(peak, r.magnitude);
  return peak;
}

}  // namespace

RunResult run_scenario(const Scenario& scenario) {
  scenario.validate();
  RunResult result;
  result.scenario = scenario;
  result.scenario.sensing.rng_seed = scenario.rng_seed;

  const Scenario& sc = result.scenario;
  const RobotModel& model = sc.model;
  const double dt = 1.0 / sc.control_rate;
  const long ticks = std::lround(sc.duration * sc.control_rate);
  const bool joint_mode =
      sc.reference.mode == TrackingObjective::Mode::joint_space;

  Eigen::VectorXd q = sc.q_start ? *sc.q_start : sc.reference.sample_joint(0.0);

  // Settle: resolve any initial penetration before the loop starts.
  ContactSet truth;
  {
    const SimResult settled = simulate_step(sc.scene, model, q, q, sc.sim.substep_cap,
                                            {sc.sim.activation_distance,
                                             sc.sim.tangential_stiffness,
                                             sc.sim.convergence_tol});
    q = settled.q;
    truth = settled.contacts;
  }
  Eigen::VectorXd q_cmd = q;

  Controller controller(model, sc.controller);
  DampingState damping = sc.damping_init;
  ForceRecords lambda_pred_prev;
  std::vector<ContactSet> truth_history;
  truth_history.reserve(ticks + 1);
  truth_history.push_back(truth);

  int consecutive_faults = 0;
  result.logs.reserve(ticks);

  for (long l = 0; l < ticks; ++l) {
    const double t_next = static_cast<double>(l + 1) * dt;
    StepLog log;
    log.tick = l;
    log.time = t_next;
    log.q_prev = q;

    // The controller only ever sees estimates, delayed by the configured
    // latency.
    const long src = l - sc.sensing.latency_ticks;
    ContactSet est;
    if (src >= 0) est = estimate_contacts(truth_history[src], sc.sensing, src);

    const auto [pred_vec, est_vec] =
        align_by_identity(lambda_pred_prev, force_records(est));
    const double e_now = force_discrepancy(pred_vec, est_vec, damping.a);
    damping = update_damping_weight(damping, e_now);
    log.e_lambda = e_now;
    log.w = damping.w;

    ControllerInput input;
    input.tick = l;
    input.q = q;
    input.q_cmd_prev = q_cmd;
    if (joint_mode) input.q_ref_next = sc.reference.sample_joint(t_next);
    else input.p_ref_next = sc.reference.sample_task(t_next);
    input.estimated_contacts = est;
    input.damping = damping;
    input.lambda_pred_prev = lambda_pred_prev;

    ControllerOutput out;
    bool tick_fault = false;
    try {
      out = controller.step(input);
      tick_fault = out.diagnostics.fault;
    } catch (const std::exception&) {
      out.q_cmd_next = q_cmd;
      out.q_pred = q;
      out.lambda_pred.resize(0);
      out.diagnostics.fault = true;
      tick_fault = true;
    }

    Eigen::VectorXd q_new = q;
    ContactSet truth_new = truth;
    int sim_iterations = 0;
    try {
      const SimResult sim = simulate_step(sc.scene, model, q, out.q_cmd_next,
                                          sc.sim.substep_cap,
                                          {sc.sim.activation_distance,
                                           sc.sim.tangential_stiffness,
                                           sc.sim.convergence_tol});
      q_new = sim.q;
      truth_new = sim.contacts;
      sim_iterations = sim.sqp_iterations;
      q_cmd = out.q_cmd_next;
    } catch (const SimulationError& err) {
      // Keep the previous command and state; the arm effectively holds.
      tick_fault = true;
      result.abort_reason = err.what();
    }

    log.q = q_new;
    log.q_cmd = q_cmd;
    if (joint_mode) log.q_ref = input.q_ref_next;
    log.q_pred = out.q_pred;
    log.true_forces = force_records(truth_new);
    log.est_forces = force_records(est);
    log.pred_forces = out.lambda_pred_records;
    log.est_J_u = est.J_u;
    log.est_dropped_rows = static_cast<int>(est.dropped.size());
    log.v_q = (q_new - q).norm() / dt;
    if (joint_mode) {
      log.tracking_error = (q_new - input.q_ref_next).norm();
    } else {
      const Eigen::Vector2d p =
          body_point_position(model, q_new, sc.controller.objective.task_point);
      log.tracking_error = (p - input.p_ref_next).norm();
    }
    log.solver_status = out.diagnostics.status;
    log.solver_iterations = out.diagnostics.iterations;
    log.solver_kkt_residual = out.diagnostics.kkt_residual;
    log.fault = tick_fault;
    log.solve_seconds = out.diagnostics.solve_seconds;
    log.sim_iterations = sim_iterations;
    log.min_signed_distance = min_scene_distance(sc.scene, model, q_new);

    q = q_new;
    truth = truth_new;
    truth_history.push_back(truth);
    lambda_pred_prev = out.lambda_pred_records;

    if (tick_fault) {
      ++result.fault_count;
      ++consecutive_faults;
    } else {
      consecutive_faults = 0;
    }
    result.logs.push_back(std::move(log));
    if (consecutive_faults > sc.fault_tolerance_ticks) {
      result.aborted = true;
      if (result.abort_reason.empty())
        result.abort_reason = "persistent controller fault";
      break;
    }
  }
  return result;
}

RunMetrics compute_metrics(const RunResult& run) {
  RunMetrics m;
  m.fault_count = run.fault_count;
  m.aborted = run.aborted;
  if (run.logs.empty()) return m;

  double err2 = 0.0;
  double force_sum = 0.0;
  long contact_ticks = 0;
  std::vector<double> solve_times;
  solve_times.reserve(run.logs.size());
  std::set<std::pair<int, int>> prev_ids;
  long toggles = 0;

  const bool windowed = run.scenario.separation_window.has_value();
  const double w0 = windowed ? (*run.scenario.separation_window)[0] : 0.0;
  const double w1 = windowed ? (*run.scenario.separation_window)[1] : 0.0;

  for (const StepLog& log : run.logs) {
    const double peak = peak_force(log.true_forces);
    m.peak_true_force = std::max(m.peak_true_force, peak);
    if (!log.true_forces.empty()) {
      force_sum += peak;
      ++contact_ticks;
    }
    err2 += log.tracking_error * log.tracking_error;
    if (!windowed || (log.time >= w0 && log.time <= w1))
      m.peak_vq_in_window = std::max(m.peak_vq_in_window, log.v_q);
    solve_times.push_back(log.solve_seconds);

    std::set<std::pair<int, int>> ids;
    for (const auto& r : log.true_forces) ids.insert({r.body_point_index, r.obstacle_index});
    for (const auto& id : ids)
      if (!prev_ids.count(id)) ++toggles;
    for (const auto& id : prev_ids)
      if (!ids.count(id)) ++toggles;
    prev_ids = std::move(ids);
  }

  m.tracking_rmse = std::sqrt(err2 / static_cast<double>(run.logs.size()));
  m.mean_true_force_in_contact =
      contact_ticks > 0 ? force_sum / static_cast<double>(contact_ticks) : 0.0;
  const double elapsed = run.logs.back().time;
  m.contact_toggles_per_second = elapsed > 0.0 ? toggles / elapsed : 0.0;
  std::sort(solve_times.begin(), solve_times.end());
  m.median_solve_seconds = solve_times[solve_times.size() / 2];
  return m;
}

ComparisonReport compare_controllers(const Scenario& scenario,
                                     const std::vector<ControllerKind>& controllers,
                                     int repeats) {
  if (controllers.size() < 2)
    throw std::invalid_argument("compare_controllers: need at least two controllers");
  if (repeats < 1) throw std::invalid_argument("compare_controllers: repeats must be >= 1");

  ComparisonReport report;
  report.scenario = scenario;
  report.repeats = repeats;

  for (const ControllerKind kind : controllers) {
    ComparisonEntry entry;
    entry.kind = kind;
    std::vector<std::future<RunResult>> futures;
    futures.reserve(repeats);
    for (int r = 0; r < repeats; ++r) {
      Scenario variant = scenario;
      variant.controller.kind = kind;
      variant.rng_seed = scenario.rng_seed + static_cast<std::uint64_t>(r);
      futures.push_back(std::async(std::launch::async,
                                   [variant]() { return run_scenario(variant); }));
    }
    for (auto& f : futures) entry.runs.push_back(f.get());
    for (const RunResult& run : entry.runs) entry.metrics.push_back(compute_metrics(run));
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace qpctl
