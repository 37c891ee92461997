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

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qpctl/artifacts.hpp"
#include "qpctl/harness.hpp"

namespace {

std::vector<qpctl::ControllerKind> parse_controller_list(const std::string& csv) {
  std::vector<qpctl::ControllerKind> kinds;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) kinds.push_back(qpctl::controller_kind_from_string(item));
  }
  return kinds;
}

void print_metrics(const std::string& label, const qpctl::RunMetrics& m) {
  std::cout << label << ": peak force " << m.peak_true_force << " N, mean in-contact "
            << m.mean_true_force_in_contact << " N, tracking RMSE " << m.tracking_rmse
            << ", peak |v_q| " << m.peak_vq_in_window << " rad/s, toggles/s "
            << m.contact_toggles_per_second << ", faults " << m.fault_count
            << (m.aborted ? " [ABORTED]" : "") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qpctl: contact-aware trajectory tracking for stiffness-controlled planar arms"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string controller_override;
  std::string controllers_csv = "frictional_qp,nullspace";
  int repeats = 1;

  CLI::App* run = app.add_subcommand("run", "run one scenario and emit CSV/SVG artifacts");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the scenario RNG seed")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--controller", controller_override,
                  "override the scenario's controller "
                  "(greedy|nullspace|frictionless_qp|frictional_qp)");

  CLI::App* cmp = app.add_subcommand("compare", "A/B controller comparison over repeats");
  cmp->add_option("scenario", scenario_path, "scenario JSON file")->required();
  cmp->add_option("--controllers", controllers_csv, "comma-separated controller list");
  cmp->add_option("--repeats", repeats, "independent runs per controller");
  cmp->add_option("--out", out_dir, "output directory");
  cmp->add_option("--seed", seed, "base RNG seed")
      ->each([&](const std::string&) { seed_set = true; });

  CLI::App* val = app.add_subcommand("validate", "parse and validate a scenario file");
  val->add_option("scenario", scenario_path, "scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    qpctl::Scenario scenario = qpctl::load_scenario(scenario_path);
    if (seed_set) {
      scenario.rng_seed = seed;
      scenario.sensing.rng_seed = seed;
    }

    if (val->parsed()) {
      std::cout << "ok: " << scenario.name << " (" << scenario.model.num_joints()
                << " joints, " << scenario.scene.obstacles.size() << " obstacles, "
                << scenario.duration << " s at " << scenario.control_rate << " Hz)\n";
      return 0;
    }

    if (run->parsed()) {
      if (!controller_override.empty())
        scenario.controller.kind = qpctl::controller_kind_from_string(controller_override);
      qpctl::ensure_writable_dir(out_dir);
      const qpctl::RunResult result = qpctl::run_scenario(scenario);
      const std::string prefix = qpctl::emit_artifacts(result, out_dir);
      print_metrics(prefix, qpctl::compute_metrics(result));
      if (result.aborted) {
        std::cerr << "run aborted: " << result.abort_reason << "\n";
        return 2;
      }
      return 0;
    }

    if (cmp->parsed()) {
      const auto kinds = parse_controller_list(controllers_csv);
      qpctl::ensure_writable_dir(out_dir);
      const qpctl::ComparisonReport report =
          qpctl::compare_controllers(scenario, kinds, repeats);
      qpctl::emit_comparison(report, out_dir);
      bool any_abort = false;
      for (const auto& entry : report.entries) {
        for (size_t r = 0; r < entry.metrics.size(); ++r) {
          print_metrics(std::string(qpctl::to_string(entry.kind)) + " #" +
                            std::to_string(r),
                        entry.metrics[r]);
          any_abort = any_abort || entry.metrics[r].aborted;
        }
      }
      std::cout << "report written to " << out_dir << "\n";
      return any_abort ? 2 : 0;
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
