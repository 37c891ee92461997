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

#include "qpctl/harness.hpp"

namespace qpctl {

/// Creates the directory if needed and probes it with a temporary file;
/// throws std::runtime_error if it cannot be written.
void ensure_writable_dir(const std::string& dir);

/// The per-run CSV, one row per StepLog. Column order is fixed (see README);
/// solver runtime is deliberately excluded so equal seeds give byte-identical
/// files.
std::string run_csv(const RunResult& run);

/// Writes <prefix>_log.csv, threshold-annotated SVG plots (contact force,
/// joint velocity, tracking error, damping), and <prefix>_manifest.txt into
/// output_dir. Returns the file prefix used.
std::string emit_artifacts(const RunResult& run, const std::string& output_dir);

/// Writes compare_metrics.csv plus per-metric SVGs with mean and min/max
/// envelopes across repeats.
void emit_comparison(const ComparisonReport& report, const std::string& output_dir);

/// Summary metrics recomputed from CSV text alone (round-trip check).
struct CsvSummary {
  long rows{0};
  double peak_true_force{0.0};
  double tracking_rmse{0.0};
  double contact_toggles_per_second{0.0};
};

CsvSummary summarize_csv(const std::string& csv_text);

}  // namespace qpctl
