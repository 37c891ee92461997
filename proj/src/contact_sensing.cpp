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

#include "qpctl/contact_sensing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace qpctl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Standard normal from a counter-based stream: reproducible across runs and
// independent of call order.
double keyed_normal(std::uint64_t seed, long tick, int index, int channel) {
  std::uint64_t h = splitmix64(seed ^ 0x632BE59BD9B4E019ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tick));
  h = splitmix64(h ^ static_cast<std::uint64_t>(index));
  h = splitmix64(h ^ static_cast<std::uint64_t>(channel));
  const double u1 = static_cast<double>(h >> 11) * 0x1.0p-53;
  const double u2 = static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(std::max(u1, 0x1.0p-53)));
  return r * std::cos(2.0 * M_PI * u2);
}

}  // namespace

void SensingConfig::validate() const {
  if (f_threshold < 0.0) throw std::invalid_argument("sensing: f_threshold must be >= 0");
  if (direction_noise_std < 0.0 || magnitude_noise_std < 0.0 || point_noise_std < 0.0)
    throw std::invalid_argument("sensing: noise stds must be >= 0");
  if (latency_ticks < 0) throw std::invalid_argument("sensing: latency must be >= 0");
}

ContactSet estimate_contacts(const ContactSet& true_contacts,
                             const SensingConfig& cfg, long tick) {
  cfg.validate();
  std::vector<Contact> noisy;
  noisy.reserve(true_contacts.contacts.size());
  for (int i = 0; i < true_contacts.num_contacts(); ++i) {
    Contact c = true_contacts.contacts[i];
    const double f = c.force + cfg.magnitude_noise_std * keyed_normal(cfg.rng_seed, tick, i, 0);
    if (f < cfg.f_threshold) continue;
    c.force = std::max(f, 0.0);
    const double angle =
        cfg.direction_noise_std * keyed_normal(cfg.rng_seed, tick, i, 1);
    const double ca = std::cos(angle), sa = std::sin(angle);
    c.direction = Eigen::Vector2d(ca * c.direction.x() - sa * c.direction.y(),
                                  sa * c.direction.x() + ca * c.direction.y());
    c.point.x() += cfg.point_noise_std * keyed_normal(cfg.rng_seed, tick, i, 2);
    c.point.y() += cfg.point_noise_std * keyed_normal(cfg.rng_seed, tick, i, 3);
    noisy.push_back(std::move(c));
  }
  return assemble_contact_set(std::move(noisy));
}

ForceRecords force_records(const ContactSet& contacts) {
  ForceRecords out;
  out.reserve(contacts.contacts.size());
  for (const Contact& c : contacts.contacts)
    out.push_back({c.body_point_index, c.obstacle_index, c.force});
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> align_by_identity(
    const ForceRecords& a, const ForceRecords& b) {
  std::map<std::pair<int, int>, std::pair<double, double>> merged;
  for (const auto& r : a)
    merged[{r.body_point_index, r.obstacle_index}].first = r.magnitude;
  for (const auto& r : b)
    merged[{r.body_point_index, r.obstacle_index}].second = r.magnitude;
  Eigen::VectorXd va(merged.size()), vb(merged.size());
  Eigen::Index i = 0;
  for (const auto& [key, vals] : merged) {
    va[i] = vals.first;
    vb[i] = vals.second;
    ++i;
  }
  return {va, vb};
}

double force_discrepancy(const Eigen::VectorXd& lambda_pred,
                         const Eigen::VectorXd& lambda_est, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("force_discrepancy: a must be > 0");
  const Eigen::Index n = std::max(lambda_pred.size(), lambda_est.size());
  double err = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = i < lambda_pred.size() ? lambda_pred[i] : 0.0;
    const double e = i < lambda_est.size() ? lambda_est[i] : 0.0;
    err = std::max(err, std::abs(p - e));
  }
  return 1.0 - std::exp(-err / a);
}

void DampingState::validate() const {
  if (!(a > 0.0)) throw std::invalid_argument("damping: a must be > 0");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("damping: alpha must be in (0, 1]");
  if (w_max < 0.0) throw std::invalid_argument("damping: w_max must be >= 0");
  if (e_prev < 0.0 || e_prev > 1.0)
    throw std::invalid_argument("damping: e_prev out of [0, 1]");
  if (w < 0.0 || w > w_max) throw std::invalid_argument("damping: w out of [0, w_max]");
}

DampingState update_damping_weight(DampingState state, double e_now) {
  state.validate();
  if (e_now < 0.0 || e_now > 1.0)
    throw std::invalid_argument("update_damping_weight: e_now out of [0, 1]");
  state.w = state.w_max * (state.alpha * e_now + (1.0 - state.alpha) * state.e_prev);
  state.e_prev = e_now;
  return state;
}

}  // namespace qpctl
