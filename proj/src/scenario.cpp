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

#include "qpctl/scenario.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qpctl {

using nlohmann::json;

namespace {

Eigen::VectorXd to_vector(const json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

Eigen::Vector2d to_vec2(const json& j) {
  if (j.size() != 2) throw std::invalid_argument("scenario: expected a 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

BodyPoint parse_body_point(const json& j) {
  BodyPoint bp;
  bp.link_index = j.at("link").get<int>();
  bp.local_offset = to_vec2(j.at("offset"));
  return bp;
}

Obstacle parse_obstacle(const json& j) {
  Obstacle obs;
  const std::string type = j.at("type").get<std::string>();
  if (type == "half_plane") {
    HalfPlane hp;
    hp.normal = to_vec2(j.at("normal")).normalized();
    hp.offset = j.at("offset").get<double>();
    obs.shape = hp;
  } else if (type == "circle") {
    Circle c;
    c.center = to_vec2(j.at("center"));
    c.radius = j.at("radius").get<double>();
    obs.shape = c;
  } else if (type == "capsule") {
    Capsule cap;
    cap.p0 = to_vec2(j.at("p0"));
    cap.p1 = to_vec2(j.at("p1"));
    cap.radius = j.at("radius").get<double>();
    obs.shape = cap;
  } else {
    throw std::invalid_argument("scenario: unknown obstacle type " + type);
  }
  obs.friction_coefficient = j.value("friction", 0.0);
  obs.contact_stiffness = j.value("contact_stiffness", 1e5);
  obs.validate();
  return obs;
}

}  // namespace

Eigen::VectorXd ReferenceTrajectory::sample_joint(double t) const {
  if (joint_knots.empty())
    throw std::logic_error("reference: no joint knots");
  if (t <= joint_knots.front().t) return joint_knots.front().q;
  if (t >= joint_knots.back().t) return joint_knots.back().q;
  for (size_t i = 1; i < joint_knots.size(); ++i) {
    if (t <= joint_knots[i].t) {
      const auto& a = joint_knots[i - 1];
      const auto& b = joint_knots[i];
      const double s = (t - a.t) / (b.t - a.t);
      return a.q + s * (b.q - a.q);
    }
  }
  return joint_knots.back().q;
}

Eigen::Vector2d ReferenceTrajectory::sample_task(double t) const {
  if (task_knots.empty())
    throw std::logic_error("reference: no task knots");
  if (t <= task_knots.front().t) return task_knots.front().p;
  if (t >= task_knots.back().t) return task_knots.back().p;
  for (size_t i = 1; i < task_knots.size(); ++i) {
    if (t <= task_knots[i].t) {
      const auto& a = task_knots[i - 1];
      const auto& b = task_knots[i];
      const double s = (t - a.t) / (b.t - a.t);
      return a.p + s * (b.p - a.p);
    }
  }
  return task_knots.back().p;
}

void Scenario::validate() const {
  model.validate();
  controller.validate();
  sensing.validate();
  damping_init.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("scenario: duration must be > 0");
  if (!(control_rate > 0.0)) throw std::invalid_argument("scenario: control rate must be > 0");
  if (sim.substep_cap < 1) throw std::invalid_argument("scenario: substep cap must be >= 1");
  for (const Obstacle& o : scene.obstacles) o.validate();
  if (!scene.obstacles.empty() && scene.collision_points.empty())
    throw std::invalid_argument("scenario: obstacles present but no collision points");
  for (const BodyPoint& bp : scene.collision_points) {
    if (bp.link_index < 1 || bp.link_index > model.num_joints())
      throw std::invalid_argument("scenario: collision point link index out of range");
  }
  const auto check_knot_times = [](const auto& knots) {
    for (size_t i = 1; i < knots.size(); ++i)
      if (!(knots[i].t > knots[i - 1].t))
        throw std::invalid_argument("scenario: knot times must be strictly increasing");
  };
  if (reference.mode == TrackingObjective::Mode::joint_space) {
    if (reference.joint_knots.empty())
      throw std::invalid_argument("scenario: joint reference needs knots");
    check_knot_times(reference.joint_knots);
    for (const auto& k : reference.joint_knots)
      if (k.q.size() != model.num_joints())
        throw std::invalid_argument("scenario: knot dimension mismatch");
  } else {
    if (reference.task_knots.empty())
      throw std::invalid_argument("scenario: task reference needs knots");
    check_knot_times(reference.task_knots);
    if (!q_start)
      throw std::invalid_argument("scenario: task-space reference requires q_start");
  }
  if (q_start && q_start->size() != model.num_joints())
    throw std::invalid_argument("scenario: q_start dimension mismatch");
  if (separation_window && !((*separation_window)[0] < (*separation_window)[1]))
    throw std::invalid_argument("scenario: separation window inverted");
}

Scenario parse_scenario(const std::string& json_text) {
  const json j = json::parse(json_text);
  Scenario sc;
  sc.version = j.value("version", 1);
  if (sc.version != 1)
    throw std::invalid_argument("scenario: unsupported schema version " +
                                std::to_string(sc.version));
  sc.name = j.value("name", "scenario");

  const json& jm = j.at("model");
  sc.model.link_lengths = jm.at("link_lengths").get<std::vector<double>>();
  sc.model.joint_stiffness = to_vector(jm.at("joint_stiffness"));
  sc.model.rate_bound = to_vector(jm.at("rate_bound"));
  if (jm.contains("base_pose")) {
    sc.model.base_pose.position = to_vec2(jm.at("base_pose").at("position"));
    sc.model.base_pose.angle = jm.at("base_pose").value("angle", 0.0);
  }
  if (jm.contains("joint_limits")) {
    std::vector<std::array<double, 2>> lims;
    for (const auto& l : jm.at("joint_limits"))
      lims.push_back({l[0].get<double>(), l[1].get<double>()});
    sc.model.joint_limits = std::move(lims);
  }

  if (j.contains("scene")) {
    const json& js = j.at("scene");
    for (const auto& jo : js.value("obstacles", json::array()))
      sc.scene.obstacles.push_back(parse_obstacle(jo));
    if (js.contains("collision_points")) {
      for (const auto& jp : js.at("collision_points"))
        sc.scene.collision_points.push_back(parse_body_point(jp));
    } else {
      sc.scene.collision_points =
          sample_collision_points(sc.model, js.value("collision_points_per_link", 5));
    }
  }

  const json& jr = j.at("reference");
  const std::string mode = jr.value("mode", "joint_space");
  if (mode == "joint_space") {
    sc.reference.mode = TrackingObjective::Mode::joint_space;
    for (const auto& jk : jr.at("knots"))
      sc.reference.joint_knots.push_back({jk.at("t").get<double>(), to_vector(jk.at("q"))});
  } else if (mode == "task_space") {
    sc.reference.mode = TrackingObjective::Mode::task_space;
    for (const auto& jk : jr.at("knots"))
      sc.reference.task_knots.push_back({jk.at("t").get<double>(), to_vec2(jk.at("p"))});
    sc.controller.objective.task_point = parse_body_point(jr.at("task_point"));
  } else {
    throw std::invalid_argument("scenario: unknown reference mode " + mode);
  }
  sc.controller.objective.mode = sc.reference.mode;

  const json& jc = j.at("controller");
  sc.controller.kind = controller_kind_from_string(jc.at("name").get<std::string>());
  sc.controller.lambda_max = jc.value("lambda_max", 15.0);
  sc.controller.epsilon = jc.value("epsilon", 1e-2);
  if (jc.contains("lambda_target"))
    sc.controller.nullspace_lambda_target = jc.at("lambda_target").get<double>();
  if (jc.contains("dls_damping"))
    sc.controller.objective.dls_damping = jc.at("dls_damping").get<double>();
  if (jc.contains("damping")) {
    const json& jd = jc.at("damping");
    sc.damping_init.a = jd.value("a", 5.0);
    sc.damping_init.alpha = jd.value("alpha", 0.9);
    sc.damping_init.w_max = jd.value("w_max", 10.0);
  }

  if (j.contains("sensing")) {
    const json& jn = j.at("sensing");
    sc.sensing.f_threshold = jn.value("f_threshold", 5.0);
    sc.sensing.direction_noise_std = jn.value("direction_noise_std", 0.0);
    sc.sensing.magnitude_noise_std = jn.value("magnitude_noise_std", 0.0);
    sc.sensing.point_noise_std = jn.value("point_noise_std", 0.0);
    sc.sensing.latency_ticks = jn.value("latency_ticks", 0);
  }

  sc.control_rate = j.value("control_rate", 200.0);
  sc.duration = j.at("duration").get<double>();
  sc.rng_seed = j.value("rng_seed", std::uint64_t{0});
  sc.sensing.rng_seed = sc.rng_seed;

  if (j.contains("sim")) {
    const json& jsim = j.at("sim");
    sc.sim.activation_distance = jsim.value("activation_distance", 1e-4);
    sc.sim.tangential_stiffness = jsim.value("tangential_stiffness", 1e4);
    sc.sim.substep_cap = jsim.value("substep_cap", 50);
    sc.sim.convergence_tol = jsim.value("convergence_tol", 1e-8);
  }
  sc.fault_tolerance_ticks = j.value("fault_tolerance_ticks", 50);
  if (j.contains("analysis") && j.at("analysis").contains("separation_window")) {
    const auto& w = j.at("analysis").at("separation_window");
    sc.separation_window = {{w[0].get<double>(), w[1].get<double>()}};
  }
  if (j.contains("q_start")) sc.q_start = to_vector(j.at("q_start"));

  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scenario: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string canonical_json(const Scenario& sc) {
  json j;
  j["version"] = sc.version;
  j["name"] = sc.name;
  j["model"]["link_lengths"] = sc.model.link_lengths;
  j["model"]["joint_stiffness"] =
      std::vector<double>(sc.model.joint_stiffness.begin(), sc.model.joint_stiffness.end());
  j["model"]["rate_bound"] =
      std::vector<double>(sc.model.rate_bound.begin(), sc.model.rate_bound.end());
  j["model"]["base_pose"] = {sc.model.base_pose.position.x(),
                             sc.model.base_pose.position.y(), sc.model.base_pose.angle};
  if (sc.model.joint_limits) {
    for (const auto& l : *sc.model.joint_limits)
      j["model"]["joint_limits"].push_back({l[0], l[1]});
  }
  for (const Obstacle& o : sc.scene.obstacles) {
    json jo;
    if (const auto* hp = std::get_if<HalfPlane>(&o.shape))
      jo = {{"type", "half_plane"}, {"normal", {hp->normal.x(), hp->normal.y()}},
            {"offset", hp->offset}};
    else if (const auto* c = std::get_if<Circle>(&o.shape))
      jo = {{"type", "circle"}, {"center", {c->center.x(), c->center.y()}},
            {"radius", c->radius}};
    else if (const auto* cap = std::get_if<Capsule>(&o.shape))
      jo = {{"type", "capsule"}, {"p0", {cap->p0.x(), cap->p0.y()}},
            {"p1", {cap->p1.x(), cap->p1.y()}}, {"radius", cap->radius}};
    jo["friction"] = o.friction_coefficient;
    jo["contact_stiffness"] = o.contact_stiffness;
    j["scene"]["obstacles"].push_back(jo);
  }
  for (const BodyPoint& bp : sc.scene.collision_points)
    j["scene"]["collision_points"].push_back(
        {{"link", bp.link_index}, {"offset", {bp.local_offset.x(), bp.local_offset.y()}}});
  if (sc.reference.mode == TrackingObjective::Mode::joint_space) {
    j["reference"]["mode"] = "joint_space";
    for (const auto& k : sc.reference.joint_knots)
      j["reference"]["knots"].push_back(
          {{"t", k.t}, {"q", std::vector<double>(k.q.begin(), k.q.end())}});
  } else {
    j["reference"]["mode"] = "task_space";
    const BodyPoint& tp = sc.controller.objective.task_point;
    j["reference"]["task_point"] = {
        {"link", tp.link_index}, {"offset", {tp.local_offset.x(), tp.local_offset.y()}}};
    for (const auto& k : sc.reference.task_knots)
      j["reference"]["knots"].push_back({{"t", k.t}, {"p", {k.p.x(), k.p.y()}}});
  }
  j["controller"] = {{"name", to_string(sc.controller.kind)},
                     {"lambda_max", sc.controller.lambda_max},
                     {"epsilon", sc.controller.epsilon},
                     {"damping",
                      {{"a", sc.damping_init.a},
                       {"alpha", sc.damping_init.alpha},
                       {"w_max", sc.damping_init.w_max}}}};
  if (sc.controller.nullspace_lambda_target)
    j["controller"]["lambda_target"] = *sc.controller.nullspace_lambda_target;
  j["sensing"] = {{"f_threshold", sc.sensing.f_threshold},
                  {"direction_noise_std", sc.sensing.direction_noise_std},
                  {"magnitude_noise_std", sc.sensing.magnitude_noise_std},
                  {"point_noise_std", sc.sensing.point_noise_std},
                  {"latency_ticks", sc.sensing.latency_ticks}};
  j["control_rate"] = sc.control_rate;
  j["duration"] = sc.duration;
  j["rng_seed"] = sc.rng_seed;
  j["sim"] = {{"activation_distance", sc.sim.activation_distance},
              {"tangential_stiffness", sc.sim.tangential_stiffness},
              {"substep_cap", sc.sim.substep_cap},
              {"convergence_tol", sc.sim.convergence_tol}};
  j["fault_tolerance_ticks"] = sc.fault_tolerance_ticks;
  if (sc.separation_window)
    j["analysis"]["separation_window"] = {(*sc.separation_window)[0],
                                          (*sc.separation_window)[1]};
  if (sc.q_start)
    j["q_start"] = std::vector<double>(sc.q_start->begin(), sc.q_start->end());
  return j.dump();
}

std::uint64_t config_hash(const Scenario& sc) {
  const std::string s = canonical_json(sc);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace qpctl
