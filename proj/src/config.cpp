#include "layout/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

namespace layout {

namespace {

using nlohmann::json;

/// Collects field-level problems so a bad config reports everything at once.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void object(const json& j, const std::string& path,
              const std::function<void(const json&, const std::string&)>& body,
              const std::set<std::string>& known) {
    if (!j.is_object()) {
      errors_.push_back(path + ": expected an object");
      return;
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!known.count(it.key())) errors_.push_back(path + "." + it.key() + ": unknown field");
    }
    body(j, path);
  }

  template <typename T>
  void get(const json& j, const std::string& path, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      errors_.push_back(path + "." + key + ": wrong type");
    }
  }

  void getVec3(const json& j, const std::string& path, const char* key, Vec3& out) {
    if (!j.contains(key)) return;
    const json& a = j.at(key);
    if (!a.is_array() || a.size() != 3 || !a[0].is_number()) {
      errors_.push_back(path + "." + key + ": expected an array of 3 numbers");
      return;
    }
    for (int i = 0; i < 3; ++i) out[i] = a[i].get<double>();
  }

  void getGains(const json& j, const std::string& path, const char* key, PolicyGains& g) {
    if (!j.contains(key)) return;
    object(j.at(key), path + "." + key,
           [&](const json& o, const std::string& p) {
             get(o, p, "alpha", g.alpha);
             get(o, p, "beta", g.beta);
             get(o, p, "gamma", g.gamma);
             get(o, p, "enabled", g.enabled);
           },
           {"alpha", "beta", "gamma", "enabled"});
  }

 private:
  std::vector<std::string>& errors_;
};

json gainsJson(const PolicyGains& g) {
  return {{"alpha", g.alpha}, {"beta", g.beta}, {"gamma", g.gamma}, {"enabled", g.enabled}};
}

json vec3Json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  // center spot plus a 100 mm square of corner markings
  const double z = cfg.mission.world.ceiling_height;
  cfg.mission.plan.targets_B = {
      Vec3(0.0, 0.0, z),     Vec3(-0.05, -0.05, z), Vec3(0.05, -0.05, z),
      Vec3(0.05, 0.05, z),   Vec3(-0.05, 0.05, z),
  };
  return cfg;
}

RunConfig RunConfig::fromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  RunConfig cfg = defaults();
  MissionConfig& m = cfg.mission;
  std::vector<std::string> errors;
  Reader r(errors);

  r.object(j, "config", [&](const json& root, const std::string&) {
    r.get(root, "config", "seed", m.seed);
    r.get(root, "config", "output_dir", cfg.output_dir);

    if (root.contains("world")) {
      r.object(root.at("world"), "world",
               [&](const json& o, const std::string& p) {
                 WorldConfig& w = m.world;
                 r.get(o, p, "ceiling_height", w.ceiling_height);
                 r.getVec3(o, p, "station_position", w.station_position);
                 r.get(o, p, "spring_rest_reach", w.spring_rest_reach);
                 r.get(o, p, "spring_constant", w.spring_constant);
                 r.get(o, p, "spring_max_travel", w.spring_max_travel);
                 r.get(o, p, "tool_offset_max", w.tool_offset_max);
                 r.get(o, p, "wheel_slip", w.wheel_slip);
                 r.get(o, p, "wheel_slip_noise", w.wheel_slip_noise);
                 r.get(o, p, "disturbance_accel_std", w.disturbance_accel_std);
                 r.get(o, p, "disturbance_tau", w.disturbance_tau);
                 r.get(o, p, "contact_enabled", w.contact_enabled);
                 r.get(o, p, "compliance_enabled", w.compliance_enabled);
                 r.get(o, p, "actuation_enabled", w.actuation_enabled);
               },
               {"ceiling_height", "station_position", "spring_rest_reach", "spring_constant",
                "spring_max_travel", "tool_offset_max", "wheel_slip", "wheel_slip_noise",
                "disturbance_accel_std", "disturbance_tau", "contact_enabled",
                "compliance_enabled", "actuation_enabled"});
    }

    if (root.contains("sensors")) {
      r.object(root.at("sensors"), "sensors",
               [&](const json& o, const std::string& p) {
                 SensorConfig& s = m.sensors;
                 if (o.contains("imu")) {
                   r.object(o.at("imu"), p + ".imu",
                            [&](const json& q, const std::string& pp) {
                              r.get(q, pp, "rate_hz", s.imu.rate_hz);
                              r.get(q, pp, "accel_noise_density", s.imu.accel_noise_density);
                              r.get(q, pp, "gyro_noise_density", s.imu.gyro_noise_density);
                              r.get(q, pp, "accel_turn_on_bias", s.imu.accel_turn_on_bias);
                              r.get(q, pp, "gyro_turn_on_bias", s.imu.gyro_turn_on_bias);
                              r.get(q, pp, "noise_enabled", s.imu.noise_enabled);
                            },
                            {"rate_hz", "accel_noise_density", "gyro_noise_density",
                             "accel_turn_on_bias", "gyro_turn_on_bias", "noise_enabled"});
                 }
                 if (o.contains("vio")) {
                   r.object(o.at("vio"), p + ".vio",
                            [&](const json& q, const std::string& pp) {
                              r.get(q, pp, "rate_hz", s.vio.rate_hz);
                              r.get(q, pp, "position_noise", s.vio.position_noise);
                              r.get(q, pp, "rotation_noise", s.vio.rotation_noise);
                              r.get(q, pp, "drift_translation_rate", s.vio.drift_translation_rate);
                              r.get(q, pp, "drift_rotation_rate", s.vio.drift_rotation_rate);
                              r.get(q, pp, "noise_enabled", s.vio.noise_enabled);
                            },
                            {"rate_hz", "position_noise", "rotation_noise",
                             "drift_translation_rate", "drift_rotation_rate", "noise_enabled"});
                 }
                 if (o.contains("prism")) {
                   r.object(o.at("prism"), p + ".prism",
                            [&](const json& q, const std::string& pp) {
                              r.get(q, pp, "rate_hz", s.prism.rate_hz);
                              r.get(q, pp, "sigma", s.prism.sigma);
                              r.get(q, pp, "acceptance_cone_deg", s.prism.acceptance_cone_deg);
                              r.get(q, pp, "line_of_sight_enabled",
                                    s.prism.line_of_sight_enabled);
                              r.get(q, pp, "noise_enabled", s.prism.noise_enabled);
                            },
                            {"rate_hz", "sigma", "acceptance_cone_deg", "line_of_sight_enabled",
                             "noise_enabled"});
                 }
                 if (o.contains("depth")) {
                   r.object(o.at("depth"), p + ".depth",
                            [&](const json& q, const std::string& pp) {
                              r.get(q, pp, "rate_hz", s.depth.rate_hz);
                              r.get(q, pp, "sigma", s.depth.sigma);
                              r.get(q, pp, "min_range", s.depth.min_range);
                              r.get(q, pp, "max_range", s.depth.max_range);
                              r.get(q, pp, "noise_enabled", s.depth.noise_enabled);
                            },
                            {"rate_hz", "sigma", "min_range", "max_range", "noise_enabled"});
                 }
                 if (o.contains("tool")) {
                   r.object(o.at("tool"), p + ".tool",
                            [&](const json& q, const std::string& pp) {
                              r.get(q, pp, "rate_hz", s.tool.rate_hz);
                              r.get(q, pp, "position_sigma", s.tool.position_sigma);
                              r.get(q, pp, "yaw_sigma", s.tool.yaw_sigma);
                              r.get(q, pp, "noise_enabled", s.tool.noise_enabled);
                            },
                            {"rate_hz", "position_sigma", "yaw_sigma", "noise_enabled"});
                 }
                 if (o.contains("dropouts")) {
                   const json& d = o.at("dropouts");
                   if (!d.is_array()) {
                     errors.push_back(p + ".dropouts: expected an array");
                   } else {
                     for (size_t i = 0; i < d.size(); ++i) {
                       DropoutWindow w;
                       std::string stream;
                       const std::string pp = p + ".dropouts[" + std::to_string(i) + "]";
                       r.object(d[i], pp,
                                [&](const json& q, const std::string& ppp) {
                                  r.get(q, ppp, "stream", stream);
                                  r.get(q, ppp, "start_s", w.start_s);
                                  r.get(q, ppp, "end_s", w.end_s);
                                },
                                {"stream", "start_s", "end_s"});
                       if (stream == "imu") w.stream = StreamId::Imu;
                       else if (stream == "vio") w.stream = StreamId::Vio;
                       else if (stream == "prism") w.stream = StreamId::Prism;
                       else if (stream == "depth") w.stream = StreamId::Depth;
                       else if (stream == "tool") w.stream = StreamId::Tool;
                       else errors.push_back(pp + ".stream: unknown stream '" + stream + "'");
                       s.dropouts.windows.push_back(w);
                     }
                   }
                 }
               },
               {"imu", "vio", "prism", "depth", "tool", "dropouts"});
    }

    if (root.contains("local_estimator")) {
      r.object(root.at("local_estimator"), "local_estimator",
               [&](const json& o, const std::string& p) {
                 LocalEstimatorConfig& l = m.local;
                 r.get(o, p, "window_s", l.window_s);
                 r.get(o, p, "optimize_rate_hz", l.optimize_rate_hz);
                 r.get(o, p, "output_rate_hz", l.output_rate_hz);
                 r.get(o, p, "state_decimation", l.state_decimation);
                 r.get(o, p, "init_window_s", l.init_window_s);
                 r.get(o, p, "vio_rot_sigma", l.vio_rot_sigma);
                 r.get(o, p, "vio_pos_sigma", l.vio_pos_sigma);
                 r.get(o, p, "prism_pos_sigma", l.prism_pos_sigma);
               },
               {"window_s", "optimize_rate_hz", "output_rate_hz", "state_decimation",
                "init_window_s", "vio_rot_sigma", "vio_pos_sigma", "prism_pos_sigma"});
    }

    if (root.contains("global_estimator")) {
      r.object(root.at("global_estimator"), "global_estimator",
               [&](const json& o, const std::string& p) {
                 GlobalEstimatorConfig& g = m.global;
                 r.get(o, p, "window_s", g.window_s);
                 r.get(o, p, "optimize_rate_hz", g.optimize_rate_hz);
                 r.get(o, p, "state_decimation", g.state_decimation);
                 r.get(o, p, "drift_pos_sigma", g.drift_pos_sigma);
                 r.get(o, p, "drift_rot_sigma", g.drift_rot_sigma);
                 r.get(o, p, "reference_sigma", g.reference_sigma);
                 r.get(o, p, "initial_yaw_guess", g.initial_yaw_guess);
               },
               {"window_s", "optimize_rate_hz", "state_decimation", "drift_pos_sigma",
                "drift_rot_sigma", "reference_sigma", "initial_yaw_guess"});
    }

    if (root.contains("policies")) {
      r.object(root.at("policies"), "policies",
               [&](const json& o, const std::string& p) {
                 PoliciesConfig& pc = m.policies;
                 std::string variant;
                 r.get(o, p, "soft_norm", variant);
                 if (variant == "standard") pc.soft_norm = SoftNormVariant::Standard;
                 else if (variant == "printed" || variant.empty()) {
                   pc.soft_norm = SoftNormVariant::Printed;
                 } else {
                   errors.push_back(p + ".soft_norm: must be 'printed' or 'standard'");
                 }
                 r.getGains(o, p, "ee_navigation", pc.ee_navigation);
                 r.getGains(o, p, "ee_following", pc.ee_following);
                 r.getGains(o, p, "depth_servoing", pc.depth_servoing);
                 r.getGains(o, p, "spring_loading", pc.spring_loading);
                 r.getGains(o, p, "prism_tracking", pc.prism_tracking);
                 r.getGains(o, p, "waypoint", pc.waypoint);
                 r.get(o, p, "spring_target", pc.spring_target);
                 r.get(o, p, "spring_decay_k", pc.spring_decay_k);
                 r.get(o, p, "wheel_leak", pc.wheel_leak);
                 r.get(o, p, "wheel_speed_max", pc.wheel_speed_max);
               },
               {"soft_norm", "ee_navigation", "ee_following", "depth_servoing", "spring_loading",
                "prism_tracking", "waypoint", "spring_target", "spring_decay_k", "wheel_leak",
                "wheel_speed_max"});
    }

    if (root.contains("plan")) {
      r.object(root.at("plan"), "plan",
               [&](const json& o, const std::string& p) {
                 MissionPlan& pl = m.plan;
                 if (o.contains("targets")) {
                   const json& ts = o.at("targets");
                   if (!ts.is_array()) {
                     errors.push_back(p + ".targets: expected an array");
                   } else {
                     pl.targets_B.clear();
                     for (size_t i = 0; i < ts.size(); ++i) {
                       if (!ts[i].is_array() || ts[i].size() != 3) {
                         errors.push_back(p + ".targets[" + std::to_string(i) +
                                          "]: expected [x, y, z]");
                         continue;
                       }
                       pl.targets_B.emplace_back(ts[i][0].get<double>(), ts[i][1].get<double>(),
                                                 ts[i][2].get<double>());
                     }
                   }
                 }
                 r.get(o, p, "dwell_threshold", pl.dwell_threshold);
                 r.get(o, p, "dwell_duration_s", pl.dwell_duration_s);
                 r.get(o, p, "approach_gate_radius", pl.approach_gate_radius);
                 r.get(o, p, "takeoff_height", pl.takeoff_height);
               },
               {"targets", "dwell_threshold", "dwell_duration_s", "approach_gate_radius",
                "takeoff_height"});
    }

    if (root.contains("mission")) {
      r.object(root.at("mission"), "mission",
               [&](const json& o, const std::string& p) {
                 r.get(o, p, "control_rate_hz", m.control_rate_hz);
                 r.get(o, p, "max_duration_s", m.max_duration_s);
                 r.get(o, p, "injected_yaw_error", m.injected_yaw_error);
               },
               {"control_rate_hz", "max_duration_s", "injected_yaw_error"});
    }
  },
  {"seed", "output_dir", "world", "sensors", "local_estimator", "global_estimator",
   "policies", "plan", "mission"});

  // cross-field checks
  if (m.local.window_s <= 0.0) errors.push_back("local_estimator.window_s: must be > 0");
  if (m.local.optimize_rate_hz <= 0.0 || m.local.output_rate_hz <= 0.0) {
    errors.push_back("local_estimator: rates must be > 0");
  }
  if (m.global.window_s <= 0.0 || m.global.optimize_rate_hz <= 0.0 ||
      m.global.state_decimation <= 0) {
    errors.push_back("global_estimator: window, rate and decimation must be positive");
  }
  if (m.plan.dwell_threshold <= 0.0 || m.plan.dwell_duration_s <= 0.0) {
    errors.push_back("plan: dwell threshold and duration must be positive");
  }
  for (size_t i = 0; i < m.plan.targets_B.size(); ++i) {
    if (std::abs(m.plan.targets_B[i].z() - m.world.ceiling_height) > 1e-9) {
      errors.push_back("plan.targets[" + std::to_string(i) + "]: must lie on the ceiling plane");
    }
  }

  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return fromJson(ss.str());
}

std::string RunConfig::toJson() const {
  const MissionConfig& m = mission;
  json targets = json::array();
  for (const auto& t : m.plan.targets_B) targets.push_back(vec3Json(t));
  json dropouts = json::array();
  for (const auto& w : m.sensors.dropouts.windows) {
    dropouts.push_back(
        {{"stream", streamName(w.stream)}, {"start_s", w.start_s}, {"end_s", w.end_s}});
  }
  const json j = {
      {"seed", m.seed},
      {"output_dir", output_dir},
      {"world",
       {{"ceiling_height", m.world.ceiling_height},
        {"station_position", vec3Json(m.world.station_position)},
        {"spring_rest_reach", m.world.spring_rest_reach},
        {"spring_constant", m.world.spring_constant},
        {"spring_max_travel", m.world.spring_max_travel},
        {"tool_offset_max", m.world.tool_offset_max},
        {"wheel_slip", m.world.wheel_slip},
        {"wheel_slip_noise", m.world.wheel_slip_noise},
        {"disturbance_accel_std", m.world.disturbance_accel_std},
        {"disturbance_tau", m.world.disturbance_tau},
        {"contact_enabled", m.world.contact_enabled},
        {"compliance_enabled", m.world.compliance_enabled},
        {"actuation_enabled", m.world.actuation_enabled}}},
      {"sensors",
       {{"imu",
         {{"rate_hz", m.sensors.imu.rate_hz},
          {"accel_noise_density", m.sensors.imu.accel_noise_density},
          {"gyro_noise_density", m.sensors.imu.gyro_noise_density},
          {"accel_turn_on_bias", m.sensors.imu.accel_turn_on_bias},
          {"gyro_turn_on_bias", m.sensors.imu.gyro_turn_on_bias},
          {"noise_enabled", m.sensors.imu.noise_enabled}}},
        {"vio",
         {{"rate_hz", m.sensors.vio.rate_hz},
          {"position_noise", m.sensors.vio.position_noise},
          {"rotation_noise", m.sensors.vio.rotation_noise},
          {"drift_translation_rate", m.sensors.vio.drift_translation_rate},
          {"drift_rotation_rate", m.sensors.vio.drift_rotation_rate},
          {"noise_enabled", m.sensors.vio.noise_enabled}}},
        {"prism",
         {{"rate_hz", m.sensors.prism.rate_hz},
          {"sigma", m.sensors.prism.sigma},
          {"acceptance_cone_deg", m.sensors.prism.acceptance_cone_deg},
          {"line_of_sight_enabled", m.sensors.prism.line_of_sight_enabled},
          {"noise_enabled", m.sensors.prism.noise_enabled}}},
        {"depth",
         {{"rate_hz", m.sensors.depth.rate_hz},
          {"sigma", m.sensors.depth.sigma},
          {"min_range", m.sensors.depth.min_range},
          {"max_range", m.sensors.depth.max_range},
          {"noise_enabled", m.sensors.depth.noise_enabled}}},
        {"tool",
         {{"rate_hz", m.sensors.tool.rate_hz},
          {"position_sigma", m.sensors.tool.position_sigma},
          {"yaw_sigma", m.sensors.tool.yaw_sigma},
          {"noise_enabled", m.sensors.tool.noise_enabled}}},
        {"dropouts", dropouts}}},
      {"local_estimator",
       {{"window_s", m.local.window_s},
        {"optimize_rate_hz", m.local.optimize_rate_hz},
        {"output_rate_hz", m.local.output_rate_hz},
        {"state_decimation", m.local.state_decimation},
        {"init_window_s", m.local.init_window_s},
        {"vio_rot_sigma", m.local.vio_rot_sigma},
        {"vio_pos_sigma", m.local.vio_pos_sigma},
        {"prism_pos_sigma", m.local.prism_pos_sigma}}},
      {"global_estimator",
       {{"window_s", m.global.window_s},
        {"optimize_rate_hz", m.global.optimize_rate_hz},
        {"state_decimation", m.global.state_decimation},
        {"drift_pos_sigma", m.global.drift_pos_sigma},
        {"drift_rot_sigma", m.global.drift_rot_sigma},
        {"reference_sigma", m.global.reference_sigma},
        {"initial_yaw_guess", m.global.initial_yaw_guess}}},
      {"policies",
       {{"soft_norm", m.policies.soft_norm == SoftNormVariant::Printed ? "printed" : "standard"},
        {"ee_navigation", gainsJson(m.policies.ee_navigation)},
        {"ee_following", gainsJson(m.policies.ee_following)},
        {"depth_servoing", gainsJson(m.policies.depth_servoing)},
        {"spring_loading", gainsJson(m.policies.spring_loading)},
        {"prism_tracking", gainsJson(m.policies.prism_tracking)},
        {"waypoint", gainsJson(m.policies.waypoint)},
        {"spring_target", m.policies.spring_target},
        {"spring_decay_k", m.policies.spring_decay_k},
        {"wheel_leak", m.policies.wheel_leak},
        {"wheel_speed_max", m.policies.wheel_speed_max}}},
      {"plan",
       {{"targets", targets},
        {"dwell_threshold", m.plan.dwell_threshold},
        {"dwell_duration_s", m.plan.dwell_duration_s},
        {"approach_gate_radius", m.plan.approach_gate_radius},
        {"takeoff_height", m.plan.takeoff_height}}},
      {"mission",
       {{"control_rate_hz", m.control_rate_hz},
        {"max_duration_s", m.max_duration_s},
        {"injected_yaw_error", m.injected_yaw_error}}},
  };
  return j.dump(2) + "\n";
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path);
  out << toJson();
}

}  // namespace layout
