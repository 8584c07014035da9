#include "layout/mission.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "layout/csv.hpp"

namespace layout {

namespace {

int64_t periodNs(double rate_hz) { return static_cast<int64_t>(std::llround(1e9 / rate_hz)); }

// Dwell-gate smoothing and hysteresis.
constexpr double kToolErrFilterTau = 0.2;  // s
constexpr double kDwellExitFactor = 1.5;

// Estimated speed at which the global graph starts consuming prism fixes.
constexpr double kGlobalFeedSpeed = 0.05;  // m/s

// Smoothing applied to the global frame estimate before control consumes it.
constexpr double kGlobalFilterTau = 8.0;  // s

// Orbit period of the post-takeoff calibration sweep.
constexpr double kSweepPeriod = 8.0;  // s

/// Composes a yaw rotation about a pivot point onto a B->O transform.
Pose rotateAboutPoint(const Pose& t_bo, const Vec3& pivot_b, double yaw) {
  const Rotation rz = Rotation::rz(yaw);
  return Pose(rz * t_bo.rotation, pivot_b + rz * (t_bo.translation - pivot_b));
}

}  // namespace

const char* phaseName(MissionPhase p) {
  switch (p) {
    case MissionPhase::Idle: return "Idle";
    case MissionPhase::Takeoff: return "Takeoff";
    case MissionPhase::Approach: return "Approach";
    case MissionPhase::DepthServo: return "DepthServo";
    case MissionPhase::SpringLoad: return "SpringLoad";
    case MissionPhase::EeNavigate: return "EeNavigate";
    case MissionPhase::Dwell: return "Dwell";
    case MissionPhase::Mark: return "Mark";
    case MissionPhase::Retract: return "Retract";
    case MissionPhase::Done: return "Done";
  }
  return "?";
}

PolicyEnableSet enabledPolicies(MissionPhase phase) {
  PolicyEnableSet s;
  switch (phase) {
    case MissionPhase::Idle:
    case MissionPhase::Done:
      break;
    case MissionPhase::Takeoff:
    case MissionPhase::Approach:
    case MissionPhase::Retract:
      s.waypoint = true;
      s.prism_tracking = true;
      break;
    case MissionPhase::DepthServo:
      s.depth_servoing = true;
      s.ee_following = true;
      s.prism_tracking = true;
      break;
    case MissionPhase::SpringLoad:
      s.spring_loading = true;
      s.ee_following = true;
      s.prism_tracking = true;
      break;
    case MissionPhase::EeNavigate:
    case MissionPhase::Dwell:
    case MissionPhase::Mark:
      s.spring_loading = true;
      s.ee_following = true;
      s.prism_tracking = true;
      s.ee_navigation = true;
      break;
  }
  return s;
}

MissionRunner::MissionRunner(const MissionConfig& config) : cfg_(config) {
  // Yaw is owned by the prism-tracking policy throughout the mission.
  cfg_.policies.waypoint_metric(5) = 0.0;
  cfg_.policies.contact_distance =
      cfg_.world.spring_rest_reach * 0.95;  // engage just before full reach
  cfg_.policies.spring_target = std::min(cfg_.policies.spring_target,
                                         0.8 * cfg_.world.spring_max_travel);
}

MissionResult MissionRunner::run(const std::string& output_dir) {
  SimWorld world(cfg_.world, cfg_.frames, cfg_.seed);
  SensorSimulator sensors(cfg_.sensors, cfg_.seed);
  LocalEstimator local(cfg_.local);
  GlobalEstimator global(cfg_.global);
  Policies policies(cfg_.policies);
  WheelController wheels(cfg_.policies.wheel_leak, cfg_.policies.wheel_speed_max);
  FrameTree tree = FrameTree::standard(cfg_.frames.imu_to_vio, cfg_.frames.imu_to_prism,
                                       cfg_.frames.imu_to_tool_sensor);

  MissionResult result;
  const int64_t dt_ns = periodNs(cfg_.control_rate_hz);
  const double dt = static_cast<double>(dt_ns) * 1e-9;

  int64_t next_imu = 0, next_vio = 0, next_prism = 0, next_depth = 0, next_tool = 0;
  int64_t next_local_opt = 0, next_global_opt = 0;
  const int64_t imu_period = periodNs(cfg_.sensors.imu.rate_hz);
  const int64_t vio_period = periodNs(cfg_.sensors.vio.rate_hz);
  const int64_t prism_period = periodNs(cfg_.sensors.prism.rate_hz);
  const int64_t depth_period = periodNs(cfg_.sensors.depth.rate_hz);
  const int64_t tool_period = periodNs(cfg_.sensors.tool.rate_hz);
  const int64_t local_opt_period = periodNs(cfg_.local.optimize_rate_hz);
  const int64_t global_opt_period = periodNs(cfg_.global.optimize_rate_hz);

  std::vector<LocalState> local_log;
  std::vector<GlobalState> global_log;

  MissionPhase phase = MissionPhase::Idle;
  int target_idx = 0;
  double phase_entry_t = 0.0;
  double dwell_accum = 0.0;
  Vec2 tool_err_vec_filt = Vec2::Zero();  // low-passed planar gate error
  bool tool_err_filt_init = false;
  bool global_feed_started = false;
  std::optional<Pose> t_bo_filt;
  double sweep_start = -1.0;
  Vec3 sweep_center = Vec3::Zero();
  Pose waypoint_goal_O;
  bool marked_this_target = false;
  std::optional<ToolOffsetMeasurement> last_tool;
  Vec2 tool_velocity = Vec2::Zero();
  std::optional<DepthMeasurement> last_depth;
  Vec3 last_gyro = Vec3::Zero();

  if (!cfg_.plan.targets_B.empty()) {
    result.outcomes.resize(cfg_.plan.targets_B.size());
    for (size_t i = 0; i < cfg_.plan.targets_B.size(); ++i) {
      result.outcomes[i].target = cfg_.plan.targets_B[i];
    }
  }

  auto setPhase = [&](MissionPhase next, double t) {
    phase = next;
    phase_entry_t = t;
    dwell_accum = 0.0;
    result.phase_log.push_back({t, next, target_idx});
  };

  const int64_t max_ticks =
      static_cast<int64_t>(std::llround(cfg_.max_duration_s * cfg_.control_rate_hz));

  for (int64_t tick = 0; tick <= max_ticks && phase != MissionPhase::Done; ++tick) {
    const int64_t t_ns = tick * dt_ns;
    const double t = static_cast<double>(t_ns) * 1e-9;

    // --- sensors ---
    if (t_ns >= next_imu) {
      next_imu += imu_period;
      if (auto m = sensors.imu(t_ns, world.base().accel, world.base().ang_velocity,
                               world.base().pose.rotation)) {
        local.addImu(*m);
        result.measurements.imu.push_back(*m);
        last_gyro = m->gyro;
      }
    }
    if (t_ns >= next_vio) {
      next_vio += vio_period;
      if (auto m = sensors.vio(t_ns, world.trueOdomToVioSensor())) {
        local.addVio(*m);
        result.measurements.vio.push_back(*m);
      }
    }
    if (t_ns >= next_prism) {
      next_prism += prism_period;
      if (auto m = sensors.prism(t_ns, world.truePrismPositionB(),
                                 world.base().pose.translation, cfg_.world.station_position,
                                 world.base().pose.rotation)) {
        local.addPrism(*m);
        result.measurements.prism.push_back(*m);
        if (local.initialized()) {
          const LocalState snap = local.propagate(t_ns);
          // Hold the global graph back until the base moves: fixes gathered
          // while parked carry no yaw information, and the noise-fitted yaw
          // they produce would be locked in by marginalization.
          if (!global_feed_started && snap.v_OI.norm() > kGlobalFeedSpeed) {
            global_feed_started = true;
          }
          if (global_feed_started) global.addReferenceMeasurement(*m, snap);
        }
      }
    }
    if (t_ns >= next_depth) {
      next_depth += depth_period;
      if (auto m = sensors.depth(t_ns, world.trueDistanceToCeiling())) {
        last_depth = m;
        result.measurements.depth.push_back(*m);
      }
    }
    if (t_ns >= next_tool) {
      next_tool += tool_period;
      if (auto m = sensors.toolTracker(t_ns, world.ee().offset, world.ee().yaw_offset)) {
        if (last_tool) {
          const double dmt = static_cast<double>(m->t_ns - last_tool->t_ns) * 1e-9;
          if (dmt > 0.0) tool_velocity = (m->offset - last_tool->offset) / dmt;
        }
        last_tool = m;
        result.measurements.tool.push_back(*m);
      }
    }

    // --- estimators ---
    if (t_ns >= next_local_opt) {
      next_local_opt += local_opt_period;
      if (local.initialized()) {
        local.optimize();
        local_log.push_back(local.latest());
      }
    }
    if (t_ns >= next_global_opt) {
      next_global_opt += global_opt_period;
      if (global.numStates() > 0) {
        global.optimize();
        global_log.push_back(*global.current());
      }
    }

    // --- estimated frame tree ---
    LocalState est;
    est.t_ns = t_ns;
    if (local.initialized()) est = local.propagate(t_ns);
    tree.setPose(FrameId::Imu, est.pose());
    Pose t_bo = Pose::identity();
    if (auto g = global.current()) {
      // The optimizer output jitters at the fix rate; the building frame the
      // controller aligns to should only move at drift timescales, so track
      // the estimate through a first-order filter.
      if (!t_bo_filt) {
        t_bo_filt = g->pose();
      } else {
        const double a = dt / (dt + kGlobalFilterTau);
        const Vec3 dtheta = logSo3(Rotation(t_bo_filt->rotation.inverse() * g->pose().rotation));
        // Only the rotation is smoothed: the translation has to track the
        // odometry frame's random walk, which the fixes observe directly.
        t_bo_filt = Pose(t_bo_filt->rotation * expSo3(a * dtheta), g->pose().translation);
      }
      t_bo = *t_bo_filt;
      if (cfg_.injected_yaw_error != 0.0) {
        const Vec3 pivot_b = t_bo * (est.p_OI + est.q_OI * cfg_.frames.imu_to_prism.translation);
        t_bo = rotateAboutPoint(t_bo, pivot_b, cfg_.injected_yaw_error);
      }
    }
    tree.setPose(FrameId::Odometry, t_bo);
    const double tool_z = cfg_.world.spring_rest_reach - world.ee().compression;
    if (last_tool) {
      tree.setPose(FrameId::Tool, Pose(Rotation::rz(last_tool->yaw),
                                       Vec3(last_tool->offset.x(), last_tool->offset.y(), tool_z)));
    } else {
      tree.setPose(FrameId::Tool, Pose(Rotation::identity(), Vec3(0.0, 0.0, tool_z)));
    }

    const Vec3 target_b =
        cfg_.plan.targets_B.empty() ? Vec3::Zero() : cfg_.plan.targets_B[target_idx];

    PolicyInputs in;
    in.tree = &tree;
    in.global_converged = global.converged();
    in.contact = world.ee().contact;  // sensed via the end-effector limit switch
    in.tool_offset = last_tool;
    in.tool_offset_age_s =
        last_tool ? static_cast<double>(t_ns - last_tool->t_ns) * 1e-9 : 1e9;
    in.depth = last_depth;
    in.spring_compression = world.ee().compression;
    in.station_position_B = cfg_.world.station_position;
    in.target_B = target_b;
    in.velocity_O = est.v_OI;
    in.ang_velocity_I = last_gyro - est.b_g;
    in.tool_velocity = tool_velocity;

    // estimated planar tool error in B; the gate low-passes the error vector
    // (not its norm, which noise biases upward) so jitter around the dwell
    // threshold cannot chatter the phases
    const Vec3 tool_b_est = tree.lookup(FrameId::Building, FrameId::Tool).translation;
    const Vec2 tool_err_vec = tool_b_est.head<2>() - target_b.head<2>();
    const double filt_w = dt / (dt + kToolErrFilterTau);
    if (!tool_err_filt_init) {
      tool_err_vec_filt = tool_err_vec;
      tool_err_filt_init = true;
    } else {
      tool_err_vec_filt += filt_w * (tool_err_vec - tool_err_vec_filt);
    }
    const double tool_err_est = tool_err_vec.norm();
    const double tool_err_filt = tool_err_vec_filt.norm();
    (void)tool_err_est;

    // --- phase transitions ---
    const double phase_age = t - phase_entry_t;
    const auto timeout_it = cfg_.plan.phase_timeout_s.find(phase);
    const bool timed_out =
        timeout_it != cfg_.plan.phase_timeout_s.end() && phase_age > timeout_it->second;

    auto advanceTarget = [&]() {
      if (!marked_this_target && target_idx < static_cast<int>(result.outcomes.size())) {
        result.outcomes[target_idx].failed = true;
        ++result.failures;
      }
      marked_this_target = false;
      ++target_idx;
      if (target_idx >= static_cast<int>(cfg_.plan.targets_B.size())) {
        setPhase(MissionPhase::Done, t);
      } else {
        setPhase(MissionPhase::Approach, t);
      }
    };

    switch (phase) {
      case MissionPhase::Idle:
        if (!cfg_.plan.targets_B.empty()) {
          waypoint_goal_O = Pose(est.q_OI, est.p_OI + Vec3(0, 0, cfg_.plan.takeoff_height));
          setPhase(MissionPhase::Takeoff, t);
        } else {
          setPhase(MissionPhase::Done, t);
        }
        break;
      case MissionPhase::Takeoff:
        if (sweep_start < 0.0) {
          if (std::abs(est.p_OI.z() - waypoint_goal_O.translation.z()) < 0.05 &&
              phase_age > 1.0) {
            if (cfg_.plan.calibration_sweep_s <= 0.0) {
              setPhase(MissionPhase::Approach, t);
              break;
            }
            sweep_start = t;
            sweep_center = waypoint_goal_O.translation;
          }
        } else {
          // Circle the hover point before the first approach so the fixes
          // span a horizontal baseline; yaw is unobservable while parked.
          const double ps = t - sweep_start;
          const double w = 2.0 * M_PI / kSweepPeriod;
          const double r = cfg_.plan.calibration_sweep_radius;
          waypoint_goal_O.translation =
              sweep_center + Vec3(r * (std::cos(w * ps) - 1.0), r * std::sin(w * ps), 0.0);
          if (ps >= cfg_.plan.calibration_sweep_s) setPhase(MissionPhase::Approach, t);
        }
        break;
      case MissionPhase::Approach: {
        const Vec3 goal_b(target_b.x(), target_b.y(),
                          cfg_.world.ceiling_height - cfg_.plan.approach_depth);
        waypoint_goal_O = Pose(est.q_OI, t_bo.inverse() * goal_b);
        const Vec2 horiz_err = (est.p_OI - waypoint_goal_O.translation).head<2>();
        if (global.converged() && horiz_err.norm() < cfg_.plan.approach_gate_radius &&
            phase_age > 0.5) {
          setPhase(MissionPhase::DepthServo, t);
        }
        break;
      }
      case MissionPhase::DepthServo:
        if (in.contact) setPhase(MissionPhase::SpringLoad, t);
        break;
      case MissionPhase::SpringLoad:
        if (!in.contact) {
          setPhase(MissionPhase::DepthServo, t);
        } else if (in.spring_compression >=
                   cfg_.plan.spring_engage_fraction * cfg_.policies.spring_target) {
          setPhase(MissionPhase::EeNavigate, t);
          if (target_idx < static_cast<int>(result.outcomes.size())) {
            result.outcomes[target_idx].ee_navigate_entry_s = t;
          }
        }
        break;
      case MissionPhase::EeNavigate:
        if (target_idx < static_cast<int>(result.outcomes.size()) &&
            result.outcomes[target_idx].ee_converge_s < 0.0 &&
            tool_err_filt < cfg_.plan.dwell_threshold) {
          result.outcomes[target_idx].ee_converge_s =
              t - result.outcomes[target_idx].ee_navigate_entry_s;
        }
        if (!in.contact) {
          setPhase(MissionPhase::DepthServo, t);
        } else if (tool_err_filt < cfg_.plan.dwell_threshold) {
          setPhase(MissionPhase::Dwell, t);
        }
        break;
      case MissionPhase::Dwell:
        if (!in.contact) {
          setPhase(MissionPhase::DepthServo, t);
        } else if (tool_err_filt >= kDwellExitFactor * cfg_.plan.dwell_threshold) {
          setPhase(MissionPhase::EeNavigate, t);
        } else {
          dwell_accum += dt;
          if (dwell_accum >= cfg_.plan.dwell_duration_s) setPhase(MissionPhase::Mark, t);
        }
        break;
      case MissionPhase::Mark: {
        if (!marked_this_target) {
          if (world.ee().contact) {
            result.marks.push_back(world.actuatePen(target_b));
            marked_this_target = true;
            if (target_idx < static_cast<int>(result.outcomes.size())) {
              result.outcomes[target_idx].marked = true;
            }
          }
        }
        const Vec3 retract_b(est.p_OI.x(), est.p_OI.y(),
                             cfg_.world.ceiling_height - cfg_.plan.retract_depth);
        waypoint_goal_O = Pose(est.q_OI, t_bo.inverse() * (t_bo * est.p_OI));
        waypoint_goal_O.translation = t_bo.inverse() * retract_b;
        setPhase(MissionPhase::Retract, t);
        break;
      }
      case MissionPhase::Retract: {
        const double depth_below = cfg_.world.ceiling_height - (t_bo * est.p_OI).z();
        if (depth_below > cfg_.plan.retract_depth - 0.05 && phase_age > 0.5) advanceTarget();
        break;
      }
      case MissionPhase::Done:
        break;
    }

    if (timed_out && phase != MissionPhase::Done) {
      if (phase == MissionPhase::Retract) {
        advanceTarget();
      } else {
        const Vec3 retract_b(est.p_OI.x(), est.p_OI.y(),
                             cfg_.world.ceiling_height - cfg_.plan.retract_depth);
        waypoint_goal_O = Pose(est.q_OI, t_bo.inverse() * retract_b);
        if (!marked_this_target && target_idx < static_cast<int>(result.outcomes.size())) {
          result.outcomes[target_idx].failed = true;
          ++result.failures;
        }
        marked_this_target = true;  // counted; Retract advances without recounting
        setPhase(MissionPhase::Retract, t);
      }
    }

    // --- policies ---
    const PolicyEnableSet enable = enabledPolicies(phase);
    std::vector<Rmp> base_policies;
    if (enable.waypoint) base_policies.push_back(policies.waypoint(in, waypoint_goal_O));
    if (enable.depth_servoing) base_policies.push_back(policies.depthServoing(in));
    if (enable.spring_loading) base_policies.push_back(policies.springLoading(in));
    if (enable.ee_following) base_policies.push_back(policies.eeFollowing(in));
    if (enable.prism_tracking) base_policies.push_back(policies.prismTracking(in));
    const Rmp base_cmd = combine(base_policies, 6);

    const Rmp nav = enable.ee_navigation ? policies.eeNavigation(in) : Rmp::zero(2);
    const Vec2 wheel_cmd = wheels.update(nav, dt);

    Vec6 cmd = Vec6::Zero();
    // linear part is expressed in O; physics realizes it through the true B->O
    cmd.head<3>() = world.trueBuildingToOdom().rotation * base_cmd.f.head<3>();
    cmd.tail<3>() = est.q_OI.matrix().transpose() * base_cmd.f.tail<3>();

    world.step(dt, cmd, wheel_cmd);
  }

  result.completed = phase == MissionPhase::Done;
  result.duration_s = world.time();
  result.dropped_local = local.droppedMeasurements();
  result.dropped_global = global.droppedMeasurements();

  if (!output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(output_dir);
    result.measurements.write(output_dir);
    writeLocalStatesCsv(output_dir + "/local_estimate.csv", local_log);
    writeGlobalStatesCsv(output_dir + "/global_estimate.csv", global_log);
    writeMarksCsv(output_dir + "/marks.csv", result.marks);
    CsvWriter phases(output_dir + "/phases.csv", {"t", "phase", "target"});
    for (const auto& p : result.phase_log) {
      phases.field(p.t_s).field(std::string(phaseName(p.phase)));
      phases.field(static_cast<long long>(p.target_index));
      phases.endRow();
    }
    CsvWriter summary(output_dir + "/summary.csv",
                      {"completed", "marks", "failures", "duration_s", "dropped_local",
                       "dropped_global"});
    summary.field(static_cast<long long>(result.completed ? 1 : 0));
    summary.field(static_cast<long long>(result.marks.size()));
    summary.field(static_cast<long long>(result.failures));
    summary.field(result.duration_s);
    summary.field(static_cast<long long>(result.dropped_local));
    summary.field(static_cast<long long>(result.dropped_global));
    summary.endRow();
  }
  return result;
}

ReplayOutput replayEstimators(const MeasurementLog& log, const LocalEstimatorConfig& local_cfg,
                              const GlobalEstimatorConfig* global_cfg,
                              const DropoutSchedule& removal, double local_optimize_rate_hz,
                              double global_optimize_rate_hz) {
  LocalEstimator local(local_cfg);
  std::optional<GlobalEstimator> global;
  if (global_cfg) global.emplace(*global_cfg);

  ReplayOutput out;
  size_t ii = 0, iv = 0, ip = 0;
  int64_t next_local_opt = 0, next_global_opt = 0;
  const int64_t local_opt_period = periodNs(local_optimize_rate_hz);
  const int64_t global_opt_period = periodNs(global_optimize_rate_hz);

  int64_t t_end = 0;
  if (!log.imu.empty()) t_end = log.imu.back().t_ns;

  const int64_t dt_ns = periodNs(local_cfg.output_rate_hz);
  for (int64_t t_ns = 0; t_ns <= t_end; t_ns += dt_ns) {
    const double t_s = static_cast<double>(t_ns) * 1e-9;
    while (ii < log.imu.size() && log.imu[ii].t_ns <= t_ns) {
      if (!removal.dropped(StreamId::Imu, t_s)) {
        local.addImu(log.imu[ii]);
      } else {
        // keep the clock monotonic across removed samples: skip entirely
      }
      ++ii;
    }
    while (iv < log.vio.size() && log.vio[iv].t_ns <= t_ns) {
      if (!removal.dropped(StreamId::Vio, t_s)) local.addVio(log.vio[iv]);
      ++iv;
    }
    while (ip < log.prism.size() && log.prism[ip].t_ns <= t_ns) {
      if (!removal.dropped(StreamId::Prism, t_s)) {
        local.addPrism(log.prism[ip]);
        if (global && local.initialized()) {
          global->addReferenceMeasurement(log.prism[ip], local.propagate(log.prism[ip].t_ns));
        }
      }
      ++ip;
    }
    if (t_ns >= next_local_opt) {
      next_local_opt += local_opt_period;
      if (local.initialized()) {
        local.optimize();
        out.local_states.push_back(local.latest());
      }
    }
    if (t_ns >= next_global_opt) {
      next_global_opt += global_opt_period;
      if (global && global->numStates() > 0) {
        global->optimize();
        out.global_states.push_back(*global->current());
      }
    }
  }
  out.dropped_local = local.droppedMeasurements();
  return out;
}

void writeLocalStatesCsv(const std::string& path, const std::vector<LocalState>& states) {
  CsvWriter w(path, {"t_ns", "qw", "qx", "qy", "qz", "px", "py", "pz", "vx", "vy", "vz",
                     "bax", "bay", "baz", "bgx", "bgy", "bgz"});
  for (const auto& s : states) {
    w.field(static_cast<long long>(s.t_ns));
    w.field(s.q_OI.w()).field(s.q_OI.x()).field(s.q_OI.y()).field(s.q_OI.z());
    for (int i = 0; i < 3; ++i) w.field(s.p_OI[i]);
    for (int i = 0; i < 3; ++i) w.field(s.v_OI[i]);
    for (int i = 0; i < 3; ++i) w.field(s.b_a[i]);
    for (int i = 0; i < 3; ++i) w.field(s.b_g[i]);
    w.endRow();
  }
}

void writeGlobalStatesCsv(const std::string& path, const std::vector<GlobalState>& states) {
  CsvWriter w(path, {"t_ns", "qw", "qx", "qy", "qz", "px", "py", "pz"});
  for (const auto& s : states) {
    w.field(static_cast<long long>(s.t_ns));
    w.field(s.q_BO.w()).field(s.q_BO.x()).field(s.q_BO.y()).field(s.q_BO.z());
    for (int i = 0; i < 3; ++i) w.field(s.p_BO[i]);
    w.endRow();
  }
}

void writeMarksCsv(const std::string& path, const std::vector<MarkRecord>& marks) {
  CsvWriter w(path, {"t_ns", "cmd_x", "cmd_y", "cmd_z", "act_x", "act_y", "act_z"});
  for (const auto& m : marks) {
    w.field(static_cast<long long>(m.t_ns));
    for (int i = 0; i < 3; ++i) w.field(m.commanded[i]);
    for (int i = 0; i < 3; ++i) w.field(m.actual[i]);
    w.endRow();
  }
}

std::vector<MarkRecord> readMarksCsv(const std::string& path) {
  const CsvTable table = readCsv(path);
  std::vector<MarkRecord> marks;
  const int it = table.columnIndex("t_ns");
  const int icx = table.columnIndex("cmd_x");
  const int iax = table.columnIndex("act_x");
  for (const auto& row : table.rows) {
    MarkRecord m;
    m.t_ns = static_cast<int64_t>(row[it]);
    m.commanded = Vec3(row[icx], row[icx + 1], row[icx + 2]);
    m.actual = Vec3(row[iax], row[iax + 1], row[iax + 2]);
    marks.push_back(m);
  }
  return marks;
}

std::vector<double> runAblationVariant(const AblationConfig& cfg) {
  WorldConfig wc;
  wc.contact_enabled = cfg.contact;
  wc.compliance_enabled = cfg.compliance;
  wc.actuation_enabled = cfg.actuation;
  wc.disturbance_accel_std = cfg.disturbance_accel_std;
  FrameConfig frames;
  SimWorld world(wc, frames, cfg.seed);

  const double dt = 1.0 / 200.0;
  const double circle_z = wc.ceiling_height - wc.spring_rest_reach;
  const Vec3 center(0.0, 0.0, circle_z);

  // angular ramp respecting the velocity/acceleration limits
  const double w_max = cfg.speed / cfg.radius;
  const double w_dot = cfg.accel_limit / cfg.radius;

  const double kp = 6.0, kd = 5.0;
  const double kp_w = 6.0;
  const double settle_s = 8.0;

  std::vector<double> errors;
  double theta = 0.0, w = 0.0;
  const int ticks = static_cast<int>(std::llround(cfg.duration_s / dt));
  for (int tick = 0; tick < ticks; ++tick) {
    const double t = tick * dt;
    const bool tracking = t >= settle_s;
    if (tracking) {
      w = std::min(w_max, w + w_dot * dt);
      theta += w * dt;
    }
    const Vec2 ref_xy = cfg.radius * Vec2(std::cos(theta), std::sin(theta));
    const Vec2 ref_v = cfg.radius * w * Vec2(-std::sin(theta), std::cos(theta));

    const Vec3 p = world.base().pose.translation;
    const Vec3 v = world.base().velocity;
    Vec6 cmd = Vec6::Zero();
    cmd.head<2>() = kp * (ref_xy - p.head<2>()) + kd * (ref_v - v.head<2>());
    if (cfg.contact) {
      // hold spring load through the ceiling
      cmd.z() = world.ee().contact ? 4.0 * (0.05 - world.ee().compression) + 0.5
                                   : kp * (wc.ceiling_height - 0.5 * wc.spring_rest_reach - p.z()) -
                                         kd * v.z();
    } else {
      cmd.z() = kp * (circle_z - p.z()) - kd * v.z();
    }
    // keep attitude level
    cmd.tail<3>() = -8.0 * logSo3(world.base().pose.rotation) - 4.0 * world.base().ang_velocity;

    Vec2 wheel_cmd = Vec2::Zero();
    if (cfg.actuation) {
      const Vec2 tool_xy = world.toolPositionB().head<2>();
      wheel_cmd = kp_w * (ref_xy - tool_xy) + ref_v;
      const double n = wheel_cmd.norm();
      if (n > 0.1) wheel_cmd *= 0.1 / n;
    }
    world.step(dt, cmd, wheel_cmd);

    if (tracking && t >= settle_s + 4.0) {
      errors.push_back((world.toolPositionB().head<2>() - ref_xy).norm());
    }
  }
  return errors;
}

}  // namespace layout
