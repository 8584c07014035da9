#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "layout/estimator_global.hpp"
#include "layout/estimator_local.hpp"
#include "layout/policies.hpp"
#include "layout/sensors.hpp"
#include "layout/sim_world.hpp"

namespace layout {

enum class MissionPhase {
  Idle,
  Takeoff,
  Approach,
  DepthServo,
  SpringLoad,
  EeNavigate,
  Dwell,
  Mark,
  Retract,
  Done,
};

const char* phaseName(MissionPhase p);

/// Which policies run in a given phase; pure function of the phase.
struct PolicyEnableSet {
  bool waypoint = false;
  bool depth_servoing = false;
  bool spring_loading = false;
  bool ee_following = false;
  bool prism_tracking = false;
  bool ee_navigation = false;
};

PolicyEnableSet enabledPolicies(MissionPhase phase);

struct MissionPlan {
  std::vector<Vec3> targets_B;       // on the ceiling plane
  double dwell_threshold = 1e-3;     // estimated tool error gate [m]
  double dwell_duration_s = 1.0;
  double approach_gate_radius = 0.05;   // horizontal gate ending Approach [m]
  double takeoff_height = 1.2;          // hover altitude above start [m]
  double calibration_sweep_s = 12.0;    // post-takeoff yaw excitation orbit
  double calibration_sweep_radius = 0.3;  // [m]
  double approach_depth = 0.35;         // distance below ceiling in Approach [m]
  double retract_depth = 0.35;          // descend depth ending Retract [m]
  double spring_engage_fraction = 0.9;  // of target compression, ends SpringLoad
  std::map<MissionPhase, double> phase_timeout_s = {
      {MissionPhase::Takeoff, 45.0},  {MissionPhase::Approach, 60.0},
      {MissionPhase::DepthServo, 30.0}, {MissionPhase::SpringLoad, 20.0},
      {MissionPhase::EeNavigate, 30.0}, {MissionPhase::Dwell, 10.0},
      {MissionPhase::Mark, 2.0},       {MissionPhase::Retract, 20.0},
  };
};

struct MissionConfig {
  WorldConfig world;
  FrameConfig frames;
  SensorConfig sensors;
  LocalEstimatorConfig local;
  GlobalEstimatorConfig global;
  PoliciesConfig policies;
  MissionPlan plan;
  double control_rate_hz = 200.0;
  double max_duration_s = 600.0;
  // Yaw error injected into the global estimate used for control, applied as a
  // rotation about the estimated prism position (accuracy experiments).
  double injected_yaw_error = 0.0;
  uint64_t seed = 1;
};

struct TargetOutcome {
  Vec3 target = Vec3::Zero();
  bool marked = false;
  bool failed = false;
  double ee_navigate_entry_s = -1.0;
  double ee_converge_s = -1.0;  // time from EeNavigate entry to estimated error < threshold
};

struct PhaseRecord {
  double t_s = 0.0;
  MissionPhase phase = MissionPhase::Idle;
  int target_index = 0;
};

struct MissionResult {
  std::vector<MarkRecord> marks;
  std::vector<TargetOutcome> outcomes;
  std::vector<PhaseRecord> phase_log;
  MeasurementLog measurements;
  bool completed = false;
  int failures = 0;
  double duration_s = 0.0;
  int dropped_local = 0;
  int dropped_global = 0;
};

/// Single-threaded closed loop: sim step -> sensors -> estimators -> policies
/// -> commands, advanced by the simulation clock. Deterministic per seed.
class MissionRunner {
 public:
  explicit MissionRunner(const MissionConfig& config);

  /// Runs the mission; when output_dir is non-empty, writes all CSV logs there.
  MissionResult run(const std::string& output_dir = "");

 private:
  MissionConfig cfg_;
};

/// Offline re-run of the local (and optionally global) estimator on recorded
/// streams, with extra dropout windows applied on top. Matches the online
/// scheduling exactly.
struct ReplayOutput {
  std::vector<LocalState> local_states;   // one per local optimization
  std::vector<GlobalState> global_states;  // one per global optimization
  int dropped_local = 0;
};

ReplayOutput replayEstimators(const MeasurementLog& log, const LocalEstimatorConfig& local_cfg,
                              const GlobalEstimatorConfig* global_cfg,
                              const DropoutSchedule& removal,
                              double local_optimize_rate_hz = 30.0,
                              double global_optimize_rate_hz = 5.0);

void writeLocalStatesCsv(const std::string& path, const std::vector<LocalState>& states);
void writeGlobalStatesCsv(const std::string& path, const std::vector<GlobalState>& states);
void writeMarksCsv(const std::string& path, const std::vector<MarkRecord>& marks);
std::vector<MarkRecord> readMarksCsv(const std::string& path);

/// Mechanical ablation experiment: the base (or the end-effector, when
/// actuated) tracks a circle of the given radius at the ceiling while the base
/// is disturbed; control uses ground truth. Returns per-sample planar tool
/// tracking errors.
struct AblationConfig {
  bool contact = true;
  bool compliance = true;
  bool actuation = true;
  double radius = 0.25;
  double speed = 0.05;        // m/s along the circle
  double accel_limit = 0.025; // m/s^2
  double duration_s = 60.0;
  double disturbance_accel_std = 0.25;
  uint64_t seed = 7;
};

std::vector<double> runAblationVariant(const AblationConfig& cfg);

}  // namespace layout
