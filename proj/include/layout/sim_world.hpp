#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "layout/geometry.hpp"

namespace layout {

using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Ground-truth rigid-body state of the flying base (I in B).
struct RigidBodyState {
  Pose pose;                      // T_BI
  Vec3 velocity = Vec3::Zero();   // m/s, B frame
  Vec3 ang_velocity = Vec3::Zero();  // rad/s, I frame
  Vec3 accel = Vec3::Zero();      // last realized linear acceleration, B frame
};

/// Ground-truth state of the spring-decoupled end-effector.
struct EndEffectorState {
  Vec2 offset = Vec2::Zero();   // planar offset of T w.r.t. T_S [m]
  double yaw_offset = 0.0;      // [rad]
  double compression = 0.0;     // spring compression [m], 0 = fully extended
  bool contact = false;
  Vec2 wheel_velocity = Vec2::Zero();  // last effective wheel velocity [m/s]
};

struct MarkRecord {
  int64_t t_ns = 0;
  Vec3 commanded = Vec3::Zero();  // target, B frame
  Vec3 actual = Vec3::Zero();     // true tool position at pen actuation, B frame
};

/// Fixed sensor-frame calibration (I -> O_S, P, T_S), CAD/calibration values.
struct FrameConfig {
  Pose imu_to_vio;
  Pose imu_to_prism = Pose(Rotation::identity(), Vec3(0.2, 0.0, 0.1));
  Pose imu_to_tool_sensor;
};

struct WorldConfig {
  double ceiling_height = 2.0;  // m, in B
  Vec3 station_position = Vec3(-3.0, 0.0, 0.5);

  // Spring sizing: 15 N halves the end-effector/base distance.
  double spring_rest_reach = 0.2;   // uncompressed reach of the tool above I [m]
  double spring_constant = 150.0;   // N/m
  double spring_max_travel = 0.2;   // compression range [m]
  double tool_offset_max = 0.02;    // mechanical planar travel [m]

  double wheel_slip = 0.0;          // fraction of commanded wheel velocity lost
  double wheel_slip_noise = 0.0;    // extra multiplicative noise std

  // Impedance-controller abstraction.
  double accel_lag_tau = 0.15;        // s, first-order lag on commanded accel
  double linear_damping = 0.4;        // 1/s
  double angular_damping = 1.0;       // 1/s
  double disturbance_accel_std = 0.0; // m/s^2, OU-filtered, clamped at 3 sigma
  double disturbance_tau = 0.5;       // s
  double contact_disturbance_atten = 0.25;  // planar disturbance scale in contact
  double contact_velocity_damping = 3.0;    // extra planar damping in contact [1/s]
  double contact_hysteresis = 0.005;        // m

  double ee_centering_tau = 0.2;   // s, offset spring-centering out of contact
  double wheel_track_tau = 0.6;    // s, wheels dragging the full vehicle mass

  // Ablation switches (full system has all three enabled).
  bool contact_enabled = true;
  bool compliance_enabled = true;
  bool actuation_enabled = true;

  Pose start_pose;  // T_BI at t = 0; also defines the true B->O transform
  std::vector<Vec3> targets;  // marking targets on the ceiling plane, B frame
};

/// Ground-truth simulation: flying base, compliant actuated end-effector,
/// ceiling contact and pen marking. Single-threaded, stepped by the mission loop.
class SimWorld {
 public:
  SimWorld(const WorldConfig& config, const FrameConfig& frames, uint64_t seed);

  /// base_accel_cmd: [linear accel in B (3), angular accel in I (3)].
  void step(double dt, const Vec6& base_accel_cmd, const Vec2& wheel_cmd);

  const RigidBodyState& base() const { return base_; }
  const EndEffectorState& ee() const { return ee_; }
  const WorldConfig& config() const { return config_; }
  double time() const { return time_; }
  int64_t timeNs() const { return static_cast<int64_t>(std::llround(time_ * 1e9)); }

  /// True transform of O w.r.t. B (the start pose, by definition of O).
  const Pose& trueBuildingToOdom() const { return config_.start_pose; }
  Pose trueOdomToImu() const { return config_.start_pose.inverse() * base_.pose; }
  Vec3 truePrismPositionB() const { return base_.pose * frames_.imu_to_prism.translation; }
  Pose trueOdomToVioSensor() const { return trueOdomToImu() * frames_.imu_to_vio; }
  double trueDistanceToCeiling() const {
    return config_.ceiling_height - base_.pose.translation.z();
  }
  /// True tool position in B (planar from base + offset; z on the ceiling when
  /// in contact, at spring reach otherwise).
  Vec3 toolPositionB() const;
  Pose toolSensorPoseB() const { return base_.pose * frames_.imu_to_tool_sensor; }

  /// Records a mark; throws if the end-effector is not in contact.
  MarkRecord actuatePen(const Vec3& commanded_target);

  double kineticEnergy() const {
    return 0.5 * (base_.velocity.squaredNorm() + base_.ang_velocity.squaredNorm());
  }

 private:
  WorldConfig config_;
  FrameConfig frames_;
  RigidBodyState base_;
  EndEffectorState ee_;
  Vec3 tracked_accel_ = Vec3::Zero();
  Vec3 tracked_ang_accel_ = Vec3::Zero();
  Vec3 disturbance_ = Vec3::Zero();
  double time_ = 0.0;
  std::mt19937_64 rng_;
};

}  // namespace layout
