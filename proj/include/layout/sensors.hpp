#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "layout/geometry.hpp"

namespace layout {

struct ImuMeasurement {
  int64_t t_ns = 0;
  Vec3 accel = Vec3::Zero();  // specific force, I frame [m/s^2]
  Vec3 gyro = Vec3::Zero();   // angular rate, I frame [rad/s]
};

struct VioPoseMeasurement {
  int64_t t_ns = 0;
  Pose pose;  // O_S expressed in the sensor's private drifting odometry frame
};

struct PrismPositionMeasurement {
  int64_t t_ns = 0;
  Vec3 position = Vec3::Zero();  // in B [m]
};

struct DepthMeasurement {
  int64_t t_ns = 0;
  double distance = 0.0;  // perpendicular distance to ceiling [m]
  bool valid = true;
};

struct ToolOffsetMeasurement {
  int64_t t_ns = 0;
  Vec2 offset = Vec2::Zero();  // planar offset of T in T_S [m]
  double yaw = 0.0;            // [rad]
};

enum class StreamId { Imu, Vio, Prism, Depth, Tool };

const char* streamName(StreamId id);

struct DropoutWindow {
  StreamId stream = StreamId::Prism;
  double start_s = 0.0;
  double end_s = 0.0;
};

struct DropoutSchedule {
  std::vector<DropoutWindow> windows;
  bool dropped(StreamId stream, double t_s) const {
    for (const auto& w : windows)
      if (w.stream == stream && t_s >= w.start_s && t_s < w.end_s) return true;
    return false;
  }
};

struct ImuNoiseConfig {
  double rate_hz = 200.0;
  double accel_noise_density = 187e-6 * 9.80665;            // 187 ug/sqrt(Hz)
  double gyro_noise_density = 0.66 * M_PI / 180.0 / 60.0;   // 0.66 deg/sqrt(hour)
  double accel_turn_on_bias = 20e-3 * 9.80665;              // 20 mg
  double gyro_turn_on_bias = 1800.0 * M_PI / 180.0 / 3600.0;  // 1800 deg/hour
  double accel_bias_rw = 1e-4;  // m/s^2/sqrt(s); Table 1 gives no bias instability
  double gyro_bias_rw = 1e-5;   // rad/s/sqrt(s)
  bool noise_enabled = true;
  bool bias_walk_enabled = true;
};

struct VioNoiseConfig {
  double rate_hz = 30.0;
  double position_noise = 2e-3;          // per-sample white noise [m]
  double rotation_noise = 0.0005 * M_PI / 180.0;  // frame-to-frame white noise [rad]
  double drift_translation_rate = 1e-4;  // random walk [m/sqrt(s)]
  double drift_rotation_rate = 0.005 * M_PI / 180.0;  // [rad/sqrt(s)]
  bool noise_enabled = true;
};

struct PrismNoiseConfig {
  double rate_hz = 15.0;
  double sigma = 1.5e-3;  // 1.5 mm pointing accuracy
  double acceptance_cone_deg = 50.0;
  bool line_of_sight_enabled = false;
  bool noise_enabled = true;
};

struct DepthNoiseConfig {
  double rate_hz = 30.0;
  double sigma = 2e-3;
  double min_range = 0.1;
  double max_range = 4.0;
  bool noise_enabled = true;
};

struct ToolTrackerNoiseConfig {
  double rate_hz = 60.0;
  double position_sigma = 0.8e-3;             // 0.8 mm
  double yaw_sigma = 0.2 * M_PI / 180.0;      // 0.2 deg
  bool noise_enabled = true;
};

struct SensorConfig {
  ImuNoiseConfig imu;
  VioNoiseConfig vio;
  PrismNoiseConfig prism;
  DepthNoiseConfig depth;
  ToolTrackerNoiseConfig tool;
  DropoutSchedule dropouts;
};

/// Stateful generators corrupting ground truth per the sensor spec table.
/// Each stream has its own RNG so that enabling one stream's noise does not
/// change another stream's draws.
class SensorSimulator {
 public:
  SensorSimulator(const SensorConfig& config, uint64_t seed);

  const Vec3& accelTurnOnBias() const { return accel_bias_; }
  const Vec3& gyroTurnOnBias() const { return gyro_bias_; }

  /// accel_world: true linear acceleration of I in the world; attitude maps
  /// world to body. Gravity is (0,0,-9.81) in the world.
  std::optional<ImuMeasurement> imu(int64_t t_ns, const Vec3& accel_world, const Vec3& omega_body,
                                    const Rotation& world_to_body_attitude);

  std::optional<VioPoseMeasurement> vio(int64_t t_ns, const Pose& true_odom_to_vio);

  /// station and base positions are used for the line-of-sight test.
  std::optional<PrismPositionMeasurement> prism(int64_t t_ns, const Vec3& true_position,
                                                const Vec3& base_position,
                                                const Vec3& station_position,
                                                const Rotation& base_attitude);

  std::optional<DepthMeasurement> depth(int64_t t_ns, double true_distance);

  std::optional<ToolOffsetMeasurement> toolTracker(int64_t t_ns, const Vec2& true_offset,
                                                   double true_yaw);

 private:
  Vec3 gaussian3(std::mt19937_64& rng, double sigma);

  SensorConfig config_;
  std::mt19937_64 rng_imu_, rng_vio_, rng_prism_, rng_depth_, rng_tool_;
  Vec3 accel_bias_ = Vec3::Zero();
  Vec3 gyro_bias_ = Vec3::Zero();
  Pose vio_drift_;  // private vio frame w.r.t. O
  int64_t last_imu_t_ns_ = -1;
  int64_t last_vio_t_ns_ = -1;
};

/// Recorded measurement streams, one CSV file per stream.
struct MeasurementLog {
  std::vector<ImuMeasurement> imu;
  std::vector<VioPoseMeasurement> vio;
  std::vector<PrismPositionMeasurement> prism;
  std::vector<DepthMeasurement> depth;
  std::vector<ToolOffsetMeasurement> tool;

  void write(const std::string& dir) const;
  static MeasurementLog read(const std::string& dir);
};

}  // namespace layout
