#pragma once

#include <deque>
#include <optional>

#include "layout/factors.hpp"
#include "layout/preintegration.hpp"
#include "layout/sensors.hpp"
#include "layout/solver.hpp"

namespace layout {

struct LocalEstimatorConfig {
  double window_s = 0.5;
  double optimize_rate_hz = 30.0;
  double output_rate_hz = 200.0;

  // State creation every Nth IMU sample (1 = the paper's per-measurement states).
  int state_decimation = 1;
  double init_window_s = 0.5;  // accelerometer averaging before the first state

  PreintegrationParams preintegration;
  double accel_bias_rw = 1e-4;  // m/s^2/sqrt(s)
  double gyro_bias_rw = 1e-5;   // rad/s/sqrt(s)
  double accel_turn_on_bias = 20e-3 * 9.80665;
  double gyro_turn_on_bias = 1800.0 * M_PI / 180.0 / 3600.0;

  // Prior sigmas for the first state.
  double prior_rot_sigma = 0.02;  // roll/pitch from averaged accel [rad]
  double prior_pos_sigma = 1e-4;  // O is defined at the start pose [m]
  double prior_vel_sigma = 0.05;  // m/s

  // Between-factor noise (per relative measurement).
  double vio_rot_sigma = 0.0012 * M_PI / 180.0;
  double vio_pos_sigma = 3e-3;
  double prism_pos_sigma = 2.5e-3;

  Pose imu_to_vio;
  Pose imu_to_prism = Pose(Rotation::identity(), Vec3(0.2, 0.0, 0.1));

  int max_iterations = 8;
};

/// Fixed-lag smoother over LocalState (T_OI, velocity, IMU biases): IMU chain
/// with preintegration factors, VIO and prism relative between factors,
/// marginalization of states older than the window.
class LocalEstimator {
 public:
  explicit LocalEstimator(const LocalEstimatorConfig& config);

  /// Feeds one IMU sample; creates states per the decimation setting.
  /// Throws on out-of-order timestamps.
  void addImu(const ImuMeasurement& m);
  void addVio(const VioPoseMeasurement& m);
  void addPrism(const PrismPositionMeasurement& m);

  /// Marginalizes out-of-window states and runs LM. No-op before init.
  OptimizeResult optimize();

  bool initialized() const { return initialized_; }
  /// Newest optimized state.
  const LocalState& latest() const;
  int64_t latestTimeNs() const { return latest().t_ns; }
  /// Forward-integrates the newest state through buffered IMU to t.
  /// Throws if t precedes the newest optimized state.
  LocalState propagate(int64_t t_ns) const;

  Eigen::MatrixXd latestCovariance() const;
  size_t numStates() const { return states_.size(); }
  size_t numFactors() const { return graph_.numFactors(); }
  int droppedMeasurements() const { return dropped_; }
  const Graph& graph() const { return graph_; }

 private:
  VariableKey newKey() { return VariableKey{VariableKind::Local, next_index_++}; }
  /// Key of the state nearest in time; nullopt when t precedes the window.
  std::optional<VariableKey> nearestState(int64_t t_ns) const;
  void createState(int64_t t_ns);
  void marginalizeOld();
  void clampBiases();

  LocalEstimatorConfig cfg_;
  Graph graph_;
  std::deque<std::pair<int64_t, VariableKey>> states_;
  uint64_t next_index_ = 0;

  bool initialized_ = false;
  std::vector<ImuMeasurement> init_buffer_;

  PreintegratedImu pim_;
  int samples_since_state_ = 0;
  std::optional<ImuMeasurement> last_imu_;
  // IMU samples after the newest state, with their integration dt.
  std::deque<std::pair<ImuMeasurement, double>> tail_;

  struct Anchor {
    VariableKey key;
    int64_t t_ns = 0;
    Pose pose;      // VIO
    Vec3 position;  // prism
  };
  std::optional<Anchor> vio_anchor_;
  std::optional<Anchor> prism_anchor_;
  // Raw previous measurements, used to shift each sample to its state's time.
  std::optional<VioPoseMeasurement> last_vio_raw_;
  std::optional<PrismPositionMeasurement> last_prism_raw_;

  int dropped_ = 0;
};

}  // namespace layout
