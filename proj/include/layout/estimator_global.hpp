#pragma once

#include <deque>
#include <optional>

#include "layout/factors.hpp"
#include "layout/sensors.hpp"
#include "layout/solver.hpp"

namespace layout {

struct GlobalEstimatorConfig {
  double optimize_rate_hz = 5.0;
  double window_s = 20.0;
  int state_decimation = 15;  // new state every Nth prism measurement

  double prism_rate_hz = 15.0;  // for the timestamp-matching tolerance

  // Unity between factor: expected drift per state interval.
  double drift_pos_sigma = 2e-3;
  double drift_rot_sigma = 0.005 * M_PI / 180.0;

  double reference_sigma = 1.5e-3;  // station spec

  // First-state prior: B->O is gravity aligned, yaw weakly known.
  double prior_tilt_sigma = 0.02;
  double prior_yaw_sigma = 1.0;
  double prior_pos_sigma = 0.5;

  double initial_yaw_guess = 0.0;  // rad

  Vec3 imu_to_prism = Vec3(0.2, 0.0, 0.1);  // CAD lever arm p_IP
  int max_iterations = 10;
};

/// Fixed-lag smoother over the drifting O-frame transform T_BO, fed by
/// total-station prism fixes matched with local-estimate snapshots.
class GlobalEstimator {
 public:
  explicit GlobalEstimator(const GlobalEstimatorConfig& config) : cfg_(config) {}

  /// Adds one reference-frame factor. The local snapshot must match the prism
  /// timestamp within half a prism period; otherwise the fix is dropped.
  void addReferenceMeasurement(const PrismPositionMeasurement& prism, const LocalState& local);

  OptimizeResult optimize();

  bool converged() const { return converged_; }
  /// Latest smoothed B->O transform; nullopt before the first optimization.
  std::optional<GlobalState> current() const;
  Eigen::MatrixXd latestCovariance() const;

  size_t numStates() const { return states_.size(); }
  size_t numFactors() const { return graph_.numFactors(); }
  int droppedMeasurements() const { return dropped_; }
  const Graph& graph() const { return graph_; }

 private:
  VariableKey newKey() { return VariableKey{VariableKind::Global, next_index_++}; }

  GlobalEstimatorConfig cfg_;
  Graph graph_;
  std::deque<std::pair<int64_t, VariableKey>> states_;
  uint64_t next_index_ = 0;
  int64_t measurement_count_ = 0;
  int dropped_ = 0;
  bool converged_ = false;
};

}  // namespace layout
