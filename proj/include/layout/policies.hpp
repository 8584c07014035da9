#pragma once

#include <optional>

#include "layout/geometry.hpp"
#include "layout/rmp.hpp"
#include "layout/sensors.hpp"

namespace layout {

// Configuration-space axis order for all 6D policies: x, y, z, roll, pitch, yaw
// (linear acceleration first, angular acceleration second).
using Vec6 = Eigen::Matrix<double, 6, 1>;

struct PolicyGains {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  bool enabled = true;
};

struct PoliciesConfig {
  SoftNormVariant soft_norm = SoftNormVariant::Printed;

  PolicyGains ee_navigation{8.0, 0.0, 1.0};
  PolicyGains ee_following{3.0, 2.5, 1.0};
  PolicyGains depth_servoing{1.2, 2.0, 2.0};
  PolicyGains spring_loading{15.0, 6.0, 8.0};
  PolicyGains prism_tracking{1.5, 2.0, 2.0};
  PolicyGains waypoint{1.5, 2.2, 1.5};
  double waypoint_rot_alpha = 2.0;
  double waypoint_rot_beta = 3.0;

  // Metric diagonals, axis order x,y,z,roll,pitch,yaw.
  Vec6 ee_navigation_metric = (Vec6() << 1, 1, 0, 0, 0, 0).finished();
  Vec6 ee_following_metric = (Vec6() << 1, 1, 0, 0, 0, 0).finished();
  Vec6 depth_servoing_metric = (Vec6() << 0, 0, 1, 0, 0, 0).finished();
  Vec6 spring_loading_metric = (Vec6() << 0, 0, 1, 0, 0, 0).finished();
  Vec6 prism_tracking_metric = (Vec6() << 0, 0, 0, 0, 0, 1).finished();
  Vec6 waypoint_metric = Vec6::Ones();

  double spring_target = 0.1;        // target compression [m]
  double spring_decay_k = 40.0;      // metric decay rate above target [1/m]
  double contact_distance = 0.2;     // depth at which the end-effector reach engages [m]
  double tool_stale_periods = 3.0;   // tool-offset freshness limit
  double tool_tracker_period_s = 1.0 / 60.0;
  double wheel_leak = 5.0;           // 1/s, leak on the wheel velocity integrator
  double wheel_speed_max = 0.05;     // m/s
};

/// Coherent per-tick snapshot for policy evaluation. Frames come from the
/// estimated tree (B->O from the global graph, O->I from the local graph).
struct PolicyInputs {
  const FrameTree* tree = nullptr;
  bool global_converged = false;
  bool contact = false;
  std::optional<ToolOffsetMeasurement> tool_offset;
  double tool_offset_age_s = 0.0;
  std::optional<DepthMeasurement> depth;
  double spring_compression = 0.0;
  Vec3 station_position_B = Vec3::Zero();
  Vec3 target_B = Vec3::Zero();
  Vec3 velocity_O = Vec3::Zero();      // estimated base linear velocity, O frame
  Vec3 ang_velocity_I = Vec3::Zero();  // estimated body rates, I frame
  Vec2 tool_velocity = Vec2::Zero();   // estimated planar tool velocity, T_S frame
};

class Policies {
 public:
  explicit Policies(const PoliciesConfig& config) : cfg_(config) {}

  /// Planar attractor on the tool position toward the target, expressed in the
  /// tool-sensor frame; executed on the end-effector wheels (dim 2).
  Rmp eeNavigation(const PolicyInputs& in) const;

  // Flying-base policies, all pulled back into the O configuration manifold
  // (dim 6, axis order x,y,z,roll,pitch,yaw).
  Rmp eeFollowing(const PolicyInputs& in) const;
  Rmp depthServoing(const PolicyInputs& in) const;
  Rmp springLoading(const PolicyInputs& in) const;
  Rmp prismTracking(const PolicyInputs& in) const;
  Rmp waypoint(const PolicyInputs& in, const Pose& goal_O) const;

  const PoliciesConfig& config() const { return cfg_; }

 private:
  Eigen::VectorXd soft(const Eigen::VectorXd& z, double gamma) const {
    return softNormalize(z, gamma, cfg_.soft_norm);
  }
  /// Pull a task-frame policy (metric support per `metric_diag`) into O using
  /// the rotation R_O_task as the manifold map Jacobian.
  static Rmp pullToConfig(const Vec6& f_task, const Vec6& metric_diag, const Mat3& r_o_task);

  PoliciesConfig cfg_;
};

/// Integrates a wheel-space Rmp acceleration into a leaky velocity command,
/// bridging the policy contract to the servos' velocity interface.
class WheelController {
 public:
  WheelController(double leak, double speed_max) : leak_(leak), speed_max_(speed_max) {}

  Vec2 update(const Rmp& wheel_policy, double dt);
  Vec2 command() const { return command_; }
  void reset() { command_.setZero(); }

 private:
  double leak_;
  double speed_max_;
  Vec2 command_ = Vec2::Zero();
};

}  // namespace layout
