#include "layout/policies.hpp"

#include <cmath>

namespace layout {

namespace {

Eigen::VectorXd embed(const Vec6& v) { return v; }

}  // namespace

Rmp Policies::pullToConfig(const Vec6& f_task, const Vec6& metric_diag, const Mat3& r_o_task) {
  Rmp task;
  task.f = embed(f_task);
  task.metric = metric_diag.asDiagonal();
  // v_task = blkdiag(R^T, R^T) * v_config with R = R_O_task.
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(6, 6);
  j.topLeftCorner<3, 3>() = r_o_task.transpose();
  j.bottomRightCorner<3, 3>() = r_o_task.transpose();
  return pull(task, j);
}

Rmp Policies::eeNavigation(const PolicyInputs& in) const {
  if (!cfg_.ee_navigation.enabled || !in.global_converged || !in.contact) return Rmp::zero(2);
  const Vec3 tool_b = in.tree->lookup(FrameId::Building, FrameId::Tool).translation;
  const Mat3 r_b_ts = in.tree->lookup(FrameId::Building, FrameId::ToolSensor).rotation.matrix();
  const Vec3 err_b(in.target_B.x() - tool_b.x(), in.target_B.y() - tool_b.y(), 0.0);
  const Vec2 err_ts = (r_b_ts.transpose() * err_b).head<2>();
  Rmp out;
  out.f = cfg_.ee_navigation.alpha * soft(err_ts, cfg_.ee_navigation.gamma) -
          cfg_.ee_navigation.beta * in.tool_velocity;
  out.metric = cfg_.ee_navigation_metric.head<2>().asDiagonal();
  return out;
}

Rmp Policies::eeFollowing(const PolicyInputs& in) const {
  const bool fresh = in.tool_offset.has_value() &&
                     in.tool_offset_age_s <= cfg_.tool_stale_periods * cfg_.tool_tracker_period_s;
  if (!cfg_.ee_following.enabled || !fresh) return Rmp::zero(6);
  const Mat3 r_o_ts = in.tree->lookup(FrameId::Odometry, FrameId::ToolSensor).rotation.matrix();
  const Vec2 v_ts = (r_o_ts.transpose() * in.velocity_O).head<2>();
  Vec6 f = Vec6::Zero();
  f.head<2>() = cfg_.ee_following.alpha * soft(in.tool_offset->offset, cfg_.ee_following.gamma) -
                cfg_.ee_following.beta * v_ts;
  return pullToConfig(f, cfg_.ee_following_metric, r_o_ts);
}

Rmp Policies::depthServoing(const PolicyInputs& in) const {
  if (!cfg_.depth_servoing.enabled || !in.depth.has_value() || !in.depth->valid) {
    return Rmp::zero(6);
  }
  const Mat3 r_o_i = in.tree->lookup(FrameId::Odometry, FrameId::Imu).rotation.matrix();
  const double v_z = (r_o_i.transpose() * in.velocity_O).z();
  Eigen::VectorXd err(1);
  err << in.depth->distance - cfg_.contact_distance;
  Vec6 f = Vec6::Zero();
  f.z() = cfg_.depth_servoing.alpha * soft(err, cfg_.depth_servoing.gamma)(0) -
          cfg_.depth_servoing.beta * v_z;
  return pullToConfig(f, cfg_.depth_servoing_metric, r_o_i);
}

Rmp Policies::springLoading(const PolicyInputs& in) const {
  if (!cfg_.spring_loading.enabled || !in.contact) return Rmp::zero(6);
  const Mat3 r_o_ts = in.tree->lookup(FrameId::Odometry, FrameId::ToolSensor).rotation.matrix();
  const double v_z = (r_o_ts.transpose() * in.velocity_O).z();
  Eigen::VectorXd err(1);
  err << cfg_.spring_target - in.spring_compression;
  Vec6 f = Vec6::Zero();
  f.z() = cfg_.spring_loading.alpha * soft(err, cfg_.spring_loading.gamma)(0) -
          cfg_.spring_loading.beta * v_z;
  const double excess = std::max(0.0, in.spring_compression - cfg_.spring_target);
  const Vec6 metric = cfg_.spring_loading_metric * std::exp(-cfg_.spring_decay_k * excess);
  return pullToConfig(f, metric, r_o_ts);
}

Rmp Policies::prismTracking(const PolicyInputs& in) const {
  if (!cfg_.prism_tracking.enabled) return Rmp::zero(6);
  const Vec3 base_b = in.tree->lookup(FrameId::Building, FrameId::Imu).translation;
  const Vec3 prism_b = in.tree->lookup(FrameId::Building, FrameId::Prism).translation;
  Vec3 u = base_b - in.station_position_B;
  u.z() = 0.0;
  if (u.norm() < 1e-9) return Rmp::zero(6);
  const Vec3 n = Vec3::UnitZ().cross(u).normalized();
  const double d = n.dot(prism_b - in.station_position_B);
  // d(plane distance)/d(yaw about the base center)
  const double jac = n.dot(Vec3::UnitZ().cross(prism_b - base_b));
  if (std::abs(jac) < 1e-9) return Rmp::zero(6);
  Eigen::VectorXd dv(1);
  dv << d;
  const double f_d = -cfg_.prism_tracking.alpha * soft(dv, cfg_.prism_tracking.gamma)(0);
  Vec6 f = Vec6::Zero();
  f(5) = f_d * (jac > 0.0 ? 1.0 : -1.0) - cfg_.prism_tracking.beta * in.ang_velocity_I.z();
  const Mat3 r_o_i = in.tree->lookup(FrameId::Odometry, FrameId::Imu).rotation.matrix();
  return pullToConfig(f, cfg_.prism_tracking_metric, r_o_i);
}

Rmp Policies::waypoint(const PolicyInputs& in, const Pose& goal_O) const {
  if (!cfg_.waypoint.enabled) return Rmp::zero(6);
  const Pose t_oi = in.tree->lookup(FrameId::Odometry, FrameId::Imu);
  const Mat3 r_o_i = t_oi.rotation.matrix();
  Vec6 f = Vec6::Zero();
  // expressed in the body frame I, pulled back into O below
  f.head<3>() = cfg_.waypoint.alpha *
                    soft(r_o_i.transpose() * (goal_O.translation - t_oi.translation),
                         cfg_.waypoint.gamma) -
                cfg_.waypoint.beta * (r_o_i.transpose() * in.velocity_O);
  const Vec3 phi = logSo3(t_oi.rotation.inverse() * goal_O.rotation);
  f.tail<3>() = cfg_.waypoint_rot_alpha * soft(phi, cfg_.waypoint.gamma) -
                cfg_.waypoint_rot_beta * in.ang_velocity_I;
  return pullToConfig(f, cfg_.waypoint_metric, r_o_i);
}

Vec2 WheelController::update(const Rmp& wheel_policy, double dt) {
  Vec2 accel = Vec2::Zero();
  if (wheel_policy.metric.size() == 4 && wheel_policy.metric.trace() > 0.0) {
    accel = wheel_policy.f.head<2>();
  } else {
    // disabled policy: decay toward zero
    accel = -leak_ * command_ * 4.0;
  }
  command_ += (accel - leak_ * command_) * dt;
  const double n = command_.norm();
  if (n > speed_max_) command_ *= speed_max_ / n;
  return command_;
}

}  // namespace layout
