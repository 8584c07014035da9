#include "layout/sim_world.hpp"

#include <cmath>
#include <stdexcept>

namespace layout {

namespace {
Vec2 clampNorm(const Vec2& v, double max_norm) {
  const double n = v.norm();
  return n > max_norm ? Vec2(v * (max_norm / n)) : v;
}
}  // namespace

SimWorld::SimWorld(const WorldConfig& config, const FrameConfig& frames, uint64_t seed)
    : config_(config), frames_(frames), rng_(seed ^ 0x517f) {
  base_.pose = config_.start_pose;
}

void SimWorld::step(double dt, const Vec6& base_accel_cmd, const Vec2& wheel_cmd) {
  if (dt <= 0.0) throw std::invalid_argument("world dt must be positive");
  if (!base_accel_cmd.allFinite() || !wheel_cmd.allFinite())
    throw std::invalid_argument("non-finite command");

  // Disturbance as an OU process, clamped to 3 sigma.
  if (config_.disturbance_accel_std > 0.0) {
    const double rho = std::exp(-dt / config_.disturbance_tau);
    std::normal_distribution<double> n(0.0, config_.disturbance_accel_std *
                                                std::sqrt(1.0 - rho * rho));
    for (int i = 0; i < 3; ++i) {
      disturbance_[i] = rho * disturbance_[i] + n(rng_);
      disturbance_[i] = std::clamp(disturbance_[i], -3.0 * config_.disturbance_accel_std,
                                   3.0 * config_.disturbance_accel_std);
    }
  }

  // Contact state with hysteresis on the engage/disengage boundary.
  const double dist = trueDistanceToCeiling();
  const double reach = config_.spring_rest_reach;
  if (config_.contact_enabled) {
    if (!ee_.contact && dist <= reach) ee_.contact = true;
    if (ee_.contact && dist > reach + config_.contact_hysteresis) ee_.contact = false;
  } else {
    ee_.contact = false;
  }
  ee_.compression = ee_.contact && config_.compliance_enabled
                        ? std::clamp(reach - dist, 0.0, config_.spring_max_travel)
                        : 0.0;

  // Impedance-controller abstraction: first-order lag on the commanded
  // acceleration plus disturbance and viscous damping.
  const double lag = dt / (config_.accel_lag_tau + dt);
  tracked_accel_ += lag * (base_accel_cmd.head<3>() - tracked_accel_);
  tracked_ang_accel_ += lag * (base_accel_cmd.tail<3>() - tracked_ang_accel_);

  Vec3 accel = tracked_accel_ + disturbance_ - config_.linear_damping * base_.velocity;
  if (ee_.contact) {
    // Friction through the contact points stabilizes the base in the plane.
    accel.head<2>() += (config_.contact_disturbance_atten - 1.0) * disturbance_.head<2>();
    accel.head<2>() -= config_.contact_velocity_damping * base_.velocity.head<2>();
    // The ceiling blocks upward motion beyond full spring compression.
    if (dist - reach + config_.spring_max_travel <= 1e-6 && base_.velocity.z() > 0.0)
      base_.velocity.z() = 0.0;
  }

  // Effective wheel velocity in the T_S frame (slip + noise).
  Vec2 wheel_eff = Vec2::Zero();
  if (config_.actuation_enabled && ee_.contact) {
    double slip = config_.wheel_slip;
    if (config_.wheel_slip_noise > 0.0) {
      std::normal_distribution<double> n(0.0, config_.wheel_slip_noise);
      slip += n(rng_);
    }
    wheel_eff = wheel_cmd * std::clamp(1.0 - slip, 0.0, 1.0);
  }
  ee_.wheel_velocity = wheel_eff;

  // Rigid coupling: actuated wheels drag the whole vehicle when there is no
  // compliant stage between tool and base.
  if (ee_.contact && config_.actuation_enabled && !config_.compliance_enabled) {
    const Mat3 r = base_.pose.rotation.matrix();
    const Vec3 wheel_world = r * Vec3(wheel_eff.x(), wheel_eff.y(), 0.0);
    const double k = dt / (config_.wheel_track_tau + dt);
    base_.velocity.head<2>() += k * (wheel_world.head<2>() - base_.velocity.head<2>());
  }

  // Semi-implicit Euler for the base.
  base_.velocity += accel * dt;
  base_.pose.translation += base_.velocity * dt;
  base_.ang_velocity += (tracked_ang_accel_ - config_.angular_damping * base_.ang_velocity) * dt;
  base_.pose.rotation = base_.pose.rotation * expSo3(base_.ang_velocity * dt);
  base_.accel = accel;

  // End-effector planar offset dynamics.
  if (ee_.contact && config_.compliance_enabled) {
    // The tool holds position on the ceiling (wheel friction); base motion and
    // wheel commands change the relative offset.
    const Mat3 r_ib = base_.pose.rotation.matrix().transpose();
    const Vec3 base_vel_body = r_ib * base_.velocity;
    Vec2 d_offset = wheel_eff - base_vel_body.head<2>();
    if (!config_.actuation_enabled) {
      // Unactuated compliant stage: free-spinning contacts provide no grip, the
      // tool is dragged behind against the travel stop.
      d_offset = -base_vel_body.head<2>();
    }
    ee_.offset = clampNorm(ee_.offset + d_offset * dt, config_.tool_offset_max);
    ee_.yaw_offset += -base_.ang_velocity.z() * dt;
    ee_.yaw_offset = std::clamp(ee_.yaw_offset, -0.2, 0.2);
  } else {
    // Spring centering when the stage is free (or rigid: offset identically 0).
    const double k = config_.compliance_enabled ? dt / (config_.ee_centering_tau + dt) : 1.0;
    ee_.offset += k * (Vec2::Zero() - ee_.offset);
    ee_.yaw_offset += k * (0.0 - ee_.yaw_offset);
  }

  time_ += dt;
}

Vec3 SimWorld::toolPositionB() const {
  const Pose ts = toolSensorPoseB();
  Vec3 p = ts * Vec3(ee_.offset.x(), ee_.offset.y(), 0.0);
  p.z() = ee_.contact ? config_.ceiling_height
                      : ts.translation.z() + config_.spring_rest_reach - ee_.compression;
  return p;
}

MarkRecord SimWorld::actuatePen(const Vec3& commanded_target) {
  if (!ee_.contact) throw std::logic_error("pen actuated without ceiling contact");
  MarkRecord rec;
  rec.t_ns = timeNs();
  rec.commanded = commanded_target;
  rec.actual = toolPositionB();
  rec.actual.z() = config_.ceiling_height;  // projected onto the ceiling plane
  return rec;
}

}  // namespace layout
