#include "layout/preintegration.hpp"

#include <stdexcept>

namespace layout {

PreintegratedImu::PreintegratedImu(const PreintegrationParams& params, const Vec3& accel_bias_lin,
                                   const Vec3& gyro_bias_lin)
    : params_(params), ba_lin_(accel_bias_lin), bg_lin_(gyro_bias_lin) {}

void PreintegratedImu::reset(const Vec3& accel_bias_lin, const Vec3& gyro_bias_lin) {
  delta_r_ = Rotation::identity();
  delta_v_.setZero();
  delta_p_.setZero();
  delta_t_ = 0.0;
  num_samples_ = 0;
  last_t_ns_ = -1;
  cov_.setZero();
  ba_lin_ = accel_bias_lin;
  bg_lin_ = gyro_bias_lin;
  dR_dbg_.setZero();
  dv_dba_.setZero();
  dv_dbg_.setZero();
  dp_dba_.setZero();
  dp_dbg_.setZero();
}

void PreintegratedImu::integrate(const ImuMeasurement& m, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("preintegration dt must be positive");
  if (last_t_ns_ >= 0 && m.t_ns <= last_t_ns_)
    throw std::runtime_error("non-monotonic IMU timestamp in preintegration");
  last_t_ns_ = m.t_ns;

  const Vec3 w = m.gyro - bg_lin_;
  const Vec3 a = m.accel - ba_lin_;
  const Rotation inc = expSo3(w * dt);
  // Midpoint attitude for the accelerometer contribution.
  const Mat3 r_mid = (delta_r_ * expSo3(0.5 * w * dt)).matrix();
  const Mat3 jr = rightJacobianSo3(w * dt);

  // Covariance propagation on [dphi, dv, dp].
  Mat9 f = Mat9::Identity();
  f.block<3, 3>(0, 0) = inc.matrix().transpose();
  f.block<3, 3>(3, 0) = -r_mid * skew(a) * dt;
  f.block<3, 3>(6, 0) = -0.5 * r_mid * skew(a) * dt * dt;
  f.block<3, 3>(6, 3) = Mat3::Identity() * dt;
  Eigen::Matrix<double, 9, 6> g = Eigen::Matrix<double, 9, 6>::Zero();
  g.block<3, 3>(0, 0) = jr * dt;
  g.block<3, 3>(3, 3) = r_mid * dt;
  g.block<3, 3>(6, 3) = 0.5 * r_mid * dt * dt;
  Eigen::Matrix<double, 6, 6> q = Eigen::Matrix<double, 6, 6>::Zero();
  q.diagonal().head<3>().setConstant(params_.gyro_sigma * params_.gyro_sigma);
  q.diagonal().tail<3>().setConstant(params_.accel_sigma * params_.accel_sigma);
  cov_ = f * cov_ * f.transpose() + g * q * g.transpose();

  // Bias Jacobians (first order); consume old values before updating.
  dp_dba_ += dv_dba_ * dt - 0.5 * r_mid * dt * dt;
  dp_dbg_ += dv_dbg_ * dt - 0.5 * r_mid * skew(a) * dR_dbg_ * dt * dt;
  dv_dba_ += -r_mid * dt;
  dv_dbg_ += -r_mid * skew(a) * dR_dbg_ * dt;
  dR_dbg_ = inc.matrix().transpose() * dR_dbg_ - jr * dt;

  // Increments.
  delta_p_ += delta_v_ * dt + 0.5 * r_mid * a * dt * dt;
  delta_v_ += r_mid * a * dt;
  delta_r_ = delta_r_ * inc;
  delta_t_ += dt;
  ++num_samples_;
}

Rotation PreintegratedImu::correctedDeltaR(const Vec3& gyro_bias) const {
  return delta_r_ * expSo3(dR_dbg_ * (gyro_bias - bg_lin_));
}

Vec3 PreintegratedImu::correctedDeltaV(const Vec3& accel_bias, const Vec3& gyro_bias) const {
  return delta_v_ + dv_dba_ * (accel_bias - ba_lin_) + dv_dbg_ * (gyro_bias - bg_lin_);
}

Vec3 PreintegratedImu::correctedDeltaP(const Vec3& accel_bias, const Vec3& gyro_bias) const {
  return delta_p_ + dp_dba_ * (accel_bias - ba_lin_) + dp_dbg_ * (gyro_bias - bg_lin_);
}

Vec9 PreintegratedImu::residual(const LocalState& x_i, const LocalState& x_j) const {
  const double dt = delta_t_;
  const Vec3& g = params_.gravity;
  const Rotation r_i_inv = x_i.q_OI.inverse();
  Vec9 r;
  r.segment<3>(0) =
      logSo3(correctedDeltaR(x_i.b_g).inverse() * (r_i_inv * x_j.q_OI));
  r.segment<3>(3) = r_i_inv * (x_j.v_OI - x_i.v_OI - g * dt) - correctedDeltaV(x_i.b_a, x_i.b_g);
  r.segment<3>(6) = r_i_inv * (x_j.p_OI - x_i.p_OI - x_i.v_OI * dt - 0.5 * g * dt * dt) -
                    correctedDeltaP(x_i.b_a, x_i.b_g);
  return r;
}

LocalState PreintegratedImu::propagate(const LocalState& x_i) const {
  const double dt = delta_t_;
  const Vec3& g = params_.gravity;
  LocalState x_j = x_i;
  x_j.t_ns = x_i.t_ns + static_cast<int64_t>(std::llround(dt * 1e9));
  x_j.q_OI = x_i.q_OI * correctedDeltaR(x_i.b_g);
  x_j.v_OI = x_i.v_OI + g * dt + x_i.q_OI * correctedDeltaV(x_i.b_a, x_i.b_g);
  x_j.p_OI = x_i.p_OI + x_i.v_OI * dt + 0.5 * g * dt * dt +
             x_i.q_OI * correctedDeltaP(x_i.b_a, x_i.b_g);
  return x_j;
}

}  // namespace layout
