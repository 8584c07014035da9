#pragma once

#include "layout/geometry.hpp"
#include "layout/sensors.hpp"
#include "layout/state.hpp"

namespace layout {

struct PreintegrationParams {
  double accel_sigma = 187e-6 * 9.80665 * std::sqrt(200.0);  // discrete sample std
  double gyro_sigma = 0.66 * M_PI / 180.0 / 60.0 * std::sqrt(200.0);
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);  // expressed in O
};

/// On-manifold IMU preintegration (midpoint rule) with first-order bias
/// Jacobians and 9x9 covariance on [dR, dv, dp].
class PreintegratedImu {
 public:
  explicit PreintegratedImu(const PreintegrationParams& params = {},
                            const Vec3& accel_bias_lin = Vec3::Zero(),
                            const Vec3& gyro_bias_lin = Vec3::Zero());

  void integrate(const ImuMeasurement& m, double dt);
  void reset(const Vec3& accel_bias_lin, const Vec3& gyro_bias_lin);

  double deltaT() const { return delta_t_; }
  int numSamples() const { return num_samples_; }
  const Rotation& deltaR() const { return delta_r_; }
  const Vec3& deltaV() const { return delta_v_; }
  const Vec3& deltaP() const { return delta_p_; }
  const Mat9& covariance() const { return cov_; }
  const Vec3& accelBiasLin() const { return ba_lin_; }
  const Vec3& gyroBiasLin() const { return bg_lin_; }
  const Mat3& dRdbg() const { return dR_dbg_; }
  const Mat3& dVdba() const { return dv_dba_; }
  const Mat3& dVdbg() const { return dv_dbg_; }
  const Mat3& dPdba() const { return dp_dba_; }
  const Mat3& dPdbg() const { return dp_dbg_; }
  const Vec3& gravity() const { return params_.gravity; }

  /// Increments corrected to the given bias via the stored first-order Jacobians.
  Rotation correctedDeltaR(const Vec3& gyro_bias) const;
  Vec3 correctedDeltaV(const Vec3& accel_bias, const Vec3& gyro_bias) const;
  Vec3 correctedDeltaP(const Vec3& accel_bias, const Vec3& gyro_bias) const;

  /// Residual [r_dR, r_dv, r_dp]; zero when x_j equals propagate(x_i).
  Vec9 residual(const LocalState& x_i, const LocalState& x_j) const;

  /// Analytic propagation of x_i through the increments (biases carried over).
  LocalState propagate(const LocalState& x_i) const;

 private:
  PreintegrationParams params_;
  Rotation delta_r_;
  Vec3 delta_v_ = Vec3::Zero();
  Vec3 delta_p_ = Vec3::Zero();
  double delta_t_ = 0.0;
  int num_samples_ = 0;
  int64_t last_t_ns_ = -1;
  Mat9 cov_ = Mat9::Zero();
  Vec3 ba_lin_ = Vec3::Zero();
  Vec3 bg_lin_ = Vec3::Zero();
  Mat3 dR_dbg_ = Mat3::Zero();
  Mat3 dv_dba_ = Mat3::Zero();
  Mat3 dv_dbg_ = Mat3::Zero();
  Mat3 dp_dba_ = Mat3::Zero();
  Mat3 dp_dbg_ = Mat3::Zero();
};

}  // namespace layout
