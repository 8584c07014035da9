#pragma once

#include <Eigen/Core>

#include "layout/geometry.hpp"

namespace layout {

using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

/// Local estimator state: attitude/position/velocity of I in O plus IMU biases.
/// Tangent ordering for retraction: [dphi, dp, dv, dba, dbg] (15).
struct LocalState {
  int64_t t_ns = 0;
  Rotation q_OI;
  Vec3 p_OI = Vec3::Zero();
  Vec3 v_OI = Vec3::Zero();
  Vec3 b_a = Vec3::Zero();
  Vec3 b_g = Vec3::Zero();

  LocalState retract(const Vec15& delta) const {
    LocalState out = *this;
    out.q_OI = q_OI * expSo3(delta.segment<3>(0));
    out.p_OI += delta.segment<3>(3);
    out.v_OI += delta.segment<3>(6);
    out.b_a += delta.segment<3>(9);
    out.b_g += delta.segment<3>(12);
    return out;
  }

  Pose pose() const { return Pose(q_OI, p_OI); }
};

/// Global estimator state: drift transform of O w.r.t. B.
/// Tangent ordering: [dphi, dp] (6).
struct GlobalState {
  int64_t t_ns = 0;
  Rotation q_BO;
  Vec3 p_BO = Vec3::Zero();

  GlobalState retract(const Eigen::Matrix<double, 6, 1>& delta) const {
    GlobalState out = *this;
    out.q_BO = q_BO * expSo3(delta.segment<3>(0));
    out.p_BO += delta.segment<3>(3);
    return out;
  }

  Pose pose() const { return Pose(q_BO, p_BO); }
};

}  // namespace layout
