#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace layout {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

/// Unit quaternion rotation, stored w-first with canonical sign (w >= 0)
/// enforced for comparison operations.
class Rotation {
 public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}
  Rotation(double w, double x, double y, double z) : q_(w, x, y, z) { normalize(); }
  explicit Rotation(const Eigen::Quaterniond& q) : q_(q) { normalize(); }
  explicit Rotation(const Mat3& m) : q_(m) { normalize(); }

  static Rotation identity() { return Rotation(); }
  static Rotation fromAxisAngle(const Vec3& axis, double angle) {
    return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())));
  }
  static Rotation rz(double yaw) { return fromAxisAngle(Vec3::UnitZ(), yaw); }

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }
  const Eigen::Quaterniond& quat() const { return q_; }

  Mat3 matrix() const { return q_.toRotationMatrix(); }
  Rotation inverse() const { return Rotation(q_.conjugate()); }
  Rotation operator*(const Rotation& other) const { return Rotation(q_ * other.q_); }
  Vec3 operator*(const Vec3& v) const { return q_ * v; }

  /// Canonicalized copy with w >= 0 (double cover resolved).
  Rotation canonical() const {
    if (q_.w() < 0.0) return Rotation(Eigen::Quaterniond(-q_.w(), -q_.x(), -q_.y(), -q_.z()));
    return *this;
  }

  /// Quaternion distance that is invariant to the double cover.
  double angularDistance(const Rotation& other) const { return q_.angularDistance(other.q_); }

  double yaw() const {
    const Mat3 m = matrix();
    return std::atan2(m(1, 0), m(0, 0));
  }

 private:
  void normalize() { q_.normalize(); }
  Eigen::Quaterniond q_;
};

/// SO(3) exponential map; second-order Taylor branch below 1e-8 rad.
Rotation expSo3(const Vec3& omega);
/// SO(3) logarithm, canonical branch with angle in [0, pi].
Vec3 logSo3(const Rotation& r);
/// Right Jacobian of the SO(3) exponential and its inverse.
Mat3 rightJacobianSo3(const Vec3& omega);
Mat3 rightJacobianInvSo3(const Vec3& omega);

/// Rigid transform on SE(3): x_parent = rotation * x_child + translation.
struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Rotation& r, const Vec3& t) : rotation(r), translation(t) {}

  static Pose identity() { return Pose(); }

  Pose inverse() const {
    const Rotation rinv = rotation.inverse();
    return Pose(rinv, -(rinv * translation));
  }
  Pose operator*(const Pose& other) const {
    return Pose(rotation * other.rotation, rotation * other.translation + translation);
  }
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation.matrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }
};

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }

/// The seven system frames. Every frame except Building has exactly one parent.
enum class FrameId { Building, Odometry, Imu, VioSensor, Prism, ToolSensor, Tool };

const char* frameName(FrameId id);

enum class FrameSource { Cad, Calibration, Tracking, Estimate };

/// Tree of frames rooted at Building. Fixed edges never change after
/// construction; the Building->Odometry and Odometry->Imu edges are the only
/// estimate-sourced, mutable ones.
class FrameTree {
 public:
  struct Edge {
    FrameId parent;
    Pose pose;  // child frame expressed in parent
    bool fixed = false;
    FrameSource source = FrameSource::Cad;
  };

  /// Standard system tree: B->O->I with I->{O_S, P, T_S} fixed and T_S->T tracked.
  static FrameTree standard(const Pose& imu_to_vio, const Pose& imu_to_prism,
                            const Pose& imu_to_tool_sensor);

  void addEdge(FrameId child, FrameId parent, const Pose& pose, bool fixed, FrameSource source);
  /// Updates a non-fixed edge pose. Throws if the edge is fixed or missing.
  void setPose(FrameId child, const Pose& pose);
  bool hasFrame(FrameId id) const;
  const Edge& edge(FrameId child) const;

  /// Transform of `to` expressed in `from`, chained along the unique tree path.
  Pose lookup(FrameId from, FrameId to) const;

 private:
  Pose poseInRoot(FrameId id) const;
  std::map<FrameId, Edge> edges_;
};

}  // namespace layout
