#include "layout/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace layout {

namespace {
constexpr double kSmallAngle = 1e-8;
}

Rotation expSo3(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  if (theta2 < kSmallAngle * kSmallAngle) {
    // Second-order Taylor of the quaternion exponential.
    const Vec3 half = 0.5 * omega;
    return Rotation(1.0 - theta2 / 8.0, half.x(), half.y(), half.z());
  }
  const double theta = std::sqrt(theta2);
  const Vec3 axis = omega / theta;
  return Rotation::fromAxisAngle(axis, theta);
}

Vec3 logSo3(const Rotation& r) {
  const Rotation c = r.canonical();
  const Vec3 v(c.x(), c.y(), c.z());
  const double vnorm = v.norm();
  if (vnorm < kSmallAngle) {
    return 2.0 / c.w() * v;  // first order, w ~ 1
  }
  const double angle = 2.0 * std::atan2(vnorm, c.w());
  return v * (angle / vnorm);
}

Mat3 rightJacobianSo3(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 w = skew(omega);
  if (theta2 < kSmallAngle) {
    return Mat3::Identity() - 0.5 * w + (1.0 / 6.0) * w * w;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() - (1.0 - std::cos(theta)) / theta2 * w +
         (theta - std::sin(theta)) / (theta2 * theta) * w * w;
}

Mat3 rightJacobianInvSo3(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 w = skew(omega);
  if (theta2 < kSmallAngle) {
    return Mat3::Identity() + 0.5 * w + (1.0 / 12.0) * w * w;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() + 0.5 * w +
         (1.0 / theta2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta))) * w * w;
}

const char* frameName(FrameId id) {
  switch (id) {
    case FrameId::Building: return "B";
    case FrameId::Odometry: return "O";
    case FrameId::Imu: return "I";
    case FrameId::VioSensor: return "O_S";
    case FrameId::Prism: return "P";
    case FrameId::ToolSensor: return "T_S";
    case FrameId::Tool: return "T";
  }
  return "?";
}

FrameTree FrameTree::standard(const Pose& imu_to_vio, const Pose& imu_to_prism,
                              const Pose& imu_to_tool_sensor) {
  FrameTree tree;
  tree.addEdge(FrameId::Odometry, FrameId::Building, Pose::identity(), false,
               FrameSource::Estimate);
  tree.addEdge(FrameId::Imu, FrameId::Odometry, Pose::identity(), false, FrameSource::Estimate);
  tree.addEdge(FrameId::VioSensor, FrameId::Imu, imu_to_vio, true, FrameSource::Cad);
  tree.addEdge(FrameId::Prism, FrameId::Imu, imu_to_prism, true, FrameSource::Cad);
  tree.addEdge(FrameId::ToolSensor, FrameId::Imu, imu_to_tool_sensor, true,
               FrameSource::Calibration);
  tree.addEdge(FrameId::Tool, FrameId::ToolSensor, Pose::identity(), false,
               FrameSource::Tracking);
  return tree;
}

void FrameTree::addEdge(FrameId child, FrameId parent, const Pose& pose, bool fixed,
                        FrameSource source) {
  if (child == FrameId::Building) throw std::invalid_argument("Building frame is the root");
  edges_[child] = Edge{parent, pose, fixed, source};
}

void FrameTree::setPose(FrameId child, const Pose& pose) {
  auto it = edges_.find(child);
  if (it == edges_.end()) throw std::invalid_argument(std::string("unknown frame ") + frameName(child));
  if (it->second.fixed) throw std::logic_error(std::string("frame edge is fixed: ") + frameName(child));
  it->second.pose = pose;
}

bool FrameTree::hasFrame(FrameId id) const {
  return id == FrameId::Building || edges_.count(id) > 0;
}

const FrameTree::Edge& FrameTree::edge(FrameId child) const {
  auto it = edges_.find(child);
  if (it == edges_.end()) throw std::invalid_argument(std::string("unknown frame ") + frameName(child));
  return it->second;
}

Pose FrameTree::poseInRoot(FrameId id) const {
  Pose p = Pose::identity();
  FrameId cur = id;
  while (cur != FrameId::Building) {
    auto it = edges_.find(cur);
    if (it == edges_.end()) throw std::invalid_argument(std::string("unknown frame ") + frameName(cur));
    p = it->second.pose * p;
    cur = it->second.parent;
  }
  return p;
}

Pose FrameTree::lookup(FrameId from, FrameId to) const {
  if (!hasFrame(from)) throw std::invalid_argument(std::string("unknown frame ") + frameName(from));
  if (!hasFrame(to)) throw std::invalid_argument(std::string("unknown frame ") + frameName(to));
  return poseInRoot(from).inverse() * poseInRoot(to);
}

}  // namespace layout
