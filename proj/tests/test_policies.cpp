#include <doctest.h>

#include <chrono>
#include <cmath>

#include "layout/policies.hpp"

using namespace layout;

namespace {

struct Fixture {
  FrameTree tree;
  PoliciesConfig cfg;
  Policies policies;
  PolicyInputs in;

  Fixture()
      : tree(FrameTree::standard(Pose::identity(), Pose(Rotation(), Vec3(0.2, 0.0, 0.1)),
                                 Pose::identity())),
        policies(cfg) {
    in.tree = &tree;
    in.global_converged = true;
    in.contact = true;
    in.station_position_B = Vec3(-3.0, 0.0, 0.0);
  }

  void setBase(const Pose& t_bo, const Pose& t_oi) {
    tree.setPose(FrameId::Odometry, t_bo);
    tree.setPose(FrameId::Imu, t_oi);
  }
};

ToolOffsetMeasurement toolOffset(double x, double y) {
  ToolOffsetMeasurement m;
  m.offset = Vec2(x, y);
  return m;
}

}  // namespace

TEST_CASE("ee navigation") {
  Fixture fx;
  fx.in.target_B = Vec3(0.05, 0.0, 0.0);

  SUBCASE("drives the wheels toward the target") {
    const Rmp out = fx.policies.eeNavigation(fx.in);
    REQUIRE(out.dim() == 2);
    CHECK(out.f.x() > 0.0);
    CHECK(out.f.y() == doctest::Approx(0.0));
    CHECK(out.metric.trace() > 0.0);
  }

  SUBCASE("inactive without global convergence or contact") {
    fx.in.global_converged = false;
    CHECK(fx.policies.eeNavigation(fx.in).metric.norm() == 0.0);
    fx.in.global_converged = true;
    fx.in.contact = false;
    CHECK(fx.policies.eeNavigation(fx.in).metric.norm() == 0.0);
  }

  SUBCASE("error is expressed in the tool-sensor frame") {
    fx.setBase(Pose(Rotation::rz(M_PI / 2.0), Vec3::Zero()), Pose::identity());
    const Rmp out = fx.policies.eeNavigation(fx.in);
    // a +x_B target seen from a 90deg-yawed sensor appears along -y_TS
    CHECK(out.f.y() < 0.0);
    CHECK(std::abs(out.f.x()) < 1e-9);
  }

  SUBCASE("disable flag returns the zero policy") {
    fx.cfg.ee_navigation.enabled = false;
    Policies p(fx.cfg);
    CHECK(p.eeNavigation(fx.in).metric.norm() == 0.0);
  }
}

TEST_CASE("ee following") {
  Fixture fx;
  fx.in.tool_offset = toolOffset(0.01, 0.0);
  fx.in.tool_offset_age_s = 0.0;

  SUBCASE("chases the tool offset in the plane") {
    const Rmp out = fx.policies.eeFollowing(fx.in);
    REQUIRE(out.dim() == 6);
    CHECK(out.f.x() > 0.0);
    CHECK(out.metric(0, 0) > 0.0);
    CHECK(out.metric(2, 2) == doctest::Approx(0.0));
    CHECK(out.metric.bottomRightCorner<3, 3>().norm() == doctest::Approx(0.0));
  }

  SUBCASE("stale measurements disable the policy") {
    fx.in.tool_offset_age_s = 4.0 / 60.0;
    CHECK(fx.policies.eeFollowing(fx.in).metric.norm() == 0.0);
    fx.in.tool_offset.reset();
    fx.in.tool_offset_age_s = 0.0;
    CHECK(fx.policies.eeFollowing(fx.in).metric.norm() == 0.0);
  }

  SUBCASE("velocity damping opposes motion") {
    fx.in.tool_offset = toolOffset(0.0, 0.0);
    fx.in.velocity_O = Vec3(0.2, 0.0, 0.0);
    const Rmp out = fx.policies.eeFollowing(fx.in);
    CHECK(out.f.x() < 0.0);
  }
}

TEST_CASE("depth servoing") {
  Fixture fx;
  DepthMeasurement d;
  d.distance = 0.5;

  SUBCASE("climbs toward the contact distance") {
    fx.in.depth = d;
    const Rmp out = fx.policies.depthServoing(fx.in);
    CHECK(out.f.z() > 0.0);
    CHECK(out.metric(2, 2) > 0.0);
    CHECK(out.metric(0, 0) == doctest::Approx(0.0));
  }

  SUBCASE("backs off when too close") {
    d.distance = 0.05;
    fx.in.depth = d;
    CHECK(fx.policies.depthServoing(fx.in).f.z() < 0.0);
  }

  SUBCASE("invalid or missing readings disable the policy") {
    d.valid = false;
    fx.in.depth = d;
    CHECK(fx.policies.depthServoing(fx.in).metric.norm() == 0.0);
    fx.in.depth.reset();
    CHECK(fx.policies.depthServoing(fx.in).metric.norm() == 0.0);
  }
}

TEST_CASE("spring loading") {
  Fixture fx;

  SUBCASE("pushes up while under-compressed") {
    fx.in.spring_compression = 0.02;
    const Rmp out = fx.policies.springLoading(fx.in);
    CHECK(out.f.z() > 0.0);
    CHECK(out.metric(2, 2) > 0.0);
  }

  SUBCASE("requires contact") {
    fx.in.contact = false;
    fx.in.spring_compression = 0.0;
    CHECK(fx.policies.springLoading(fx.in).metric.norm() == 0.0);
  }

  SUBCASE("metric decays exponentially past the target compression") {
    fx.in.spring_compression = fx.cfg.spring_target;
    const double m_at = fx.policies.springLoading(fx.in).metric(2, 2);
    fx.in.spring_compression = fx.cfg.spring_target + 0.02;
    const double m_over = fx.policies.springLoading(fx.in).metric(2, 2);
    CHECK(m_over == doctest::Approx(m_at * std::exp(-fx.cfg.spring_decay_k * 0.02)).epsilon(1e-9));
  }
}

TEST_CASE("prism tracking") {
  Fixture fx;
  // station at -3x_B, base at the origin: the sight plane is the xz plane
  fx.setBase(Pose(Rotation(), Vec3::Zero()), Pose::identity());

  SUBCASE("prism in the sight plane gives no yaw command") {
    // prism lever (0.2, 0, 0.1) lies in the plane already
    const Rmp out = fx.policies.prismTracking(fx.in);
    CHECK(std::abs(out.f(5)) < 1e-12);
  }

  SUBCASE("yaw command reduces the out-of-plane distance") {
    const double psi = 0.3;
    fx.setBase(Pose(Rotation::rz(psi), Vec3::Zero()), Pose::identity());
    const Rmp out = fx.policies.prismTracking(fx.in);
    REQUIRE(out.metric(5, 5) > 0.0);
    // the prism sits at yaw +psi above the plane; yawing negative brings it back
    CHECK(out.f(5) < 0.0);
    fx.setBase(Pose(Rotation::rz(-psi), Vec3::Zero()), Pose::identity());
    CHECK(fx.policies.prismTracking(fx.in).f(5) > 0.0);
  }

  SUBCASE("only the yaw axis carries support") {
    fx.setBase(Pose(Rotation::rz(0.2), Vec3::Zero()), Pose::identity());
    const Rmp out = fx.policies.prismTracking(fx.in);
    for (int i = 0; i < 5; ++i) CHECK(out.metric(i, i) == doctest::Approx(0.0));
  }

  SUBCASE("degenerate geometry returns zero") {
    fx.in.station_position_B = Vec3::Zero();  // base directly above the station
    CHECK(fx.policies.prismTracking(fx.in).metric.norm() == 0.0);
  }
}

TEST_CASE("waypoint") {
  Fixture fx;

  SUBCASE("attracts toward the goal position") {
    const Pose goal(Rotation(), Vec3(1.0, 0.0, 0.0));
    const Rmp out = fx.policies.waypoint(fx.in, goal);
    CHECK(out.f.x() > 0.0);
    CHECK(std::abs(out.f.y()) < 1e-12);
  }

  SUBCASE("attracts toward the goal yaw") {
    const Pose goal(Rotation::rz(0.4), Vec3::Zero());
    const Rmp out = fx.policies.waypoint(fx.in, goal);
    CHECK(out.f(5) > 0.0);
  }

  SUBCASE("linear command is frame consistent under body yaw") {
    fx.setBase(Pose::identity(), Pose(Rotation::rz(M_PI / 2.0), Vec3::Zero()));
    const Pose goal(Rotation::rz(M_PI / 2.0), Vec3(1.0, 0.0, 0.0));
    const Rmp out = fx.policies.waypoint(fx.in, goal);
    // pulled back into O, the command still points at the goal
    CHECK(out.f.x() > 0.0);
    CHECK(std::abs(out.f.y()) < 1e-9);
  }

  SUBCASE("damps linear and angular velocity") {
    fx.in.velocity_O = Vec3(0.3, 0.0, 0.0);
    fx.in.ang_velocity_I = Vec3(0.0, 0.0, 0.2);
    const Rmp out = fx.policies.waypoint(fx.in, Pose::identity());
    CHECK(out.f.x() < 0.0);
    CHECK(out.f(5) < 0.0);
  }
}

TEST_CASE("wheel controller") {
  SUBCASE("integrates acceleration up to the speed limit") {
    WheelController wc(5.0, 0.05);
    Rmp p;
    p.f = Eigen::Vector2d(10.0, 0.0);
    p.metric = Eigen::Matrix2d::Identity();
    Vec2 cmd = Vec2::Zero();
    for (int i = 0; i < 400; ++i) cmd = wc.update(p, 0.005);
    CHECK(cmd.norm() == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(cmd.x() > 0.0);
  }

  SUBCASE("zero-metric policy decays the command") {
    WheelController wc(5.0, 0.05);
    Rmp p;
    p.f = Eigen::Vector2d(10.0, 0.0);
    p.metric = Eigen::Matrix2d::Identity();
    for (int i = 0; i < 100; ++i) wc.update(p, 0.005);
    const double before = wc.command().norm();
    for (int i = 0; i < 200; ++i) wc.update(Rmp::zero(2), 0.005);
    CHECK(wc.command().norm() < 0.05 * before);
    CHECK(before > 0.0);
  }

  SUBCASE("reset clears the command") {
    WheelController wc(5.0, 0.05);
    Rmp p;
    p.f = Eigen::Vector2d(1.0, 1.0);
    p.metric = Eigen::Matrix2d::Identity();
    wc.update(p, 0.01);
    wc.reset();
    CHECK(wc.command().norm() == 0.0);
  }
}

TEST_CASE("full policy stack fits the 200 Hz budget") {
  Fixture fx;
  fx.in.tool_offset = toolOffset(0.003, -0.002);
  DepthMeasurement d;
  d.distance = 0.22;
  fx.in.depth = d;
  fx.in.spring_compression = 0.06;
  fx.in.target_B = Vec3(0.02, 0.01, 0.0);
  fx.setBase(Pose(Rotation::rz(0.1), Vec3(0.5, 0.2, 1.8)),
             Pose(Rotation::rz(-0.05), Vec3(0.01, 0.0, 0.0)));
  const Pose goal(Rotation::rz(0.1), Vec3(0.5, 0.2, 1.9));

  const int ticks = 2000;  // 10 s of control at 200 Hz
  const auto start = std::chrono::steady_clock::now();
  double sink = 0.0;
  for (int i = 0; i < ticks; ++i) {
    const Rmp cmd = combine({fx.policies.eeFollowing(fx.in), fx.policies.depthServoing(fx.in),
                             fx.policies.springLoading(fx.in), fx.policies.prismTracking(fx.in),
                             fx.policies.waypoint(fx.in, goal)},
                            6);
    sink += cmd.f.sum();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(std::isfinite(sink));
  CHECK(elapsed < 10.0);  // wall budget for 10 s of simulated control
}
