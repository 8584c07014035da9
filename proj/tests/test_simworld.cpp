#include <doctest.h>

#include <cmath>

#include "layout/sim_world.hpp"

using namespace layout;

namespace {

SimWorld makeWorld(WorldConfig cfg = {}, uint64_t seed = 1) {
  return SimWorld(cfg, FrameConfig{}, seed);
}

/// Flies the base straight up until contact engages.
void driveToContact(SimWorld& world) {
  const double dt = 1.0 / 200.0;
  for (int i = 0; i < 4000 && !world.ee().contact; ++i) {
    Vec6 cmd = Vec6::Zero();
    cmd.z() = 2.0 * (world.config().ceiling_height - 0.12 - world.base().pose.translation.z()) -
              1.5 * world.base().velocity.z();
    world.step(dt, cmd, Vec2::Zero());
  }
  REQUIRE(world.ee().contact);
}

}  // namespace

TEST_CASE("undisturbed hover stays put") {
  SimWorld world = makeWorld();
  for (int i = 0; i < 400; ++i) world.step(1.0 / 200.0, Vec6::Zero(), Vec2::Zero());
  CHECK(world.base().pose.translation.norm() < 1e-12);
  CHECK(world.base().velocity.norm() < 1e-12);
  CHECK_FALSE(world.ee().contact);
  CHECK(world.time() == doctest::Approx(2.0));
}

TEST_CASE("commanded acceleration moves the base with the configured lag") {
  SimWorld world = makeWorld();
  Vec6 cmd = Vec6::Zero();
  cmd.x() = 1.0;
  for (int i = 0; i < 200; ++i) world.step(1.0 / 200.0, cmd, Vec2::Zero());
  CHECK(world.base().velocity.x() > 0.3);         // below the undamped 1.0 m/s
  CHECK(world.base().pose.translation.x() > 0.1);
  CHECK(world.base().pose.translation.y() == doctest::Approx(0.0));
}

TEST_CASE("contact engages at spring reach with hysteresis") {
  SimWorld world = makeWorld();
  driveToContact(world);
  const double dist = world.trueDistanceToCeiling();
  CHECK(dist <= world.config().spring_rest_reach + 1e-6);

  // Back off less than the hysteresis band: stays in contact.
  SUBCASE("small retreat keeps contact") {
    const double dt = 1.0 / 200.0;
    Vec6 cmd = Vec6::Zero();
    for (int i = 0; i < 40; ++i) {
      cmd.z() = -0.2;
      world.step(dt, cmd, Vec2::Zero());
      if (world.trueDistanceToCeiling() >
          world.config().spring_rest_reach + 0.8 * world.config().contact_hysteresis)
        break;
    }
    if (world.trueDistanceToCeiling() <
        world.config().spring_rest_reach + world.config().contact_hysteresis) {
      CHECK(world.ee().contact);
    }
  }
}

TEST_CASE("spring compression follows the penetration depth, clamped to travel") {
  SimWorld world = makeWorld();
  driveToContact(world);
  const double dt = 1.0 / 200.0;
  Vec6 cmd = Vec6::Zero();
  cmd.z() = 1.5;
  for (int i = 0; i < 800; ++i) world.step(dt, cmd, Vec2::Zero());
  const double penetration =
      world.config().spring_rest_reach - world.trueDistanceToCeiling();
  CHECK(world.ee().compression ==
        doctest::Approx(std::clamp(penetration, 0.0, world.config().spring_max_travel)));
  CHECK(world.ee().compression <= world.config().spring_max_travel + 1e-12);
  // sizing: full-force load at half travel is 15 N
  CHECK(world.config().spring_constant * 0.5 * world.config().spring_max_travel ==
        doctest::Approx(15.0));
}

TEST_CASE("pen actuation requires contact and projects onto the ceiling") {
  SimWorld world = makeWorld();
  CHECK_THROWS_AS(world.actuatePen(Vec3(0, 0, 2.0)), std::logic_error);
  driveToContact(world);
  const MarkRecord rec = world.actuatePen(Vec3(0.01, -0.02, 2.0));
  CHECK(rec.actual.z() == doctest::Approx(world.config().ceiling_height));
  CHECK((rec.commanded - Vec3(0.01, -0.02, 2.0)).norm() == doctest::Approx(0.0));
}

TEST_CASE("wheels steer the tool offset when compliant and actuated") {
  SimWorld world = makeWorld();
  driveToContact(world);
  const double dt = 1.0 / 200.0;
  Vec6 hold = Vec6::Zero();
  hold.z() = 0.3;
  for (int i = 0; i < 400; ++i) world.step(dt, hold, Vec2(0.01, 0.0));
  CHECK(world.ee().offset.x() > 0.005);
  CHECK(std::abs(world.ee().offset.y()) < 1e-6);

  SUBCASE("offset is clamped at the mechanical travel") {
    for (int i = 0; i < 2000; ++i) world.step(dt, hold, Vec2(0.05, 0.0));
    CHECK(world.ee().offset.norm() <= world.config().tool_offset_max + 1e-12);
  }
}

TEST_CASE("rigid (compliance disabled) keeps the offset at zero") {
  WorldConfig cfg;
  cfg.compliance_enabled = false;
  SimWorld world = makeWorld(cfg);
  driveToContact(world);
  Vec6 hold = Vec6::Zero();
  hold.z() = 0.3;
  for (int i = 0; i < 200; ++i) world.step(1.0 / 200.0, hold, Vec2(0.02, 0.0));
  CHECK(world.ee().offset.norm() == doctest::Approx(0.0));
  CHECK(world.ee().compression == doctest::Approx(0.0));
  // actuated rigid contact: the wheels drag the whole base
  CHECK(world.base().velocity.x() > 0.005);
}

TEST_CASE("contact disabled: the base flies through the reach distance freely") {
  WorldConfig cfg;
  cfg.contact_enabled = false;
  SimWorld world = makeWorld(cfg);
  const double dt = 1.0 / 200.0;
  Vec6 cmd = Vec6::Zero();
  for (int i = 0; i < 3000; ++i) {
    cmd.z() = 2.0 * (cfg.ceiling_height - 0.05 - world.base().pose.translation.z()) -
              1.5 * world.base().velocity.z();
    world.step(dt, cmd, Vec2::Zero());
  }
  CHECK_FALSE(world.ee().contact);
  CHECK(world.trueDistanceToCeiling() < cfg.spring_rest_reach);
}

TEST_CASE("contact friction attenuates planar disturbance") {
  WorldConfig cfg;
  cfg.disturbance_accel_std = 0.3;
  auto planarWander = [&](bool with_contact) {
    WorldConfig c = cfg;
    c.contact_enabled = with_contact;
    SimWorld world(c, FrameConfig{}, 11);
    if (with_contact) driveToContact(world);
    const double dt = 1.0 / 200.0;
    double max_err = 0.0;
    const Vec2 anchor = world.base().pose.translation.head<2>();
    Vec6 cmd = Vec6::Zero();
    for (int i = 0; i < 4000; ++i) {
      cmd.z() = with_contact ? 0.3 : 0.0;
      cmd.head<2>() = -2.0 * (world.base().pose.translation.head<2>() - anchor) -
                      2.0 * world.base().velocity.head<2>();
      world.step(dt, cmd, Vec2::Zero());
      max_err = std::max(max_err,
                         (world.base().pose.translation.head<2>() - anchor).norm());
    }
    return max_err;
  };
  CHECK(planarWander(true) < planarWander(false));
}

TEST_CASE("identical seeds reproduce the disturbed trajectory exactly") {
  WorldConfig cfg;
  cfg.disturbance_accel_std = 0.4;
  SimWorld a = makeWorld(cfg, 5);
  SimWorld b = makeWorld(cfg, 5);
  for (int i = 0; i < 500; ++i) {
    a.step(1.0 / 200.0, Vec6::Zero(), Vec2::Zero());
    b.step(1.0 / 200.0, Vec6::Zero(), Vec2::Zero());
  }
  CHECK((a.base().pose.translation - b.base().pose.translation).norm() == 0.0);
  CHECK((a.base().velocity - b.base().velocity).norm() == 0.0);
}

TEST_CASE("frame helpers are consistent with the configured geometry") {
  WorldConfig cfg;
  cfg.start_pose = Pose(Rotation::rz(0.5), Vec3(0.3, -0.2, 1.0));
  SimWorld world = makeWorld(cfg);
  // T_BO is the start pose; T_OI at t=0 is identity
  const Pose t_oi = world.trueOdomToImu();
  CHECK(t_oi.translation.norm() < 1e-12);
  CHECK(t_oi.rotation.angularDistance(Rotation::identity()) < 1e-12);
  // prism lever arm
  const Vec3 p = world.truePrismPositionB();
  const Vec3 expected = cfg.start_pose * Vec3(0.2, 0.0, 0.1);
  CHECK((p - expected).norm() < 1e-12);
}
