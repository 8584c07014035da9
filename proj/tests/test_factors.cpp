#include <doctest.h>

#include <random>

#include "fd_check.hpp"
#include "layout/factors.hpp"

using namespace layout;
using layout::testutil::jacobianError;

namespace {

std::mt19937_64 g_rng(42);

Vec3 randVec(double s = 1.0) {
  std::normal_distribution<double> n(0.0, s);
  return Vec3(n(g_rng), n(g_rng), n(g_rng));
}

LocalState randLocal() {
  LocalState x;
  x.q_OI = expSo3(randVec());
  x.p_OI = randVec();
  x.v_OI = randVec();
  x.b_a = randVec(0.02);
  x.b_g = randVec(0.02);
  return x;
}

GlobalState randGlobal() {
  GlobalState x;
  x.q_BO = expSo3(randVec());
  x.p_BO = randVec();
  return x;
}

PreintegratedImu randPim() {
  PreintegratedImu pim;
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    ImuMeasurement m;
    m.t_ns = i * 5000000;
    m.accel = randVec() + Vec3(0, 0, 9.81);
    m.gyro = 0.5 * randVec();
    pim.integrate(m, 0.005);
  }
  return pim;
}

constexpr double kTol = 1e-5;

}  // namespace

TEST_CASE("prior factor jacobians vs finite differences") {
  for (int trial = 0; trial < 100; ++trial) {
    Values values;
    const VariableKey kx{VariableKind::Local, 0};
    const VariableKey kg{VariableKind::Global, 0};
    values.emplace(kx, Variable(randLocal()));
    values.emplace(kg, Variable(randGlobal()));
    LocalPriorFactor lp(kx, randLocal(), Eigen::MatrixXd::Identity(15, 15));
    GlobalPriorFactor gp(kg, randGlobal(), Eigen::MatrixXd::Identity(6, 6));
    CHECK(jacobianError(lp, values) < kTol);
    CHECK(jacobianError(gp, values) < kTol);
  }
}

TEST_CASE("imu factor jacobians vs finite differences") {
  for (int trial = 0; trial < 100; ++trial) {
    Values values;
    const VariableKey ki{VariableKind::Local, 0}, kj{VariableKind::Local, 1};
    values.emplace(ki, Variable(randLocal()));
    values.emplace(kj, Variable(randLocal()));
    ImuFactor f(ki, kj, randPim());
    CHECK(jacobianError(f, values) < kTol);
  }
}

TEST_CASE("between pose factor jacobians vs finite differences") {
  for (int trial = 0; trial < 100; ++trial) {
    Values values;
    const VariableKey ki{VariableKind::Local, 0}, kj{VariableKind::Local, 1};
    values.emplace(ki, Variable(randLocal()));
    values.emplace(kj, Variable(randLocal()));
    const Pose extrinsic(expSo3(randVec(0.5)), randVec(0.2));
    const Pose measured(expSo3(randVec()), randVec());
    BetweenPoseFactor f(ki, kj, measured, extrinsic, Eigen::MatrixXd::Identity(6, 6));
    CHECK(jacobianError(f, values) < kTol);
  }
}

TEST_CASE("between position factor jacobians vs finite differences") {
  for (int trial = 0; trial < 100; ++trial) {
    Values values;
    const VariableKey ki{VariableKind::Local, 0}, kj{VariableKind::Local, 1};
    values.emplace(ki, Variable(randLocal()));
    values.emplace(kj, Variable(randLocal()));
    BetweenPositionFactor f(ki, kj, randVec(), randVec(0.3), Eigen::MatrixXd::Identity(3, 3));
    CHECK(jacobianError(f, values) < kTol);
  }
}

TEST_CASE("reference frame factor jacobians vs finite differences") {
  for (int trial = 0; trial < 100; ++trial) {
    Values values;
    const VariableKey kg{VariableKind::Global, 0};
    values.emplace(kg, Variable(randGlobal()));
    ReferenceFrameFactor f(kg, randVec(), randVec(), Eigen::MatrixXd::Identity(3, 3));
    CHECK(jacobianError(f, values) < kTol);
  }
}

TEST_CASE("global between and bias walk factor jacobians vs finite differences") {
  for (int trial = 0; trial < 100; ++trial) {
    Values values;
    const VariableKey ki{VariableKind::Global, 0}, kj{VariableKind::Global, 1};
    values.emplace(ki, Variable(randGlobal()));
    values.emplace(kj, Variable(randGlobal()));
    GlobalBetweenFactor f(ki, kj, Pose(expSo3(randVec()), randVec()),
                          Eigen::MatrixXd::Identity(6, 6));
    CHECK(jacobianError(f, values) < kTol);

    Values lv;
    const VariableKey li{VariableKind::Local, 0}, lj{VariableKind::Local, 1};
    lv.emplace(li, Variable(randLocal()));
    lv.emplace(lj, Variable(randLocal()));
    BiasRandomWalkFactor bw(li, lj, Eigen::MatrixXd::Identity(6, 6));
    CHECK(jacobianError(bw, lv) < kTol);
  }
}

TEST_CASE("reference frame residual cases") {
  const VariableKey kg{VariableKind::Global, 0};

  SUBCASE("perfect alignment gives zero residual") {
    Values values;
    GlobalState identity_state;
    values.emplace(kg, Variable(identity_state));
    const Vec3 p_op(0.4, 0.2, 1.0);
    ReferenceFrameFactor f(kg, p_op, p_op, Eigen::MatrixXd::Identity(3, 3));
    CHECK(f.unwhitenedError(values).norm() < 1e-15);
  }
  SUBCASE("pure translation isolated") {
    Values values;
    GlobalState x;
    x.p_BO = Vec3(1, 0, 0);
    values.emplace(kg, Variable(x));
    const Vec3 p_op(0.4, 0.2, 1.0);
    ReferenceFrameFactor f(kg, p_op + Vec3(1, 0, 0), p_op, Eigen::MatrixXd::Identity(3, 3));
    CHECK(f.unwhitenedError(values).norm() < 1e-15);
    ReferenceFrameFactor f2(kg, p_op, p_op, Eigen::MatrixXd::Identity(3, 3));
    CHECK((f2.unwhitenedError(values) - Vec3(-1, 0, 0)).norm() < 1e-15);
  }
  SUBCASE("1 degree yaw with 0.2 m lever arm gives about 3.5 mm") {
    Values values;
    GlobalState truth;  // true B->O is identity
    GlobalState wrong;
    wrong.q_BO = Rotation::rz(1.0 * M_PI / 180.0);
    values.emplace(kg, Variable(wrong));
    const Vec3 p_op(0.2, 0.0, 0.0);  // 0.2 m horizontal lever arm
    ReferenceFrameFactor f(kg, p_op, p_op, Eigen::MatrixXd::Identity(3, 3));
    const double err = f.unwhitenedError(values).norm();
    CHECK(err == doctest::Approx(3.5e-3).epsilon(0.01));
  }
}
