#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <cmath>
#include <random>

#include "layout/rmp.hpp"

using namespace layout;

namespace {

Eigen::MatrixXd randomPsd(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = n(rng);
  return m * m.transpose();
}

Eigen::VectorXd randomVec(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = n(rng);
  return v;
}

/// The printed soft-normalization evaluated independently in extended
/// precision, as a scalar oracle.
long double printedOracle(long double z, long double gamma) {
  const long double n = std::fabs(z);
  return z / (n + gamma * std::log1p(std::exp(gamma * n)));
}

}  // namespace

TEST_CASE("pull through the identity map leaves the policy unchanged") {
  Rmp p;
  p.f = Eigen::Vector3d(1.0, -2.0, 0.5);
  p.metric = Eigen::Matrix3d::Identity() * 2.0;
  const Rmp out = pull(p, Eigen::Matrix3d::Identity());
  CHECK((out.f - p.f).norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((out.metric - p.metric).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pull through a rotation with identity metric rotates f") {
  const double a = 0.7;
  Eigen::Matrix3d r;
  r = Eigen::AngleAxisd(a, Eigen::Vector3d(1, 2, 3).normalized());
  Rmp p;
  p.f = Eigen::Vector3d(0.3, 0.1, -0.4);
  p.metric = Eigen::Matrix3d::Identity();
  const Rmp out = pull(p, r);
  CHECK((out.f - r.transpose() * p.f).norm() < 1e-12);
  CHECK((out.metric - Eigen::Matrix3d::Identity()).norm() < 1e-12);
}

TEST_CASE("rank-deficient metric zeroes the unobserved component") {
  Rmp p;
  p.f = Eigen::Vector3d(1.0, 2.0, 3.0);
  p.metric = Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal();
  const Rmp out = pull(p, Eigen::Matrix3d::Identity());
  CHECK(out.f.x() == doctest::Approx(1.0));
  CHECK(out.f.y() == doctest::Approx(2.0));
  CHECK(out.f.z() == doctest::Approx(0.0));
}

TEST_CASE("pull rejects mismatched dimensions") {
  Rmp p = Rmp::zero(3);
  CHECK_THROWS_AS(pull(p, Eigen::MatrixXd::Identity(2, 2)), std::invalid_argument);
}

TEST_CASE("combine") {
  SUBCASE("empty list yields the zero policy") {
    const Rmp out = combine({}, 4);
    CHECK(out.f.norm() == 0.0);
    CHECK(out.metric.norm() == 0.0);
  }

  SUBCASE("single full-rank policy is returned unchanged") {
    std::mt19937_64 rng(1);
    Rmp p;
    p.f = randomVec(rng, 3);
    p.metric = randomPsd(rng, 3) + Eigen::Matrix3d::Identity();
    const Rmp out = combine({p}, 3);
    CHECK((out.f - p.f).norm() < 1e-9);
  }

  SUBCASE("equal identity metrics average the accelerations") {
    Rmp a, b;
    a.f = Eigen::Vector2d(1.0, 0.0);
    a.metric = Eigen::Matrix2d::Identity();
    b.f = Eigen::Vector2d(0.0, 2.0);
    b.metric = Eigen::Matrix2d::Identity();
    const Rmp out = combine({a, b}, 2);
    CHECK(out.f.x() == doctest::Approx(0.5));
    CHECK(out.f.y() == doctest::Approx(1.0));
  }

  SUBCASE("orthogonal metrics compose components exactly") {
    Rmp a, b;
    a.f = Eigen::Vector2d(3.0, 99.0);
    a.metric = Eigen::Vector2d(1.0, 0.0).asDiagonal();
    b.f = Eigen::Vector2d(-99.0, -4.0);
    b.metric = Eigen::Vector2d(0.0, 1.0).asDiagonal();
    const Rmp out = combine({a, b}, 2);
    CHECK(out.f.x() == doctest::Approx(3.0));
    CHECK(out.f.y() == doctest::Approx(-4.0));
  }
}

TEST_CASE("soft normalization") {
  SUBCASE("zero maps to zero") {
    CHECK(softNormalize(Eigen::Vector3d::Zero(), 1.0).norm() == 0.0);
  }

  SUBCASE("direction is preserved") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd z = randomVec(rng, 3);
      const Eigen::VectorXd s = softNormalize(z, 0.7);
      CHECK(s.normalized().dot(z.normalized()) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("printed formula matches the extended-precision scalar oracle") {
    Eigen::VectorXd z(1);
    z << 10.0;
    const Eigen::VectorXd s = softNormalize(z, 0.1, SoftNormVariant::Printed);
    CHECK(s(0) ==
          doctest::Approx(static_cast<double>(printedOracle(10.0L, 0.1L))).epsilon(1e-14));
  }

  SUBCASE("standard variant approaches unit normalization for large inputs") {
    Eigen::VectorXd z(2);
    z << 300.0, -400.0;  // norm 500
    const Eigen::VectorXd s = softNormalize(z, 1.0, SoftNormVariant::Standard);
    CHECK(s.norm() == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("printed variant saturates below 1/(1+gamma^2)") {
    Eigen::VectorXd z(1);
    z << 1e6;
    const Eigen::VectorXd s = softNormalize(z, 1.0, SoftNormVariant::Printed);
    CHECK(s(0) == doctest::Approx(0.5).epsilon(1e-4));
  }
}

TEST_CASE("attractor") {
  const Eigen::Vector3d x(1.0, 2.0, 3.0);

  SUBCASE("fixed point gives zero acceleration") {
    CHECK(attractor(x, x, Eigen::Vector3d::Zero(), 2.0, 1.0, 1.0).norm() == 0.0);
  }

  SUBCASE("points toward the target") {
    const Eigen::Vector3d target(2.0, 2.0, 3.0);
    const Eigen::VectorXd f = attractor(x, target, Eigen::Vector3d::Zero(), 2.0, 1.0, 1.0);
    CHECK(f.x() > 0.0);
    CHECK(f.y() == doctest::Approx(0.0));
  }

  SUBCASE("beta damps velocity") {
    const Eigen::Vector3d v(0.5, 0.0, 0.0);
    const Eigen::VectorXd f = attractor(x, x, v, 2.0, 3.0, 1.0);
    CHECK(f.x() == doctest::Approx(-1.5));
  }

  SUBCASE("scalar case matches the formula") {
    Eigen::VectorXd x1(1), t1(1), v1(1);
    x1 << 0.0;
    t1 << 0.5;
    v1 << 0.0;
    const Eigen::VectorXd f = attractor(x1, t1, v1, 1.0, 0.0, 1.0);
    CHECK(f(0) == doctest::Approx(static_cast<double>(printedOracle(0.5L, 1.0L))).epsilon(1e-14));
  }
}

TEST_CASE("algebra properties over random instances") {
  std::mt19937_64 rng(77);

  SUBCASE("pulled-back metrics stay symmetric PSD") {
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
      Rmp p;
      p.f = randomVec(rng, 3);
      p.metric = randomPsd(rng, 3);
      Eigen::MatrixXd j(3, 4);
      for (int i = 0; i < j.size(); ++i) j(i / 4, i % 4) = n(rng);
      const Rmp out = pull(p, j);
      CHECK((out.metric - out.metric.transpose()).norm() < 1e-9);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.metric);
      CHECK(eig.eigenvalues().minCoeff() > -1e-10 * std::max(1.0, out.metric.norm()));
    }
  }

  SUBCASE("combine is permutation invariant") {
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<Rmp> ps(3);
      for (auto& p : ps) {
        p.f = randomVec(rng, 4);
        p.metric = randomPsd(rng, 4);
      }
      const Rmp a = combine({ps[0], ps[1], ps[2]}, 4);
      const Rmp b = combine({ps[2], ps[0], ps[1]}, 4);
      CHECK((a.f - b.f).norm() < 1e-8 * std::max(1.0, a.f.norm()));
      CHECK((a.metric - b.metric).norm() < 1e-9);
    }
  }

  SUBCASE("zero-metric policies are equivalent to omitted ones") {
    for (int trial = 0; trial < 200; ++trial) {
      Rmp live, dead;
      live.f = randomVec(rng, 3);
      live.metric = randomPsd(rng, 3);
      dead.f = randomVec(rng, 3);
      dead.metric = Eigen::Matrix3d::Zero();
      const Rmp with = combine({live, dead}, 3);
      const Rmp without = combine({live}, 3);
      CHECK((with.f - without.f).norm() < 1e-9 * std::max(1.0, without.f.norm()));
      CHECK((with.metric - without.metric).norm() == 0.0);
    }
  }

  SUBCASE("duplicating a full-rank policy does not change the mean") {
    for (int trial = 0; trial < 200; ++trial) {
      Rmp p;
      p.f = randomVec(rng, 3);
      p.metric = randomPsd(rng, 3) + Eigen::Matrix3d::Identity() * 0.1;
      const Rmp once = combine({p}, 3);
      const Rmp twice = combine({p, p}, 3);
      CHECK((once.f - twice.f).norm() < 1e-8 * std::max(1.0, once.f.norm()));
    }
  }
}
