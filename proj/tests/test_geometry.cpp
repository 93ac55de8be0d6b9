#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fploc/geometry.hpp"
#include "fploc/random.hpp"

using namespace fploc;

TEST_CASE("wrap_angle maps into (-pi, pi]")
{
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(2.0 * kPi + 0.25) == doctest::Approx(0.25));
  CHECK(wrap_angle(-2.0 * kPi - 0.25) == doctest::Approx(-0.25));

  Rng rng(3);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng);
    const double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(std::abs(std::remainder(a - w, 2.0 * kPi)) < 1e-9);
  }
}

TEST_CASE("Pose2 composition keeps theta normalized")
{
  const Pose2 a(1.0, 2.0, 3.0);
  const Pose2 b(0.5, -0.5, 3.0);
  const Pose2 c = a * b;
  CHECK(c.theta > -kPi);
  CHECK(c.theta <= kPi);
  CHECK(c.theta == doctest::Approx(wrap_angle(6.0)));
}

TEST_CASE("Pose2 inverse and between")
{
  Rng rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const Pose2 a(u(rng), u(rng), u(rng));
    const Pose2 b(u(rng), u(rng), u(rng));
    const Pose2 id = a * a.inverse();
    CHECK(std::abs(id.x) < 1e-12);
    CHECK(std::abs(id.y) < 1e-12);
    CHECK(std::abs(id.theta) < 1e-12);
    const Pose2 back = a * between(a, b);
    CHECK(back.x == doctest::Approx(b.x));
    CHECK(back.y == doctest::Approx(b.y));
    CHECK(std::abs(wrap_angle(back.theta - b.theta)) < 1e-12);
  }
}

TEST_CASE("Pose2 composition is associative")
{
  Rng rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const Pose2 a(u(rng), u(rng), u(rng));
    const Pose2 b(u(rng), u(rng), u(rng));
    const Pose2 c(u(rng), u(rng), u(rng));
    const Pose2 l = (a * b) * c;
    const Pose2 r = a * (b * c);
    CHECK(l.x == doctest::Approx(r.x));
    CHECK(l.y == doctest::Approx(r.y));
    CHECK(std::abs(wrap_angle(l.theta - r.theta)) < 1e-12);
  }
}

TEST_CASE("Pose3 rotation stays unit norm and inverse composes to identity")
{
  const Pose3 p = Pose3::from_xyz_rpy({1.0, -2.0, 0.5}, 0.3, -0.2, 1.1);
  CHECK(std::abs(p.rotation.norm() - 1.0) < 1e-12);
  const Pose3 id = p * p.inverse();
  CHECK(id.translation.norm() < 1e-12);
  CHECK(std::abs(std::abs(id.rotation.w()) - 1.0) < 1e-12);

  const Eigen::Vector3d x(0.3, 0.4, -0.7);
  CHECK((p.inverse().apply(p.apply(x)) - x).norm() < 1e-12);
}

TEST_CASE("Pose3 from_pose2 agrees with Pose2 on the plane")
{
  const Pose2 a(1.5, -0.5, 0.7);
  const Pose2 b(0.2, 0.3, -1.2);
  const Pose3 c = Pose3::from_pose2(a) * Pose3::from_pose2(b);
  const Pose2 ref = a * b;
  CHECK(c.translation.x() == doctest::Approx(ref.x));
  CHECK(c.translation.y() == doctest::Approx(ref.y));
  CHECK(c.translation.z() == 0.0);
  const Eigen::Matrix3d r = c.rotation_matrix();
  CHECK(std::atan2(r(1, 0), r(0, 0)) == doctest::Approx(ref.theta));
}

TEST_CASE("derive_seed separates streams and is reproducible")
{
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(derive_seed(1, 2, 0) == derive_seed(1, 2));
}
