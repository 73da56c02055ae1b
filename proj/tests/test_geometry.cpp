#include <doctest.h>

#include <cmath>
#include <random>

#include <lane3d/geometry.hpp>

#include <nlohmann/json.hpp>

using namespace lane3d;

namespace {

double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

RigidTransform random_transform(std::mt19937_64& rng) {
  const Eigen::Vector3d axis =
      Eigen::Vector3d(u01(rng) - 0.5, u01(rng) - 0.5, u01(rng) - 0.5).normalized();
  const double angle = (u01(rng) - 0.5) * 2.0 * M_PI;
  const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  return {r, Eigen::Vector3d(u01(rng) * 10 - 5, u01(rng) * 10 - 5, u01(rng) * 10 - 5)};
}

GroundPoint random_point(std::mt19937_64& rng) {
  return {u01(rng) * 20 - 10, u01(rng) * 20 - 10, u01(rng) * 20 - 10};
}

// The spec's worked camera: (x, y, z) -> camera (x, 1.5 - z, y).
RigidTransform spec_camera_extrinsics() {
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  return {r, Eigen::Vector3d(0, 1.5, 0)};
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("transform_point basics") {
  const GroundPoint p{1, 2, 3};
  const GroundPoint same = transform_point(p, RigidTransform::identity());
  CHECK(same.x == doctest::Approx(1).epsilon(1e-15));
  CHECK(same.y == doctest::Approx(2).epsilon(1e-15));
  CHECK(same.z == doctest::Approx(3).epsilon(1e-15));

  const GroundPoint moved = transform_point({0, 0, 0}, RigidTransform::translation(0, 5, 0));
  CHECK(moved.x == 0.0);
  CHECK(moved.y == 5.0);
  CHECK(moved.z == 0.0);
}

TEST_CASE("transform_point rot_z(90) matches the matrix oracle") {
  // Independent oracle: explicit matrix-vector product.
  const double c = std::cos(M_PI / 2), s = std::sin(M_PI / 2);
  Eigen::Matrix3d oracle;
  oracle << c, -s, 0, s, c, 0, 0, 0, 1;
  const Eigen::Vector3d expect = oracle * Eigen::Vector3d(1, 0, 0);

  const GroundPoint got = transform_point({1, 0, 0}, RigidTransform::rotation_z(90));
  CHECK(got.x == doctest::Approx(expect.x()).epsilon(1e-12));
  CHECK(got.y == doctest::Approx(expect.y()).epsilon(1e-12));
  CHECK(got.z == doctest::Approx(expect.z()).epsilon(1e-12));
  CHECK(got.y == doctest::Approx(1.0));
}

TEST_CASE("compose: identity, translations, rotations") {
  const RigidTransform id = compose(RigidTransform::identity(), RigidTransform::identity());
  CHECK((id.r - Eigen::Matrix3d::Identity()).norm() == doctest::Approx(0).epsilon(1e-12));
  CHECK(id.t.norm() == doctest::Approx(0).epsilon(1e-12));

  const RigidTransform t3 =
      compose(RigidTransform::translation(0, 1, 0), RigidTransform::translation(0, 2, 0));
  CHECK(t3.t.y() == doctest::Approx(3.0));

  // Matrix-product oracle for rot_z(90) ∘ rot_z(90) = rot_z(180).
  const RigidTransform r180 =
      compose(RigidTransform::rotation_z(90), RigidTransform::rotation_z(90));
  const Eigen::Matrix3d oracle = RigidTransform::rotation_z(90).r * RigidTransform::rotation_z(90).r;
  CHECK((r180.r - oracle).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((r180.r - RigidTransform::rotation_z(180).r).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("compose semantics and associativity on random transforms") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const RigidTransform a = random_transform(rng);
    const RigidTransform b = random_transform(rng);
    const RigidTransform c = random_transform(rng);
    const GroundPoint p = random_point(rng);

    const GroundPoint via_compose = transform_point(p, compose(a, b));
    const GroundPoint via_chain = transform_point(transform_point(p, b), a);
    CHECK(std::abs(via_compose.x - via_chain.x) < 1e-9);
    CHECK(std::abs(via_compose.y - via_chain.y) < 1e-9);
    CHECK(std::abs(via_compose.z - via_chain.z) < 1e-9);

    const GroundPoint left = transform_point(p, compose(compose(a, b), c));
    const GroundPoint right = transform_point(p, compose(a, compose(b, c)));
    CHECK(std::abs(left.x - right.x) < 1e-9);
    CHECK(std::abs(left.y - right.y) < 1e-9);
    CHECK(std::abs(left.z - right.z) < 1e-9);
  }
}

TEST_CASE("rigidity: pairwise distances preserved") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const RigidTransform t = random_transform(rng);
    const GroundPoint p = random_point(rng);
    const GroundPoint q = random_point(rng);
    const double before = (p.vec() - q.vec()).norm();
    const double after = (transform_point(p, t).vec() - transform_point(q, t).vec()).norm();
    CHECK(std::abs(before - after) < 1e-9);
  }
}

TEST_CASE("constructor rejects non-orthonormal rotations") {
  Eigen::Matrix3d shear = Eigen::Matrix3d::Identity();
  shear(0, 1) = 1e-3;
  CHECK_THROWS_AS(RigidTransform(shear, Eigen::Vector3d::Zero()), Error);

  Eigen::Matrix3d reflect = Eigen::Matrix3d::Identity();
  reflect(2, 2) = -1.0;  // orthonormal but det = -1
  CHECK_THROWS_AS(RigidTransform(reflect, Eigen::Vector3d::Zero()), Error);
}

TEST_CASE("projection: worked example") {
  // Hand-computed through the matrix oracle: camera point (0, 1.5, 10),
  // u~ = 2400, v~ = 3300, d = 10, then the 1/8 feature rescale.
  const CameraIntrinsics k(1000, 1000, 240, 180);
  const ImageDims dims(360, 480, 45, 60);
  const FeaturePoint fp =
      project_ground_to_feature({0, 10, 0}, k, spec_camera_extrinsics(), dims);
  CHECK(fp.u == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(fp.v == doctest::Approx(41.25).epsilon(1e-12));
  CHECK(fp.d == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("projection: principal point and behind-camera errors") {
  const CameraIntrinsics k(1000, 1000, 240, 180);
  const ImageDims dims(360, 480, 45, 60);
  // Optical axis at depth 10 -> camera (0, 0, 10) -> ground (0, 10, 1.5).
  const FeaturePoint fp =
      project_ground_to_feature({0, 10, 1.5}, k, spec_camera_extrinsics(), dims);
  CHECK(fp.u == doctest::Approx(60.0 / 480.0 * 240.0));
  CHECK(fp.v == doctest::Approx(45.0 / 360.0 * 180.0));
  CHECK(fp.u == doctest::Approx(30.0));
  CHECK(fp.v == doctest::Approx(22.5));

  CHECK_THROWS_AS(project_ground_to_feature({0, 0, 0}, k, spec_camera_extrinsics(), dims), Error);
  try {
    project_ground_to_feature({0, -5, 0}, k, spec_camera_extrinsics(), dims);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DepthNonPositive);
  }
}

TEST_CASE("round trip: project then unproject recovers the point") {
  const CameraIntrinsics k(1000, 1000, 240, 180);
  const ImageDims dims(360, 480, 45, 60);
  const RigidTransform t_gc = spec_camera_extrinsics();

  std::mt19937_64 rng(3);
  int tested = 0;
  while (tested < 500) {
    const GroundPoint p{u01(rng) * 40 - 20, u01(rng) * 99 + 1, u01(rng) * 6 - 3};
    const FeaturePoint fp = project_ground_to_feature(p, k, t_gc, dims);
    const GroundPoint back = unproject_feature_point(fp, k, t_gc, dims);
    CHECK(std::abs(back.x - p.x) < 1e-6);
    CHECK(std::abs(back.y - p.y) < 1e-6);
    CHECK(std::abs(back.z - p.z) < 1e-6);
    ++tested;
  }
}

TEST_CASE("json round trip for camera types") {
  const CameraIntrinsics k(400, 410, 240, 180);
  nlohmann::json jk;
  to_json(jk, k);
  CHECK(jk.at("K").size() == 9);
  CameraIntrinsics k2;
  from_json(jk, k2);
  CHECK((k2.k - k.k).cwiseAbs().maxCoeff() == 0.0);

  const RigidTransform t(RigidTransform::rotation_x(12.5).r, Eigen::Vector3d(1, 2, 3));
  nlohmann::json jt;
  to_json(jt, t);
  CHECK(jt.at("T").size() == 12);
  RigidTransform t2;
  from_json(jt, t2);
  CHECK((t2.r - t.r).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((t2.t - t.t).norm() < 1e-15);

  const ImageDims dims(360, 480, 45, 60);
  nlohmann::json jd;
  to_json(jd, dims);
  ImageDims d2;
  from_json(jd, d2);
  CHECK(d2.h == 360);
  CHECK(d2.w == 480);
  CHECK(d2.h_f == 45);
  CHECK(d2.w_f == 60);

  nlohmann::json bad = jd;
  bad["Hf"] = 1000;  // feature grid larger than the image
  CHECK_THROWS_AS(from_json(bad, d2), Error);
}

}  // TEST_SUITE
