#include <gtest/gtest.h>

#include "mvhmr/body/rotation.hpp"
#include "mvhmr/camera/camera.hpp"
#include "mvhmr/data/synth.hpp"
#include "mvhmr/tensor/ops.hpp"
#include "oracles.hpp"

using namespace mvhmr;
using namespace mvhmr::camera;
using oracle::homogeneous_projection;

namespace {

Eigen::Vector3d random_vec(data::Rng& rng, double lo, double hi) {
  return {data::uniform(rng, lo, hi), data::uniform(rng, lo, hi), data::uniform(rng, lo, hi)};
}


}  // namespace

TEST(Camera, IdentityAndTranslation) {
  MatX3 p(2, 3);
  p << 1, 2, 3, -1, 0.5, 2;
  EXPECT_TRUE(to_camera(p, CameraPose{}).isApprox(p));
  CameraPose shift;
  shift.t = {0, 0, 3};
  const MatX3 q = to_camera(p, shift);
  EXPECT_NEAR(q(0, 2), 6, 1e-15);
  EXPECT_NEAR(q(1, 2), 5, 1e-15);
}

TEST(Camera, ClosedFormProjections) {
  MatX3 p(2, 3);
  p << 0, 0, 2, 1, 0, 2;
  const MatX2 uv = project(p, CameraPose{}, Intrinsics{});
  EXPECT_DOUBLE_EQ(uv(0, 0), 32);
  EXPECT_DOUBLE_EQ(uv(0, 1), 32);
  EXPECT_DOUBLE_EQ(uv(1, 0), 82);
  EXPECT_DOUBLE_EQ(uv(1, 1), 32);
}

TEST(Camera, ProjectionMatchesHomogeneousOracle) {
  const Intrinsics K;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    data::Rng rng(seed);
    CameraPose pose;
    pose.R = random_vec(rng, -2, 2);
    pose.t = random_vec(rng, -0.5, 0.5) + Eigen::Vector3d(0, 0, 4);
    MatX3 pts(24, 3);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) pts.row(i) = random_vec(rng, -1, 1).transpose();
    const MatX2 ref = homogeneous_projection(pts, pose, K);
    ASSERT_LT((project(pts, pose, K) - ref).cwiseAbs().maxCoeff(), 1e-8) << "seed " << seed;

    // to_camera against the same 4x4 oracle.
    Eigen::Matrix4d E = Eigen::Matrix4d::Identity();
    E.topLeftCorner<3, 3>() = Eigen::AngleAxisd(pose.R.norm(), pose.R.normalized()).toRotationMatrix();
    E.topRightCorner<3, 1>() = pose.t;
    const MatX3 cam = to_camera(pts, pose);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      ASSERT_LT((cam.row(i).transpose() - (E * pts.row(i).transpose().homogeneous()).head<3>()).norm(), 1e-10);
    }
  }
}

TEST(Camera, TensorFormsMatchEigen) {
  data::Rng rng(3);
  CameraPose pose;
  pose.R = random_vec(rng, -1, 1);
  pose.t = Eigen::Vector3d(0.1, -0.2, 3.5);
  MatX3 pts(5, 3);
  for (Eigen::Index i = 0; i < 5; ++i) pts.row(i) = random_vec(rng, -1, 1).transpose();
  std::vector<double> pv(pts.data(), pts.data() + 15);
  const Tensor P = Tensor::from_vector({1, 5, 3}, pv, Dtype::f64);
  const Eigen::Matrix3d R = pose.rotation();
  std::vector<double> rv, tv{pose.t.x(), pose.t.y(), pose.t.z()};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rv.push_back(R(r, c));
  const Tensor cam = to_camera(P, Tensor::from_vector({1, 3, 3}, rv, Dtype::f64), Tensor::from_vector({1, 3}, tv, Dtype::f64));
  const auto uv = project(cam, Intrinsics{}, false).uv.to_vector();
  const MatX2 ref = project(pts, pose, Intrinsics{});
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(uv[static_cast<std::size_t>(i * 2)], ref(i, 0), 1e-10);
    EXPECT_NEAR(uv[static_cast<std::size_t>(i * 2 + 1)], ref(i, 1), 1e-10);
  }
}

TEST(Camera, ProjectionRejectsPointsBehind) {
  MatX3 p(3, 3);
  p << 0, 0, 2, 0, 0, 1e-4, 0, 0, -1;
  try {
    (void)project_camera_frame(p, Intrinsics{});
    FAIL();
  } catch (const ProjectionError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
  std::vector<double> v{0, 0, 2, 0, 0, -1};
  const auto clamped = project(Tensor::from_vector({1, 2, 3}, v, Dtype::f64), Intrinsics{}, true);
  EXPECT_TRUE(clamped.clamped);
  EXPECT_THROW((void)project(Tensor::from_vector({1, 2, 3}, v, Dtype::f64), Intrinsics{}, false), ProjectionError);
}

TEST(Camera, LookAtExamples) {
  const CameraPose pose = look_at({0, 0, -3}, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitY());
  MatX3 origin = MatX3::Zero(1, 3);
  const MatX3 c = to_camera(origin, pose);
  EXPECT_NEAR(c(0, 0), 0, 1e-12);
  EXPECT_NEAR(c(0, 1), 0, 1e-12);
  EXPECT_NEAR(c(0, 2), 3, 1e-12);
  const MatX2 uv = project(origin, pose, Intrinsics{});
  EXPECT_NEAR(uv(0, 0), 32, 1e-10);
  EXPECT_NEAR(uv(0, 1), 32, 1e-10);
  // World up maps to image up (negative v).
  MatX3 above(1, 3);
  above << 0, 0.5, 0;
  EXPECT_LT(project(above, pose, Intrinsics{})(0, 1), 32);

  EXPECT_THROW(look_at({0, 1, 0}, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitY()), std::invalid_argument);
  EXPECT_THROW(look_at(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()), std::invalid_argument);
}

TEST(Camera, LookAtDepthEqualsRadius) {
  data::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d target = random_vec(rng, -0.3, 0.3);
    Eigen::Vector3d dir = random_vec(rng, -1, 1);
    dir.y() *= 0.5;
    const double r = data::uniform(rng, 1, 5);
    const Eigen::Vector3d eye = target + r * dir.normalized();
    MatX3 t(1, 3);
    t.row(0) = target.transpose();
    const MatX3 c = to_camera(t, look_at(eye, target));
    EXPECT_NEAR(c(0, 2), (eye - target).norm(), 1e-9);
    EXPECT_NEAR(c(0, 0), 0, 1e-9);
    EXPECT_NEAR(c(0, 1), 0, 1e-9);
  }
}

TEST(Camera, BackProjectionRoundTrip) {
  data::Rng rng(6);
  const Intrinsics K;
  for (int i = 0; i < 100; ++i) {
    CameraPose pose;
    pose.R = random_vec(rng, -2, 2);
    pose.t = Eigen::Vector3d(0, 0, 4) + random_vec(rng, -0.3, 0.3);
    MatX3 p(1, 3);
    p.row(0) = random_vec(rng, -1, 1).transpose();
    const double depth = to_camera(p, pose)(0, 2);
    const MatX2 uv = project(p, pose, K);
    const Eigen::Vector3d back = back_project(uv.row(0).transpose(), depth, pose, K);
    EXPECT_LT((back - p.row(0).transpose()).norm(), 1e-8);
  }
}

TEST(Camera, IntrinsicsValidation) {
  Intrinsics K;
  EXPECT_NO_THROW(K.validate());
  K.focal = 0;
  EXPECT_THROW(K.validate(), std::invalid_argument);
  K = Intrinsics{};
  K.cx = 70;
  EXPECT_THROW(K.validate(), std::invalid_argument);
}

TEST(Camera, NormalizedPixelsSpanImage) {
  MatX2 uv(3, 2);
  uv << 0, 0, 32, 32, 64, 64;
  const MatX2 n = normalize_pixels(uv, Intrinsics{});
  EXPECT_DOUBLE_EQ(n(0, 0), -1);
  EXPECT_DOUBLE_EQ(n(1, 1), 0);
  EXPECT_DOUBLE_EQ(n(2, 0), 1);
}
