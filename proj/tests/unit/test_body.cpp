#include <gtest/gtest.h>

#include "oracles.hpp"

#include "mvhmr/body/body_model.hpp"
#include "mvhmr/body/rotation.hpp"
#include "mvhmr/data/synth.hpp"
#include "mvhmr/tensor/ops.hpp"

using namespace mvhmr;
using namespace mvhmr::body;
using oracle::naive_lbs;
using oracle::skew;

namespace {

BodyState random_state(std::uint64_t seed) {
  data::Rng rng(seed);
  BodyState s = data::sample_body(rng);
  for (int a = 0; a < 3; ++a) s.theta_g(a) = data::uniform(rng, -1.5, 1.5);
  return s;
}

}  // namespace

TEST(BodyModel, TemplateInvariants) {
  const auto m = build_template(1);
  EXPECT_EQ(m.vertex_count(), 432u);
  for (Eigen::Index v = 0; v < m.skinning_weights.rows(); ++v) EXPECT_NEAR(m.skinning_weights.row(v).sum(), 1.0, 1e-12);
  for (Eigen::Index j = 0; j < m.joint_regressor.rows(); ++j) EXPECT_NEAR(m.joint_regressor.row(j).sum(), 1.0, 1e-12);
  for (std::size_t j = 1; j < kJoints; ++j) EXPECT_LT(m.parents[j], static_cast<int>(j));
  EXPECT_EQ(m.parents[0], -1);
  EXPECT_THROW(build_template(1, kMinVertexCount - 1), std::invalid_argument);
}

TEST(BodyModel, RestPoseReproducesRestJoints) {
  const auto m = build_template(2);
  const BodyOutput out = forward(m, BodyState{});
  EXPECT_LT((out.vertices - m.template_vertices).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((out.joints - m.rest_joints).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BodyModel, LbsMatchesNaiveReferenceOverSeeds) {
  const auto m = build_template(3);
  const DiffBodyModel diff(m);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const BodyState s = random_state(seed);
    const MatX3 ref = naive_lbs(m, s);
    const BodyOutput out = forward(m, s);
    ASSERT_LT((out.vertices - ref).cwiseAbs().maxCoeff(), 1e-6) << "seed " << seed;

    std::vector<double> aa(72), beta(10);
    for (int a = 0; a < 3; ++a) aa[static_cast<std::size_t>(a)] = s.theta_g(a);
    for (std::size_t j = 0; j < 23; ++j)
      for (int a = 0; a < 3; ++a) aa[3 + j * 3 + static_cast<std::size_t>(a)] = s.theta_b(static_cast<Eigen::Index>(j), a);
    for (std::size_t k = 0; k < 10; ++k) beta[k] = s.beta(static_cast<Eigen::Index>(k));
    const Tensor rot = ops::reshape(ops::rodrigues(Tensor::from_vector({24, 3}, aa, Dtype::f64)), {1, 24, 3, 3});
    const auto t = diff.forward(rot, Tensor::from_vector({1, 10}, beta, Dtype::f64));
    const auto tv = t.vertices.to_vector();
    double worst = 0;
    for (Eigen::Index v = 0; v < ref.rows(); ++v)
      for (int a = 0; a < 3; ++a) worst = std::max(worst, std::abs(tv[static_cast<std::size_t>(v * 3 + a)] - ref(v, a)));
    ASSERT_LT(worst, 1e-6) << "seed " << seed;
    const auto tj = t.joints.to_vector();
    for (Eigen::Index j = 0; j < 24; ++j)
      for (int a = 0; a < 3; ++a) ASSERT_NEAR(tj[static_cast<std::size_t>(j * 3 + a)], out.joints(j, a), 1e-9);
  }
}

TEST(BodyModel, ShapeComponentsChangeTheBody) {
  const auto m = build_template(4);
  for (std::size_t k = 0; k < kShapeDims; ++k) {
    BodyState s;
    s.beta(static_cast<Eigen::Index>(k)) = 1.0;
    EXPECT_GT((forward(m, s).vertices - m.template_vertices).norm(), 1e-3) << "component " << k;
  }
}

TEST(Rotation, RodriguesMatchesMatrixExponential) {
  data::Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    Eigen::Vector3d w;
    for (int a = 0; a < 3; ++a) w(a) = data::uniform(rng, -3, 3);
    if (i % 10 == 0) w *= 1e-4;  // series branch
    const Eigen::Matrix3d ref = skew(w).exp();
    EXPECT_LT((rodrigues(w) - ref).cwiseAbs().maxCoeff(), 1e-10) << w.transpose();
  }
  EXPECT_TRUE(rodrigues(Eigen::Vector3d::Zero()).isIdentity(0));
}

TEST(Rotation, LogMapInvertsRodrigues) {
  data::Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    Eigen::Vector3d w;
    for (int a = 0; a < 3; ++a) w(a) = data::uniform(rng, -1.7, 1.7);
    EXPECT_LT((log_map(rodrigues(w)) - w).norm(), 1e-9);
  }
}

TEST(Rotation, SixDRoundTripAndOrthonormality) {
  data::Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    Vec6 x;
    for (int a = 0; a < 6; ++a) x(a) = data::uniform(rng, -1, 1);
    const Eigen::Matrix3d R = rotation_from_6d(x);
    EXPECT_LT((R.transpose() * R - Eigen::Matrix3d::Identity()).norm(), 1e-12);
    EXPECT_NEAR(R.determinant(), 1.0, 1e-12);
    EXPECT_LT((rotation_from_6d(rotation_to_6d(R)) - R).norm(), 1e-12);
  }
}

TEST(Rotation, DegenerateSixDFallsBackToAFrame) {
  const Eigen::Matrix3d R = rotation_from_6d(Vec6::Zero());
  EXPECT_LT((R.transpose() * R - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  Vec6 parallel;
  parallel << 1, 0, 0, 2, 0, 0;
  EXPECT_NEAR(rotation_from_6d(parallel).determinant(), 1.0, 1e-12);
}
