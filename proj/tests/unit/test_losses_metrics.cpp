#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <sstream>

#include "mvhmr/body/rotation.hpp"
#include "mvhmr/data/synth.hpp"
#include "mvhmr/eval/losses.hpp"
#include "mvhmr/eval/metrics.hpp"
#include "mvhmr/eval/procrustes.hpp"
#include "mvhmr/tensor/ops.hpp"

using namespace mvhmr;
using namespace mvhmr::eval;

namespace {

constexpr Dtype kF64 = Dtype::f64;

Tensor filled(Shape shape, double v) { return Tensor::full(std::move(shape), v, kF64); }

Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1, double hi = 1) {
  data::Rng rng(seed);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = data::uniform(rng, lo, hi);
  return Tensor::from_vector(std::move(shape), v, kF64);
}

Tensor identity_rotations(std::size_t B) {
  std::vector<double> v;
  for (std::size_t i = 0; i < B * 23; ++i)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) v.push_back(r == c ? 1.0 : 0.0);
  return Tensor::from_vector({B, 23, 3, 3}, v, kF64);
}

MatX3 random_points(std::size_t k, std::uint64_t seed, double scale = 1.0) {
  data::Rng rng(seed);
  MatX3 p(static_cast<Eigen::Index>(k), 3);
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (int c = 0; c < 3; ++c) p(i, c) = data::normal(rng, 0, 1) * scale;
  return p;
}

Eigen::Matrix3d random_rotation(std::uint64_t seed) {
  data::Rng rng(seed);
  Eigen::Vector3d aa(data::normal(rng, 0, 1), data::normal(rng, 0, 1), data::normal(rng, 0, 1));
  return body::rodrigues(aa);
}

MatX3 transform(const MatX3& p, double s, const Eigen::Matrix3d& R, const Eigen::Vector3d& t) {
  MatX3 out = (s * (p * R.transpose())).eval();
  out.rowwise() += t.transpose();
  return out;
}

double residual(const MatX3& a, const MatX3& b) { return (a - b).squaredNorm(); }

}  // namespace

TEST(SmplLoss, ZeroAtGroundTruth) {
  const Tensor theta = random_tensor({2, 23, 3}, 1, -0.5, 0.5);
  const Tensor beta = random_tensor({2, 10}, 2);
  const Tensor loss = smpl_loss(ops::rodrigues(theta), beta, theta, beta);
  EXPECT_NEAR(loss.item(), 0.0, 1e-20);
}

TEST(SmplLoss, UnitShapeOffset) {
  std::vector<double> b(10, 0.0);
  b[0] = 1.0;
  const Tensor loss = smpl_loss(identity_rotations(1), Tensor::from_vector({1, 10}, b, kF64),
                                Tensor::zeros({1, 23, 3}, kF64), Tensor::zeros({1, 10}, kF64));
  EXPECT_DOUBLE_EQ(loss.item(), 1.0);
  const SmplLossTerms terms = smpl_loss_terms(identity_rotations(1), Tensor::from_vector({1, 10}, b, kF64),
                                              Tensor::zeros({1, 23, 3}, kF64), Tensor::zeros({1, 10}, kF64));
  EXPECT_DOUBLE_EQ(terms.pose.item(), 0.0);
  EXPECT_DOUBLE_EQ(terms.shape.item(), 1.0);
}

TEST(SmplLoss, MatchesFrobeniusOracle) {
  const Tensor theta = random_tensor({1, 23, 3}, 3, -1, 1);
  const Tensor pred_aa = random_tensor({1, 23, 3}, 4, -1, 1);
  const Tensor beta = random_tensor({1, 10}, 5), gt_beta = random_tensor({1, 10}, 6);
  const auto t = theta.to_vector(), p = pred_aa.to_vector(), b = beta.to_vector(), g = gt_beta.to_vector();
  double expect = 0;
  for (int j = 0; j < 23; ++j) {
    const Eigen::Matrix3d A = body::rodrigues({p[j * 3], p[j * 3 + 1], p[j * 3 + 2]});
    const Eigen::Matrix3d B = body::rodrigues({t[j * 3], t[j * 3 + 1], t[j * 3 + 2]});
    expect += (A - B).squaredNorm();
  }
  for (int i = 0; i < 10; ++i) expect += (b[i] - g[i]) * (b[i] - g[i]);
  EXPECT_NEAR(smpl_loss(ops::rodrigues(pred_aa), beta, theta, gt_beta).item(), expect, 1e-10);
}

TEST(KeypointLoss, Examples) {
  const Tensor gt = random_tensor({1, 2, 24, 3}, 7);
  EXPECT_DOUBLE_EQ(keypoint3d_loss(gt, gt).item(), 0.0);

  std::vector<double> one = gt.to_vector();
  one[5] += 0.5;
  EXPECT_NEAR(keypoint3d_loss(Tensor::from_vector({1, 2, 24, 3}, one, kF64), gt).item(), 0.5, 1e-12);

  std::vector<double> shifted = gt.to_vector();
  for (std::size_t i = 0; i < shifted.size(); i += 3) shifted[i] += 0.1;
  EXPECT_NEAR(keypoint3d_loss(Tensor::from_vector({1, 2, 24, 3}, shifted, kF64), gt).item(), 4.8, 1e-12);

  const Tensor gt2 = random_tensor({1, 1, 24, 2}, 8);
  std::vector<double> u = gt2.to_vector();
  for (std::size_t i = 0; i < u.size(); i += 2) u[i] += 0.25;
  EXPECT_NEAR(keypoint2d_loss(Tensor::from_vector({1, 1, 24, 2}, u, kF64), gt2).item(), 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(keypoint2d_loss(gt2, gt2).item(), 0.0);
}

TEST(KeypointLoss, TwoDimensionalMatchesThreeDimensionalStructure) {
  const Tensor gt3 = Tensor::zeros({2, 3, 24, 3}, kF64);
  const Tensor gt2 = Tensor::zeros({2, 3, 24, 2}, kF64);
  EXPECT_NEAR(keypoint3d_loss(filled({2, 3, 24, 3}, 0.2), gt3).item() / 3.0,
              keypoint2d_loss(filled({2, 3, 24, 2}, 0.2), gt2).item() / 2.0, 1e-12);
}

TEST(KeypointLoss, BatchMeanOfPerSampleSums) {
  const Tensor gt = Tensor::zeros({2, 1, 24, 3}, kF64);
  std::vector<double> v(2 * 24 * 3, 0.0);
  v[0] = 1.0;  // sample 0 only
  EXPECT_NEAR(keypoint3d_loss(Tensor::from_vector({2, 1, 24, 3}, v, kF64), gt).item(), 0.5, 1e-15);
}

TEST(KeypointLoss, ViewMismatchThrows) {
  EXPECT_THROW(keypoint3d_loss(Tensor::zeros({1, 2, 24, 3}, kF64), Tensor::zeros({1, 3, 24, 3}, kF64)),
               ShapeError);
  EXPECT_THROW(keypoint2d_loss(Tensor::zeros({1, 2, 24, 2}, kF64), Tensor::zeros({1, 1, 24, 2}, kF64)),
               ShapeError);
}

TEST(AdversarialLoss, Examples) {
  EXPECT_DOUBLE_EQ(adversarial_losses(filled({1, 25}, 1.0), filled({1, 25}, 0.3)).gen.item(), 0.0);
  EXPECT_DOUBLE_EQ(adversarial_losses(filled({1, 25}, 0.0), filled({1, 25}, 1.0)).disc.item(), 0.0);
  EXPECT_DOUBLE_EQ(adversarial_losses(filled({1, 25}, 0.0), filled({1, 25}, 0.0)).gen.item(), 25.0);
}

TEST(AdversarialLoss, NonNegative) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto l = adversarial_losses(random_tensor({3, 25}, s, -3, 3), random_tensor({3, 25}, s + 100, -3, 3));
    EXPECT_GE(l.gen.item(), 0.0);
    EXPECT_GE(l.disc.item(), 0.0);
  }
}

TEST(LossWeights, DefaultsAndValidation) {
  LossWeights w;
  EXPECT_EQ(LossWeights::from_json(w.to_json()).to_json(), w.to_json());
  w.kp2d = -1;
  EXPECT_THROW(w.validate(), std::invalid_argument);
  EXPECT_THROW(LossWeights::from_json({{"kp4d", 1.0}}), std::invalid_argument);
}

TEST(Procrustes, IdentityOnPerfectPrediction) {
  const MatX3 gt = random_points(24, 1);
  const Alignment a = procrustes_align(gt, gt);
  EXPECT_NEAR(a.s, 1.0, 1e-12);
  EXPECT_LT((a.R - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_LT(a.t.norm(), 1e-12);
}

TEST(Procrustes, RecoversKnownSimilarity) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const MatX3 gt = random_points(24, seed, 0.4);
    const Eigen::Matrix3d R = random_rotation(seed + 1000);
    const Eigen::Vector3d t(0.3, -1.2, 2.5);
    const MatX3 pred = transform(gt, 1.3, R, t);
    const Alignment a = procrustes_align(pred, gt);
    EXPECT_LT((a.aligned - gt).rowwise().norm().maxCoeff(), 1e-6) << seed;
    EXPECT_NEAR(a.s, 1.0 / 1.3, 1e-9);
    EXPECT_LT((a.R - R.transpose()).norm(), 1e-9);
  }
}

TEST(Procrustes, MirrorKeepsProperRotation) {
  const MatX3 gt = random_points(24, 9, 0.5);
  MatX3 pred = gt;
  pred.col(0) *= -1.0;
  const Alignment a = procrustes_align(pred, gt);
  EXPECT_NEAR(a.R.determinant(), 1.0, 1e-12);
  const double res = residual(a.aligned, gt);
  EXPECT_GT(res, 1e-3);

  // Brute force over the sign patterns of the SVD rotation with det = +1.
  const Eigen::RowVector3d mp = pred.colwise().mean(), mg = gt.colwise().mean();
  const MatX3 X = pred.rowwise() - mp, Y = gt.rowwise() - mg;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(Y.transpose() * X, Eigen::ComputeFullU | Eigen::ComputeFullV);
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < 8; ++mask) {
    const Eigen::Vector3d d((mask & 1) ? -1 : 1, (mask & 2) ? -1 : 1, (mask & 4) ? -1 : 1);
    const Eigen::Matrix3d R = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
    if (R.determinant() < 0) continue;
    const MatX3 RX = X * R.transpose();
    const double s = std::max(0.0, (RX.array() * Y.array()).sum() / X.squaredNorm());
    best = std::min(best, (s * RX - Y).squaredNorm());
  }
  EXPECT_NEAR(res, best, 1e-9 * std::max(1.0, best));

  // Small rotations around the optimum never lower the residual.
  for (std::uint64_t s = 0; s < 50; ++s) {
    data::Rng rng(s);
    const Eigen::Matrix3d dR = body::rodrigues(
        Eigen::Vector3d(data::normal(rng, 0, 1), data::normal(rng, 0, 1), data::normal(rng, 0, 1)) * 1e-3);
    const Eigen::Matrix3d R = dR * a.R;
    MatX3 moved = (a.s * (X * R.transpose())).eval();
    moved.rowwise() += mg;
    EXPECT_GE(residual(moved, gt), res - 1e-12);
  }
}

TEST(Procrustes, Idempotent) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MatX3 gt = random_points(24, seed);
    const MatX3 pred = gt + random_points(24, seed + 50, 0.2);
    const Alignment once = procrustes_align(pred, gt);
    const Alignment twice = procrustes_align(once.aligned, gt);
    EXPECT_NEAR(twice.s, 1.0, 1e-9);
    EXPECT_LT((twice.R - Eigen::Matrix3d::Identity()).norm(), 1e-9);
    EXPECT_LT(twice.t.norm(), 1e-9);
  }
}

TEST(Procrustes, DegenerateInputsThrow) {
  MatX3 line(5, 3);
  for (int i = 0; i < 5; ++i) line.row(i) << i, 2.0 * i, -1.0 * i;
  EXPECT_THROW(procrustes_align(line, line), DegenerateAlignment);
  EXPECT_THROW(procrustes_align(random_points(2, 1), random_points(2, 2)), DegenerateAlignment);
}

TEST(Metrics, PerfectPrediction) {
  const std::vector<MatX3> gt{random_points(24, 1, 300), random_points(24, 2, 300)};
  const MetricReport r = compute_metrics(gt, gt);
  EXPECT_NEAR(r.mpjpe_mm, 0.0, 1e-12);
  EXPECT_NEAR(r.pa_mpjpe_mm, 0.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.pck, 100.0);
  EXPECT_DOUBLE_EQ(r.auc, 100.0);
}

TEST(Metrics, UniformTranslation) {
  const std::vector<MatX3> gt{random_points(24, 3, 300)};
  MatX3 pred = gt[0];
  pred.rowwise() += Eigen::RowVector3d(20.0 / std::sqrt(3.0), 20.0 / std::sqrt(3.0), 20.0 / std::sqrt(3.0));
  const MetricReport r = compute_metrics({pred}, gt);
  EXPECT_NEAR(r.mpjpe_mm, 20.0, 1e-9);
  EXPECT_NEAR(r.pa_mpjpe_mm, 0.0, 1e-6);
}

TEST(Metrics, HundredMillimetreOffset) {
  // Integer coordinates and axis-aligned offsets keep every error exactly 100.
  std::vector<MatX3> gt{random_points(24, 4, 300).array().round().matrix(),
                        random_points(24, 5, 300).array().round().matrix()};
  std::vector<MatX3> pred = gt;
  for (auto& p : pred) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, i % 3) += (i % 2 == 0) ? 100.0 : -100.0;
  }
  const MetricReport r = compute_metrics(pred, gt);
  EXPECT_NEAR(r.mpjpe_mm, 100.0, 1e-9);
  EXPECT_DOUBLE_EQ(r.pck, 100.0);
  // Oracle: thresholds 5..150 that are >= 100.
  int hits = 0;
  for (int i = 1; i <= 30; ++i) hits += (5.0 * i >= 100.0) ? 1 : 0;
  EXPECT_EQ(hits, 11);
  EXPECT_NEAR(r.auc, 100.0 * hits / 30.0, 1e-12);
  std::vector<double> exact(48, 100.0);
  EXPECT_NEAR(auc_percent(exact), 100.0 * 11.0 / 30.0, 1e-12);
  EXPECT_NEAR(pck_percent(exact, 100.0), 100.0, 0);
  EXPECT_NEAR(pck_percent(exact, 99.999), 0.0, 0);
}

TEST(Metrics, AucMatchesEnumeration) {
  data::Rng rng(11);
  std::vector<double> errors(500);
  for (auto& e : errors) e = data::uniform(rng, 0, 200);
  double expect = 0;
  for (int i = 1; i <= 30; ++i) {
    int n = 0;
    for (double e : errors) n += e <= 5.0 * i;
    expect += 100.0 * n / errors.size();
  }
  EXPECT_NEAR(auc_percent(errors), expect / 30.0, 1e-9);
}

TEST(Metrics, AlignedErrorNeverExceedsRaw) {
  std::vector<MatX3> gt, pred;
  for (std::uint64_t s = 0; s < 100; ++s) {
    gt.push_back(random_points(24, s, 300));
    pred.push_back(transform(gt.back() + random_points(24, s + 500, 40), 1.1, random_rotation(s), {5, 9, -2}));
  }
  const MetricReport r = compute_metrics(pred, gt);
  for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_LE(r.sample_pa_mpjpe_mm[i], r.sample_mpjpe_mm[i] + 1e-9);
  EXPECT_GE(r.pck, 0.0);
  EXPECT_LE(r.pck, 100.0);
  EXPECT_GE(r.auc, 0.0);
  EXPECT_LE(r.auc, 100.0);
}

// The fit minimizes the summed squared error, not the mean joint distance: a
// single outlier joint gets spread over all joints.
TEST(Metrics, SquaredErrorFitCanRaiseMeanJointError) {
  MatX3 gt(6, 3);
  gt << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 0, 1, 0, 1;
  gt *= 100.0;
  MatX3 pred = gt;
  pred(0, 2) += 300.0;
  const Alignment a = procrustes_align(pred, gt);
  EXPECT_LT((a.aligned - gt).squaredNorm(), (pred - gt).squaredNorm());
  const MetricReport r = compute_metrics({pred}, {gt});
  EXPECT_NEAR(r.mpjpe_mm, 50.0, 1e-12);
  EXPECT_GT(r.pa_mpjpe_mm, r.mpjpe_mm + 10.0);
}

TEST(Metrics, UnitWarningAndMismatch) {
  const std::vector<MatX3> gt{random_points(24, 1, 300)};
  MatX3 far = gt[0];
  far.rowwise() += Eigen::RowVector3d(2e4, 0, 0);
  const MetricReport r = compute_metrics({far}, gt);
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_TRUE(compute_metrics(gt, gt).warnings.empty());
  EXPECT_THROW(compute_metrics({gt[0], gt[0]}, gt), std::invalid_argument);
  EXPECT_THROW(compute_metrics({random_points(17, 1)}, gt), std::invalid_argument);
}

TEST(Metrics, DegenerateSampleFallsBack) {
  MatX3 line(24, 3);
  for (int i = 0; i < 24; ++i) line.row(i) << 0, 10.0 * i, 0;
  MatX3 pred = line;
  pred.rowwise() += Eigen::RowVector3d(0, 0, 30);
  const MetricReport r = compute_metrics({pred}, {line});
  EXPECT_EQ(r.degenerate, 1u);
  EXPECT_NEAR(r.pa_mpjpe_mm, 0.0, 1e-9);
  EXPECT_NEAR(r.mpjpe_mm, 30.0, 1e-9);
}

TEST(Metrics, ReportWriters) {
  const std::vector<MatX3> gt{random_points(24, 1, 300)};
  const MetricReport r = compute_metrics(gt, gt);
  std::ostringstream text, lines;
  write_report(text, r);
  write_samples_jsonl(lines, r);
  EXPECT_NE(text.str().find("mpjpe_mm"), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(lines.str()).at("mpjpe_mm"), 0.0);
  EXPECT_TRUE(r.summary_json().contains("auc"));
}
