#include "mvhmr/eval/procrustes.hpp"

#include <Eigen/SVD>

namespace mvhmr::eval {

namespace {

// Second singular value below this fraction of the first means collinear.
constexpr double kRankTol = 1e-10;

void require_spread(const MatX3& centered, const char* which) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0) || sv(1) <= kRankTol * sv(0)) {
    throw DegenerateAlignment(std::string("procrustes: ") + which + " points are coincident or collinear");
  }
}

}  // namespace

Alignment procrustes_align(const MatX3& pred, const MatX3& gt, bool with_scale) {
  if (pred.rows() != gt.rows()) throw std::invalid_argument("procrustes: point counts differ");
  if (pred.rows() < 3) throw DegenerateAlignment("procrustes: need at least 3 points");
  const Eigen::RowVector3d mu_p = pred.colwise().mean();
  const Eigen::RowVector3d mu_g = gt.colwise().mean();
  const MatX3 X = pred.rowwise() - mu_p;
  const MatX3 Y = gt.rowwise() - mu_g;
  require_spread(X, "predicted");
  require_spread(Y, "ground-truth");

  const Eigen::Matrix3d cov = Y.transpose() * X;
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d = Eigen::Vector3d::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2) = -1.0;

  Alignment a;
  a.R = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  a.s = with_scale ? svd.singularValues().dot(d) / X.squaredNorm() : 1.0;
  a.t = mu_g.transpose() - a.s * a.R * mu_p.transpose();
  a.aligned = ((a.s * pred * a.R.transpose()).rowwise() + a.t.transpose());
  return a;
}

}  // namespace mvhmr::eval
