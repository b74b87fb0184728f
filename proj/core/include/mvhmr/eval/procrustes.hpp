#pragma once

#include <stdexcept>

#include <Eigen/Core>

#include "mvhmr/body/body_model.hpp"

namespace mvhmr::eval {

using body::MatX3;

class DegenerateAlignment : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Alignment {
  double s = 1.0;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  MatX3 aligned;  // s * R * pred + t, row per point
};

// Least-squares similarity (or rigid, when `with_scale` is false) transform
// taking `pred` onto `gt`; det(R) = +1. Throws DegenerateAlignment when fewer
// than 3 points are given or either point set is collinear.
Alignment procrustes_align(const MatX3& pred, const MatX3& gt, bool with_scale = true);

}  // namespace mvhmr::eval
