#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvhmr/body/body_model.hpp"
#include "mvhmr/camera/camera.hpp"

namespace mvhmr::data {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
// Per-sample stream seed; independent of generation order.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

// Uniform double in [0, 1) from raw generator bits, so draws do not depend
// on the standard library's distribution implementations.
double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);
// Box-Muller over uniform01.
double normal(Rng& rng, double mean, double stddev);

struct JointLimits {
  Eigen::Vector3d lo;
  Eigen::Vector3d hi;
};
// Axis-angle component bounds for body joint j (0..22 maps to SMPL joint j+1).
const std::array<JointLimits, body::kBodyJoints>& joint_limits();

inline constexpr double kPoseStddev = 0.3;
inline constexpr double kBetaClamp = 2.0;

// theta_b ~ N(0, 0.3) per axis clamped to joint_limits(); beta ~ N(0, 1)
// clamped to [-2, 2]; theta_g = 0.
body::BodyState sample_body(Rng& rng);

struct CameraRig {
  double radius_min = 2.5;
  double radius_max = 3.5;
  double elevation_min_deg = -15.0;
  double elevation_max_deg = 30.0;
  double target_jitter = 0.1;

  void validate() const;
  nlohmann::json to_json() const;
  static CameraRig from_json(const nlohmann::json& j);
};

// Eyes on a sphere band around `root`, each looking at root plus a jitter.
std::vector<camera::CameraPose> sample_cameras(Rng& rng, std::size_t n_views, const Eigen::Vector3d& root,
                                               const CameraRig& rig = {});

}  // namespace mvhmr::data
