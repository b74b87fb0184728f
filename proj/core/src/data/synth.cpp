#include "mvhmr/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mvhmr::data {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) { return splitmix64(splitmix64(seed) ^ index); }

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

double normal(Rng& rng, double mean, double stddev) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

const std::array<JointLimits, body::kBodyJoints>& joint_limits() {
  static const auto table = [] {
    std::array<JointLimits, body::kBodyJoints> t;
    const auto set = [&](int joint, Eigen::Vector3d lo, Eigen::Vector3d hi) { t[joint - 1] = {lo, hi}; };
    const Eigen::Vector3d wide(0.8, 0.8, 0.8);
    for (int j = 1; j < static_cast<int>(body::kJoints); ++j) set(j, -wide, wide);
    for (int j : {3, 6, 9}) set(j, Eigen::Vector3d(-0.4, -0.4, -0.4), Eigen::Vector3d(0.4, 0.4, 0.4));
    for (int j : {12, 15}) set(j, Eigen::Vector3d(-0.5, -0.6, -0.4), Eigen::Vector3d(0.5, 0.6, 0.4));
    // Hips flex forward (-x) further than backward.
    for (int j : {1, 2}) set(j, Eigen::Vector3d(-1.2, -0.5, -0.5), Eigen::Vector3d(0.5, 0.5, 0.5));
    // Knees: positive x swings the shin backward; no hyperextension.
    for (int j : {4, 5}) set(j, Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(2.0, 0, 0));
    // Elbows bend the forearm forward: -y on the left (+x) arm, +y on the right.
    set(18, Eigen::Vector3d(0, -2.0, 0), Eigen::Vector3d(0, 0, 0));
    set(19, Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0, 2.0, 0));
    for (int j : {7, 8, 10, 11, 20, 21, 22, 23}) {
      set(j, Eigen::Vector3d(-0.5, -0.5, -0.5), Eigen::Vector3d(0.5, 0.5, 0.5));
    }
    return t;
  }();
  return table;
}

body::BodyState sample_body(Rng& rng) {
  body::BodyState s;
  const auto& limits = joint_limits();
  for (std::size_t j = 0; j < body::kBodyJoints; ++j) {
    for (int a = 0; a < 3; ++a) {
      s.theta_b(j, a) = std::clamp(normal(rng, 0.0, kPoseStddev), limits[j].lo(a), limits[j].hi(a));
    }
  }
  for (std::size_t k = 0; k < body::kShapeDims; ++k) s.beta(k) = std::clamp(normal(rng, 0.0, 1.0), -kBetaClamp, kBetaClamp);
  return s;
}

void CameraRig::validate() const {
  if (!(radius_min > 0 && radius_min <= radius_max)) throw std::invalid_argument("camera rig: need 0 < radius_min <= radius_max");
  if (!(elevation_min_deg >= -89 && elevation_min_deg <= elevation_max_deg && elevation_max_deg <= 89)) {
    throw std::invalid_argument("camera rig: elevations must satisfy -89 <= min <= max <= 89 degrees");
  }
  if (!(target_jitter >= 0 && target_jitter < radius_min)) throw std::invalid_argument("camera rig: bad target jitter");
}

nlohmann::json CameraRig::to_json() const {
  return {{"radius_min", radius_min},
          {"radius_max", radius_max},
          {"elevation_min_deg", elevation_min_deg},
          {"elevation_max_deg", elevation_max_deg},
          {"target_jitter", target_jitter}};
}

CameraRig CameraRig::from_json(const nlohmann::json& j) {
  CameraRig r;
  for (const auto& [key, value] : j.items()) {
    if (key == "radius_min") r.radius_min = value.get<double>();
    else if (key == "radius_max") r.radius_max = value.get<double>();
    else if (key == "elevation_min_deg") r.elevation_min_deg = value.get<double>();
    else if (key == "elevation_max_deg") r.elevation_max_deg = value.get<double>();
    else if (key == "target_jitter") r.target_jitter = value.get<double>();
    else throw std::invalid_argument("camera rig: unknown key '" + key + "'");
  }
  r.validate();
  return r;
}

std::vector<camera::CameraPose> sample_cameras(Rng& rng, std::size_t n_views, const Eigen::Vector3d& root,
                                               const CameraRig& rig) {
  constexpr double deg = std::numbers::pi / 180.0;
  std::vector<camera::CameraPose> out;
  out.reserve(n_views);
  for (std::size_t i = 0; i < n_views; ++i) {
    const double r = uniform(rng, rig.radius_min, rig.radius_max);
    const double el = uniform(rng, rig.elevation_min_deg, rig.elevation_max_deg) * deg;
    const double az = uniform(rng, 0.0, 360.0) * deg;
    Eigen::Vector3d jitter;
    for (int a = 0; a < 3; ++a) jitter(a) = uniform(rng, -rig.target_jitter, rig.target_jitter);
    const Eigen::Vector3d eye = root + r * Eigen::Vector3d(std::cos(el) * std::sin(az), std::sin(el),
                                                           std::cos(el) * std::cos(az));
    out.push_back(camera::look_at(eye, root + jitter));
  }
  return out;
}

}  // namespace mvhmr::data
