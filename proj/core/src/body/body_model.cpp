#include "mvhmr/body/body_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "mvhmr/body/rotation.hpp"
#include "mvhmr/tensor/ops.hpp"

namespace mvhmr::body {

namespace {

constexpr std::array<int, kJoints> kParents = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8,
                                               9,  9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};

constexpr std::array<std::string_view, kJoints> kNames = {
    "pelvis",     "left_hip",       "right_hip",      "spine1",      "left_knee",  "right_knee",
    "spine2",     "left_ankle",     "right_ankle",    "spine3",      "left_foot",  "right_foot",
    "neck",       "left_collar",    "right_collar",   "head",        "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow",    "left_wrist",  "right_wrist",
    "left_hand",  "right_hand"};

// Rest skeleton: pelvis at the origin, +y up, subject facing +z, left side +x.
constexpr double kRest[kJoints][3] = {
    {0, 0, 0},          {.09, -.08, 0},     {-.09, -.08, 0},   {0, .11, 0},
    {.10, -.48, .01},   {-.10, -.48, .01},  {0, .24, .02},     {.10, -.88, -.03},
    {-.10, -.88, -.03}, {0, .30, .02},      {.11, -.93, .10},  {-.11, -.93, .10},
    {0, .52, -.01},     {.07, .42, 0},      {-.07, .42, 0},    {0, .60, .03},
    {.18, .45, -.01},   {-.18, .45, -.01},  {.44, .44, -.03},  {-.44, .44, -.03},
    {.70, .44, -.02},   {-.70, .44, -.02},  {.79, .43, -.03},  {-.79, .43, -.03}};

// Child that each bone points at; -1 for leaves, which use kLeafExtent.
constexpr std::array<int, kJoints> kBoneEnd = {3,  4,  5,  6,  7,  8,  9,  10, 11, 12, -1, -1,
                                               15, 16, 17, -1, 18, 19, 20, 21, 22, 23, -1, -1};

constexpr double kBoneRadius[kJoints] = {0.12,  0.075, 0.075, 0.12,  0.055, 0.055, 0.12,  0.045,
                                         0.045, 0.12,  0.035, 0.035, 0.05,  0.05,  0.05,  0.09,
                                         0.045, 0.045, 0.038, 0.038, 0.03,  0.03,  0.025, 0.025};

Eigen::Vector3d leaf_extent(int joint) {
  switch (joint) {
    case 10:
    case 11:
      return {0, -0.02, 0.08};
    case 15:
      return {0, 0.17, 0};
    case 22:
      return {0.08, 0, 0};
    case 23:
      return {-0.08, 0, 0};
    default:
      return {0, 0, 0};
  }
}

// Limb groups for shape components 2..8: pivot joint and member bones.
struct LimbGroup {
  int pivot;
  std::vector<int> bones;
};

const std::array<LimbGroup, 7>& limb_groups() {
  static const std::array<LimbGroup, 7> groups = {{
      {13, {13, 16, 18, 20, 22}},  // left arm
      {14, {14, 17, 19, 21, 23}},  // right arm
      {1, {1, 4, 7, 10}},          // left leg
      {2, {2, 5, 8, 11}},          // right leg
      {12, {12, 15}},              // neck and head
      {18, {18, 20, 22}},          // left forearm
      {19, {19, 21, 23}},          // right forearm
  }};
  return groups;
}

constexpr std::array<int, 4> kTorsoBones = {0, 3, 6, 9};

// Platform-independent uniform in [0, 1).
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double segment_distance(const Eigen::Vector3d& p, const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const Eigen::Vector3d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + s * ab - p).norm();
}

}  // namespace

const std::array<int, kJoints>& smpl_parents() { return kParents; }
const std::array<std::string_view, kJoints>& joint_names() { return kNames; }

BodyModelParams build_template(std::uint64_t seed, std::size_t vertex_count) {
  if (vertex_count < kMinVertexCount) {
    throw std::invalid_argument("build_template: vertex_count " + std::to_string(vertex_count) +
                                " is below the minimum of " + std::to_string(kMinVertexCount));
  }
  BodyModelParams m;
  m.seed = seed;
  m.parents = kParents;
  const auto V = static_cast<Eigen::Index>(vertex_count);
  m.template_vertices.resize(V, 3);
  m.vertex_bone.resize(vertex_count);
  MatX3 radial(V, 3);  // offset from the ring centre
  std::vector<std::vector<Eigen::Index>> ring0(kJoints);

  std::array<Eigen::Vector3d, kJoints> start, end;
  for (std::size_t j = 0; j < kJoints; ++j) {
    start[j] = {kRest[j][0], kRest[j][1], kRest[j][2]};
  }
  for (std::size_t j = 0; j < kJoints; ++j) {
    end[j] = kBoneEnd[j] >= 0 ? start[static_cast<std::size_t>(kBoneEnd[j])]
                              : Eigen::Vector3d(start[j] + leaf_extent(static_cast<int>(j)));
  }

  std::mt19937_64 rng(seed);
  Eigen::Index v = 0;
  for (std::size_t j = 0; j < kJoints; ++j) {
    const std::size_t n_bone = vertex_count / kJoints + (j < vertex_count % kJoints ? 1 : 0);
    const std::size_t rings = std::max<std::size_t>(1, n_bone / 6);
    const Eigen::Vector3d d = (end[j] - start[j]).normalized();
    const Eigen::Vector3d helper = std::abs(d.y()) < 0.9 ? Eigen::Vector3d::UnitY() : Eigen::Vector3d::UnitX();
    const Eigen::Vector3d u = d.cross(helper).normalized();
    const Eigen::Vector3d w = d.cross(u);
    const bool leaf = kBoneEnd[j] < 0;
    for (std::size_t r = 0; r < rings; ++r) {
      const std::size_t count = n_bone / rings + (r < n_bone % rings ? 1 : 0);
      const double frac = leaf ? (rings > 1 ? static_cast<double>(r) / static_cast<double>(rings - 1) : 0.0)
                               : static_cast<double>(r) / static_cast<double>(rings);
      const Eigen::Vector3d centre = start[j] + frac * (end[j] - start[j]);
      const double radius = kBoneRadius[j] * (1.0 + 0.1 * (2.0 * uniform01(rng) - 1.0));
      const double phase = static_cast<double>(r) * std::numbers::pi / static_cast<double>(count);
      for (std::size_t k = 0; k < count; ++k, ++v) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count) + phase;
        const Eigen::Vector3d off = radius * (std::cos(phi) * u + std::sin(phi) * w);
        m.template_vertices.row(v) = (centre + off).transpose();
        radial.row(v) = off.transpose();
        m.vertex_bone[static_cast<std::size_t>(v)] = static_cast<int>(j);
        if (r == 0) ring0[j].push_back(v);
      }
    }
  }

  // Owning bone plus the nearest other bone, inverse-distance weighted.
  constexpr double kDistEps = 1e-3;
  m.skinning_weights = Eigen::MatrixXd::Zero(V, kJoints);
  for (Eigen::Index i = 0; i < V; ++i) {
    const Eigen::Vector3d p = m.template_vertices.row(i).transpose();
    const auto own = static_cast<std::size_t>(m.vertex_bone[static_cast<std::size_t>(i)]);
    std::size_t other = own;
    double d_other = INFINITY;
    for (std::size_t j = 0; j < kJoints; ++j) {
      if (j == own) continue;
      const double d = segment_distance(p, start[j], end[j]);
      if (d < d_other) {
        d_other = d;
        other = j;
      }
    }
    const double w_own = 1.0 / (segment_distance(p, start[own], end[own]) + kDistEps);
    const double w_other = 1.0 / (d_other + kDistEps);
    const double total = w_own + w_other;
    m.skinning_weights(i, static_cast<Eigen::Index>(own)) = w_own / total;
    m.skinning_weights(i, static_cast<Eigen::Index>(other)) = w_other / total;
  }

  m.joint_regressor = Eigen::MatrixXd::Zero(kJoints, V);
  for (std::size_t j = 0; j < kJoints; ++j) {
    const double w = 1.0 / static_cast<double>(ring0[j].size());
    for (auto idx : ring0[j]) m.joint_regressor(static_cast<Eigen::Index>(j), idx) = w;
  }
  m.rest_joints = m.joint_regressor * m.template_vertices;

  // 0: height (uniform scale about the root); 1: global girth;
  // 2..8: limb group scale about its pivot; 9: torso girth.
  const Eigen::RowVector3d root = m.rest_joints.row(0);
  m.shape_basis[0] = 0.08 * (m.template_vertices.rowwise() - root);
  m.shape_basis[1] = 0.1 * radial;
  for (std::size_t g = 0; g < limb_groups().size(); ++g) {
    const auto& group = limb_groups()[g];
    MatX3 b = MatX3::Zero(V, 3);
    const Eigen::RowVector3d pivot = m.rest_joints.row(group.pivot);
    for (Eigen::Index i = 0; i < V; ++i) {
      const int bone = m.vertex_bone[static_cast<std::size_t>(i)];
      if (std::find(group.bones.begin(), group.bones.end(), bone) != group.bones.end()) {
        b.row(i) = 0.1 * (m.template_vertices.row(i) - pivot);
      }
    }
    m.shape_basis[2 + g] = b;
  }
  MatX3 torso = MatX3::Zero(V, 3);
  for (Eigen::Index i = 0; i < V; ++i) {
    const int bone = m.vertex_bone[static_cast<std::size_t>(i)];
    if (std::find(kTorsoBones.begin(), kTorsoBones.end(), bone) != kTorsoBones.end()) {
      torso.row(i) = 0.15 * radial.row(i);
    }
  }
  m.shape_basis[9] = torso;
  return m;
}

MatX3 shaped_vertices(const BodyModelParams& model, const Shape10& beta) {
  MatX3 v = model.template_vertices;
  for (std::size_t k = 0; k < kShapeDims; ++k) v += beta[static_cast<Eigen::Index>(k)] * model.shape_basis[k];
  return v;
}

BodyOutput forward(const BodyModelParams& model, const std::array<Eigen::Matrix3d, kJoints>& rotations,
                   const Shape10& beta) {
  const MatX3 shaped = shaped_vertices(model, beta);
  const Joints J = model.joint_regressor * shaped;
  std::array<Eigen::Matrix3d, kJoints> gr;
  std::array<Eigen::Vector3d, kJoints> gt;
  for (std::size_t j = 0; j < kJoints; ++j) {
    const int p = model.parents[j];
    const Eigen::Vector3d jj = J.row(static_cast<Eigen::Index>(j)).transpose();
    if (p < 0) {
      gr[j] = rotations[j];
      gt[j] = jj;
    } else {
      const auto pu = static_cast<std::size_t>(p);
      gr[j] = gr[pu] * rotations[j];
      gt[j] = gr[pu] * (jj - J.row(p).transpose()) + gt[pu];
    }
  }
  // Skinning transforms map rest-pose points to posed points.
  std::array<Eigen::Vector3d, kJoints> at;
  for (std::size_t j = 0; j < kJoints; ++j) {
    at[j] = gt[j] - gr[j] * J.row(static_cast<Eigen::Index>(j)).transpose();
  }
  BodyOutput out;
  out.vertices.resize(shaped.rows(), 3);
  for (Eigen::Index i = 0; i < shaped.rows(); ++i) {
    Eigen::Matrix3d R = Eigen::Matrix3d::Zero();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
    for (std::size_t j = 0; j < kJoints; ++j) {
      const double w = model.skinning_weights(i, static_cast<Eigen::Index>(j));
      if (w == 0.0) continue;
      R += w * gr[j];
      t += w * at[j];
    }
    out.vertices.row(i) = (R * shaped.row(i).transpose() + t).transpose();
  }
  out.joints = model.joint_regressor * out.vertices;
  return out;
}

BodyOutput forward(const BodyModelParams& model, const BodyState& state) {
  std::array<Eigen::Matrix3d, kJoints> rotations;
  rotations[0] = rodrigues(state.theta_g);
  for (std::size_t j = 1; j < kJoints; ++j) {
    rotations[j] = rodrigues(state.theta_b.row(static_cast<Eigen::Index>(j - 1)).transpose());
  }
  return forward(model, rotations, state.beta);
}

namespace {

Tensor to_tensor(const double* data, Shape shape, Dtype dtype) {
  const std::size_t n = shape_numel(shape);
  return Tensor::from_vector(std::move(shape), std::span<const double>(data, n), dtype);
}

}  // namespace

DiffBodyModel::DiffBodyModel(const BodyModelParams& model) : model_(model) {
  const std::size_t V = model.vertex_count();
  for (Dtype dtype : {Dtype::f32, Dtype::f64}) {
    Constants c;
    c.template_flat = to_tensor(model.template_vertices.data(), {V * 3}, dtype);
    std::vector<double> basis(kShapeDims * V * 3);
    std::vector<double> joint_basis(kShapeDims * kJoints * 3);
    for (std::size_t k = 0; k < kShapeDims; ++k) {
      std::copy_n(model.shape_basis[k].data(), V * 3, basis.begin() + static_cast<long>(k * V * 3));
      const Joints jb = model.joint_regressor * model.shape_basis[k];
      std::copy_n(jb.data(), kJoints * 3, joint_basis.begin() + static_cast<long>(k * kJoints * 3));
    }
    c.basis = to_tensor(basis.data(), {kShapeDims, V * 3}, dtype);
    c.joint_template = to_tensor(model.rest_joints.data(), {kJoints * 3}, dtype);
    c.joint_basis = to_tensor(joint_basis.data(), {kShapeDims, kJoints * 3}, dtype);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> wt =
        model.skinning_weights.transpose();
    c.weights_t = to_tensor(wt.data(), {kJoints, V}, dtype);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rt =
        model.joint_regressor.transpose();
    c.regressor_t = to_tensor(rt.data(), {V, kJoints}, dtype);
    (dtype == Dtype::f32 ? f32_ : f64_) = std::move(c);
  }
}

const DiffBodyModel::Constants& DiffBodyModel::constants(Dtype dtype) const {
  return dtype == Dtype::f32 ? f32_ : f64_;
}

DiffBodyModel::Output DiffBodyModel::forward(const Tensor& rotations, const Tensor& beta) const {
  using namespace ops;
  if (rotations.dim() != 4 || rotations.size(1) != kJoints || rotations.size(2) != 3 ||
      rotations.size(3) != 3 || beta.dim() != 2 || beta.size(1) != kShapeDims ||
      beta.size(0) != rotations.size(0)) {
    throw ShapeError("body forward: expected rotations [B, 24, 3, 3] and beta [B, 10], got " +
                     shape_str(rotations.shape()) + " and " + shape_str(beta.shape()));
  }
  const auto& c = constants(rotations.dtype());
  const auto B = static_cast<std::int64_t>(rotations.size(0));
  const auto V = static_cast<std::int64_t>(model_.vertex_count());

  const Tensor shaped = reshape(matmul(beta, c.basis) + c.template_flat, {B, V, 3});
  const Tensor J = reshape(matmul(beta, c.joint_basis) + c.joint_template, {B, 24, 3});

  std::array<Tensor, kJoints> jr, gr, gt, local;
  for (std::size_t j = 0; j < kJoints; ++j) {
    jr[j] = reshape(slice(J, 1, j, j + 1), {B, 3, 1});
    local[j] = reshape(slice(rotations, 1, j, j + 1), {B, 3, 3});
  }
  std::vector<Tensor> transforms;
  transforms.reserve(kJoints);
  for (std::size_t j = 0; j < kJoints; ++j) {
    const int p = model_.parents[j];
    if (p < 0) {
      gr[j] = local[j];
      gt[j] = jr[j];
    } else {
      const auto pu = static_cast<std::size_t>(p);
      gr[j] = bmm(gr[pu], local[j]);
      gt[j] = bmm(gr[pu], jr[j] - jr[pu]) + gt[pu];
    }
    const Tensor at = gt[j] - bmm(gr[j], jr[j]);
    transforms.push_back(reshape(concat({gr[j], at}, 2), {B, 1, 12}));
  }
  const Tensor A = concat(transforms, 1);                              // [B, 24, 12]
  const Tensor T = matmul(permute(A, {0, 2, 1}), c.weights_t);          // [B, 12, V]
  const Tensor Tv = reshape(permute(T, {0, 2, 1}), {B, V, 3, 4});
  const Tensor ones = Tensor::ones({static_cast<std::size_t>(B), static_cast<std::size_t>(V), 1},
                                   rotations.dtype());
  const Tensor vh = reshape(concat({shaped, ones}, 2), {B, V, 1, 4});
  Output out;
  out.vertices = sum(Tv * vh, 3);                                       // [B, V, 3]
  out.joints = permute(matmul(permute(out.vertices, {0, 2, 1}), c.regressor_t), {0, 2, 1});
  return out;
}

DiffBodyModel::Output DiffBodyModel::forward_canonical(const Tensor& body_rotations,
                                                       const Tensor& beta) const {
  if (body_rotations.dim() != 4 || body_rotations.size(1) != kBodyJoints) {
    throw ShapeError("body forward: expected body rotations [B, 23, 3, 3], got " +
                     shape_str(body_rotations.shape()));
  }
  const std::size_t B = body_rotations.size(0);
  Tensor eye = Tensor::zeros({B, 1, 3, 3}, body_rotations.dtype());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < 3; ++i) eye.set_value(b * 9 + i * 4, 1.0);
  }
  return forward(ops::concat({eye, body_rotations}, 1), beta);
}

}  // namespace mvhmr::body
