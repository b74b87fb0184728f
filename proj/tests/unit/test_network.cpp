#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "mvhmr/data/synth.hpp"
#include "mvhmr/net/checkpoint.hpp"
#include "mvhmr/net/discriminator.hpp"
#include "mvhmr/net/network.hpp"
#include "mvhmr/net/overhead.hpp"
#include "mvhmr/tensor/ops.hpp"

using namespace mvhmr;
using namespace mvhmr::net;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, Dtype dtype = Dtype::f32, double lo = -1, double hi = 1) {
  data::Rng rng(seed);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = data::uniform(rng, lo, hi);
  return Tensor::from_vector(std::move(shape), v, dtype);
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape() || a.dtype() != b.dtype()) return false;
  return dispatch_dtype(a.dtype(), [&]<typename T>() {
    return std::memcmp(a.data<T>().data(), b.data<T>().data(), a.numel() * sizeof(T)) == 0;
  });
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  const auto x = a.to_vector(), y = b.to_vector();
  double m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

// Randomizes zero-initialized output layers so heads are input dependent.
void jitter(ParamList params, std::uint64_t seed, double scale = 0.05) {
  data::Rng rng(seed);
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.tensor->numel(); ++i) {
      p.tensor->set_value(i, p.tensor->value(i) + data::uniform(rng, -scale, scale));
    }
  }
}

Tensor view_slice(const Tensor& tokens, std::size_t i) { return ops::slice(tokens, 1, i, i + 1); }

}  // namespace

TEST(Network, ConfigRoundTripAndValidation) {
  ModelConfig c;
  c.variant = Variant::b;
  const ModelConfig back = ModelConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  nlohmann::json j = c.to_json();
  j["unknown"] = 1;
  EXPECT_THROW(ModelConfig::from_json(j), std::invalid_argument);
  EXPECT_THROW(parse_variant("e"), std::invalid_argument);
}

TEST(Network, CameraHeadIsPerViewIndependentBitwise) {
  Network model(ModelConfig{});
  jitter(model.head_parameters(), 1);
  const auto& cfg = model.config();
  NoGradGuard ng;
  for (std::size_t n = 1; n <= 8; ++n) {
    const Tensor tokens = random_tensor({2, n, cfg.tokens_per_view(), cfg.channels}, 100 + n);
    const auto [R, t] = model.cpe(tokens);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [Ri, ti] = model.cpe(view_slice(tokens, i));
      EXPECT_TRUE(bitwise_equal(view_slice(R, i), Ri)) << "N=" << n << " view " << i;
      EXPECT_TRUE(bitwise_equal(view_slice(t, i), ti)) << "N=" << n << " view " << i;
    }
  }
}

TEST(Network, FusionIsInvariantToJointPermutation) {
  Network model(ModelConfig{});
  jitter(model.head_parameters(), 2);
  const auto& cfg = model.config();
  NoGradGuard ng;
  for (std::size_t n = 2; n <= 8; ++n) {
    const Tensor tokens = random_tensor({1, n, cfg.tokens_per_view(), cfg.channels}, 200 + n);
    std::vector<std::int64_t> slots(n), perm_slots(n);
    std::vector<Tensor> parts;
    for (std::size_t i = 0; i < n; ++i) slots[i] = static_cast<std::int64_t>(i);
    for (std::size_t i = 0; i < n; ++i) {
      perm_slots[i] = static_cast<std::int64_t>(n - 1 - i);
      parts.push_back(view_slice(tokens, n - 1 - i));
    }
    const auto [rot, beta] = model.avf(tokens, slots);
    const auto [prot, pbeta] = model.avf(ops::concat(parts, 1), perm_slots);
    EXPECT_LT(max_abs_diff(rot, prot), 1e-5) << "N=" << n;
    EXPECT_LT(max_abs_diff(beta, pbeta), 1e-5) << "N=" << n;
    // Sanity: permuting tokens without their embeddings is not a symmetry.
    const auto [xrot, xbeta] = model.avf(ops::concat(parts, 1), slots);
    EXPECT_GT(max_abs_diff(beta, xbeta), 1e-7) << "N=" << n;
  }
}

TEST(Network, OutputShapesAcrossViewCounts) {
  ModelConfig cfg;
  cfg.image_size = 32;
  cfg.stage_widths = {16, 32, 64};
  cfg.stage_extra = {0, 0, 0};
  Network model(cfg);
  NoGradGuard ng;
  for (std::size_t n = 1; n <= 8; ++n) {
    const Prediction p = model.forward(random_tensor({2, n, 32, 32, 3}, n, Dtype::f32, 0, 1));
    EXPECT_EQ(p.body_rotation.shape(), (Shape{2, 23, 3, 3}));
    EXPECT_EQ(p.beta.shape(), (Shape{2, 10}));
    EXPECT_EQ(p.cam_rotation.shape(), (Shape{2, n, 3, 3}));
    EXPECT_EQ(p.cam_translation.shape(), (Shape{2, n, 3}));
  }
  EXPECT_THROW(model.forward(random_tensor({1, 9, 32, 32, 3}, 1)), ViewCountError);
}

TEST(Network, InitialPredictionIsRestPoseFrontCamera) {
  Network model(ModelConfig{});
  NoGradGuard ng;
  const Prediction p = model.forward(random_tensor({1, 2, 64, 64, 3}, 4, Dtype::f32, 0, 1));
  const auto rot = p.body_rotation.to_vector();
  for (std::size_t j = 0; j < 23; ++j)
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(rot[j * 9 + r * 3 + c], r == c ? 1.0 : 0.0, 1e-6);
  for (double b : p.beta.to_vector()) EXPECT_EQ(b, 0.0);
  const auto t = p.cam_translation.to_vector();
  EXPECT_NEAR(t[2], 3.0, 1e-6);
  const auto R = p.cam_rotation.to_vector();
  EXPECT_NEAR(R[0], 1.0, 1e-6);
  EXPECT_NEAR(R[4], -1.0, 1e-6);
  EXPECT_NEAR(R[8], -1.0, 1e-6);
}

TEST(Network, ZeroDecoderPassesQueryThrough) {
  Network model(ModelConfig{});
  jitter(model.head_parameters(), 3);
  model.zero_decoder();
  const auto& cfg = model.config();
  NoGradGuard ng;
  const auto a = model.avf(random_tensor({1, 3, cfg.tokens_per_view(), cfg.channels}, 5));
  const auto b = model.avf(random_tensor({1, 2, cfg.tokens_per_view(), cfg.channels}, 6));
  EXPECT_TRUE(bitwise_equal(a.second, b.second));
  EXPECT_TRUE(bitwise_equal(a.first, b.first));
}

TEST(Network, FixedViewVariantsRejectOtherCounts) {
  for (Variant v : {Variant::a, Variant::b}) {
    ModelConfig cfg;
    cfg.variant = v;
    Network model(cfg);
    NoGradGuard ng;
    const std::size_t T = cfg.tokens_per_view(), C = cfg.channels;
    EXPECT_NO_THROW(model.head(random_tensor({1, 4, T, C}, 7)));
    EXPECT_THROW(model.head(random_tensor({1, 3, T, C}, 7)), ViewCountError);
    EXPECT_THROW(count_params_and_macs(model, 2), ViewCountError);
  }
  for (Variant v : {Variant::c, Variant::d}) {
    ModelConfig cfg;
    cfg.variant = v;
    Network model(cfg);
    NoGradGuard ng;
    for (std::size_t n = 1; n <= 8; ++n) {
      EXPECT_NO_THROW(model.head(random_tensor({1, n, cfg.tokens_per_view(), cfg.channels}, n)));
    }
  }
}

TEST(Network, OverheadPattern) {
  Network model(ModelConfig{});
  const OverheadCounts one = count_params_and_macs(model, 1);
  EXPECT_LT(static_cast<double>(one.head_params) / static_cast<double>(one.backbone_params), 0.2);
  EXPECT_EQ(one.backbone_params + one.head_params, count_params(model.parameters()));
  for (std::size_t n = 2; n <= 8; ++n) {
    const OverheadCounts c = count_params_and_macs(model, n);
    EXPECT_EQ(c.backbone_macs, n * one.backbone_macs);
    EXPECT_EQ(c.head_params, one.head_params);
    EXPECT_EQ(c.backbone_params, one.backbone_params);
    EXPECT_GT(c.head_macs, one.head_macs);
  }
}

TEST(Network, CheckpointRoundTripIsBitwise) {
  ModelConfig cfg;
  cfg.variant = Variant::c;
  cfg.seed = 11;
  Network model(cfg);
  jitter(model.parameters(), 8, 0.01);
  Discriminator disc(3);
  const auto path = std::filesystem::temp_directory_path() / "mvhmr_ckpt_test.bin";
  save_checkpoint(path, model, &disc, {{"epoch", 4}});
  const LoadedCheckpoint ck = load_checkpoint(path);
  ASSERT_TRUE(ck.disc);
  EXPECT_EQ(ck.meta["epoch"], 4);
  EXPECT_EQ(ck.model->config().to_json(), cfg.to_json());
  const auto pa = model.parameters(), pb = ck.model->parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].name, pb[i].name);
    EXPECT_TRUE(bitwise_equal(*pa[i].tensor, *pb[i].tensor)) << pa[i].name;
  }
  NoGradGuard ng;
  const Tensor images = random_tensor({1, 3, 64, 64, 3}, 9, Dtype::f32, 0, 1);
  EXPECT_TRUE(bitwise_equal(model.forward(images).beta, ck.model->forward(images).beta));
  std::filesystem::remove(path);
}

TEST(Network, CheckpointRejectsGarbage) {
  const auto path = std::filesystem::temp_directory_path() / "mvhmr_ckpt_garbage.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a checkpoint";
  }
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(Discriminator, ScoresPerJointShapeAndAll) {
  Discriminator d(1, Dtype::f64);
  const Tensor s = d(random_tensor({3, 23, 3, 3}, 1, Dtype::f64), random_tensor({3, 10}, 2, Dtype::f64));
  EXPECT_EQ(s.shape(), (Shape{3, 25}));
  EXPECT_THROW(d(random_tensor({3, 22, 3, 3}, 1, Dtype::f64), random_tensor({3, 10}, 2, Dtype::f64)), ShapeError);
}
