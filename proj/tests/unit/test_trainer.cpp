#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mvhmr/net/checkpoint.hpp"
#include "mvhmr/tensor/ops.hpp"
#include "mvhmr/train/adamw.hpp"
#include "mvhmr/train/batch.hpp"
#include "mvhmr/train/config.hpp"
#include "mvhmr/train/harness.hpp"
#include "mvhmr/train/trainer.hpp"

using namespace mvhmr;
using namespace mvhmr::train;

namespace {

net::ModelConfig tiny_model(net::Variant v = net::Variant::d) {
  net::ModelConfig m;
  m.variant = v;
  m.image_size = 16;
  m.channels = 16;
  m.stage_widths = {8, 16};
  m.stage_extra = {0, 1};
  m.depth = 1;
  m.heads = 2;
  m.head_hidden = 32;
  m.score_hidden = 8;
  m.train_views = 3;
  return m;
}

// Shared across tests; generated once.
const data::Dataset& tiny_dataset() {
  static const data::Dataset ds = [] {
    data::SynthConfig cfg;
    cfg.sample_count = 48;
    cfg.eval_count = 8;
    cfg.views = 3;
    cfg.image_size = 16;
    cfg.focal = 25;
    const auto dir = std::filesystem::temp_directory_path() / "mvhmr_trainer_ds";
    std::filesystem::remove_all(dir);
    data::generate_dataset(cfg, 5, dir);
    return data::Dataset(dir);
  }();
  return ds;
}

TrainConfig tiny_config(const std::string& out = "") {
  TrainConfig c = TrainConfig::toy();
  c.model = tiny_model();
  c.max_train_views = 3;
  c.batch_size = 8;
  c.epochs = 1;
  c.lr = 1e-3;
  c.seed = 3;
  c.out_dir = out;
  return c;
}

bool same_report(const eval::MetricReport& a, const eval::MetricReport& b) {
  return a.sample_mpjpe_mm == b.sample_mpjpe_mm && a.sample_pa_mpjpe_mm == b.sample_pa_mpjpe_mm &&
         std::memcmp(&a.mpjpe_mm, &b.mpjpe_mm, sizeof(double)) == 0 &&
         std::memcmp(&a.pa_mpjpe_mm, &b.pa_mpjpe_mm, sizeof(double)) == 0;
}

}  // namespace

TEST(TrainConfig, ProfilesAndJson) {
  EXPECT_EQ(TrainConfig::named("toy").to_json(), TrainConfig::toy().to_json());
  const TrainConfig p = TrainConfig::named("paper-scale");
  EXPECT_DOUBLE_EQ(p.lr, 1e-5);
  EXPECT_EQ(p.epochs, 100u);
  EXPECT_THROW(TrainConfig::named("huge"), std::invalid_argument);
  const TrainConfig t = tiny_config("x");
  EXPECT_EQ(TrainConfig::from_json(t.to_json()).to_json(), t.to_json());
}

TEST(TrainConfig, RejectsUnknownKeyAndBadValues) {
  try {
    TrainConfig::from_json({{"profile", "toy"}, {"learning_rate", 0.1}});
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
  TrainConfig c;
  c.lr = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.min_views = 5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  const auto path = std::filesystem::temp_directory_path() / "mvhmr_cfg.json";
  std::ofstream(path) << R"({"profile": "toy", "epochs": 3})";
  EXPECT_EQ(load_config(path.string()).epochs, 3u);
  std::filesystem::remove(path);
}

TEST(AdamW, DecoupledDecayWithZeroGradient) {
  Tensor x = Tensor::from_vector({3}, {1.0, -2.0, 4.0}, Dtype::f64);
  x.set_requires_grad();
  AdamW opt({{"x", &x}}, {.lr = 0.1, .weight_decay = 0.5});
  ops::sum_all(x * 0.0).backward();
  opt.step();
  const auto v = x.to_vector();
  EXPECT_NEAR(v[0], 1.0 * (1 - 0.05), 1e-15);
  EXPECT_NEAR(v[1], -2.0 * (1 - 0.05), 1e-15);
  EXPECT_NEAR(v[2], 4.0 * (1 - 0.05), 1e-15);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr * sign(g).
  Tensor x = Tensor::from_vector({2}, {1.0, -1.0}, Dtype::f64);
  x.set_requires_grad();
  AdamW opt({{"x", &x}}, {.lr = 0.01, .weight_decay = 0.0});
  ops::sum_all(ops::square(x)).backward();
  opt.step();
  EXPECT_NEAR(x.value(0), 0.99, 1e-9);
  EXPECT_NEAR(x.value(1), -0.99, 1e-9);
  for (int i = 0; i < 2000; ++i) {
    opt.zero_grad();
    ops::sum_all(ops::square(x)).backward();
    opt.step();
  }
  EXPECT_LT(std::abs(x.value(0)), 1e-2);
}

TEST(Batch, ShapesAndNormalization) {
  const auto& ds = tiny_dataset();
  const std::vector<std::size_t> samples{0, 5}, views{2, 0};
  const Batch b = make_batch(ds, samples, views, Dtype::f64);
  EXPECT_EQ(b.images.shape(), (Shape{2, 2, 16, 16, 3}));
  EXPECT_EQ(b.j3d.shape(), (Shape{2, 2, 24, 3}));
  EXPECT_EQ(b.j2d.shape(), (Shape{2, 2, 24, 2}));
  EXPECT_EQ(b.gt_theta.shape(), (Shape{2, 23, 3}));
  const auto s5 = ds.sample(5);
  const auto j2d = b.j2d.to_vector();
  const std::size_t base = ((1 * 2 + 1) * 24 + 7) * 2;  // sample 5, slot 1 (stored view 0), joint 7
  EXPECT_NEAR(j2d[base], 2.0 * s5.views[0].j2d(7, 0) / 16.0 - 1.0, 1e-12);
  EXPECT_NEAR(j2d[base + 1], 2.0 * s5.views[0].j2d(7, 1) / 16.0 - 1.0, 1e-12);
  for (double p : b.images.to_vector()) {
    ASSERT_GE(p, 0.0);
    ASSERT_LE(p, 1.0);
  }
}

TEST(Trainer, OneEpochWritesLoadableCheckpoint) {
  const auto& ds = tiny_dataset();
  const auto out = std::filesystem::temp_directory_path() / "mvhmr_train_one";
  std::filesystem::remove_all(out);
  Trainer t(tiny_config(out.string()), ds);
  const RunReport r = t.train();
  ASSERT_EQ(r.epochs.size(), 1u);
  EXPECT_TRUE(std::isfinite(r.epochs[0].loss));
  const auto ck = net::load_checkpoint(out / "checkpoint.bin");
  EXPECT_EQ(ck.meta.at("epoch"), 1);
  ASSERT_TRUE(ck.disc);
  EXPECT_TRUE(same_report(evaluate(t.model(), ds, 3), evaluate(*ck.model, ds, 3)));
  std::filesystem::remove_all(out);
}

TEST(Trainer, LossDecreases) {
  TrainConfig c = tiny_config();
  c.epochs = 5;
  Trainer t(c, tiny_dataset());
  const RunReport r = t.train();
  ASSERT_EQ(r.epochs.size(), 5u);
  EXPECT_LT(r.epochs.back().loss, r.epochs.front().loss);
}

TEST(Trainer, DeterministicForSameSeed) {
  TrainConfig c = tiny_config();
  c.epochs = 2;
  Trainer a(c, tiny_dataset()), b(c, tiny_dataset());
  const RunReport ra = a.train(), rb = b.train();
  EXPECT_EQ(ra.epochs.back().loss, rb.epochs.back().loss);
  c.seed = 4;
  Trainer d(c, tiny_dataset());
  EXPECT_NE(d.train().epochs.back().loss, ra.epochs.back().loss);
}

TEST(Trainer, GeneratorLossIsZeroAtGroundTruthKeypoints) {
  const auto& ds = tiny_dataset();
  const std::vector<std::size_t> samples{1, 2}, views{0, 1};
  const Batch b = make_batch(ds, samples, views, Dtype::f64);
  const body::DiffBodyModel body(ds.body_model());
  // Prediction assembled from ground truth.
  net::Prediction p;
  p.body_rotation = ops::rodrigues(b.gt_theta);
  p.beta = b.gt_beta;
  std::vector<double> R, t;
  for (std::size_t s : samples) {
    const auto sample = ds.sample(s);
    for (std::size_t v : views) {
      const Eigen::Matrix3d Rm = sample.views[v].camera.rotation();
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) R.push_back(Rm(r, c));
      for (int k = 0; k < 3; ++k) t.push_back(sample.views[v].camera.t(k));
    }
  }
  p.cam_rotation = Tensor::from_vector({2, 2, 3, 3}, R, Dtype::f64);
  p.cam_translation = Tensor::from_vector({2, 2, 3}, t, Dtype::f64);
  const LossTerms l = generator_loss(p, b, body, nullptr, eval::LossWeights{}, ds.config().intrinsics());
  EXPECT_NEAR(l.pose.item(), 0.0, 1e-8);
  EXPECT_NEAR(l.shape.item(), 0.0, 1e-8);
  EXPECT_LT(l.kp3d.item(), 24 * 3 * 2 * 1e-5);
  EXPECT_LT(l.kp2d.item(), 24 * 2 * 2 * 1e-5);
}

TEST(Evaluate, FixedViewVariantsRejectOtherCounts) {
  const auto& ds = tiny_dataset();
  net::Network a(tiny_model(net::Variant::a));
  EXPECT_NO_THROW(evaluate(a, ds, 3));
  EXPECT_THROW(evaluate(a, ds, 2), net::ViewCountError);
  const std::vector<std::size_t> counts{1, 2, 3};
  const auto results = evaluate_views(a, ds, counts);
  ASSERT_EQ(results.size(), 3u);
  EXPECT_FALSE(results[0].ok);
  EXPECT_FALSE(results[0].error.empty());
  EXPECT_TRUE(results[2].ok);

  net::Network d(tiny_model(net::Variant::d));
  for (const auto& r : evaluate_views(d, ds, counts)) EXPECT_TRUE(r.ok);
  EXPECT_THROW(evaluate(d, ds, 4), net::ViewCountError);
}

TEST(Harness, PerturbCleanColumnMatchesPlainEvaluation) {
  const auto& ds = tiny_dataset();
  net::Network m(tiny_model());
  const std::vector<std::size_t> counts{1, 3};
  PerturbOptions o;
  o.max_shift_px = 1.25;
  const auto rows = perturb_eval(m, ds, counts, o);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_TRUE(same_report(r.clean, evaluate(m, ds, r.views)));
    EXPECT_TRUE(std::isfinite(r.perturbed.mpjpe_mm));
    EXPECT_TRUE(std::isfinite(r.perturbed.pa_mpjpe_mm));
  }
  std::ostringstream table;
  write_perturb_table(table, rows);
  EXPECT_NE(table.str().find("perturbed"), std::string::npos);
}

TEST(Harness, AblationStructure) {
  TrainConfig c = tiny_config();
  c.train_limit = 16;
  const std::vector<std::size_t> counts{1, 2, 3};
  const auto rows = ablate(c, tiny_dataset(), counts);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.train_error.empty()) << r.train_error;
    const bool fixed = r.variant == net::Variant::a || r.variant == net::Variant::b;
    EXPECT_EQ(r.flexible(), !fixed);
    if (fixed) {
      EXPECT_FALSE(r.results[0].ok);
      EXPECT_TRUE(r.results[2].ok);
    }
  }
  std::ostringstream table;
  write_ablation_table(table, rows);
  EXPECT_FALSE(table.str().empty());
}

TEST(Harness, OverheadRows) {
  net::Network m(tiny_model(net::Variant::b));
  const std::vector<std::size_t> counts{2, 3};
  const auto rows = overhead(m, counts, kMinTimingReps);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].ok);
  EXPECT_TRUE(rows[1].ok);
  EXPECT_GT(rows[1].backbone_ms, 0.0);
}
