#include "mvhmr/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "mvhmr/camera/camera.hpp"
#include "mvhmr/net/checkpoint.hpp"
#include "mvhmr/tensor/ops.hpp"

namespace mvhmr::train {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::size_t uniform_index(data::Rng& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(data::uniform01(rng) * static_cast<double>(n)));
}

template <typename T>
void shuffle(std::vector<T>& v, data::Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

}  // namespace

nlohmann::json EpochStats::to_json() const {
  return {{"epoch", epoch}, {"batches", batches}, {"loss", loss}, {"pose", pose},
          {"shape", shape}, {"kp3d", kp3d},       {"kp2d", kp2d}, {"adv", adv},
          {"disc", disc},   {"clamped_batches", clamped_batches}, {"seconds", seconds}};
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json e = nlohmann::json::array();
  for (const auto& s : epochs) e.push_back(s.to_json());
  return {{"epochs", e}, {"seconds", seconds}};
}

Tensor predicted_camera_joints(const net::Prediction& pred, const body::DiffBodyModel& body) {
  const auto B = static_cast<std::int64_t>(pred.cam_rotation.size(0));
  const auto N = static_cast<std::int64_t>(pred.cam_rotation.size(1));
  const Tensor joints = ops::reshape(body.forward_canonical(pred.body_rotation, pred.beta).joints, {B, 1, 24, 3});
  std::vector<Tensor> copies(static_cast<std::size_t>(N), joints);
  const Tensor per_view = ops::reshape(N == 1 ? joints : ops::concat(copies, 1), {B * N, 24, 3});
  const Tensor cam = camera::to_camera(per_view, ops::reshape(pred.cam_rotation, {B * N, 3, 3}),
                                       ops::reshape(pred.cam_translation, {B * N, 3}));
  return ops::reshape(cam, {B, N, 24, 3});
}

LossTerms generator_loss(const net::Prediction& pred, const Batch& batch, const body::DiffBodyModel& body,
                         const net::Discriminator* disc, const eval::LossWeights& w, const camera::Intrinsics& K) {
  const auto B = static_cast<std::int64_t>(batch.gt_beta.size(0));
  const auto N = static_cast<std::int64_t>(batch.views);
  LossTerms t;
  const auto smpl = eval::smpl_loss_terms(pred.body_rotation, pred.beta, batch.gt_theta, batch.gt_beta);
  t.pose = smpl.pose;
  t.shape = smpl.shape;
  const Tensor j3d = predicted_camera_joints(pred, body);
  t.kp3d = eval::keypoint3d_loss(j3d, batch.j3d);
  const auto proj = camera::project(ops::reshape(j3d, {B * N, 24, 3}), K, /*clamp=*/true);
  t.clamped = proj.clamped;
  const Tensor j2d = ops::reshape(camera::normalize_pixels(proj.uv, K), {B, N, 24, 2});
  t.kp2d = eval::keypoint2d_loss(j2d, batch.j2d);
  t.total = t.pose * w.pose + t.shape * w.shape + t.kp3d * w.kp3d + t.kp2d * w.kp2d;
  if (disc != nullptr) {
    const Tensor fake = (*disc)(pred.body_rotation, pred.beta);
    t.adv = eval::adversarial_losses(fake, fake.detach()).gen;
    t.total = t.total + t.adv * w.adv;
  }
  return t;
}

Trainer::Trainer(const TrainConfig& cfg, const data::Dataset& ds)
    : cfg_(cfg), ds_(ds), body_(ds.body_model()), rng_(data::splitmix64(cfg.seed)) {
  cfg_.validate();
  if (cfg_.model.image_size != ds.config().image_size || cfg_.model.in_channels != ds.config().channels) {
    throw std::invalid_argument("trainer: model image size/channels do not match the dataset");
  }
  if (cfg_.max_train_views > ds.views()) throw std::invalid_argument("trainer: max_train_views exceeds stored views");
  model_ = std::make_unique<net::Network>(cfg_.model, cfg_.precision);
  disc_ = std::make_unique<net::Discriminator>(data::splitmix64(cfg_.seed + 1), cfg_.precision);
  opt_g_ = std::make_unique<AdamW>(model_->parameters(),
                                   AdamWOptions{cfg_.lr, cfg_.beta1, cfg_.beta2, 1e-8, cfg_.weight_decay});
  opt_d_ = std::make_unique<AdamW>(disc_->parameters(),
                                   AdamWOptions{cfg_.disc_lr, cfg_.beta1, cfg_.beta2, 1e-8, cfg_.weight_decay});
}

EpochStats Trainer::run_epoch(std::size_t epoch) {
  const auto t0 = Clock::now();
  const auto [begin, end] = ds_.train_range();
  std::vector<std::size_t> order(end - begin);
  std::iota(order.begin(), order.end(), begin);
  if (cfg_.train_limit > 0 && order.size() > cfg_.train_limit) order.resize(cfg_.train_limit);
  shuffle(order, rng_);

  const bool fixed_views = cfg_.model.variant == net::Variant::a || cfg_.model.variant == net::Variant::b;
  const camera::Intrinsics K = ds_.config().intrinsics();
  EpochStats st;
  st.epoch = epoch;
  for (std::size_t first = 0; first < order.size(); first += cfg_.batch_size) {
    const std::span<const std::size_t> ids(order.data() + first, std::min(cfg_.batch_size, order.size() - first));
    std::size_t n = cfg_.model.train_views;
    if (!fixed_views) n = cfg_.min_views + uniform_index(rng_, cfg_.max_train_views - cfg_.min_views + 1);
    std::vector<std::size_t> views(ds_.views());
    std::iota(views.begin(), views.end(), 0);
    std::vector<std::int64_t> slots;
    if (!fixed_views) {
      shuffle(views, rng_);
      std::vector<std::int64_t> all(cfg_.model.max_views);
      std::iota(all.begin(), all.end(), 0);
      shuffle(all, rng_);
      slots.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
    }
    views.resize(n);
    const Batch batch = make_batch(ds_, ids, views, cfg_.precision);

    const net::Prediction pred = model_->forward(batch.images, slots);
    const LossTerms terms =
        generator_loss(pred, batch, body_, cfg_.adversarial ? disc_.get() : nullptr, cfg_.weights, K);
    const double loss = terms.total.item();
    if (!std::isfinite(loss)) {
      throw NumericalError("non-finite generator loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(st.batches));
    }
    opt_g_->zero_grad();
    opt_d_->zero_grad();
    terms.total.backward();
    opt_g_->step();

    double disc_loss = 0;
    if (cfg_.adversarial) {
      opt_d_->zero_grad();
      Tensor real_rot;
      {
        NoGradGuard ng;
        real_rot = ops::reshape(ops::rodrigues(ops::reshape(batch.gt_theta, {-1, 3})),
                                {static_cast<std::int64_t>(ids.size()), 23, 3, 3});
      }
      const Tensor d = eval::adversarial_losses((*disc_)(pred.body_rotation.detach(), pred.beta.detach()),
                                                (*disc_)(real_rot, batch.gt_beta))
                           .disc;
      disc_loss = d.item();
      if (!std::isfinite(disc_loss)) {
        throw NumericalError("non-finite discriminator loss at epoch " + std::to_string(epoch));
      }
      d.backward();
      opt_d_->step();
    }

    ++st.batches;
    st.loss += loss;
    st.pose += terms.pose.item();
    st.shape += terms.shape.item();
    st.kp3d += terms.kp3d.item();
    st.kp2d += terms.kp2d.item();
    st.adv += terms.adv.defined() ? terms.adv.item() : 0.0;
    st.disc += disc_loss;
    st.clamped_batches += terms.clamped;
  }
  const double nb = static_cast<double>(std::max<std::size_t>(1, st.batches));
  for (double* v : {&st.loss, &st.pose, &st.shape, &st.kp3d, &st.kp2d, &st.adv, &st.disc}) *v /= nb;
  st.seconds = seconds_since(t0);
  return st;
}

void Trainer::save(std::size_t epoch) const {
  if (cfg_.out_dir.empty()) return;
  std::filesystem::create_directories(cfg_.out_dir);
  net::save_checkpoint(std::filesystem::path(cfg_.out_dir) / "checkpoint.bin", *model_, disc_.get(),
                       {{"epoch", epoch}, {"train_config", cfg_.to_json()}});
}

RunReport Trainer::train(const std::function<void(const EpochStats&)>& on_epoch) {
  const auto t0 = Clock::now();
  RunReport report;
  for (std::size_t e = 1; e <= cfg_.epochs; ++e) {
    report.epochs.push_back(run_epoch(e));
    if (on_epoch) on_epoch(report.epochs.back());
    if (e == cfg_.epochs || (cfg_.checkpoint_every > 0 && e % cfg_.checkpoint_every == 0)) save(e);
  }
  report.seconds = seconds_since(t0);
  return report;
}

eval::MetricReport evaluate(const net::Network& model, const data::Dataset& ds, std::size_t views,
                            const EvalOptions& options) {
  const auto [begin, end] = options.range.value_or(ds.eval_range());
  if (begin >= end || end > ds.size()) throw std::invalid_argument("evaluate: empty or invalid sample range");
  if (views == 0 || views > ds.views()) {
    throw net::ViewCountError("evaluate: " + std::to_string(views) + " views requested, dataset stores " +
                              std::to_string(ds.views()));
  }
  NoGradGuard ng;
  const body::DiffBodyModel body(ds.body_model());
  std::vector<std::size_t> view_ids(views);
  std::iota(view_ids.begin(), view_ids.end(), 0);
  std::vector<body::MatX3> pred_mm, gt_mm;
  for (std::size_t first = begin; first < end; first += options.batch_size) {
    std::vector<std::size_t> ids(std::min(options.batch_size, end - first));
    std::iota(ids.begin(), ids.end(), first);
    const Batch batch = make_batch(ds, ids, view_ids, model.dtype(), options.hook);
    const Tensor j3d = predicted_camera_joints(model.forward(batch.images), body);
    const std::vector<double> p = j3d.to_vector();
    const std::vector<double> g = batch.j3d.to_vector();
    for (std::size_t r = 0; r < ids.size() * views; ++r) {
      body::MatX3 pm(24, 3), gm(24, 3);
      for (std::size_t k = 0; k < 72; ++k) {
        pm(static_cast<Eigen::Index>(k / 3), static_cast<Eigen::Index>(k % 3)) = 1000.0 * p[r * 72 + k];
        gm(static_cast<Eigen::Index>(k / 3), static_cast<Eigen::Index>(k % 3)) = 1000.0 * g[r * 72 + k];
      }
      pred_mm.push_back(std::move(pm));
      gt_mm.push_back(std::move(gm));
    }
  }
  return eval::compute_metrics(pred_mm, gt_mm);
}

}  // namespace mvhmr::train
