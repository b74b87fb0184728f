#include "mvhmr/net/overhead.hpp"

namespace mvhmr::net {

OverheadCounts count_params_and_macs(Network& model, std::size_t views) {
  const auto& cfg = model.config();
  OverheadCounts c;
  c.backbone_params = count_params(model.backbone_parameters());
  c.head_params = count_params(model.head_parameters());
  c.backbone_macs = views * model.encoder.macs_per_view();

  const std::size_t T = cfg.tokens_per_view();
  const std::size_t C = cfg.channels;
  auto decoder_macs = [&](std::size_t lq, std::size_t lk) {
    std::size_t n = 0;
    for (const auto& layer : model.decoder) n += layer.macs(lq, lk);
    return n;
  };
  switch (cfg.variant) {
    case Variant::a:
      if (views != cfg.train_views) throw ViewCountError("variant a only runs at its training view count");
      c.head_macs = model.joint_mlp.macs(1);
      break;
    case Variant::b:
      if (views != cfg.train_views) throw ViewCountError("variant b only runs at its training view count");
      c.head_macs = decoder_macs(cfg.train_views + 1, views * T) + model.f_c.macs(cfg.train_views) +
                    model.f_b.macs(1);
      break;
    case Variant::c:
      c.head_macs = model.f_c.macs(views) + model.score_mlp.macs(views) + views * C + model.f_b.macs(1);
      break;
    case Variant::d:
      c.head_macs = model.f_c.macs(views) + decoder_macs(1, views * T) + model.f_b.macs(1);
      break;
  }
  return c;
}

}  // namespace mvhmr::net
