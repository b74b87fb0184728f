#include "mvhmr/train/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>

#include "mvhmr/tensor/ops.hpp"

namespace mvhmr::train {

namespace {

std::string fmt(double v, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<ViewResult> evaluate_views(const net::Network& model, const data::Dataset& ds,
                                       std::span<const std::size_t> view_counts, const EvalOptions& options) {
  std::vector<ViewResult> out;
  for (std::size_t n : view_counts) {
    ViewResult r;
    r.views = n;
    try {
      r.report = evaluate(model, ds, n, options);
      r.ok = true;
    } catch (const net::ViewCountError& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_view_table(std::ostream& out, const std::vector<ViewResult>& results) {
  out << "views  mpjpe_mm  pa_mpjpe_mm  pck150  auc\n";
  for (const auto& r : results) {
    out << r.views << "      ";
    if (r.ok) {
      out << fmt(r.report.mpjpe_mm) << "  " << fmt(r.report.pa_mpjpe_mm) << "  " << fmt(r.report.pck) << "  "
          << fmt(r.report.auc) << '\n';
    } else {
      out << "error: " << r.error << '\n';
    }
  }
}

nlohmann::json view_results_json(const std::vector<ViewResult>& results) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json j = {{"views", r.views}, {"ok", r.ok}};
    if (r.ok) j["metrics"] = r.report.summary_json();
    else j["error"] = r.error;
    a.push_back(j);
  }
  return a;
}

bool AblationRow::flexible() const {
  return train_error.empty() && std::all_of(results.begin(), results.end(), [](const auto& r) { return r.ok; });
}

std::vector<AblationRow> ablate(const TrainConfig& base, const data::Dataset& ds,
                                std::span<const std::size_t> view_counts,
                                const std::function<void(const std::string&)>& log) {
  std::vector<AblationRow> rows;
  for (net::Variant v : {net::Variant::a, net::Variant::b, net::Variant::c, net::Variant::d}) {
    AblationRow row;
    row.variant = v;
    row.seed = base.seed;
    TrainConfig cfg = base;
    cfg.model.variant = v;
    if (!base.out_dir.empty()) cfg.out_dir = base.out_dir + "/variant_" + std::string(1, net::variant_char(v));
    try {
      Trainer trainer(cfg, ds);
      const RunReport rep = trainer.train();
      row.train_seconds = rep.seconds;
      row.final_loss = rep.epochs.back().loss;
      row.results = evaluate_views(trainer.model(), ds, view_counts);
    } catch (const std::exception& e) {
      row.train_error = e.what();
    }
    if (log) {
      log(std::string("variant ") + net::variant_char(v) + (row.train_error.empty() ? " done" : " failed: " + row.train_error));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "variant  seed  train_s  final_loss";
  if (!rows.empty()) {
    for (const auto& r : rows.front().results) out << "  mpjpe@" << r.views << "  pa_mpjpe@" << r.views;
  }
  out << "  flexible\n";
  for (const auto& row : rows) {
    out << net::variant_char(row.variant) << "        " << row.seed << "     " << fmt(row.train_seconds, 1) << "    "
        << fmt(row.final_loss, 4);
    if (!row.train_error.empty()) {
      out << "  training failed: " << row.train_error << '\n';
      continue;
    }
    for (const auto& r : row.results) {
      if (r.ok) out << "  " << fmt(r.report.mpjpe_mm) << "  " << fmt(r.report.pa_mpjpe_mm);
      else out << "  error  error";
    }
    out << "  " << (row.flexible() ? "yes" : "no") << '\n';
  }
}

nlohmann::json ablation_json(const std::vector<AblationRow>& rows) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& row : rows) {
    a.push_back({{"variant", std::string(1, net::variant_char(row.variant))},
                 {"seed", row.seed},
                 {"train_error", row.train_error},
                 {"train_seconds", row.train_seconds},
                 {"final_loss", row.final_loss},
                 {"flexible", row.flexible()},
                 {"results", view_results_json(row.results)}});
  }
  return a;
}

std::vector<OverheadRow> overhead(net::Network& model, std::span<const std::size_t> view_counts, std::size_t reps,
                                  std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  const auto& cfg = model.config();
  const std::size_t H = cfg.image_size, C = cfg.in_channels;
  reps = std::max(reps, kMinTimingReps);
  NoGradGuard ng;
  std::vector<OverheadRow> rows;
  for (std::size_t n : view_counts) {
    OverheadRow row;
    row.views = n;
    try {
      row.counts = net::count_params_and_macs(model, n);
      data::Rng rng(data::sample_seed(seed, n));
      std::vector<double> px(n * H * H * C);
      for (auto& v : px) v = data::uniform01(rng);
      const Tensor images = Tensor::from_vector({n, H, H, C}, px, model.dtype());
      std::vector<double> bb, hd;
      for (std::size_t r = 0; r < reps; ++r) {
        const auto t0 = Clock::now();
        const Tensor tokens = model.encode(images);
        const auto t1 = Clock::now();
        const auto tok = ops::reshape(tokens, {1, static_cast<std::int64_t>(n), static_cast<std::int64_t>(tokens.size(1)),
                                               static_cast<std::int64_t>(tokens.size(2))});
        const auto t2 = Clock::now();
        const net::Prediction p = model.head(tok);
        const auto t3 = Clock::now();
        bb.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        hd.push_back(std::chrono::duration<double, std::milli>(t3 - t2).count());
        (void)p;
      }
      row.backbone_ms = median(bb);
      row.head_ms = median(hd);
      row.ok = true;
    } catch (const net::ViewCountError& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_overhead_table(std::ostream& out, const std::vector<OverheadRow>& rows) {
  out << "views  params_backbone  params_head  macs_backbone  macs_head  ms_backbone  ms_head\n";
  for (const auto& r : rows) {
    out << r.views << "      ";
    if (!r.ok) {
      out << "error: " << r.error << '\n';
      continue;
    }
    out << r.counts.backbone_params << "  " << r.counts.head_params << "  " << r.counts.backbone_macs << "  "
        << r.counts.head_macs << "  " << fmt(r.backbone_ms, 3) << "  " << fmt(r.head_ms, 3) << '\n';
  }
}

nlohmann::json overhead_json(const std::vector<OverheadRow>& rows) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = {{"views", r.views}, {"ok", r.ok}};
    if (r.ok) {
      j["params_backbone"] = r.counts.backbone_params;
      j["params_head"] = r.counts.head_params;
      j["macs_backbone"] = r.counts.backbone_macs;
      j["macs_head"] = r.counts.head_macs;
      j["ms_backbone"] = r.backbone_ms;
      j["ms_head"] = r.head_ms;
    } else {
      j["error"] = r.error;
    }
    a.push_back(j);
  }
  return a;
}

data::Image perturb_for(const data::Image& image, std::size_t sample, std::size_t view, const PerturbOptions& o) {
  data::Rng rng(data::sample_seed(data::sample_seed(o.seed, sample), view));
  const double dx = data::uniform(rng, -o.max_shift_px, o.max_shift_px);
  const double dy = data::uniform(rng, -o.max_shift_px, o.max_shift_px);
  const double s = data::uniform(rng, o.scale_min, o.scale_max);
  return data::perturb_crop(image, dx, dy, s);
}

std::vector<PerturbResult> perturb_eval(const net::Network& model, const data::Dataset& ds,
                                        std::span<const std::size_t> view_counts, const PerturbOptions& options) {
  std::vector<PerturbResult> out;
  EvalOptions perturbed;
  perturbed.hook = [options](const data::Image& img, std::size_t sample, std::size_t view) {
    return perturb_for(img, sample, view, options);
  };
  for (std::size_t n : view_counts) {
    PerturbResult r;
    r.views = n;
    r.clean = evaluate(model, ds, n);
    r.perturbed = evaluate(model, ds, n, perturbed);
    out.push_back(std::move(r));
  }
  return out;
}

void write_perturb_table(std::ostream& out, const std::vector<PerturbResult>& results) {
  out << "views  clean_mpjpe  clean_pa_mpjpe  perturbed_mpjpe  perturbed_pa_mpjpe\n";
  for (const auto& r : results) {
    out << r.views << "      " << fmt(r.clean.mpjpe_mm) << "  " << fmt(r.clean.pa_mpjpe_mm) << "  "
        << fmt(r.perturbed.mpjpe_mm) << "  " << fmt(r.perturbed.pa_mpjpe_mm) << '\n';
  }
}

nlohmann::json perturb_json(const std::vector<PerturbResult>& results) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : results) {
    a.push_back({{"views", r.views}, {"clean", r.clean.summary_json()}, {"perturbed", r.perturbed.summary_json()}});
  }
  return a;
}

}  // namespace mvhmr::train
