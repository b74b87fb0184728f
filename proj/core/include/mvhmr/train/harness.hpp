#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mvhmr/net/overhead.hpp"
#include "mvhmr/train/trainer.hpp"

namespace mvhmr::train {

struct ViewResult {
  std::size_t views = 0;
  bool ok = false;
  eval::MetricReport report;
  std::string error;  // set when the variant rejected this view count
};

// Evaluates each view count; ViewCountError is recorded, not thrown.
std::vector<ViewResult> evaluate_views(const net::Network& model, const data::Dataset& ds,
                                       std::span<const std::size_t> view_counts, const EvalOptions& options = {});

void write_view_table(std::ostream& out, const std::vector<ViewResult>& results);
nlohmann::json view_results_json(const std::vector<ViewResult>& results);

struct AblationRow {
  net::Variant variant = net::Variant::d;
  std::uint64_t seed = 0;
  std::string train_error;  // empty when training succeeded
  double train_seconds = 0;
  double final_loss = 0;
  std::vector<ViewResult> results;

  // Evaluated at every requested view count.
  bool flexible() const;
};

// Trains every variant from `base` with the same seed, data and budget, then
// evaluates each at `view_counts`. A failure in one variant is recorded in its
// row and the sweep continues.
std::vector<AblationRow> ablate(const TrainConfig& base, const data::Dataset& ds,
                                std::span<const std::size_t> view_counts,
                                const std::function<void(const std::string&)>& log = {});

void write_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows);
nlohmann::json ablation_json(const std::vector<AblationRow>& rows);

struct OverheadRow {
  std::size_t views = 0;
  bool ok = false;
  std::string error;
  net::OverheadCounts counts;
  double backbone_ms = 0;  // median wall clock, one sample
  double head_ms = 0;
};

inline constexpr std::size_t kMinTimingReps = 20;

std::vector<OverheadRow> overhead(net::Network& model, std::span<const std::size_t> view_counts,
                                  std::size_t reps = kMinTimingReps, std::uint64_t seed = 0);
void write_overhead_table(std::ostream& out, const std::vector<OverheadRow>& rows);
nlohmann::json overhead_json(const std::vector<OverheadRow>& rows);

struct PerturbOptions {
  // Defaults are the 256-pixel magnitudes scaled to a 64-pixel image.
  double max_shift_px = 5.0;
  double scale_min = 0.8;
  double scale_max = 1.2;
  std::uint64_t seed = 0;
};

struct PerturbResult {
  std::size_t views = 0;
  eval::MetricReport clean;
  eval::MetricReport perturbed;
};

// Each (sample, view) gets an independent shift U[-s, s]^2 and scale from a
// stream keyed by (seed, sample, view).
data::Image perturb_for(const data::Image& image, std::size_t sample, std::size_t view, const PerturbOptions& options);

std::vector<PerturbResult> perturb_eval(const net::Network& model, const data::Dataset& ds,
                                        std::span<const std::size_t> view_counts,
                                        const PerturbOptions& options = {});
void write_perturb_table(std::ostream& out, const std::vector<PerturbResult>& results);
nlohmann::json perturb_json(const std::vector<PerturbResult>& results);

}  // namespace mvhmr::train
