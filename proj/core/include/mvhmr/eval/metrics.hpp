#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvhmr/eval/procrustes.hpp"

namespace mvhmr::eval {

inline constexpr double kPckThresholdMm = 150.0;
inline constexpr double kAucStepMm = 5.0;
inline constexpr int kAucSteps = 30;
// Joint errors above this suggest metres and millimetres were mixed.
inline constexpr double kUnitWarningMm = 1e4;

struct MetricReport {
  double mpjpe_mm = 0;
  double pa_mpjpe_mm = 0;
  double pck = 0;  // percent of joints with error <= 150 mm
  double auc = 0;  // mean PCK over {5, 10, ..., 150} mm, percent
  std::vector<double> sample_mpjpe_mm;
  std::vector<double> sample_pa_mpjpe_mm;
  // Samples whose similarity alignment was degenerate; their PA error falls
  // back to the centroid-aligned error.
  std::size_t degenerate = 0;
  std::vector<std::string> warnings;

  nlohmann::json summary_json() const;
};

// PCK with the inclusive rule, in percent.
double pck_percent(const std::vector<double>& joint_errors_mm, double threshold_mm);
double auc_percent(const std::vector<double>& joint_errors_mm);

// pred/gt: one k x 3 joint set per sample, millimetres. Throws
// std::invalid_argument on count or shape mismatch.
MetricReport compute_metrics(const std::vector<MatX3>& pred_mm, const std::vector<MatX3>& gt_mm);

// "key value" lines.
void write_report(std::ostream& out, const MetricReport& report);
// One JSON object per sample.
void write_samples_jsonl(std::ostream& out, const MetricReport& report);

}  // namespace mvhmr::eval
