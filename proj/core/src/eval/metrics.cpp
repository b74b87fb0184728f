#include "mvhmr/eval/metrics.hpp"

#include <cmath>
#include <ostream>

namespace mvhmr::eval {

namespace {

std::vector<double> joint_errors(const MatX3& a, const MatX3& b) {
  std::vector<double> out(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index j = 0; j < a.rows(); ++j) out[j] = (a.row(j) - b.row(j)).norm();
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

double pck_percent(const std::vector<double>& joint_errors_mm, double threshold_mm) {
  if (joint_errors_mm.empty()) return 0.0;
  std::size_t hit = 0;
  for (double e : joint_errors_mm) hit += e <= threshold_mm;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(joint_errors_mm.size());
}

double auc_percent(const std::vector<double>& joint_errors_mm) {
  double s = 0;
  for (int i = 1; i <= kAucSteps; ++i) s += pck_percent(joint_errors_mm, kAucStepMm * i);
  return s / kAucSteps;
}

MetricReport compute_metrics(const std::vector<MatX3>& pred_mm, const std::vector<MatX3>& gt_mm) {
  if (pred_mm.size() != gt_mm.size()) throw std::invalid_argument("compute_metrics: sample counts differ");
  MetricReport r;
  std::vector<double> all_errors;
  bool unit_warned = false;
  for (std::size_t i = 0; i < pred_mm.size(); ++i) {
    const MatX3& p = pred_mm[i];
    const MatX3& g = gt_mm[i];
    if (p.rows() != g.rows() || p.rows() == 0) {
      throw std::invalid_argument("compute_metrics: sample " + std::to_string(i) + " joint counts differ");
    }
    const auto errs = joint_errors(p, g);
    all_errors.insert(all_errors.end(), errs.begin(), errs.end());
    r.sample_mpjpe_mm.push_back(mean(errs));

    double pa = 0;
    try {
      pa = mean(joint_errors(procrustes_align(p, g).aligned, g));
    } catch (const DegenerateAlignment&) {
      ++r.degenerate;
      const MatX3 pc = p.rowwise() - p.colwise().mean();
      const MatX3 gc = g.rowwise() - g.colwise().mean();
      pa = mean(joint_errors(pc, gc));
    }
    r.sample_pa_mpjpe_mm.push_back(pa);

    if (!unit_warned && (p.cwiseAbs().maxCoeff() > kUnitWarningMm || g.cwiseAbs().maxCoeff() > kUnitWarningMm)) {
      r.warnings.push_back("sample " + std::to_string(i) + " has coordinates above 1e4; inputs may not be millimetres");
      unit_warned = true;
    }
  }
  r.mpjpe_mm = mean(r.sample_mpjpe_mm);
  r.pa_mpjpe_mm = mean(r.sample_pa_mpjpe_mm);
  r.pck = pck_percent(all_errors, kPckThresholdMm);
  r.auc = auc_percent(all_errors);
  if (r.degenerate > 0) {
    r.warnings.push_back(std::to_string(r.degenerate) + " samples had degenerate Procrustes alignment");
  }
  return r;
}

nlohmann::json MetricReport::summary_json() const {
  return {{"mpjpe_mm", mpjpe_mm},
          {"pa_mpjpe_mm", pa_mpjpe_mm},
          {"pck150", pck},
          {"auc", auc},
          {"samples", sample_mpjpe_mm.size()},
          {"degenerate", degenerate},
          {"warnings", warnings}};
}

void write_report(std::ostream& out, const MetricReport& report) {
  const auto old_precision = out.precision(10);
  out << "samples " << report.sample_mpjpe_mm.size() << '\n'
      << "mpjpe_mm " << report.mpjpe_mm << '\n'
      << "pa_mpjpe_mm " << report.pa_mpjpe_mm << '\n'
      << "pck150 " << report.pck << '\n'
      << "auc " << report.auc << '\n'
      << "degenerate " << report.degenerate << '\n';
  for (const auto& w : report.warnings) out << "warning " << w << '\n';
  out.precision(old_precision);
}

void write_samples_jsonl(std::ostream& out, const MetricReport& report) {
  for (std::size_t i = 0; i < report.sample_mpjpe_mm.size(); ++i) {
    out << nlohmann::json{{"index", i},
                          {"mpjpe_mm", report.sample_mpjpe_mm[i]},
                          {"pa_mpjpe_mm", report.sample_pa_mpjpe_mm[i]}}
               .dump()
        << '\n';
  }
}

}  // namespace mvhmr::eval
