#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mvhmr/tensor/grad_check.hpp"

namespace mvhmr::train {

inline constexpr double kOpTolerance = 1e-4;
inline constexpr double kEndToEndTolerance = 1e-3;

struct GradCheckCase {
  std::string name;      // unique, e.g. "op.matmul"
  std::string category;  // op | body | camera | loss | end_to_end | control
  std::function<GradCheckReport(std::uint64_t seed)> run;
};

// Every registered check, each name exactly once. All run in 64-bit.
const std::vector<GradCheckCase>& gradcheck_registry();

// Squaring op whose backward is deliberately wrong (3x instead of 2x); must
// fail any gradient check.
Tensor corrupted_square(const Tensor& x);
GradCheckCase negative_control_case();

struct SuiteEntry {
  std::string name;
  std::string category;
  GradCheckReport report;
  std::string error;  // exception text when the check threw
  bool passed() const { return error.empty() && report.passed; }
};

struct SuiteReport {
  std::vector<SuiteEntry> entries;
  double seconds = 0;
  bool passed() const;
  std::vector<std::string> failures() const;
};

SuiteReport run_gradcheck_suite(const std::vector<GradCheckCase>& cases, std::uint64_t seed);

// One line per check: name, status, max relative error, tolerance.
void write_suite_report(std::ostream& out, const SuiteReport& report);

}  // namespace mvhmr::train
