// include/mladv/report.hpp
//
// Copyright 2026  The mladv authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MLADV_REPORT_HPP_
#define MLADV_REPORT_HPP_

#include <optional>
#include <string>
#include <vector>

namespace mladv {

// Merges per-run metrics CSVs into one per-language x per-mode accuracy table
// with a uniform-average row and relative deltas against the first run.

struct MetricsRun {
  std::string label;  // file stem, e.g. "multi"
  std::vector<std::string> languages;

  struct Row {
    std::size_t step = 0;
    std::string lang;
    double acc = 0.0;
  };
  std::vector<Row> rows;

  /// Step with the highest uniform-average accuracy, earliest on ties.
  std::size_t best_step() const;
  /// Per-language accuracies at best_step(), in `languages` order.
  std::vector<double> best_accuracies() const;
};

MetricsRun load_metrics_csv(const std::string& path);

struct ReportTable {
  std::vector<std::string> languages;
  std::vector<std::string> modes;
  // accuracy[lang][mode]
  std::vector<std::vector<double>> accuracy;
  std::vector<double> averages;               // per mode
  std::vector<std::optional<double>> deltas;  // per mode, relative to mode 0
};

ReportTable make_report(const std::vector<MetricsRun>& runs);

/// (b - a) / a.
double relative_delta(double a, double b);

/// "(-10%)" / "(+2.8%)": percent with one decimal, trailing .0 dropped.
std::string format_delta(double delta);

std::string render_markdown(const ReportTable& table);
std::string render_csv(const ReportTable& table);

}  // namespace mladv

#endif  // MLADV_REPORT_HPP_
