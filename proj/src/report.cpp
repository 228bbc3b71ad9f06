// src/report.cpp
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

#include "mladv/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "mladv/errors.hpp"

namespace mladv {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::string format_acc(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << v * 100.0;
  return os.str();
}

}  // namespace

std::size_t MetricsRun::best_step() const {
  std::map<std::size_t, std::pair<double, std::size_t>> by_step;  // sum, count
  for (const Row& r : rows) {
    auto& acc = by_step[r.step];
    acc.first += r.acc;
    acc.second += 1;
  }
  if (by_step.empty()) throw FormatError("metrics '" + label + "' is empty");
  std::size_t best = 0;
  double best_avg = -1.0;
  for (const auto& [step, acc] : by_step) {  // ascending step: earliest ties win
    const double avg = acc.first / static_cast<double>(acc.second);
    if (avg > best_avg) {
      best_avg = avg;
      best = step;
    }
  }
  return best;
}

std::vector<double> MetricsRun::best_accuracies() const {
  const std::size_t step = best_step();
  std::vector<double> out(languages.size(), 0.0);
  for (const Row& r : rows) {
    if (r.step != step) continue;
    const auto it = std::find(languages.begin(), languages.end(), r.lang);
    out[static_cast<std::size_t>(it - languages.begin())] = r.acc;
  }
  return out;
}

MetricsRun load_metrics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open metrics file " + path);
  MetricsRun run;
  run.label = std::filesystem::path(path).stem().string();
  std::string line;
  if (!std::getline(is, line)) throw FormatError(path + " is empty");
  if (split_csv_line(line) !=
      std::vector<std::string>{"step", "lang", "dev_frame_acc", "loss_am",
                               "loss_lid"}) {
    throw FormatError(path + ": unexpected metrics header '" + line + "'");
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) {
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected 5 fields");
    }
    MetricsRun::Row row;
    try {
      row.step = std::stoul(fields[0]);
      row.lang = fields[1];
      row.acc = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": malformed row");
    }
    if (std::find(run.languages.begin(), run.languages.end(), row.lang) ==
        run.languages.end()) {
      run.languages.push_back(row.lang);
    }
    run.rows.push_back(std::move(row));
  }
  if (run.rows.empty()) throw FormatError(path + " has no data rows");
  return run;
}

double relative_delta(double a, double b) { return (b - a) / a; }

std::string format_delta(double delta) {
  const double pct = delta * 100.0;
  const double rounded = std::round(pct * 10.0) / 10.0;
  std::ostringstream os;
  os << "(" << (rounded >= 0 ? "+" : "");
  if (std::abs(rounded - std::round(rounded)) < 1e-9) {
    os << static_cast<long long>(std::llround(rounded));
  } else {
    os << std::fixed << std::setprecision(1) << rounded;
  }
  os << "%)";
  return os.str();
}

ReportTable make_report(const std::vector<MetricsRun>& runs) {
  if (runs.empty()) throw ConfigError("report: no metrics runs given");
  ReportTable table;
  table.languages = runs[0].languages;
  for (const MetricsRun& run : runs) {
    std::vector<std::string> a = table.languages;
    std::vector<std::string> b = run.languages;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) {
      throw ConfigError("report: language sets disagree between '" +
                        runs[0].label + "' and '" + run.label + "'");
    }
  }
  table.accuracy.assign(table.languages.size(),
                        std::vector<double>(runs.size(), 0.0));
  for (std::size_t m = 0; m < runs.size(); ++m) {
    table.modes.push_back(runs[m].label);
    const std::vector<double> acc = runs[m].best_accuracies();
    double sum = 0.0;
    for (std::size_t l = 0; l < table.languages.size(); ++l) {
      // runs[m].languages may be ordered differently
      const auto it = std::find(runs[m].languages.begin(),
                                runs[m].languages.end(), table.languages[l]);
      const double v =
          acc[static_cast<std::size_t>(it - runs[m].languages.begin())];
      table.accuracy[l][m] = v;
      sum += v;
    }
    table.averages.push_back(sum / static_cast<double>(table.languages.size()));
    if (m == 0 || runs.size() < 2) {
      table.deltas.emplace_back(std::nullopt);
    } else {
      table.deltas.emplace_back(
          relative_delta(table.averages[0], table.averages[m]));
    }
  }
  return table;
}

std::string render_markdown(const ReportTable& table) {
  std::ostringstream os;
  os << "| Language |";
  for (const std::string& mode : table.modes) os << " " << mode << " |";
  os << "\n|---|";
  for (std::size_t m = 0; m < table.modes.size(); ++m) os << "---|";
  os << "\n";
  for (std::size_t l = 0; l < table.languages.size(); ++l) {
    os << "| " << table.languages[l] << " |";
    for (std::size_t m = 0; m < table.modes.size(); ++m) {
      os << " " << format_acc(table.accuracy[l][m]) << " |";
    }
    os << "\n";
  }
  os << "| Average |";
  for (std::size_t m = 0; m < table.modes.size(); ++m) {
    os << " " << format_acc(table.averages[m]);
    if (table.deltas[m]) os << " " << format_delta(*table.deltas[m]);
    os << " |";
  }
  os << "\n";
  return os.str();
}

std::string render_csv(const ReportTable& table) {
  std::ostringstream os;
  os << "lang";
  for (const std::string& mode : table.modes) os << "," << mode;
  os << "\n";
  for (std::size_t l = 0; l < table.languages.size(); ++l) {
    os << table.languages[l];
    for (std::size_t m = 0; m < table.modes.size(); ++m) {
      os << "," << format_acc(table.accuracy[l][m]);
    }
    os << "\n";
  }
  os << "__avg__";
  for (std::size_t m = 0; m < table.modes.size(); ++m) {
    os << "," << format_acc(table.averages[m]);
    if (table.deltas[m]) os << " " << format_delta(*table.deltas[m]);
  }
  os << "\n";
  return os.str();
}

}  // namespace mladv
