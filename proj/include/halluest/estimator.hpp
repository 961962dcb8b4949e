#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "halluest/error.hpp"
#include "halluest/labeling.hpp"
#include "halluest/metrics.hpp"
#include "halluest/types.hpp"

// Detector-corrected hallucination rates:
//
//   HR_est = 100 * P * H_det / (R * N)
//
// P * H_det estimates the true positives among the detections, dividing by
// R restores the missed ones, and N turns the count into a per-token rate.

namespace halluest::estimator {

struct DetectorPerformance {
  std::string language;
  double precision = 0.0;
  double recall = 0.0;
  std::string source = "silver";  // silver | gold
  Task task = Task::Binary;
  std::string detector_instance;  // empty: applies to every instance

  friend bool operator==(const DetectorPerformance&, const DetectorPerformance&) = default;
};

struct DetectionRun {
  std::string language;
  std::string model_id;
  std::int64_t seed = 0;
  std::string detector_instance;
  std::uint64_t h_det = 0;
  std::uint64_t n = 0;

  friend bool operator==(const DetectionRun&, const DetectionRun&) = default;
};

inline constexpr const char* kExceeds100 = "exceeds-100";

struct RateEstimate {
  std::string language;
  std::string model_id;
  double mean = 0.0;  // percent
  double std = 0.0;   // percent, sample standard deviation
  std::size_t n_runs = 0;
  std::vector<std::string> flags;

  friend bool operator==(const RateEstimate&, const RateEstimate&) = default;
};

struct DetectionCount {
  std::uint64_t h_det = 0;
  std::uint64_t n = 0;
};

/// Detected (non-O) tokens and total tokens across responses.
inline DetectionCount count_detections(const std::vector<labeling::TokenLabels>& preds) {
  DetectionCount c;
  for (const auto& tl : preds) {
    c.n += tl.labels.size();
    for (Label l : tl.labels) c.h_det += is_positive(l) ? 1 : 0;
  }
  if (c.n == 0) throw Error(ErrorKind::EmptyCorpus, "no tokens to count");
  return c;
}

struct RateResult {
  double hr_est = 0.0;  // percent
  double naive = 0.0;   // percent, H_det / N
  bool exceeds_100 = false;
};

/// True-positive count implied by precision: TP = P * H_det.
inline double implied_true_positives(double precision, double h_det) { return precision * h_det; }

/// Corrected hallucination count: TP / R.
inline double corrected_count(double true_positives, double recall) {
  if (!(recall > 0.0)) throw Error(ErrorKind::ZeroRecall, "recall must be positive");
  return true_positives / recall;
}

inline RateResult estimate_rate(double precision, double recall, std::uint64_t h_det,
                                std::uint64_t n) {
  if (!(recall > 0.0) || recall > 1.0) {
    throw Error(ErrorKind::ZeroRecall, "recall must lie in (0,1]");
  }
  if (!(precision >= 0.0 && precision <= 1.0)) {
    throw Error(ErrorKind::InvalidParams, "precision must lie in [0,1]");
  }
  if (n == 0) throw Error(ErrorKind::ZeroCorpus, "corpus has no tokens");
  if (h_det > n) throw Error(ErrorKind::InvalidParams, "h_det exceeds n");
  const double h = static_cast<double>(h_det);
  const double total = static_cast<double>(n);
  RateResult r;
  r.hr_est = 100.0 * precision * h / (recall * total);
  r.naive = 100.0 * h / total;
  r.exceeds_100 = r.hr_est > 100.0;
  return r;
}

inline RateResult estimate_rate(const DetectorPerformance& perf, std::uint64_t h_det,
                                std::uint64_t n) {
  return estimate_rate(perf.precision, perf.recall, h_det, n);
}

/// Mean and sample (n-1) standard deviation; std is 0 for a single value.
inline std::pair<double, double> mean_and_sample_std(const std::vector<double>& xs) {
  if (xs.empty()) throw Error(ErrorKind::EmptyGroup, "no estimates");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

struct RateSample {
  std::string language;
  std::string model_id;
  double hr_est = 0.0;
};

/// Groups estimates by (language, model_id). Groups come back sorted by key.
inline std::vector<RateEstimate> aggregate_runs(const std::vector<RateSample>& samples) {
  if (samples.empty()) throw Error(ErrorKind::EmptyGroup, "no estimates to aggregate");
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& s : samples) groups[{s.language, s.model_id}].push_back(s.hr_est);
  std::vector<RateEstimate> out;
  out.reserve(groups.size());
  for (const auto& [key, values] : groups) {
    const auto [mean, sd] = mean_and_sample_std(values);
    RateEstimate e{key.first, key.second, mean, sd, values.size(), {}};
    bool any_over = mean > 100.0;
    for (double v : values) any_over = any_over || v > 100.0;
    if (any_over) e.flags.emplace_back(kExceeds100);
    out.push_back(std::move(e));
  }
  return out;
}

/// Performance lookup: exact (language, task, instance) first, then an
/// instance-agnostic row for the language and task. Gold rows beat silver.
class PerformanceTable {
 public:
  PerformanceTable() = default;
  explicit PerformanceTable(std::vector<DetectorPerformance> rows) : rows_(std::move(rows)) {}

  void add(DetectorPerformance p) { rows_.push_back(std::move(p)); }

  std::optional<DetectorPerformance> find(const std::string& language, Task task,
                                          const std::string& instance) const {
    const DetectorPerformance* best = nullptr;
    int best_score = -1;
    for (const auto& r : rows_) {
      if (r.language != language || r.task != task) continue;
      int score = 0;
      if (!r.detector_instance.empty()) {
        if (r.detector_instance != instance) continue;
        score += 2;
      }
      if (r.source == "gold") score += 1;
      if (score > best_score) {
        best_score = score;
        best = &r;
      }
    }
    if (!best) return std::nullopt;
    return *best;
  }

  const std::vector<DetectorPerformance>& rows() const { return rows_; }

 private:
  std::vector<DetectorPerformance> rows_;
};

struct EstimationOutput {
  std::vector<RateSample> samples;
  std::vector<RateEstimate> estimates;
};

/// Applies the correction to every run, then aggregates per cell.
inline EstimationOutput estimate_from_runs(const std::vector<DetectionRun>& runs,
                                           const PerformanceTable& perf,
                                           Task task = Task::Binary) {
  EstimationOutput out;
  for (const auto& run : runs) {
    const auto p = perf.find(run.language, task, run.detector_instance);
    if (!p) {
      throw Error(ErrorKind::InvalidParams,
                  "no detector performance for language '" + run.language + "' (" +
                      std::string(to_string(task)) + ")");
    }
    out.samples.push_back({run.language, run.model_id, estimate_rate(*p, run.h_det, run.n).hr_est});
  }
  out.estimates = aggregate_runs(out.samples);
  return out;
}

/// Language-by-model matrix with "mean±std" cells.
inline void write_rate_matrix_csv(std::ostream& os, const std::vector<RateEstimate>& estimates,
                                  int decimals = 2) {
  std::set<std::string> models;
  std::map<std::string, std::map<std::string, const RateEstimate*>> cells;
  for (const auto& e : estimates) {
    models.insert(e.model_id);
    cells[e.language][e.model_id] = &e;
  }
  os << "language";
  for (const auto& m : models) os << ',' << m;
  os << '\n';
  for (const auto& [lang, row] : cells) {
    os << lang;
    for (const auto& m : models) {
      os << ',';
      const auto it = row.find(m);
      if (it != row.end()) {
        os << metrics::format_fixed(it->second->mean, decimals) << "±"
           << metrics::format_fixed(it->second->std, decimals);
      }
    }
    os << '\n';
  }
}

}  // namespace halluest::estimator
