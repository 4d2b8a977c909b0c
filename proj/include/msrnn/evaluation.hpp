#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msrnn/data.hpp"
#include "msrnn/tensor.hpp"

namespace msrnn {

/// Root mean squared error over every sample, hour and feature.
double rmse(std::span<const Matrix> preds, std::span<const Matrix> truths);

struct ZNormalized {
  Matrix values;
  bool flagged = false;  // some column had zero variance; its std was clamped to 1
};

/// Per-column z-normalization over the rows (population std).
ZNormalized z_normalize(const Matrix& series);

struct NrmseResult {
  double value = 0.0;
  std::size_t flagged_samples = 0;
};

/// RMSE after z-normalizing each feature of both the predicted and the true
/// 24-hour series, per sample. Scores shape disagreement only.
NrmseResult normalized_rmse_detail(std::span<const Matrix> preds, std::span<const Matrix> truths);
double normalized_rmse(std::span<const Matrix> preds, std::span<const Matrix> truths);

/// One forecast day of one method. `predicted`/`actual` are in model (scaled)
/// units; the *_original matrices are in source units.
struct ForecastRecord {
  std::string method;
  std::string merchant_id;
  std::string category;
  std::int64_t origin_hour = 0;
  Matrix predicted;
  Matrix actual;
  Matrix predicted_original;
  Matrix actual_original;
};

struct FeatureScore {
  std::string feature;  // a feature name or "ALL"
  double rmse = 0.0;
  double nrmse = 0.0;
  double rmse_original = 0.0;
};

struct ReportEntry {
  std::string profile;  // a category or "AVERAGE"
  std::string method;
  std::vector<FeatureScore> features;  // per feature, then ALL
  std::vector<double> horizon_rmse;
  std::vector<double> horizon_nrmse;
  std::size_t samples = 0;
  std::size_t flagged_samples = 0;

  const FeatureScore& all() const { return features.back(); }
};

struct EvalReport {
  std::vector<ReportEntry> entries;  // profiles in report order, then AVERAGE rows

  const ReportEntry* find(std::string_view profile, std::string_view method) const;
  /// profile,method,feature,rmse,nrmse,rmse_original
  void write_csv(std::ostream& out) const;
  /// profile,method,horizon,rmse,nrmse
  void write_horizon_csv(std::ostream& out) const;
};

/// Groups records by (category, method); AVERAGE rows are arithmetic means of
/// each method's per-profile entries.
EvalReport build_report(std::span<const ForecastRecord> records);

struct TraceRow {
  std::string merchant_id;
  std::int64_t origin_hour = 0;
  std::string feature;
  std::size_t hour = 0;
  std::string method;
  double truth = 0.0;
  double predicted = 0.0;
};

/// For every forecast day, feature and requested hour: truth and prediction in
/// source units mapped through a minmax01 scaler.
std::vector<TraceRow> horizon_trace(std::span<const ForecastRecord> records,
                                    std::span<const std::size_t> hours, const Scaler& minmax);
void write_trace_csv(std::span<const TraceRow> rows, std::ostream& out);

/// Two-dimensional histograms over [0,1]^2 of (x_feature, y_feature) at one
/// forecast hour, for truth and prediction. Cells are row = y bin, col = x bin.
struct DensityGrid {
  std::size_t bins = 0;
  std::vector<std::size_t> truth;
  std::vector<std::size_t> predicted;
  std::size_t points = 0;
  std::size_t clamped = 0;  // coordinates outside [0,1] that were clamped

  bool flagged() const noexcept { return clamped > 0; }
  std::size_t truth_total() const noexcept;
  std::size_t predicted_total() const noexcept;
  /// surface,row,col,count for both surfaces, every cell.
  void write_csv(std::ostream& out) const;
};

DensityGrid density_grid(std::span<const Matrix> preds, std::span<const Matrix> truths,
                         std::size_t bins, std::size_t hour = 23, std::size_t x_feature = 0,
                         std::size_t y_feature = 1);

}  // namespace msrnn
