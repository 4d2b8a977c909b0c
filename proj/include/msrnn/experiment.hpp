#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msrnn/baselines.hpp"
#include "msrnn/checkpoint.hpp"
#include "msrnn/data.hpp"
#include "msrnn/evaluation.hpp"
#include "msrnn/model.hpp"
#include "msrnn/training.hpp"

namespace msrnn {

enum class Method { ms_rnn, rnn, linear, ridge, nn };

Method parse_method(std::string_view tag);
std::string_view to_string(Method m) noexcept;
std::span<const Method> all_methods() noexcept;

/// Everything needed to fit any method on a corpus.
struct ExperimentConfig {
  MsRnnConfig msrnn;
  RnnBaselineConfig rnn;
  TrainConfig train;
  std::vector<double> lambdas = kDefaultLambdas;
  std::size_t test_hours = 168;
  std::size_t stride = 24;
};

/// A fitted method plus the zscore scaler it was trained under. Only the
/// members matching `method` are meaningful.
struct TrainedModel {
  Method method = Method::ms_rnn;
  Scaler scaler;
  MsRnnConfig msrnn_config;
  MsRnnParams msrnn_params;
  RnnBaselineConfig rnn_config;
  RnnBaselineParams rnn_params;
  LinearBaseline linear;
  std::optional<TrainHistory> history;  // iterative methods only
};

/// Splits off the test span, fits the scaler on training windows, and fits
/// `method` on the scaled training windows.
TrainedModel fit_method(Method method, std::span<const MerchantSeries> data, const ExperimentConfig& config);

/// Rolling stride-24 forecasts over the last `test_hours` of every merchant.
std::vector<ForecastRecord> predict_test(const TrainedModel& model, std::span<const MerchantSeries> data,
                                         std::size_t test_hours = 168);

Checkpoint to_checkpoint(const TrainedModel& model);
TrainedModel from_checkpoint(const Checkpoint& checkpoint);

/// merchant_id,origin_hour,horizon,feature,predicted,actual in source units.
void write_predictions_csv(std::span<const ForecastRecord> records, std::ostream& out);

/// Parses a predictions file back into records (method and category left
/// empty). Malformed rows raise InputError naming the line.
std::vector<ForecastRecord> read_predictions_csv(std::istream& in);

/// One swept parameter and the values it takes.
struct SweepAxis {
  std::string name;  // batch_size, hidden_dim, daily_layers, cell_type or shrink
  std::vector<std::string> values;
};

inline constexpr std::string_view kSweepAxes[] = {"batch_size", "hidden_dim", "daily_layers", "cell_type",
                                                  "shrink"};

struct SweepRow {
  std::vector<std::pair<std::string, std::string>> setting;
  EvalReport report;
  TrainHistory history;
};

/// Applies one axis value to a copy of the base configuration.
void apply_sweep_value(ExperimentConfig& config, std::string_view axis, std::string_view value);

/// Trains and evaluates MS-RNN at every grid point (cartesian product, last
/// axis varying fastest) with the base seed.
std::vector<SweepRow> sweep(std::span<const SweepAxis> grid, const ExperimentConfig& base,
                            std::span<const MerchantSeries> data);

/// run,<axis>...,rmse,nrmse,rmse_original from each run's AVERAGE/ALL row.
void write_sweep_summary(std::span<const SweepRow> rows, std::ostream& out);

}  // namespace msrnn
