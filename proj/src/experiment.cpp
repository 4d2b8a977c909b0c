#include "msrnn/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace msrnn {

namespace {

constexpr std::array<Method, 5> kMethods = {Method::ms_rnn, Method::rnn, Method::linear, Method::ridge,
                                            Method::nn};

std::string hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_real(const std::string& s, std::string_view key) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw InputError("checkpoint: bad value for " + std::string(key));
  return v;
}

std::size_t parse_count(const std::string& s, std::string_view key) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw InputError("checkpoint: bad value for " + std::string(key));
  }
  return static_cast<std::size_t>(std::stoull(s));
}

template <class Parse>
auto parse_setting(const Checkpoint& cp, std::string_view key, Parse parse) {
  try {
    return parse(cp.setting(key));
  } catch (const std::invalid_argument& e) {
    throw InputError("checkpoint: " + std::string(key) + ": " + e.what());
  }
}

MsRnnConfig resolved(MsRnnConfig config) {
  if (config.shrink && config.shrink->depth == 0) {
    config.shrink->depth = default_shrink_depth(config.hidden_dim, config.shrink->rate, config.shrink->min_dim);
  }
  return config;
}

// Copies named tensors into params built with the right shapes.
template <class Params>
void restore_tensors(const Checkpoint& cp, Params& params) {
  const auto names = std::as_const(params).named_tensors();
  const auto slots = params.tensors();
  if (cp.tensors.size() != names.size()) {
    throw InputError("checkpoint: expected " + std::to_string(names.size()) + " tensors, found " +
                     std::to_string(cp.tensors.size()));
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    const Matrix& stored = cp.tensor(names[i].first);
    if (stored.rows() != slots[i]->rows() || stored.cols() != slots[i]->cols()) {
      throw InputError("checkpoint: tensor " + names[i].first + " has shape " + stored.shape_string() +
                       ", expected " + slots[i]->shape_string());
    }
    *slots[i] = stored;
  }
}

template <class Params>
void store_tensors(const Params& params, Checkpoint& cp) {
  for (const auto& [name, m] : params.named_tensors()) cp.tensors.push_back({name, *m});
}

std::vector<WindowPair> scaled(std::span<const WindowPair> pairs, const Scaler& scaler) {
  std::vector<WindowPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(scale_pair(p, scaler));
  return out;
}

}  // namespace

Method parse_method(std::string_view tag) {
  for (Method m : kMethods)
    if (to_string(m) == tag) return m;
  throw std::invalid_argument("unknown method '" + std::string(tag) + "' (expected ms-rnn, rnn, linear, ridge or nn)");
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::ms_rnn: return "ms-rnn";
    case Method::rnn: return "rnn";
    case Method::linear: return "linear";
    case Method::ridge: return "ridge";
    case Method::nn: return "nn";
  }
  return "?";
}

std::span<const Method> all_methods() noexcept { return kMethods; }

TrainedModel fit_method(Method method, std::span<const MerchantSeries> data, const ExperimentConfig& config) {
  const TemporalSplit split = split_train_test(data, config.test_hours);
  const std::vector<WindowPair> raw = windowize(split.train, config.stride);
  if (raw.empty()) throw InputError("no training windows: every merchant is shorter than 192 hours before the test span");

  TrainedModel model;
  model.method = method;
  model.scaler = fit_scaler(std::span<const WindowPair>(raw), ScalerMode::zscore);
  const std::vector<WindowPair> train_set = scaled(raw, model.scaler);

  switch (method) {
    case Method::ms_rnn: {
      model.msrnn_config = resolved(config.msrnn);
      auto result = train(MsRnnNetwork{model.msrnn_config}, train_set, config.train);
      model.msrnn_params = std::move(result.params);
      model.history = std::move(result.history);
      break;
    }
    case Method::rnn: {
      model.rnn_config = config.rnn;
      auto result = fit_rnn_baseline(config.rnn, train_set, config.train);
      model.rnn_params = std::move(result.params);
      model.history = std::move(result.history);
      break;
    }
    case Method::linear:
      model.linear = fit_linear(train_set, 0.0);
      break;
    case Method::ridge:
      model.linear = fit_linear(train_set, cv_select_lambda(train_set, config.lambdas));
      break;
    case Method::nn:
      break;
  }
  return model;
}

std::vector<ForecastRecord> predict_test(const TrainedModel& model, std::span<const MerchantSeries> data,
                                         std::size_t test_hours) {
  const std::vector<WindowPair> windows = test_windows(data, test_hours);
  std::vector<WindowPair> inputs = scaled(windows, model.scaler);

  std::vector<Matrix> forecasts;
  std::vector<const Matrix*> ptrs;
  for (const auto& w : inputs) ptrs.push_back(&w.input);
  switch (model.method) {
    case Method::ms_rnn:
      forecasts = predict_all(MsRnnNetwork{model.msrnn_config}, model.msrnn_params, ptrs);
      break;
    case Method::rnn:
      forecasts = predict_all(RnnBaselineNetwork{model.rnn_config}, model.rnn_params, ptrs);
      break;
    case Method::linear:
    case Method::ridge:
      for (const auto& w : inputs) forecasts.push_back(model.linear.predict(w.input));
      break;
    case Method::nn: {
      std::map<std::string, Matrix> history;
      for (const auto& s : data) {
        const std::size_t keep = s.hours() - test_hours;
        history.emplace(s.merchant_id, model.scaler.apply(slice_rows(s.values, 0, keep)));
      }
      for (const auto& w : inputs) forecasts.push_back(nn_predict(history.at(w.merchant_id), w.input));
      break;
    }
  }

  std::vector<ForecastRecord> records;
  records.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    ForecastRecord r;
    r.method = std::string(to_string(model.method));
    r.merchant_id = windows[i].merchant_id;
    r.category = windows[i].category;
    r.origin_hour = windows[i].origin_hour;
    r.predicted = forecasts[i];
    r.actual = inputs[i].target;
    r.predicted_original = model.scaler.invert(forecasts[i]);
    r.actual_original = windows[i].target;
    records.push_back(std::move(r));
  }
  return records;
}

Checkpoint to_checkpoint(const TrainedModel& model) {
  Checkpoint cp;
  cp.method = std::string(to_string(model.method));
  cp.scaler = model.scaler;
  switch (model.method) {
    case Method::ms_rnn: {
      const MsRnnConfig& c = model.msrnn_config;
      cp.set("cell_type", std::string(to_string(c.cell_type)));
      cp.set("hidden_dim", std::to_string(c.hidden_dim));
      cp.set("daily_layers", std::to_string(c.daily_layers));
      cp.set("shrink", c.shrink ? "on" : "off");
      if (c.shrink) {
        cp.set("shrink_rate", std::to_string(c.shrink->rate));
        cp.set("shrink_min", std::to_string(c.shrink->min_dim));
        cp.set("shrink_depth", std::to_string(c.shrink->depth));
      }
      cp.set("n_features", std::to_string(c.n_features));
      cp.set("input_hours", std::to_string(c.input_hours));
      cp.set("output_hours", std::to_string(c.output_hours));
      cp.set("n_streams", std::to_string(c.n_streams));
      cp.set("dropout_rate", hex(c.dropout_rate));
      cp.set("input_activation", std::string(to_string(c.input_activation)));
      cp.set("output_activation", std::string(to_string(c.output_activation)));
      store_tensors(model.msrnn_params, cp);
      break;
    }
    case Method::rnn: {
      const RnnBaselineConfig& c = model.rnn_config;
      cp.set("cell_type", std::string(to_string(c.cell_type)));
      cp.set("hidden_dim", std::to_string(c.hidden_dim));
      cp.set("layers", std::to_string(c.layers));
      cp.set("mlp_hidden", std::to_string(c.mlp_hidden));
      cp.set("dropout_rate", hex(c.dropout_rate));
      cp.set("activation", std::string(to_string(c.activation)));
      cp.set("n_features", std::to_string(c.n_features));
      cp.set("input_hours", std::to_string(c.input_hours));
      cp.set("output_hours", std::to_string(c.output_hours));
      store_tensors(model.rnn_params, cp);
      break;
    }
    case Method::linear:
    case Method::ridge:
      cp.set("lambda", hex(model.linear.lambda));
      cp.tensors.push_back({"linear.weights", model.linear.weights});
      cp.tensors.push_back({"linear.intercepts", model.linear.intercepts});
      break;
    case Method::nn:
      cp.set("marker", "no-trained-parameters");
      break;
  }
  return cp;
}

TrainedModel from_checkpoint(const Checkpoint& cp) {
  TrainedModel model;
  try {
    model.method = parse_method(cp.method);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
  if (!cp.scaler) throw InputError("checkpoint: missing scaler");
  model.scaler = *cp.scaler;
  auto count = [&](std::string_view key) { return parse_count(cp.setting(key), key); };
  auto real = [&](std::string_view key) { return parse_real(cp.setting(key), key); };
  auto cell = [&] { return parse_setting(cp, "cell_type", [](const std::string& s) { return parse_cell_type(s); }); };
  auto activation = [&](std::string_view key) {
    return parse_setting(cp, key, [](const std::string& s) { return parse_activation(s); });
  };

  switch (model.method) {
    case Method::ms_rnn: {
      MsRnnConfig& c = model.msrnn_config;
      c.cell_type = cell();
      c.hidden_dim = count("hidden_dim");
      c.daily_layers = count("daily_layers");
      if (cp.setting("shrink") == "on") {
        c.shrink = ShrinkConfig{count("shrink_rate"), count("shrink_min"), count("shrink_depth")};
      }
      c.n_features = count("n_features");
      c.input_hours = count("input_hours");
      c.output_hours = count("output_hours");
      c.n_streams = count("n_streams");
      c.dropout_rate = real("dropout_rate");
      c.input_activation = activation("input_activation");
      c.output_activation = activation("output_activation");
      try {
        c.validate();
      } catch (const std::invalid_argument& e) {
        throw InputError(std::string("checkpoint: ") + e.what());
      }
      model.msrnn_params = MsRnnParams::zeros(c);
      restore_tensors(cp, model.msrnn_params);
      break;
    }
    case Method::rnn: {
      RnnBaselineConfig& c = model.rnn_config;
      c.cell_type = cell();
      c.hidden_dim = count("hidden_dim");
      c.layers = count("layers");
      c.mlp_hidden = count("mlp_hidden");
      c.dropout_rate = real("dropout_rate");
      c.activation = activation("activation");
      c.n_features = count("n_features");
      c.input_hours = count("input_hours");
      c.output_hours = count("output_hours");
      try {
        c.validate();
      } catch (const std::invalid_argument& e) {
        throw InputError(std::string("checkpoint: ") + e.what());
      }
      model.rnn_params = RnnBaselineParams::zeros(c);
      restore_tensors(cp, model.rnn_params);
      break;
    }
    case Method::linear:
    case Method::ridge:
      model.linear.lambda = real("lambda");
      model.linear.weights = cp.tensor("linear.weights");
      model.linear.intercepts = cp.tensor("linear.intercepts");
      if (model.linear.weights.rows() != kInputHours * kFeatureCount ||
          model.linear.weights.cols() != kOutputHours * kFeatureCount ||
          model.linear.intercepts.rows() != 1 || model.linear.intercepts.cols() != kOutputHours * kFeatureCount) {
        throw InputError("checkpoint: linear tensors have the wrong shape");
      }
      break;
    case Method::nn:
      break;
  }
  return model;
}

void write_predictions_csv(std::span<const ForecastRecord> records, std::ostream& out) {
  out << "merchant_id,origin_hour,horizon,feature,predicted,actual\n";
  char buf[96];
  for (const auto& r : records)
    for (std::size_t h = 0; h < r.predicted_original.rows(); ++h)
      for (std::size_t k = 0; k < r.predicted_original.cols(); ++k) {
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", r.predicted_original(h, k), r.actual_original(h, k));
        out << r.merchant_id << ',' << r.origin_hour << ',' << h << ',' << kFeatureNames.at(k) << buf;
      }
}

std::vector<ForecastRecord> read_predictions_csv(std::istream& in) {
  constexpr std::string_view kHeader = "merchant_id,origin_hour,horizon,feature,predicted,actual";
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw InputError("empty predictions file: missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw InputError("unexpected header '" + line + "'", 1);

  std::vector<ForecastRecord> records;
  std::vector<std::vector<bool>> seen;
  std::map<std::pair<std::string, std::int64_t>, std::size_t> index;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 6) {
      throw InputError("expected 6 fields, got " + std::to_string(fields.size()), line_no);
    }
    auto number = [&](const std::string& s, std::string_view what) {
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (s.empty() || *end != '\0' || !std::isfinite(v)) {
        throw InputError("invalid " + std::string(what) + " '" + s + "'", line_no);
      }
      return v;
    };
    const double origin = number(fields[1], "origin_hour");
    const double horizon = number(fields[2], "horizon");
    if (origin != std::floor(origin)) throw InputError("origin_hour must be an integer", line_no);
    if (horizon != std::floor(horizon) || horizon < 0 || horizon >= static_cast<double>(kOutputHours)) {
      throw InputError("horizon must be an integer in [0, 23]", line_no);
    }
    const auto feature = std::find(kFeatureNames.begin(), kFeatureNames.end(), fields[3]);
    if (feature == kFeatureNames.end()) throw InputError("unknown feature '" + fields[3] + "'", line_no);
    const std::size_t k = static_cast<std::size_t>(feature - kFeatureNames.begin());
    const std::size_t h = static_cast<std::size_t>(horizon);
    const auto key = std::make_pair(fields[0], static_cast<std::int64_t>(origin));
    auto [it, inserted] = index.try_emplace(key, records.size());
    if (inserted) {
      ForecastRecord r;
      r.merchant_id = fields[0];
      r.origin_hour = key.second;
      r.predicted_original = Matrix(kOutputHours, kFeatureCount);
      r.actual_original = Matrix(kOutputHours, kFeatureCount);
      records.push_back(std::move(r));
      seen.emplace_back(kOutputHours * kFeatureCount, false);
    }
    ForecastRecord& r = records[it->second];
    if (seen[it->second][h * kFeatureCount + k]) throw InputError("duplicate prediction row", line_no);
    seen[it->second][h * kFeatureCount + k] = true;
    r.predicted_original(h, k) = number(fields[4], "predicted");
    r.actual_original(h, k) = number(fields[5], "actual");
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (std::find(seen[i].begin(), seen[i].end(), false) != seen[i].end()) {
      throw InputError("forecast for merchant '" + records[i].merchant_id + "' at origin " +
                       std::to_string(records[i].origin_hour) + " is missing rows");
    }
    records[i].predicted = records[i].predicted_original;
    records[i].actual = records[i].actual_original;
  }
  return records;
}

void apply_sweep_value(ExperimentConfig& config, std::string_view axis, std::string_view value) {
  const std::string v(value);
  auto count = [&] {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
      throw std::invalid_argument("sweep: " + std::string(axis) + " value '" + v + "' is not a positive integer");
    }
    const auto n = static_cast<std::size_t>(std::stoull(v));
    if (n == 0) throw std::invalid_argument("sweep: " + std::string(axis) + " must be positive");
    return n;
  };
  if (axis == "batch_size") {
    config.train.batch_size = count();
  } else if (axis == "hidden_dim") {
    config.msrnn.hidden_dim = count();
  } else if (axis == "daily_layers") {
    config.msrnn.daily_layers = count();
  } else if (axis == "cell_type") {
    config.msrnn.cell_type = parse_cell_type(v);
  } else if (axis == "shrink") {
    if (v == "on") {
      config.msrnn.shrink = ShrinkConfig{2, 4, 0};
    } else if (v == "off") {
      config.msrnn.shrink.reset();
    } else {
      throw std::invalid_argument("sweep: shrink takes on or off, got '" + v + "'");
    }
  } else {
    throw std::invalid_argument("sweep: unknown axis '" + std::string(axis) +
                                "' (expected batch_size, hidden_dim, daily_layers, cell_type or shrink)");
  }
}

std::vector<SweepRow> sweep(std::span<const SweepAxis> grid, const ExperimentConfig& base,
                            std::span<const MerchantSeries> data) {
  if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
  std::size_t total = 1;
  for (const auto& axis : grid) {
    if (axis.values.empty()) throw std::invalid_argument("sweep: axis '" + axis.name + "' has no values");
    // Validate every value before any training starts.
    for (const auto& v : axis.values) {
      ExperimentConfig probe = base;
      apply_sweep_value(probe, axis.name, v);
      probe.msrnn.validate();
      probe.train.validate();
    }
    total *= axis.values.size();
  }

  std::vector<SweepRow> rows;
  std::vector<std::size_t> digit(grid.size(), 0);
  for (std::size_t run = 0; run < total; ++run) {
    ExperimentConfig config = base;
    SweepRow row;
    for (std::size_t a = 0; a < grid.size(); ++a) {
      const std::string& v = grid[a].values[digit[a]];
      apply_sweep_value(config, grid[a].name, v);
      row.setting.emplace_back(grid[a].name, v);
    }
    const TrainedModel model = fit_method(Method::ms_rnn, data, config);
    const auto records = predict_test(model, data, config.test_hours);
    row.report = build_report(records);
    row.history = model.history.value_or(TrainHistory{});
    rows.push_back(std::move(row));
    for (std::size_t a = grid.size(); a-- > 0;) {
      if (++digit[a] < grid[a].values.size()) break;
      digit[a] = 0;
    }
  }
  return rows;
}

void write_sweep_summary(std::span<const SweepRow> rows, std::ostream& out) {
  out << "run";
  if (!rows.empty())
    for (const auto& [axis, value] : rows.front().setting) out << ',' << axis;
  out << ",rmse,nrmse,rmse_original\n";
  char buf[96];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << i;
    for (const auto& [axis, value] : rows[i].setting) out << ',' << value;
    const ReportEntry* avg = rows[i].report.find("AVERAGE", "ms-rnn");
    const FeatureScore& s = avg->all();
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", s.rmse, s.nrmse, s.rmse_original);
    out << buf;
  }
}

}  // namespace msrnn
