#include "msrnn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "msrnn/experiment.hpp"

namespace fs = std::filesystem;

namespace msrnn {

namespace {

/// Flags shared by every command that fits a model.
struct ModelFlags {
  std::string method = "ms-rnn";
  std::string cell = "gru";
  std::size_t hidden_dim = 256;
  std::size_t daily_layers = 1;
  std::string shrink = "off";
  std::size_t shrink_rate = 2;
  std::size_t shrink_min = 4;
  std::size_t shrink_depth = 0;
  double dropout = 0.2;
  std::string input_activation = "sigmoid";
  std::string output_activation = "relu";
  std::size_t rnn_layers = 1;
  std::size_t mlp_hidden = 0;
  std::string rnn_activation = "tanh";
  double learning_rate = 0.001;
  std::size_t batch_size = 256;
  std::size_t epochs = 100;
  std::size_t patience = 5;
  bool early_stopping = true;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  std::vector<double> lambdas = kDefaultLambdas;
  std::size_t test_hours = 168;
  std::size_t stride = 24;

  ExperimentConfig experiment() const {
    ExperimentConfig c;
    c.msrnn.cell_type = parse_cell_type(cell);
    c.msrnn.hidden_dim = hidden_dim;
    c.msrnn.daily_layers = daily_layers;
    if (shrink == "on") {
      c.msrnn.shrink = ShrinkConfig{shrink_rate, shrink_min, shrink_depth};
    } else if (shrink != "off") {
      throw std::invalid_argument("--shrink takes on or off, got '" + shrink + "'");
    }
    c.msrnn.dropout_rate = dropout;
    c.msrnn.input_activation = parse_activation(input_activation);
    c.msrnn.output_activation = parse_activation(output_activation);

    c.rnn.cell_type = c.msrnn.cell_type;
    c.rnn.hidden_dim = hidden_dim;
    c.rnn.layers = rnn_layers;
    c.rnn.mlp_hidden = mlp_hidden;
    c.rnn.dropout_rate = dropout;
    c.rnn.activation = parse_activation(rnn_activation);

    c.train.learning_rate = learning_rate;
    c.train.batch_size = batch_size;
    c.train.max_epochs = epochs;
    c.train.patience = patience;
    c.train.early_stopping = early_stopping;
    c.train.rmsprop_decay = rmsprop_decay;
    c.train.rmsprop_epsilon = rmsprop_epsilon;
    c.train.validation_fraction = validation_fraction;
    c.train.seed = seed;
    c.lambdas = lambdas;
    if (c.lambdas.empty()) throw std::invalid_argument("--lambdas needs at least one value");
    c.test_hours = test_hours;
    c.stride = stride;
    if (stride == 0) throw std::invalid_argument("--stride must be >= 1");

    c.train.validate();
    c.rnn.validate();
    if (c.msrnn.shrink && c.msrnn.shrink->depth == 0) {
      MsRnnConfig probe = c.msrnn;
      probe.shrink->depth = default_shrink_depth(hidden_dim, shrink_rate, shrink_min);
      probe.validate();
    } else {
      c.msrnn.validate();
    }
    return c;
  }
};

void add_model_options(CLI::App* cmd, ModelFlags& f, bool with_method) {
  if (with_method) cmd->add_option("--method", f.method, "ms-rnn | rnn | linear | ridge | nn");
  cmd->add_option("--cell", f.cell, "Recurrent cell: gru | lstm");
  cmd->add_option("--hidden-dim", f.hidden_dim, "Hidden width of the daily and weekly RNNs (and the flat RNN)");
  cmd->add_option("--daily-layers", f.daily_layers, "Stacked layers per daily stream");
  cmd->add_option("--shrink", f.shrink, "Shrinking weekly stack: on | off");
  cmd->add_option("--shrink-rate", f.shrink_rate, "Width divisor between weekly layers");
  cmd->add_option("--shrink-min", f.shrink_min, "Width used once the division reaches zero");
  cmd->add_option("--shrink-depth", f.shrink_depth, "Weekly layers when shrinking; 0 stops at the minimum width");
  cmd->add_option("--dropout", f.dropout, "Dropout rate after each recurrent layer");
  cmd->add_option("--input-activation", f.input_activation, "Daily candidate activation");
  cmd->add_option("--output-activation", f.output_activation, "Weekly candidate activation");
  cmd->add_option("--rnn-layers", f.rnn_layers, "Encoder layers of the flat RNN baseline");
  cmd->add_option("--mlp-hidden", f.mlp_hidden, "MLP width of the flat RNN baseline; 0 uses --hidden-dim");
  cmd->add_option("--rnn-activation", f.rnn_activation, "Candidate activation of the flat RNN baseline");
  cmd->add_option("--learning-rate", f.learning_rate, "RMSprop learning rate");
  cmd->add_option("--batch-size", f.batch_size, "Mini-batch size");
  cmd->add_option("--epochs", f.epochs, "Maximum training epochs");
  cmd->add_option("--patience", f.patience, "Epochs without validation improvement before stopping");
  cmd->add_option("--early-stopping", f.early_stopping, "Enable early stopping (true | false)");
  cmd->add_option("--rmsprop-decay", f.rmsprop_decay, "RMSprop squared-gradient decay");
  cmd->add_option("--rmsprop-epsilon", f.rmsprop_epsilon, "RMSprop epsilon");
  cmd->add_option("--validation-fraction", f.validation_fraction, "Latest share of training windows held out");
  cmd->add_option("--seed", f.seed, "Training seed");
  cmd->add_option("--lambdas", f.lambdas, "Ridge candidates for 3-fold cross-validation")->delimiter(',');
  cmd->add_option("--test-hours", f.test_hours, "Length of the held-out test span");
  cmd->add_option("--stride", f.stride, "Hours between training window origins");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r"));
  const auto last = s.find_last_not_of(" \t\r");
  s.erase(last == std::string::npos ? 0 : last + 1);
  return s;
}

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Reads `key = value` lines into option arguments for `cmd`, skipping keys
/// whose flag already appears in `given`.
std::vector<std::string> config_arguments(const fs::path& path, CLI::App* cmd,
                                          std::span<const std::string> given) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path.string() + "'");
  std::vector<std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    const std::string flag = "--" + key;
    if (key.empty() || key == "config" || key == "help" || cmd->get_option_no_throw(flag) == nullptr) {
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": unknown key '" +
                       trim(line.substr(0, eq)) + "' for " + cmd->get_name());
    }
    const bool overridden = std::any_of(given.begin(), given.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!overridden) {
      out.push_back(flag);
      out.push_back(value);
    }
  }
  return out;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

template <class Write>
void write_file(const fs::path& path, Write write) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  write(out);
  out.flush();
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

std::vector<MerchantSeries> load_data(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("data file '" + path.string() + "' does not exist");
  auto data = load_csv(path);
  if (data.empty()) throw InputError("data file '" + path.string() + "' has no rows");
  return data;
}

std::vector<ForecastRecord> load_predictions(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open predictions '" + path.string() + "'");
  try {
    return read_predictions_csv(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what(), e.line());
  }
}

struct EvaluateFlags {
  std::vector<std::string> preds;
  std::string data;
  std::string out_dir;
  std::vector<std::size_t> trace_hours = {0, 12, 23};
  std::size_t density_bins = 0;
  std::size_t density_x = 0;
  std::size_t density_y = 1;
  std::size_t test_hours = 168;
  std::size_t stride = 24;
};

void add_evaluate_options(CLI::App* cmd, EvaluateFlags& f) {
  cmd->add_option("--trace-hours", f.trace_hours, "Forecast hours exported to trace.csv")->delimiter(',');
  cmd->add_option("--density-bins", f.density_bins, "Bins per axis of the hour-23 density grids; 0 disables");
  cmd->add_option("--density-x", f.density_x, "Feature index on the density grid's column axis");
  cmd->add_option("--density-y", f.density_y, "Feature index on the density grid's row axis");
}

/// Writes report.csv, horizon.csv, trace.csv and density_<method>.csv.
/// `minmax` maps source units to [0,1] for the plot exports.
void write_evaluation(const fs::path& dir, std::span<const ForecastRecord> records, const Scaler& minmax,
                      const EvaluateFlags& flags, std::ostream& out) {
  fs::create_directories(dir);
  const EvalReport report = build_report(records);
  write_file(dir / "report.csv", [&](std::ostream& o) { report.write_csv(o); });
  write_file(dir / "horizon.csv", [&](std::ostream& o) { report.write_horizon_csv(o); });
  if (!flags.trace_hours.empty()) {
    const auto rows = horizon_trace(records, flags.trace_hours, minmax);
    write_file(dir / "trace.csv", [&](std::ostream& o) { write_trace_csv(rows, o); });
  }
  if (flags.density_bins > 0) {
    std::vector<std::string> methods;
    for (const auto& r : records)
      if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    for (const auto& m : methods) {
      std::vector<Matrix> preds, truths;
      for (const auto& r : records) {
        if (r.method != m) continue;
        preds.push_back(minmax.apply(r.predicted_original));
        truths.push_back(minmax.apply(r.actual_original));
      }
      const DensityGrid grid =
          density_grid(preds, truths, flags.density_bins, kOutputHours - 1, flags.density_x, flags.density_y);
      write_file(dir / ("density_" + m + ".csv"), [&](std::ostream& o) { grid.write_csv(o); });
      if (grid.flagged()) out << "density " << m << ": " << grid.clamped << " values clamped into [0,1]\n";
    }
  }
  for (const auto& e : report.entries) {
    if (e.profile != "AVERAGE") continue;
    out << e.method << ": rmse " << e.all().rmse << ", nrmse " << e.all().nrmse;
    if (e.flagged_samples > 0) out << " (" << e.flagged_samples << " flat series clamped)";
    out << '\n';
  }
}

void save_model(const TrainedModel& model, const fs::path& checkpoint, const fs::path& history) {
  ensure_parent(checkpoint);
  to_checkpoint(model).save(checkpoint);
  if (model.history) {
    ensure_parent(history);
    model.history->save_csv(history);
  }
}

void save_predictions(std::span<const ForecastRecord> records, const fs::path& path) {
  write_file(path, [&](std::ostream& o) { write_predictions_csv(records, o); });
}

std::vector<SweepAxis> make_grid(const std::vector<std::string>& axes, const std::vector<std::string>& values) {
  if (axes.size() != values.size()) {
    throw std::invalid_argument("sweep: give one --values list per --axis (" + std::to_string(axes.size()) +
                                " axes, " + std::to_string(values.size()) + " value lists)");
  }
  std::vector<SweepAxis> grid;
  for (std::size_t i = 0; i < axes.size(); ++i) grid.push_back({axes[i], split_list(values[i])});
  return grid;
}

void write_sweep(const fs::path& dir, std::span<const SweepRow> rows) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    write_file(dir / ("report_" + std::to_string(i) + ".csv"), [&](std::ostream& o) { rows[i].report.write_csv(o); });
  }
  write_file(dir / "summary.csv", [&](std::ostream& o) { write_sweep_summary(rows, o); });
}

int dispatch(std::span<const std::string> raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-stream RNN forecasting of merchant transaction series", "msrnn"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  std::string config_path;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value file; command-line flags win");
  };

  // generate
  SyntheticOptions gen;
  std::string gen_profile = "mixed";
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic merchant corpus as CSV");
  add_config(generate);
  generate->add_option("--out", gen_out, "Output CSV")->required();
  generate->add_option("--merchants", gen.n_merchants, "Number of merchants");
  generate->add_option("--weeks", gen.n_weeks, "Weeks of hourly data per merchant (>= 2)");
  generate->add_option("--seed", gen.seed, "Generator seed");
  generate->add_option("--profile", gen_profile, "department_store | restaurant | sports | medical | mixed");
  generate->add_option("--noise", gen.noise, "Noise amplitude; 0 gives exactly weekly-periodic series");

  // train
  ModelFlags train_flags;
  std::string train_data, train_out, train_history;
  auto* train_cmd = app.add_subcommand("train", "Fit one method and write a checkpoint");
  add_config(train_cmd);
  train_cmd->add_option("--data", train_data, "Corpus CSV")->required();
  train_cmd->add_option("--out", train_out, "Checkpoint path")->required();
  train_cmd->add_option("--history", train_history, "Training history CSV (default <out>.history.csv)");
  add_model_options(train_cmd, train_flags, true);

  // predict
  std::string pred_checkpoint, pred_data, pred_out;
  std::size_t pred_test_hours = 168;
  auto* predict = app.add_subcommand("predict", "Forecast every test day with a checkpoint");
  add_config(predict);
  predict->add_option("--checkpoint", pred_checkpoint, "Checkpoint written by train")->required();
  predict->add_option("--data", pred_data, "Corpus CSV")->required();
  predict->add_option("--out", pred_out, "Predictions CSV")->required();
  predict->add_option("--test-hours", pred_test_hours, "Length of the test span");

  // evaluate
  EvaluateFlags eval;
  auto* evaluate = app.add_subcommand("evaluate", "Score prediction files and export plot data");
  add_config(evaluate);
  evaluate->add_option("--pred", eval.preds, "Predictions as name=path (repeatable; name defaults to the file stem)")
      ->required();
  evaluate->add_option("--data", eval.data, "Corpus CSV: recovers categories and the scaled units");
  evaluate->add_option("--out-dir", eval.out_dir, "Directory for report.csv, horizon.csv, trace.csv, density_*.csv")
      ->required();
  evaluate->add_option("--test-hours", eval.test_hours, "Length of the test span");
  evaluate->add_option("--stride", eval.stride, "Training window stride used when fitting scalers");
  add_evaluate_options(evaluate, eval);

  // sweep
  ModelFlags sweep_flags;
  std::string sweep_data, sweep_out;
  std::vector<std::string> sweep_axes, sweep_values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train and evaluate MS-RNN over a parameter grid");
  add_config(sweep_cmd);
  sweep_cmd->add_option("--data", sweep_data, "Corpus CSV")->required();
  sweep_cmd->add_option("--out-dir", sweep_out, "Directory for summary.csv and report_<run>.csv")->required();
  sweep_cmd->add_option("--axis", sweep_axes, "batch_size | hidden_dim | daily_layers | cell_type | shrink")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "Comma-separated values, one list per --axis")->required();
  add_model_options(sweep_cmd, sweep_flags, false);

  // repro
  ModelFlags repro_flags;
  repro_flags.hidden_dim = 16;
  repro_flags.batch_size = 64;
  repro_flags.epochs = 3;
  SyntheticOptions repro_gen;
  repro_gen.n_merchants = 16;
  repro_gen.n_weeks = 4;
  std::string repro_profile = "mixed";
  std::string repro_out;
  std::vector<std::string> repro_methods = {"ms-rnn", "rnn", "linear", "ridge", "nn"};
  std::string repro_axis = "hidden_dim";
  std::string repro_values = "8,16";
  EvaluateFlags repro_eval;
  repro_eval.density_bins = 10;
  auto* repro = app.add_subcommand("repro", "Generate, train every method, evaluate and sweep in one run");
  add_config(repro);
  repro->add_option("--out-dir", repro_out, "Output directory")->required();
  repro->add_option("--merchants", repro_gen.n_merchants, "Number of merchants");
  repro->add_option("--weeks", repro_gen.n_weeks, "Weeks per merchant");
  repro->add_option("--data-seed", repro_gen.seed, "Generator seed");
  repro->add_option("--profile", repro_profile, "Generator profile");
  repro->add_option("--noise", repro_gen.noise, "Generator noise amplitude");
  repro->add_option("--methods", repro_methods, "Methods to train")->delimiter(',');
  repro->add_option("--sweep-axis", repro_axis, "Sweep axis; empty skips the sweep");
  repro->add_option("--sweep-values", repro_values, "Comma-separated sweep values");
  add_model_options(repro, repro_flags, false);
  add_evaluate_options(repro, repro_eval);

  // Config files are spliced in ahead of the command-line flags.
  std::vector<std::string> args(raw_args.begin(), raw_args.end());
  if (!args.empty()) {
    CLI::App* cmd = nullptr;
    for (auto* sub : app.get_subcommands({}))
      if (sub->get_name() == args[0]) cmd = sub;
    std::string path;
    for (std::size_t i = 1; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (cmd && !path.empty()) {
      auto extra = config_arguments(path, cmd, std::span<const std::string>(args).subspan(1));
      args.insert(args.begin() + 1, extra.begin(), extra.end());
    }
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << "run 'msrnn " << sub->get_name() << " --help' for usage\n";
    } else {
      err << "run 'msrnn --help' for usage\n";
    }
    return kExitUsage;
  }

  if (generate->parsed()) {
    gen.profile = parse_profile(gen_profile);
    const auto data = generate_synthetic(gen);
    ensure_parent(gen_out);
    save_csv(data, gen_out);
    std::size_t rows = 0;
    for (const auto& s : data) rows += s.hours();
    out << "wrote " << rows << " rows for " << data.size() << " merchants to " << gen_out << '\n';
    return kExitOk;
  }

  if (train_cmd->parsed()) {
    const Method method = parse_method(train_flags.method);
    const ExperimentConfig config = train_flags.experiment();
    const auto data = load_data(train_data);
    const TrainedModel model = fit_method(method, data, config);
    const fs::path history = train_history.empty() ? fs::path(train_out + ".history.csv") : fs::path(train_history);
    save_model(model, train_out, history);
    out << "trained " << to_string(method);
    if (model.history) {
      out << ": " << model.history->stopped_epoch << " epochs, best epoch " << model.history->best_epoch;
    }
    if (method == Method::ridge) out << ": lambda " << model.linear.lambda;
    out << "\nwrote " << train_out << '\n';
    return kExitOk;
  }

  if (predict->parsed()) {
    if (!fs::exists(pred_checkpoint)) throw InputError("checkpoint '" + pred_checkpoint + "' does not exist");
    const TrainedModel model = from_checkpoint(Checkpoint::load(pred_checkpoint));
    const auto data = load_data(pred_data);
    const auto records = predict_test(model, data, pred_test_hours);
    save_predictions(records, pred_out);
    out << "wrote " << records.size() << " forecast days to " << pred_out << '\n';
    return kExitOk;
  }

  if (evaluate->parsed()) {
    std::vector<ForecastRecord> records;
    for (const auto& entry : eval.preds) {
      const auto eq = entry.find('=');
      const std::string name = eq == std::string::npos ? fs::path(entry).stem().string() : entry.substr(0, eq);
      const fs::path path = eq == std::string::npos ? fs::path(entry) : fs::path(entry.substr(eq + 1));
      if (name.empty()) throw UsageError("--pred needs a method name before '='");
      auto part = load_predictions(path);
      for (auto& r : part) {
        r.method = name;
        records.push_back(std::move(r));
      }
    }
    if (records.empty()) throw InputError("prediction files contain no forecasts");

    Scaler minmax;
    if (!eval.data.empty()) {
      const auto data = load_data(eval.data);
      const auto split = split_train_test(data, eval.test_hours);
      const auto raw = windowize(split.train, eval.stride);
      if (raw.empty()) throw InputError("no training windows in '" + eval.data + "'");
      const Scaler zscore = fit_scaler(std::span<const WindowPair>(raw), ScalerMode::zscore);
      minmax = fit_scaler(std::span<const WindowPair>(raw), ScalerMode::minmax01);
      std::map<std::string, std::string> category;
      for (const auto& s : data) category[s.merchant_id] = s.category;
      for (auto& r : records) {
        const auto it = category.find(r.merchant_id);
        if (it == category.end()) throw InputError("merchant '" + r.merchant_id + "' is not in '" + eval.data + "'");
        r.category = it->second;
        r.predicted = zscore.apply(r.predicted_original);
        r.actual = zscore.apply(r.actual_original);
      }
    } else {
      // Without the corpus there are no categories and no training statistics:
      // score in source units and scale plots by the observed truth.
      std::vector<MerchantSeries> truth;
      for (auto& r : records) {
        r.category = "all";
        truth.push_back({r.merchant_id, r.category, r.origin_hour, r.actual_original});
      }
      minmax = fit_scaler(std::span<const MerchantSeries>(truth), ScalerMode::minmax01);
    }
    write_evaluation(eval.out_dir, records, minmax, eval, out);
    return kExitOk;
  }

  if (sweep_cmd->parsed()) {
    const ExperimentConfig base = sweep_flags.experiment();
    const auto grid = make_grid(sweep_axes, sweep_values);
    const auto data = load_data(sweep_data);
    const auto rows = sweep(grid, base, data);
    write_sweep(sweep_out, rows);
    out << "wrote " << rows.size() << " sweep runs to " << sweep_out << '\n';
    return kExitOk;
  }

  if (repro->parsed()) {
    const ExperimentConfig config = repro_flags.experiment();
    std::vector<Method> methods;
    for (const auto& m : repro_methods) methods.push_back(parse_method(m));
    std::vector<SweepAxis> grid;
    if (!repro_axis.empty()) grid = make_grid({repro_axis}, {repro_values});
    for (const auto& axis : grid)
      for (const auto& v : axis.values) {
        ExperimentConfig probe = config;
        apply_sweep_value(probe, axis.name, v);
      }
    repro_gen.profile = parse_profile(repro_profile);

    const fs::path dir = repro_out;
    fs::create_directories(dir);
    const auto data = generate_synthetic(repro_gen);
    save_csv(data, dir / "data.csv");
    out << "generated " << data.size() << " merchants\n";

    std::vector<ForecastRecord> all;
    Scaler minmax;
    for (Method m : methods) {
      const std::string name(to_string(m));
      const TrainedModel model = fit_method(m, data, config);
      save_model(model, dir / ("checkpoint_" + name + ".txt"), dir / ("history_" + name + ".csv"));
      auto records = predict_test(model, data, config.test_hours);
      save_predictions(records, dir / ("predictions_" + name + ".csv"));
      out << "trained " << name << '\n';
      for (auto& r : records) all.push_back(std::move(r));
    }
    {
      const auto raw = windowize(split_train_test(data, config.test_hours).train, config.stride);
      minmax = fit_scaler(std::span<const WindowPair>(raw), ScalerMode::minmax01);
    }
    write_evaluation(dir, all, minmax, repro_eval, out);
    if (!grid.empty()) {
      const auto rows = sweep(grid, config, data);
      write_sweep(dir / "sweep", rows);
      out << "swept " << rows.size() << " settings\n";
    }
    return kExitOk;
  }
  return kExitUsage;
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace msrnn
