#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "msrnn/data.hpp"
#include "msrnn/tensor.hpp"

namespace msrnn {

/// Raised when training produces a non-finite loss.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  bool early_stopping = true;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;

  void validate() const;
};

struct LossResult {
  double loss = 0.0;
  Matrix grad;
};

/// Per-sample squared error summed over hours and features, and its gradient
/// with respect to pred.
LossResult mse_loss(const Matrix& pred, const Matrix& target);

struct BatchLoss {
  double loss = 0.0;           // mean over samples of the per-sample loss
  std::vector<Matrix> grads;   // per-sample gradients scaled by 1/n
};

BatchLoss batch_mse(std::span<const Matrix> preds, std::span<const Matrix* const> targets);

struct RmspropState {
  std::vector<Matrix> mean_square;

  static RmspropState zeros_like(std::span<const Matrix* const> params);
};

void rmsprop_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
                  RmspropState& state, const TrainConfig& cfg);

template <class Params>
  requires requires(const Params& p) { p.tensors(); }
void rmsprop_step(Params& params, const Params& grads, RmspropState& state, const TrainConfig& cfg) {
  const auto p = params.tensors();
  const auto g = grads.tensors();
  rmsprop_step(std::span<Matrix* const>(p), std::span<const Matrix* const>(g), state, cfg);
}

/// Patience counter over validation losses. A strict decrease counts as an
/// improvement; `should_stop` turns true after `patience` epochs without one.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  /// Records the loss for `epoch` (1-based); returns true when it improved.
  bool update(std::size_t epoch, double val_loss);
  bool should_stop() const noexcept { return since_best_ >= patience_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_; }

 private:
  std::size_t patience_;
  std::size_t since_best_ = 0;
  std::size_t best_epoch_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;

  void write_csv(std::ostream& out) const;
  void save_csv(const std::filesystem::path& path) const;
};

template <class Params>
struct TrainResult {
  Params params;
  TrainHistory history;
};

/// Optional instrumentation of the training loop.
template <class Params>
struct TrainHooks {
  /// Replaces the computed validation loss, e.g. with a scripted sequence.
  std::function<double(std::size_t epoch, double computed)> validation_override;
  std::function<void(std::size_t epoch, const Params& params)> on_epoch_end;
};

/// Indices of the training and validation windows. Validation is the latest
/// `fraction` of windows by origin hour (ties broken by merchant id).
struct ValidationSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

ValidationSplit split_validation(std::span<const WindowPair> data, double fraction);

/// A network trainable by `train`: forward returns `.forecasts` and `.cache`,
/// backward maps forecast gradients to a Params of gradients.
template <class Net>
concept ForecastNetwork = requires(const Net& net, const typename Net::Params& p, Rng& rng,
                                   std::span<const Matrix* const> inputs,
                                   std::span<const Matrix> grads) {
  { net.init_params(rng) } -> std::same_as<typename Net::Params>;
  { net.forward_batch(p, inputs, rng, true).forecasts } -> std::convertible_to<std::vector<Matrix>>;
  { net.backward_batch(p, net.forward_batch(p, inputs, rng, true).cache, grads) }
      -> std::same_as<typename Net::Params>;
};

/// Inference-mode forecasts for every input, computed in chunks.
template <ForecastNetwork Net>
std::vector<Matrix> predict_all(const Net& net, const typename Net::Params& params,
                                std::span<const Matrix* const> inputs, std::size_t chunk = 256) {
  std::vector<Matrix> out;
  out.reserve(inputs.size());
  Rng unused(0);
  for (std::size_t start = 0; start < inputs.size(); start += chunk) {
    const std::size_t n = std::min(chunk, inputs.size() - start);
    auto fwd = net.forward_batch(params, inputs.subspan(start, n), unused, false);
    for (auto& f : fwd.forecasts) out.push_back(std::move(f));
  }
  return out;
}

template <ForecastNetwork Net>
double mean_loss(const Net& net, const typename Net::Params& params, std::span<const WindowPair> data,
                 std::span<const std::size_t> indices, std::size_t chunk) {
  std::vector<const Matrix*> inputs;
  inputs.reserve(indices.size());
  for (std::size_t i : indices) inputs.push_back(&data[i].input);
  const auto preds = predict_all(net, params, inputs, chunk);
  double total = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) total += mse_loss(preds[i], data[indices[i]].target).loss;
  return total / static_cast<double>(indices.size());
}

/// Mini-batch RMSprop training with a temporal validation split and early
/// stopping. Returns the parameters of the best validation epoch.
///
/// Three streams derived from cfg.seed drive initialization, shuffling and
/// dropout, so a run is bit-reproducible.
template <ForecastNetwork Net>
TrainResult<typename Net::Params> train(const Net& net, std::span<const WindowPair> data,
                                        const TrainConfig& cfg,
                                        const TrainHooks<typename Net::Params>& hooks = {}) {
  using Params = typename Net::Params;
  using Clock = std::chrono::steady_clock;
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train: no training windows");
  const ValidationSplit split = split_validation(data, cfg.validation_fraction);

  const Rng root(cfg.seed);
  Rng init_rng = root.fork(0);
  Rng shuffle_rng = root.fork(1);
  Rng dropout_rng = root.fork(2);

  TrainResult<Params> result{net.init_params(init_rng), {}};
  Params params = result.params;
  RmspropState state = RmspropState::zeros_like(std::as_const(params).tensors());
  EarlyStopping stopper(cfg.patience);

  std::vector<std::size_t> order = split.train;
  std::vector<const Matrix*> inputs;
  std::vector<const Matrix*> targets;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto started = Clock::now();
    shuffle(order, shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      inputs.clear();
      targets.clear();
      for (std::size_t i = start; i < start + n; ++i) {
        inputs.push_back(&data[order[i]].input);
        targets.push_back(&data[order[i]].target);
      }
      auto fwd = net.forward_batch(params, inputs, dropout_rng, true);
      BatchLoss batch = batch_mse(fwd.forecasts, targets);
      if (!std::isfinite(batch.loss)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      const Params grads = net.backward_batch(params, fwd.cache, batch.grads);
      rmsprop_step(params, grads, state, cfg);
      loss_sum += batch.loss * static_cast<double>(n);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_loss = mean_loss(net, params, data, split.validation, cfg.batch_size);
    if (hooks.validation_override) rec.val_loss = hooks.validation_override(epoch, rec.val_loss);
    if (!std::isfinite(rec.val_loss)) {
      throw NumericalError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    rec.seconds = std::chrono::duration<double>(Clock::now() - started).count();
    result.history.epochs.push_back(rec);
    result.history.stopped_epoch = epoch;

    if (stopper.update(epoch, rec.val_loss)) {
      result.params = params;
      result.history.best_epoch = epoch;
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, params);
    if (cfg.early_stopping && stopper.should_stop()) break;
  }
  return result;
}

}  // namespace msrnn
