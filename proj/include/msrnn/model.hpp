#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msrnn/cells.hpp"
#include "msrnn/tensor.hpp"

namespace msrnn {

/// Shrinking weekly stack: each layer is floor(previous / rate) wide, or
/// min_dim when that floor reaches zero.
struct ShrinkConfig {
  std::size_t rate = 2;
  std::size_t min_dim = 4;
  std::size_t depth = 7;
};

struct MsRnnConfig {
  CellType cell_type = CellType::gru;
  std::size_t hidden_dim = 256;
  std::size_t daily_layers = 1;
  std::optional<ShrinkConfig> shrink;
  std::size_t n_features = 4;
  std::size_t input_hours = 168;
  std::size_t output_hours = 24;
  std::size_t n_streams = 7;
  double dropout_rate = 0.2;
  Activation input_activation = Activation::sigmoid;
  Activation output_activation = Activation::relu;

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;
  /// Widths of the weekly stack, input side first.
  std::vector<std::size_t> weekly_dims() const;
};

/// Shrink rule. Result has `depth` entries, starting at d0.
std::vector<std::size_t> shrink_dims(std::size_t d0, std::size_t rate, std::size_t min_dim,
                                     std::size_t depth);

/// Number of layers until the width first drops to min_dim or below.
std::size_t default_shrink_depth(std::size_t d0, std::size_t rate, std::size_t min_dim);

struct MsRnnParams {
  std::vector<std::vector<CellParams>> daily;  // [stream][layer]
  std::vector<CellParams> weekly;              // input side first
  std::vector<Matrix> head_weights;            // per feature, 1 x weekly_out
  std::vector<Matrix> head_biases;             // per feature, 1 x 1

  static MsRnnParams zeros(const MsRnnConfig& config);
  static MsRnnParams random(const MsRnnConfig& config, Rng& rng);

  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  /// Stable names such as "daily.3.layer0.w" or "head.2.bias".
  std::vector<std::pair<std::string, const Matrix*>> named_tensors() const;
};

struct ForwardCache {
  std::size_t batch = 0;
  bool training = false;
  std::vector<std::vector<LayerRecord>> daily;  // [stream][layer]
  std::vector<Matrix> merged;                   // s_0 .. s_23, batch x hidden
  std::vector<LayerRecord> weekly;
};

/// Splits a 168-row window into seven consecutive 24-row days.
std::vector<Matrix> split_week(const Matrix& window, std::size_t n_streams = 7,
                               std::size_t hours_per_stream = 24);

/// Sum of the streams' hidden states for one hour, in stream order.
Matrix merge(std::span<const Matrix> hidden);

struct BatchForecast {
  std::vector<Matrix> forecasts;  // one output_hours x n_features matrix per sample
  ForwardCache cache;
};

/// Batched forward. Every window is input_hours x n_features. Dropout draws
/// from rng only when training.
BatchForecast forward(const MsRnnConfig& config, const MsRnnParams& params,
                      std::span<const Matrix* const> windows, Rng& rng, bool training);

/// Single-window convenience wrapper.
std::pair<Matrix, ForwardCache> forward(const MsRnnConfig& config, const MsRnnParams& params,
                                        const Matrix& window, Rng& rng, bool training);

/// Gradient of sum_b <grad_forecasts[b], forecast_b> with respect to every
/// parameter.
MsRnnParams backward(const MsRnnConfig& config, const MsRnnParams& params,
                     const ForwardCache& cache, std::span<const Matrix> grad_forecasts);

/// Adapter exposing the model to the generic training loop.
struct MsRnnNetwork {
  using Params = MsRnnParams;
  MsRnnConfig config;

  Params init_params(Rng& rng) const { return MsRnnParams::random(config, rng); }
  BatchForecast forward_batch(const Params& params, std::span<const Matrix* const> windows, Rng& rng,
                              bool training) const {
    return forward(config, params, windows, rng, training);
  }
  Params backward_batch(const Params& params, const ForwardCache& cache,
                        std::span<const Matrix> grad_forecasts) const {
    return backward(config, params, cache, grad_forecasts);
  }
};

}  // namespace msrnn
