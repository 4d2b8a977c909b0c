#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msrnn/cells.hpp"
#include "msrnn/data.hpp"
#include "msrnn/tensor.hpp"
#include "msrnn/training.hpp"

namespace msrnn {

/// Eigenvalues below this fraction of the largest are treated as zero when the
/// unregularized normal equations are singular (pseudo-inverse solve).
inline constexpr double kPseudoInverseTolerance = 1e-10;

/// Closed-form ridge regression with an unpenalized intercept, one model per
/// column of Y solved together.
struct RidgeSolution {
  Matrix weights;     // features x outputs
  Matrix intercepts;  // 1 x outputs
};

/// Minimizes sum (y - x.w - b)^2 + lambda |w|^2 for every output column.
RidgeSolution solve_ridge(const Matrix& x, const Matrix& y, double lambda);

/// Ridge solutions for several lambdas from one eigendecomposition of the
/// centered Gram matrix.
class RidgePath {
 public:
  RidgePath(const Matrix& x, const Matrix& y);
  RidgeSolution solve(double lambda) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Flattens windows row-major: inputs to n x 672, targets to n x 96.
Matrix flatten_inputs(std::span<const WindowPair> pairs);
Matrix flatten_targets(std::span<const WindowPair> pairs);

/// 96 independent linear models over the flattened 168-hour window.
struct LinearBaseline {
  Matrix weights;     // 672 x 96; column t*4 + k predicts feature k at hour t
  Matrix intercepts;  // 1 x 96
  double lambda = 0.0;

  Matrix predict(const Matrix& window) const;
};

LinearBaseline fit_linear(std::span<const WindowPair> train, double lambda);

/// Three contiguous folds ordered by origin hour; lowest mean held-out MSE
/// wins, ties go to the smaller lambda.
double cv_select_lambda(std::span<const WindowPair> train, std::span<const double> candidates);

inline const std::vector<double> kDefaultLambdas = {0.01, 0.1, 1.0, 10.0, 100.0};

struct NeighborMatch {
  std::size_t offset = 0;  // first hour of the matched window within the history
  double distance = 0.0;   // Euclidean over the flattened 168 x F window
};

/// Exhaustive stride-1 scan of every 168-hour window with 24 following hours.
NeighborMatch nearest_window(const Matrix& history, const Matrix& query);

/// The 24 hours that follow the nearest history window.
Matrix nn_predict(const Matrix& history, const Matrix& query);

struct RnnBaselineConfig {
  CellType cell_type = CellType::gru;
  std::size_t hidden_dim = 64;
  std::size_t layers = 1;
  /// Width of the MLP hidden layer; 0 means hidden_dim.
  std::size_t mlp_hidden = 0;
  double dropout_rate = 0.2;
  Activation activation = Activation::tanh;
  std::size_t n_features = 4;
  std::size_t input_hours = 168;
  std::size_t output_hours = 24;

  void validate() const;
  std::size_t mlp_width() const noexcept { return mlp_hidden ? mlp_hidden : hidden_dim; }
  std::size_t output_size() const noexcept { return output_hours * n_features; }
};

struct RnnBaselineParams {
  std::vector<CellParams> encoder;
  Matrix mlp_w1;  // hidden x mlp
  Matrix mlp_b1;  // 1 x mlp
  Matrix mlp_w2;  // mlp x 96
  Matrix mlp_b2;  // 1 x 96

  static RnnBaselineParams zeros(const RnnBaselineConfig& config);
  static RnnBaselineParams random(const RnnBaselineConfig& config, Rng& rng);

  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  std::vector<std::pair<std::string, const Matrix*>> named_tensors() const;
};

struct RnnBaselineCache {
  std::size_t batch = 0;
  std::vector<LayerRecord> encoder;
  Matrix mlp_hidden;  // relu output, batch x mlp
};

struct RnnBaselineForward {
  std::vector<Matrix> forecasts;
  RnnBaselineCache cache;
};

/// Encoder over all 168 steps; the final (dropped-out) state feeds a
/// one-hidden-layer relu MLP producing 96 values reshaped hours x features.
RnnBaselineForward rnn_baseline_forward(const RnnBaselineConfig& config,
                                        const RnnBaselineParams& params,
                                        std::span<const Matrix* const> windows, Rng& rng,
                                        bool training);

RnnBaselineParams rnn_baseline_backward(const RnnBaselineConfig& config,
                                        const RnnBaselineParams& params,
                                        const RnnBaselineCache& cache,
                                        std::span<const Matrix> grad_forecasts);

struct RnnBaselineNetwork {
  using Params = RnnBaselineParams;
  RnnBaselineConfig config;

  Params init_params(Rng& rng) const { return RnnBaselineParams::random(config, rng); }
  RnnBaselineForward forward_batch(const Params& params, std::span<const Matrix* const> windows,
                                   Rng& rng, bool training) const {
    return rnn_baseline_forward(config, params, windows, rng, training);
  }
  Params backward_batch(const Params& params, const RnnBaselineCache& cache,
                        std::span<const Matrix> grad_forecasts) const {
    return rnn_baseline_backward(config, params, cache, grad_forecasts);
  }
};

/// Same loss, optimizer and early stopping as the multi-stream model.
TrainResult<RnnBaselineParams> fit_rnn_baseline(const RnnBaselineConfig& config,
                                                std::span<const WindowPair> train,
                                                const TrainConfig& train_config);

}  // namespace msrnn
