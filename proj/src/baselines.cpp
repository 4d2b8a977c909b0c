#include "msrnn/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

namespace msrnn {

namespace {

using EigenMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const EigenMatrix> view(const Matrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

Matrix to_matrix(const EigenMatrix& m) {
  Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  Eigen::Map<EigenMatrix>(out.data(), m.rows(), m.cols()) = m;
  return out;
}

}  // namespace

struct RidgePath::Impl {
  Eigen::RowVectorXd x_mean;
  Eigen::RowVectorXd y_mean;
  EigenMatrix eigenvectors;      // p x p
  Eigen::VectorXd eigenvalues;   // ascending
  EigenMatrix projected;         // V^T Xc^T Yc, p x q
};

RidgePath::RidgePath(const Matrix& x, const Matrix& y) {
  if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("ridge: empty design matrix");
  if (x.rows() != y.rows()) {
    throw ShapeError("ridge: " + x.shape_string() + " design vs " + y.shape_string() + " targets");
  }
  auto impl = std::make_shared<Impl>();
  const auto xv = view(x);
  const auto yv = view(y);
  impl->x_mean = xv.colwise().mean();
  impl->y_mean = yv.colwise().mean();
  const EigenMatrix xc = xv.rowwise() - impl->x_mean;
  const EigenMatrix yc = yv.rowwise() - impl->y_mean;
  const Eigen::MatrixXd gram = xc.transpose() * xc;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw std::runtime_error("ridge: eigendecomposition failed");
  impl->eigenvectors = eig.eigenvectors();
  impl->eigenvalues = eig.eigenvalues();
  impl->projected = impl->eigenvectors.transpose() * (xc.transpose() * yc);
  impl_ = std::move(impl);
}

RidgeSolution RidgePath::solve(double lambda) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("ridge: lambda must be finite and >= 0");
  }
  const Impl& s = *impl_;
  const double largest = std::max(0.0, s.eigenvalues.maxCoeff()) + lambda;
  const double cutoff = kPseudoInverseTolerance * largest;
  Eigen::VectorXd inv(s.eigenvalues.size());
  for (Eigen::Index i = 0; i < inv.size(); ++i) {
    const double d = s.eigenvalues[i] + lambda;
    inv[i] = d > cutoff ? 1.0 / d : 0.0;
  }
  const EigenMatrix w = s.eigenvectors * (inv.asDiagonal() * s.projected);
  const EigenMatrix b = s.y_mean - s.x_mean * w;
  return {to_matrix(w), to_matrix(b)};
}

RidgeSolution solve_ridge(const Matrix& x, const Matrix& y, double lambda) {
  return RidgePath(x, y).solve(lambda);
}

Matrix flatten_inputs(std::span<const WindowPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("flatten_inputs: no windows");
  const std::size_t width = pairs.front().input.size();
  Matrix out(pairs.size(), width);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].input.size() != width) throw ShapeError("flatten_inputs: ragged windows");
    std::copy(pairs[i].input.values().begin(), pairs[i].input.values().end(), out.row(i).begin());
  }
  return out;
}

Matrix flatten_targets(std::span<const WindowPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("flatten_targets: no windows");
  const std::size_t width = pairs.front().target.size();
  Matrix out(pairs.size(), width);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].target.size() != width) throw ShapeError("flatten_targets: ragged windows");
    std::copy(pairs[i].target.values().begin(), pairs[i].target.values().end(), out.row(i).begin());
  }
  return out;
}

Matrix LinearBaseline::predict(const Matrix& window) const {
  if (window.size() != weights.rows()) {
    throw ShapeError("linear baseline: window " + window.shape_string() + " does not flatten to " +
                     std::to_string(weights.rows()));
  }
  const Matrix flat(1, window.size(), std::vector<double>(window.values().begin(), window.values().end()));
  const Matrix out = add(matmul(flat, weights), intercepts);
  const std::size_t features = window.cols();
  return {out.cols() / features, features, std::vector<double>(out.values().begin(), out.values().end())};
}

LinearBaseline fit_linear(std::span<const WindowPair> train, double lambda) {
  if (train.empty()) throw std::invalid_argument("fit_linear: no training windows");
  RidgeSolution s = solve_ridge(flatten_inputs(train), flatten_targets(train), lambda);
  return {std::move(s.weights), std::move(s.intercepts), lambda};
}

double cv_select_lambda(std::span<const WindowPair> train, std::span<const double> candidates) {
  if (candidates.empty()) throw std::invalid_argument("cv_select_lambda: no candidate lambdas");
  if (train.size() < 3) {
    throw std::invalid_argument("cv_select_lambda: need at least 3 windows for 3 folds, got " +
                                std::to_string(train.size()));
  }
  std::vector<double> lambdas(candidates.begin(), candidates.end());
  std::sort(lambdas.begin(), lambdas.end());
  if (lambdas.size() == 1) return lambdas.front();

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return train[a].origin_hour < train[b].origin_hour; });
  const Matrix x = flatten_inputs(train);
  const Matrix y = flatten_targets(train);

  constexpr std::size_t kFolds = 3;
  std::vector<double> score(lambdas.size(), 0.0);
  for (std::size_t fold = 0; fold < kFolds; ++fold) {
    const std::size_t lo = fold * train.size() / kFolds;
    const std::size_t hi = (fold + 1) * train.size() / kFolds;
    std::vector<std::size_t> fit_rows, held_rows;
    for (std::size_t i = 0; i < order.size(); ++i) (i >= lo && i < hi ? held_rows : fit_rows).push_back(order[i]);
    auto gather = [](const Matrix& m, const std::vector<std::size_t>& rows) {
      Matrix out(rows.size(), m.cols());
      for (std::size_t i = 0; i < rows.size(); ++i) std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
      return out;
    };
    const Matrix x_held = gather(x, held_rows);
    const Matrix y_held = gather(y, held_rows);
    const RidgePath path(gather(x, fit_rows), gather(y, fit_rows));
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      const RidgeSolution s = path.solve(lambdas[l]);
      const Matrix pred = add_row(matmul(x_held, s.weights), s.intercepts);
      double sq = 0.0;
      for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.values()[i] - y_held.values()[i];
        sq += d * d;
      }
      score[l] += sq / static_cast<double>(pred.size()) / kFolds;
    }
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < lambdas.size(); ++l)
    if (score[l] < score[best]) best = l;
  return lambdas[best];
}

NeighborMatch nearest_window(const Matrix& history, const Matrix& query) {
  if (query.rows() != kInputHours || query.cols() != history.cols()) {
    throw ShapeError("nearest neighbor: query " + query.shape_string() + " expected " +
                     std::to_string(kInputHours) + "x" + std::to_string(history.cols()));
  }
  if (history.rows() < kPairHours) {
    throw std::invalid_argument("nearest neighbor: history of " + std::to_string(history.rows()) +
                                " hours holds no 192-hour window");
  }
  const std::size_t width = kInputHours * history.cols();
  const double* q = query.data();
  NeighborMatch best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t o = 0; o + kPairHours <= history.rows(); ++o) {
    const double* h = history.data() + o * history.cols();
    double sq = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      const double d = h[i] - q[i];
      sq += d * d;
    }
    if (sq < best.distance) best = {o, sq};
  }
  best.distance = std::sqrt(best.distance);
  return best;
}

Matrix nn_predict(const Matrix& history, const Matrix& query) {
  const NeighborMatch m = nearest_window(history, query);
  return slice_rows(history, m.offset + kInputHours, kOutputHours);
}

void RnnBaselineConfig::validate() const {
  if (hidden_dim == 0) throw std::invalid_argument("rnn baseline: hidden_dim must be positive");
  if (layers < 1 || layers > 2) throw std::invalid_argument("rnn baseline: layers must be 1 or 2");
  if (n_features == 0 || input_hours == 0 || output_hours == 0) {
    throw std::invalid_argument("rnn baseline: dimensions must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("rnn baseline: dropout_rate must lie in [0, 1)");
  }
}

namespace {

template <class MakeCell, class MakeDense>
RnnBaselineParams build_baseline(const RnnBaselineConfig& c, MakeCell make_cell, MakeDense dense) {
  c.validate();
  RnnBaselineParams p;
  std::size_t input = c.n_features;
  for (std::size_t l = 0; l < c.layers; ++l) {
    p.encoder.push_back(make_cell(input, c.hidden_dim));
    input = c.hidden_dim;
  }
  const std::size_t m = c.mlp_width();
  p.mlp_w1 = dense(c.hidden_dim, m, c.hidden_dim);
  p.mlp_b1 = Matrix(1, m);
  p.mlp_w2 = dense(m, c.output_size(), m);
  p.mlp_b2 = Matrix(1, c.output_size());
  return p;
}

}  // namespace

RnnBaselineParams RnnBaselineParams::zeros(const RnnBaselineConfig& config) {
  return build_baseline(
      config,
      [&](std::size_t in, std::size_t h) { return CellParams::zeros(config.cell_type, in, h, config.activation); },
      [](std::size_t r, std::size_t c, std::size_t) { return Matrix(r, c); });
}

RnnBaselineParams RnnBaselineParams::random(const RnnBaselineConfig& config, Rng& rng) {
  return build_baseline(
      config,
      [&](std::size_t in, std::size_t h) {
        return CellParams::random(config.cell_type, in, h, config.activation, rng);
      },
      [&](std::size_t r, std::size_t c, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        return rng_uniform(rng, -bound, bound, r, c);
      });
}

std::vector<Matrix*> RnnBaselineParams::tensors() {
  std::vector<Matrix*> out;
  for (auto& cell : encoder)
    for (Matrix* m : cell.tensors()) out.push_back(m);
  for (Matrix* m : {&mlp_w1, &mlp_b1, &mlp_w2, &mlp_b2}) out.push_back(m);
  return out;
}

std::vector<const Matrix*> RnnBaselineParams::tensors() const {
  std::vector<const Matrix*> out;
  for (const auto& [name, m] : named_tensors()) out.push_back(m);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> RnnBaselineParams::named_tensors() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (std::size_t l = 0; l < encoder.size(); ++l) {
    const std::string prefix = "encoder.layer" + std::to_string(l);
    out.emplace_back(prefix + ".w", &encoder[l].w);
    out.emplace_back(prefix + ".u", &encoder[l].u);
    out.emplace_back(prefix + ".b", &encoder[l].b);
  }
  out.emplace_back("mlp.w1", &mlp_w1);
  out.emplace_back("mlp.b1", &mlp_b1);
  out.emplace_back("mlp.w2", &mlp_w2);
  out.emplace_back("mlp.b2", &mlp_b2);
  return out;
}

RnnBaselineForward rnn_baseline_forward(const RnnBaselineConfig& config,
                                        const RnnBaselineParams& params,
                                        std::span<const Matrix* const> windows, Rng& rng,
                                        bool training) {
  config.validate();
  if (windows.empty()) throw std::invalid_argument("rnn baseline: empty batch");
  if (params.encoder.size() != config.layers) throw ShapeError("rnn baseline: layer count mismatch");
  const std::size_t batch = windows.size();
  const std::size_t features = config.n_features;
  for (const Matrix* w : windows) {
    if (w->rows() != config.input_hours || w->cols() != features) {
      throw ShapeError("rnn baseline: window " + w->shape_string() + " expected " +
                       std::to_string(config.input_hours) + "x" + std::to_string(features));
    }
  }
  std::vector<Matrix> steps(config.input_hours, Matrix(batch, features));
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < config.input_hours; ++t) {
      auto src = windows[b]->row(t);
      std::copy(src.begin(), src.end(), steps[t].row(b).begin());
    }

  RnnBaselineForward out;
  out.cache.batch = batch;
  const std::vector<Matrix>* inputs = &steps;
  for (const CellParams& cell : params.encoder) {
    out.cache.encoder.push_back(run_recurrent_layer(cell, *inputs, config.dropout_rate, rng, training));
    inputs = &out.cache.encoder.back().output;
  }
  const Matrix& last = inputs->back();
  Matrix hidden = add_row(matmul(last, params.mlp_w1), params.mlp_b1);
  for (double& v : hidden.values()) v = v > 0.0 ? v : 0.0;
  const Matrix flat = add_row(matmul(hidden, params.mlp_w2), params.mlp_b2);
  out.cache.mlp_hidden = std::move(hidden);

  out.forecasts.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    auto row = flat.row(b);
    out.forecasts.emplace_back(config.output_hours, features, std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

RnnBaselineParams rnn_baseline_backward(const RnnBaselineConfig& config,
                                        const RnnBaselineParams& params,
                                        const RnnBaselineCache& cache,
                                        std::span<const Matrix> grad_forecasts) {
  const std::size_t batch = cache.batch;
  if (grad_forecasts.size() != batch || cache.encoder.size() != params.encoder.size()) {
    throw ShapeError("rnn baseline backward: cache or gradient batch mismatch");
  }
  Matrix g_out(batch, config.output_size());
  for (std::size_t b = 0; b < batch; ++b) {
    if (grad_forecasts[b].size() != config.output_size()) {
      throw ShapeError("rnn baseline backward: forecast gradient " + grad_forecasts[b].shape_string());
    }
    std::copy(grad_forecasts[b].values().begin(), grad_forecasts[b].values().end(), g_out.row(b).begin());
  }

  RnnBaselineParams grads = RnnBaselineParams::zeros(config);
  const Matrix& last = cache.encoder.back().output.back();
  const Matrix& hidden = cache.mlp_hidden;

  grads.mlp_w2 = matmul(transpose(hidden), g_out);
  Matrix g_hidden = matmul(g_out, transpose(params.mlp_w2));
  for (std::size_t i = 0; i < g_hidden.size(); ++i)
    if (hidden.values()[i] <= 0.0) g_hidden.values()[i] = 0.0;
  grads.mlp_w1 = matmul(transpose(last), g_hidden);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < g_out.cols(); ++j) grads.mlp_b2(0, j) += g_out(b, j);
    for (std::size_t j = 0; j < g_hidden.cols(); ++j) grads.mlp_b1(0, j) += g_hidden(b, j);
  }

  const std::size_t steps = cache.encoder.back().output.size();
  std::vector<Matrix> grad(steps, Matrix(batch, config.hidden_dim));
  grad.back() = matmul(g_hidden, transpose(params.mlp_w1));
  for (std::size_t l = params.encoder.size(); l-- > 0;)
    grad = backprop_recurrent_layer(params.encoder[l], cache.encoder[l], grad, grads.encoder[l]);
  return grads;
}

TrainResult<RnnBaselineParams> fit_rnn_baseline(const RnnBaselineConfig& config,
                                                std::span<const WindowPair> train,
                                                const TrainConfig& train_config) {
  config.validate();
  return msrnn::train(RnnBaselineNetwork{config}, train, train_config);
}

}  // namespace msrnn
