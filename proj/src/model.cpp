#include "msrnn/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace msrnn {

void MsRnnConfig::validate() const {
  if (hidden_dim == 0) throw std::invalid_argument("hidden_dim must be positive");
  if (daily_layers < 1 || daily_layers > 2) throw std::invalid_argument("daily_layers must be 1 or 2");
  if (n_features == 0) throw std::invalid_argument("n_features must be positive");
  if (n_streams == 0 || output_hours == 0 || input_hours != n_streams * output_hours) {
    throw std::invalid_argument("input_hours (" + std::to_string(input_hours) +
                                ") must equal n_streams x output_hours (" +
                                std::to_string(n_streams) + " x " + std::to_string(output_hours) +
                                ")");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout_rate must lie in [0, 1)");
  }
  if (shrink) {
    if (shrink->rate < 2) throw std::invalid_argument("shrink rate must be >= 2");
    if (shrink->min_dim < 1) throw std::invalid_argument("shrink min_dim must be >= 1");
    if (shrink->depth < 1) throw std::invalid_argument("shrink depth must be >= 1");
  }
}

std::vector<std::size_t> MsRnnConfig::weekly_dims() const {
  if (!shrink) return {hidden_dim};
  return shrink_dims(hidden_dim, shrink->rate, shrink->min_dim, shrink->depth);
}

std::vector<std::size_t> shrink_dims(std::size_t d0, std::size_t rate, std::size_t min_dim,
                                     std::size_t depth) {
  if (d0 < 1 || rate < 2 || min_dim < 1 || depth < 1) {
    throw std::invalid_argument("shrink_dims: require d0 >= 1, r >= 2, m >= 1, depth >= 1 (got " +
                                std::to_string(d0) + ", " + std::to_string(rate) + ", " +
                                std::to_string(min_dim) + ", " + std::to_string(depth) + ")");
  }
  std::vector<std::size_t> dims{d0};
  while (dims.size() < depth) {
    const std::size_t next = dims.back() / rate;
    dims.push_back(next == 0 ? min_dim : next);
  }
  return dims;
}

std::size_t default_shrink_depth(std::size_t d0, std::size_t rate, std::size_t min_dim) {
  if (d0 < 1 || rate < 2 || min_dim < 1) throw std::invalid_argument("default_shrink_depth: bad args");
  std::size_t depth = 1;
  std::size_t d = d0;
  while (d > min_dim) {
    const std::size_t next = d / rate;
    d = next == 0 ? min_dim : next;
    ++depth;
  }
  return depth;
}

namespace {

template <class MakeCell>
MsRnnParams build_params(const MsRnnConfig& config, MakeCell make_cell, bool random, Rng* rng) {
  config.validate();
  MsRnnParams p;
  p.daily.resize(config.n_streams);
  for (auto& stream : p.daily) {
    std::size_t input = config.n_features;
    for (std::size_t l = 0; l < config.daily_layers; ++l) {
      stream.push_back(make_cell(input, config.hidden_dim, config.input_activation));
      input = config.hidden_dim;
    }
  }
  std::size_t input = config.hidden_dim;
  for (std::size_t d : config.weekly_dims()) {
    p.weekly.push_back(make_cell(input, d, config.output_activation));
    input = d;
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(input));
  for (std::size_t k = 0; k < config.n_features; ++k) {
    p.head_weights.push_back(random ? rng_uniform(*rng, -bound, bound, 1, input) : Matrix(1, input));
    p.head_biases.emplace_back(1, 1);
  }
  return p;
}

}  // namespace

MsRnnParams MsRnnParams::zeros(const MsRnnConfig& config) {
  return build_params(
      config,
      [&](std::size_t in, std::size_t h, Activation a) {
        return CellParams::zeros(config.cell_type, in, h, a);
      },
      false, nullptr);
}

MsRnnParams MsRnnParams::random(const MsRnnConfig& config, Rng& rng) {
  return build_params(
      config,
      [&](std::size_t in, std::size_t h, Activation a) {
        return CellParams::random(config.cell_type, in, h, a, rng);
      },
      true, &rng);
}

std::vector<Matrix*> MsRnnParams::tensors() {
  std::vector<Matrix*> out;
  for (auto& stream : daily)
    for (auto& cell : stream)
      for (Matrix* m : cell.tensors()) out.push_back(m);
  for (auto& cell : weekly)
    for (Matrix* m : cell.tensors()) out.push_back(m);
  for (std::size_t k = 0; k < head_weights.size(); ++k) {
    out.push_back(&head_weights[k]);
    out.push_back(&head_biases[k]);
  }
  return out;
}

std::vector<const Matrix*> MsRnnParams::tensors() const {
  std::vector<const Matrix*> out;
  for (const auto& [name, m] : named_tensors()) out.push_back(m);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> MsRnnParams::named_tensors() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  auto add_cell = [&](const std::string& prefix, const CellParams& cell) {
    out.emplace_back(prefix + ".w", &cell.w);
    out.emplace_back(prefix + ".u", &cell.u);
    out.emplace_back(prefix + ".b", &cell.b);
  };
  for (std::size_t i = 0; i < daily.size(); ++i)
    for (std::size_t l = 0; l < daily[i].size(); ++l)
      add_cell("daily." + std::to_string(i) + ".layer" + std::to_string(l), daily[i][l]);
  for (std::size_t l = 0; l < weekly.size(); ++l) add_cell("weekly.layer" + std::to_string(l), weekly[l]);
  for (std::size_t k = 0; k < head_weights.size(); ++k) {
    out.emplace_back("head." + std::to_string(k) + ".weight", &head_weights[k]);
    out.emplace_back("head." + std::to_string(k) + ".bias", &head_biases[k]);
  }
  return out;
}

std::vector<Matrix> split_week(const Matrix& window, std::size_t n_streams,
                               std::size_t hours_per_stream) {
  if (window.rows() != n_streams * hours_per_stream) {
    throw ShapeError("split_week: expected " + std::to_string(n_streams * hours_per_stream) +
                     " rows, got " + window.shape_string());
  }
  std::vector<Matrix> days;
  days.reserve(n_streams);
  for (std::size_t i = 0; i < n_streams; ++i)
    days.push_back(slice_rows(window, i * hours_per_stream, hours_per_stream));
  return days;
}

Matrix merge(std::span<const Matrix> hidden) {
  if (hidden.empty()) throw ShapeError("merge: no stream states");
  Matrix sum = hidden.front();
  for (std::size_t i = 1; i < hidden.size(); ++i) {
    require_same_shape(sum, hidden[i], "merge");
    auto dst = sum.values();
    auto src = hidden[i].values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
  return sum;
}

namespace {

void check_params(const MsRnnConfig& config, const MsRnnParams& params) {
  if (params.daily.size() != config.n_streams || params.head_weights.size() != config.n_features ||
      params.head_biases.size() != config.n_features ||
      params.weekly.size() != config.weekly_dims().size()) {
    throw ShapeError("parameters do not match the model configuration");
  }
  for (const auto& stream : params.daily) {
    if (stream.size() != config.daily_layers) throw ShapeError("daily layer count mismatch");
  }
}

}  // namespace

BatchForecast forward(const MsRnnConfig& config, const MsRnnParams& params,
                      std::span<const Matrix* const> windows, Rng& rng, bool training) {
  config.validate();
  check_params(config, params);
  if (windows.empty()) throw std::invalid_argument("forward: empty batch");
  const std::size_t batch = windows.size();
  const std::size_t features = config.n_features;
  const std::size_t day = config.output_hours;
  for (const Matrix* w : windows) {
    if (w->rows() != config.input_hours || w->cols() != features) {
      throw ShapeError("forward: window " + w->shape_string() + " expected " +
                       std::to_string(config.input_hours) + "x" + std::to_string(features));
    }
  }

  BatchForecast out;
  ForwardCache& cache = out.cache;
  cache.batch = batch;
  cache.training = training;
  cache.daily.resize(config.n_streams);

  for (std::size_t i = 0; i < config.n_streams; ++i) {
    std::vector<Matrix> steps(day, Matrix(batch, features));
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t t = 0; t < day; ++t) {
        auto src = windows[b]->row(i * day + t);
        std::copy(src.begin(), src.end(), steps[t].row(b).begin());
      }
    const std::vector<Matrix>* inputs = &steps;
    for (std::size_t l = 0; l < config.daily_layers; ++l) {
      cache.daily[i].push_back(run_recurrent_layer(params.daily[i][l], *inputs, config.dropout_rate, rng, training));
      inputs = &cache.daily[i].back().output;
    }
  }

  cache.merged.reserve(day);
  for (std::size_t t = 0; t < day; ++t) {
    Matrix s = cache.daily[0].back().output[t];
    for (std::size_t i = 1; i < config.n_streams; ++i) {
      auto dst = s.values();
      auto src = cache.daily[i].back().output[t].values();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
    cache.merged.push_back(std::move(s));
  }

  const std::vector<Matrix>* inputs = &cache.merged;
  for (const CellParams& cell : params.weekly) {
    cache.weekly.push_back(run_recurrent_layer(cell, *inputs, config.dropout_rate, rng, training));
    inputs = &cache.weekly.back().output;
  }

  const std::vector<Matrix>& top = *inputs;
  const std::size_t width = top.front().cols();
  out.forecasts.assign(batch, Matrix(day, features));
  for (std::size_t t = 0; t < day; ++t)
    for (std::size_t b = 0; b < batch; ++b) {
      const double* h = top[t].data() + b * width;
      for (std::size_t k = 0; k < features; ++k) {
        const double* w = params.head_weights[k].data();
        double v = params.head_biases[k](0, 0);
        for (std::size_t d = 0; d < width; ++d) v += w[d] * h[d];
        out.forecasts[b](t, k) = v;
      }
    }
  return out;
}

std::pair<Matrix, ForwardCache> forward(const MsRnnConfig& config, const MsRnnParams& params,
                                        const Matrix& window, Rng& rng, bool training) {
  const Matrix* ptr = &window;
  BatchForecast r = forward(config, params, std::span<const Matrix* const>(&ptr, 1), rng, training);
  return {std::move(r.forecasts.front()), std::move(r.cache)};
}

MsRnnParams backward(const MsRnnConfig& config, const MsRnnParams& params,
                     const ForwardCache& cache, std::span<const Matrix> grad_forecasts) {
  check_params(config, params);
  const std::size_t batch = cache.batch;
  const std::size_t day = config.output_hours;
  const std::size_t features = config.n_features;
  if (grad_forecasts.size() != batch || cache.merged.size() != day ||
      cache.daily.size() != config.n_streams || cache.weekly.size() != params.weekly.size()) {
    throw ShapeError("backward: cache or gradient batch does not match the forward pass");
  }
  for (const Matrix& g : grad_forecasts) {
    if (g.rows() != day || g.cols() != features) {
      throw ShapeError("backward: forecast gradient " + g.shape_string() + " expected " +
                       std::to_string(day) + "x" + std::to_string(features));
    }
  }

  MsRnnParams grads = MsRnnParams::zeros(config);
  const std::vector<Matrix>& top = cache.weekly.back().output;
  const std::size_t width = top.front().cols();

  std::vector<Matrix> grad_top(day, Matrix(batch, width));
  for (std::size_t t = 0; t < day; ++t)
    for (std::size_t b = 0; b < batch; ++b) {
      const double* h = top[t].data() + b * width;
      double* gh = grad_top[t].data() + b * width;
      for (std::size_t k = 0; k < features; ++k) {
        const double g = grad_forecasts[b](t, k);
        if (g == 0.0) continue;
        const double* w = params.head_weights[k].data();
        double* gw = grads.head_weights[k].data();
        for (std::size_t d = 0; d < width; ++d) {
          gw[d] += g * h[d];
          gh[d] += g * w[d];
        }
        grads.head_biases[k](0, 0) += g;
      }
    }

  std::vector<Matrix> grad = std::move(grad_top);
  for (std::size_t l = params.weekly.size(); l-- > 0;)
    grad = backprop_recurrent_layer(params.weekly[l], cache.weekly[l], grad, grads.weekly[l]);

  // grad now holds d loss / d s_t, shared unchanged by every stream.
  for (std::size_t i = 0; i < config.n_streams; ++i) {
    std::vector<Matrix> g = grad;
    for (std::size_t l = config.daily_layers; l-- > 0;) {
      g = backprop_recurrent_layer(params.daily[i][l], cache.daily[i][l], g, grads.daily[i][l]);
    }
  }
  return grads;
}

}  // namespace msrnn
