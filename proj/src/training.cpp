#include "msrnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace msrnn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (!(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0)) {
    throw std::invalid_argument("rmsprop_decay must lie in [0, 1)");
  }
  if (!(rmsprop_epsilon > 0.0)) throw std::invalid_argument("rmsprop_epsilon must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation_fraction must lie in (0, 1)");
  }
}

LossResult mse_loss(const Matrix& pred, const Matrix& target) {
  require_same_shape(pred, target, "mse_loss");
  LossResult out{0.0, Matrix(pred.rows(), pred.cols())};
  auto p = pred.values();
  auto t = target.values();
  auto g = out.grad.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    out.loss += d * d;
    g[i] = 2.0 * d;
  }
  return out;
}

BatchLoss batch_mse(std::span<const Matrix> preds, std::span<const Matrix* const> targets) {
  if (preds.empty() || preds.size() != targets.size()) {
    throw ShapeError("batch_mse: " + std::to_string(preds.size()) + " predictions for " +
                     std::to_string(targets.size()) + " targets");
  }
  const double inv_n = 1.0 / static_cast<double>(preds.size());
  BatchLoss out;
  out.grads.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    LossResult r = mse_loss(preds[i], *targets[i]);
    out.loss += r.loss;
    for (double& v : r.grad.values()) v *= inv_n;
    out.grads.push_back(std::move(r.grad));
  }
  out.loss *= inv_n;
  return out;
}

RmspropState RmspropState::zeros_like(std::span<const Matrix* const> params) {
  RmspropState s;
  s.mean_square.reserve(params.size());
  for (const Matrix* p : params) s.mean_square.emplace_back(p->rows(), p->cols());
  return s;
}

void rmsprop_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
                  RmspropState& state, const TrainConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.mean_square.size()) {
    throw ShapeError("rmsprop_step: " + std::to_string(params.size()) + " parameters, " +
                     std::to_string(grads.size()) + " gradients, " +
                     std::to_string(state.mean_square.size()) + " state entries");
  }
  const double decay = cfg.rmsprop_decay;
  const double lr = cfg.learning_rate;
  const double eps = cfg.rmsprop_epsilon;
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], *grads[i], "rmsprop_step");
    require_same_shape(*params[i], state.mean_square[i], "rmsprop_step state");
    auto p = params[i]->values();
    auto g = grads[i]->values();
    auto s = state.mean_square[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      s[j] = decay * s[j] + (1.0 - decay) * g[j] * g[j];
      p[j] -= lr * g[j] / std::sqrt(s[j] + eps);
    }
  }
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
}

bool EarlyStopping::update(std::size_t epoch, double val_loss) {
  if (val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

void TrainHistory::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,val_loss,seconds\n";
  char buf[128];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.6f\n", e.epoch, e.train_loss, e.val_loss,
                  e.seconds);
    out << buf;
  }
}

void TrainHistory::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  write_csv(out);
}

ValidationSplit split_validation(std::span<const WindowPair> data, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (data[a].origin_hour != data[b].origin_hour) return data[a].origin_hour < data[b].origin_hour;
    return data[a].merchant_id < data[b].merchant_id;
  });
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(data.size()))));
  if (n_val >= data.size()) {
    throw std::invalid_argument("need at least two windows to carve a validation split (have " +
                                std::to_string(data.size()) + ")");
  }
  ValidationSplit split;
  split.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  split.validation.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  // Training order is restored to input order so shuffles depend only on the seed.
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

}  // namespace msrnn
