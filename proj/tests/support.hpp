#pragma once

// Independent oracles and helpers shared by the unit and acceptance tests.
// Everything here is written with plain scalar loops over the per-gate views,
// so it shares no arithmetic with the fused batched kernels under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "msrnn/cells.hpp"
#include "msrnn/model.hpp"
#include "msrnn/tensor.hpp"

namespace msrnn::testing {

inline double rel_error(double a, double n, double floor = 1e-8) {
  return std::abs(a - n) / std::max(floor, std::abs(a) + std::abs(n));
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  return rng_uniform(rng, lo, hi, rows, cols);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

inline double naive_tanh(double x) { return (std::exp(x) - std::exp(-x)) / (std::exp(x) + std::exp(-x)); }

inline double scalar_act(Activation a, double x) {
  switch (a) {
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh: return naive_tanh(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::identity: return x;
  }
  return x;
}

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

using Vec = std::vector<double>;

// W (hidden x input) * x + U (hidden x hidden) * h + b for one gate.
inline Vec gate_pre(const CellParams& p, std::size_t gate, const Vec& x, const Vec& h) {
  const Matrix w = p.input_weights(gate);
  const Matrix u = p.recurrent_weights(gate);
  const Matrix b = p.bias(gate);
  Vec out(p.hidden_dim());
  for (std::size_t j = 0; j < out.size(); ++j) {
    double s = b.values()[j];
    for (std::size_t i = 0; i < x.size(); ++i) s += w(j, i) * x[i];
    for (std::size_t i = 0; i < h.size(); ++i) s += u(j, i) * h[i];
    out[j] = s;
  }
  return out;
}

/// Textbook GRU/LSTM recurrence over one sample, zero initial state unless h0 given.
inline std::vector<Vec> oracle_cell(const CellParams& p, const std::vector<Vec>& xs, Vec h = {}, Vec c = {}) {
  const std::size_t n = p.hidden_dim();
  if (h.empty()) h.assign(n, 0.0);
  if (c.empty()) c.assign(n, 0.0);
  std::vector<Vec> out;
  for (const Vec& x : xs) {
    if (p.type == CellType::gru) {
      const Vec zp = gate_pre(p, gru_gate::update, x, h);
      const Vec rp = gate_pre(p, gru_gate::reset, x, h);
      Vec rh(n);
      for (std::size_t j = 0; j < n; ++j) rh[j] = sig(rp[j]) * h[j];
      // candidate uses r*h in its recurrent term
      const Vec cp = gate_pre(p, gru_gate::candidate, x, rh);
      Vec next(n);
      for (std::size_t j = 0; j < n; ++j) {
        const double z = sig(zp[j]);
        next[j] = z * h[j] + (1.0 - z) * scalar_act(p.activation, cp[j]);
      }
      h = next;
    } else {
      const Vec ip = gate_pre(p, lstm_gate::input, x, h);
      const Vec fp = gate_pre(p, lstm_gate::forget, x, h);
      const Vec op = gate_pre(p, lstm_gate::output, x, h);
      const Vec gp = gate_pre(p, lstm_gate::candidate, x, h);
      for (std::size_t j = 0; j < n; ++j) {
        c[j] = sig(fp[j]) * c[j] + sig(ip[j]) * scalar_act(p.activation, gp[j]);
        h[j] = sig(op[j]) * scalar_act(p.activation, c[j]);
      }
    }
    out.push_back(h);
  }
  return out;
}

/// Straight-line inference-mode forward of the multi-stream model for one window.
inline Matrix oracle_msrnn(const MsRnnConfig& cfg, const MsRnnParams& params, const Matrix& window) {
  const std::size_t day = cfg.output_hours;
  std::vector<std::vector<Vec>> top(cfg.n_streams);
  for (std::size_t s = 0; s < cfg.n_streams; ++s) {
    std::vector<Vec> seq;
    for (std::size_t t = 0; t < day; ++t) {
      Vec x(cfg.n_features);
      for (std::size_t k = 0; k < cfg.n_features; ++k) x[k] = window(s * day + t, k);
      seq.push_back(x);
    }
    for (const auto& layer : params.daily[s]) seq = oracle_cell(layer, seq);
    top[s] = seq;
  }
  std::vector<Vec> merged(day, Vec(cfg.hidden_dim, 0.0));
  for (std::size_t t = 0; t < day; ++t)
    for (std::size_t s = 0; s < cfg.n_streams; ++s)
      for (std::size_t j = 0; j < cfg.hidden_dim; ++j) merged[t][j] += top[s][t][j];
  std::vector<Vec> weekly = merged;
  for (const auto& layer : params.weekly) weekly = oracle_cell(layer, weekly);
  Matrix out(day, cfg.n_features);
  for (std::size_t t = 0; t < day; ++t)
    for (std::size_t k = 0; k < cfg.n_features; ++k) {
      double v = params.head_biases[k](0, 0);
      for (std::size_t j = 0; j < weekly[t].size(); ++j) v += params.head_weights[k](0, j) * weekly[t][j];
      out(t, k) = v;
    }
  return out;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

/// Central differences of `loss` against analytic gradients for every entry
/// of every tensor. `params` and `grads` line up pairwise. Magnitudes below
/// `floor` are compared against the floor instead.
inline GradCheck finite_difference_check(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
                                         const std::function<double()>& loss, double eps = 1e-5,
                                         const std::vector<std::string>& names = {}, double floor = 1e-8) {
  GradCheck out;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix& p = *params[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p.values()[i];
      p.values()[i] = saved + eps;
      const double up = loss();
      p.values()[i] = saved - eps;
      const double down = loss();
      p.values()[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = rel_error(grads[t]->values()[i], numeric, floor);
      ++out.checked;
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.worst = (t < names.size() ? names[t] : "tensor " + std::to_string(t)) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return out;
}

/// <G, Y> summed over matched matrices.
inline double weighted_sum(const std::vector<Matrix>& ys, const std::vector<Matrix>& gs) {
  double s = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i)
    for (std::size_t j = 0; j < ys[i].size(); ++j) s += ys[i].values()[j] * gs[i].values()[j];
  return s;
}

}  // namespace msrnn::testing
