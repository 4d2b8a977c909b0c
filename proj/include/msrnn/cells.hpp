#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "msrnn/tensor.hpp"

namespace msrnn {

enum class CellType { gru, lstm };

CellType parse_cell_type(std::string_view tag);
std::string_view to_string(CellType t) noexcept;

/// Gate count per cell type: GRU has 3, LSTM has 4.
std::size_t gate_count(CellType t) noexcept;

/// Parameters of one GRU or LSTM layer.
///
/// Gate blocks are fused column-wise so a whole batch step is one product:
///   w: input x (gates*hidden), u: hidden x (gates*hidden), b: 1 x (gates*hidden).
/// Block order is [update, reset, candidate] for GRU and
/// [input, forget, output, candidate] for LSTM. Gates always use sigmoid;
/// `activation` is applied at the candidate (and, for LSTM, the cell output).
struct CellParams {
  CellType type = CellType::gru;
  Activation activation = Activation::tanh;
  Matrix w;
  Matrix u;
  Matrix b;

  static CellParams zeros(CellType type, std::size_t input, std::size_t hidden,
                          Activation activation);
  /// Uniform in [-1/sqrt(hidden), 1/sqrt(hidden)] for every entry, biases included.
  static CellParams random(CellType type, std::size_t input, std::size_t hidden,
                           Activation activation, Rng& rng);

  std::size_t input_dim() const noexcept { return w.rows(); }
  std::size_t hidden_dim() const noexcept { return u.rows(); }
  std::size_t gates() const noexcept { return gate_count(type); }

  /// Per-gate views in the conventional (hidden x input) / (hidden x hidden)
  /// orientation. Copies; for inspection and tests.
  Matrix input_weights(std::size_t gate) const;
  Matrix recurrent_weights(std::size_t gate) const;
  Matrix bias(std::size_t gate) const;

  std::vector<Matrix*> tensors() { return {&w, &u, &b}; }
  std::vector<const Matrix*> tensors() const { return {&w, &u, &b}; }
};

namespace gru_gate {
inline constexpr std::size_t update = 0, reset = 1, candidate = 2;
}
namespace lstm_gate {
inline constexpr std::size_t input = 0, forget = 1, output = 2, candidate = 3;
}

/// Intermediate values of a batched forward pass, one entry per time step.
struct CellCache {
  std::vector<Matrix> inputs;     // x_t, batch x input
  std::vector<Matrix> prev_h;     // h_{t-1}, batch x hidden
  std::vector<Matrix> prev_c;     // LSTM only
  std::vector<Matrix> gates;      // post-activation gate values, batch x gates*hidden
  std::vector<Matrix> reset_h;    // GRU only: r_t * h_{t-1}
  std::vector<Matrix> cell_out;   // LSTM only: activation(c_t)

  std::size_t steps() const noexcept { return inputs.size(); }
};

struct CellForward {
  std::vector<Matrix> h;  // one batch x hidden matrix per step
  CellCache cache;
};

/// Runs the recurrence over x_seq (each step batch x input) from h0 (and c0
/// for LSTM, zero when omitted). A single sample is a batch of one.
CellForward cell_forward(const CellParams& params, std::span<const Matrix> x_seq,
                         const Matrix& h0);
CellForward cell_forward(const CellParams& params, std::span<const Matrix> x_seq,
                         const Matrix& h0, const Matrix& c0);

struct CellGradients {
  std::vector<Matrix> x;  // per step, batch x input
  Matrix h0;
  Matrix c0;  // LSTM only
};

/// Backpropagates grad_h_seq through a cached forward pass. Parameter
/// gradients are accumulated into `grads`, which must match `params` in shape.
CellGradients cell_backward(const CellParams& params, const CellCache& cache,
                            std::span<const Matrix> grad_h_seq, CellParams& grads);

struct DropoutResult {
  Matrix output;
  Matrix mask;  // 0 or 1/(1-rate) per entry; all ones when inactive
};

/// Inverted dropout. Rate 0 or inference mode leaves the input untouched and
/// draws nothing from rng.
DropoutResult dropout(const Matrix& input, double rate, Rng& rng, bool training);

/// One recurrent layer's forward record: the cell cache, its emitted hidden
/// states before dropout, and the dropout masks applied to them.
struct LayerRecord {
  CellCache cell;
  std::vector<Matrix> hidden;
  std::vector<Matrix> masks;
  std::vector<Matrix> output;  // hidden * mask, what the next stage consumes
};

/// Runs one layer from a zero initial state and applies dropout to every
/// emitted hidden state.
LayerRecord run_recurrent_layer(const CellParams& cell, std::span<const Matrix> inputs, double rate,
                                Rng& rng, bool training);

/// Backpropagates through dropout and the cell; returns gradients with
/// respect to the layer inputs.
std::vector<Matrix> backprop_recurrent_layer(const CellParams& cell, const LayerRecord& record,
                                             std::span<const Matrix> grad_output, CellParams& grads);

}  // namespace msrnn
