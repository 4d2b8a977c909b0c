#include "msrnn/cells.hpp"

#include <cmath>
#include <string>

#include "kernels.hpp"

namespace msrnn {

CellType parse_cell_type(std::string_view tag) {
  if (tag == "gru") return CellType::gru;
  if (tag == "lstm") return CellType::lstm;
  throw std::invalid_argument("unknown cell type '" + std::string(tag) + "'");
}

std::string_view to_string(CellType t) noexcept { return t == CellType::gru ? "gru" : "lstm"; }

std::size_t gate_count(CellType t) noexcept { return t == CellType::gru ? 3 : 4; }

CellParams CellParams::zeros(CellType type, std::size_t input, std::size_t hidden,
                             Activation activation) {
  if (input == 0 || hidden == 0) throw ShapeError("cell dimensions must be positive");
  const std::size_t g = gate_count(type);
  return {type, activation, Matrix(input, g * hidden), Matrix(hidden, g * hidden),
          Matrix(1, g * hidden)};
}

CellParams CellParams::random(CellType type, std::size_t input, std::size_t hidden,
                              Activation activation, Rng& rng) {
  CellParams p = zeros(type, input, hidden, activation);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Matrix* m : p.tensors())
    for (double& v : m->values()) v = rng.uniform(-bound, bound);
  return p;
}

Matrix CellParams::input_weights(std::size_t gate) const {
  const std::size_t h = hidden_dim();
  Matrix out(h, input_dim());
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < input_dim(); ++j) out(i, j) = w(j, gate * h + i);
  return out;
}

Matrix CellParams::recurrent_weights(std::size_t gate) const {
  const std::size_t h = hidden_dim();
  Matrix out(h, h);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < h; ++j) out(i, j) = u(j, gate * h + i);
  return out;
}

Matrix CellParams::bias(std::size_t gate) const {
  const std::size_t h = hidden_dim();
  Matrix out(h, 1);
  for (std::size_t i = 0; i < h; ++i) out(i, 0) = b(0, gate * h + i);
  return out;
}

namespace {

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

void check_forward_shapes(const CellParams& p, std::span<const Matrix> x_seq, const Matrix& h0) {
  if (x_seq.empty()) throw std::invalid_argument("cell_forward: empty input sequence");
  const std::size_t batch = x_seq.front().rows();
  for (const auto& x : x_seq) {
    if (x.cols() != p.input_dim() || x.rows() != batch) {
      throw ShapeError("cell_forward: input step " + x.shape_string() + " does not match input dim " +
                       std::to_string(p.input_dim()) + " and batch " + std::to_string(batch));
    }
  }
  if (h0.rows() != batch || h0.cols() != p.hidden_dim()) {
    throw ShapeError("cell_forward: h0 " + h0.shape_string() + " expected " +
                     std::to_string(batch) + "x" + std::to_string(p.hidden_dim()));
  }
}

// gates <- x*w + b
void input_projection(const CellParams& p, const Matrix& x, Matrix& gates) {
  const std::size_t n = gates.cols();
  kernels::gemm_nn(x.rows(), n, x.cols(), x.data(), x.cols(), p.w.data(), n, gates.data(), n,
                   false);
  for (std::size_t r = 0; r < gates.rows(); ++r) {
    auto row = gates.row(r);
    for (std::size_t c = 0; c < n; ++c) row[c] += p.b(0, c);
  }
}

void gru_step(const CellParams& p, const Matrix& x, const Matrix& h_prev, Matrix& gates,
              Matrix& reset_h, Matrix& h_out) {
  const std::size_t batch = x.rows();
  const std::size_t h = p.hidden_dim();
  const std::size_t n = 3 * h;
  input_projection(p, x, gates);
  kernels::gemm_nn(batch, 2 * h, h, h_prev.data(), h, p.u.data(), n, gates.data(), n, true);
  for (std::size_t r = 0; r < batch; ++r) {
    double* g = gates.data() + r * n;
    const double* hp = h_prev.data() + r * h;
    double* rh = reset_h.data() + r * h;
    for (std::size_t c = 0; c < 2 * h; ++c) g[c] = sigmoid(g[c]);
    for (std::size_t c = 0; c < h; ++c) rh[c] = g[h + c] * hp[c];
  }
  kernels::gemm_nn(batch, h, h, reset_h.data(), h, p.u.data() + 2 * h, n, gates.data() + 2 * h, n,
                   true);
  for (std::size_t r = 0; r < batch; ++r) {
    double* g = gates.data() + r * n;
    const double* hp = h_prev.data() + r * h;
    double* ho = h_out.data() + r * h;
    for (std::size_t c = 0; c < h; ++c) {
      const double cand = activate(p.activation, g[2 * h + c]);
      g[2 * h + c] = cand;
      const double z = g[c];
      ho[c] = z * hp[c] + (1.0 - z) * cand;
    }
  }
}

void lstm_step(const CellParams& p, const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
               Matrix& gates, Matrix& c_out, Matrix& cell_out, Matrix& h_out) {
  const std::size_t batch = x.rows();
  const std::size_t h = p.hidden_dim();
  const std::size_t n = 4 * h;
  input_projection(p, x, gates);
  kernels::gemm_nn(batch, n, h, h_prev.data(), h, p.u.data(), n, gates.data(), n, true);
  for (std::size_t r = 0; r < batch; ++r) {
    double* g = gates.data() + r * n;
    const double* cp = c_prev.data() + r * h;
    double* co = c_out.data() + r * h;
    double* mo = cell_out.data() + r * h;
    double* ho = h_out.data() + r * h;
    for (std::size_t c = 0; c < 3 * h; ++c) g[c] = sigmoid(g[c]);
    for (std::size_t c = 0; c < h; ++c) {
      const double cand = activate(p.activation, g[3 * h + c]);
      g[3 * h + c] = cand;
      co[c] = g[h + c] * cp[c] + g[c] * cand;
      mo[c] = activate(p.activation, co[c]);
      ho[c] = g[2 * h + c] * mo[c];
    }
  }
}

}  // namespace

CellForward cell_forward(const CellParams& params, std::span<const Matrix> x_seq,
                         const Matrix& h0) {
  if (params.type == CellType::lstm) {
    if (x_seq.empty()) throw std::invalid_argument("cell_forward: empty input sequence");
    return cell_forward(params, x_seq, h0, Matrix(x_seq.front().rows(), params.hidden_dim()));
  }
  return cell_forward(params, x_seq, h0, Matrix());
}

CellForward cell_forward(const CellParams& params, std::span<const Matrix> x_seq,
                         const Matrix& h0, const Matrix& c0) {
  check_forward_shapes(params, x_seq, h0);
  const std::size_t batch = h0.rows();
  const std::size_t h = params.hidden_dim();
  const std::size_t n = params.gates() * h;
  const std::size_t steps = x_seq.size();
  const bool lstm = params.type == CellType::lstm;
  if (lstm) require_same_shape(h0, c0, "cell_forward c0");

  CellForward out;
  CellCache& cache = out.cache;
  cache.inputs.assign(x_seq.begin(), x_seq.end());
  cache.prev_h.reserve(steps);
  cache.gates.reserve(steps);
  out.h.reserve(steps);
  if (lstm) {
    cache.prev_c.reserve(steps);
    cache.cell_out.reserve(steps);
  } else {
    cache.reset_h.reserve(steps);
  }

  Matrix h_prev = h0;
  Matrix c_prev = c0;
  for (std::size_t t = 0; t < steps; ++t) {
    Matrix gates(batch, n);
    Matrix h_next(batch, h);
    if (lstm) {
      Matrix c_next(batch, h);
      Matrix cell_out(batch, h);
      lstm_step(params, x_seq[t], h_prev, c_prev, gates, c_next, cell_out, h_next);
      cache.prev_c.push_back(std::move(c_prev));
      cache.cell_out.push_back(std::move(cell_out));
      c_prev = std::move(c_next);
    } else {
      Matrix reset_h(batch, h);
      gru_step(params, x_seq[t], h_prev, gates, reset_h, h_next);
      cache.reset_h.push_back(std::move(reset_h));
    }
    cache.prev_h.push_back(std::move(h_prev));
    cache.gates.push_back(std::move(gates));
    h_prev = h_next;
    out.h.push_back(std::move(h_next));
  }
  return out;
}

CellGradients cell_backward(const CellParams& params, const CellCache& cache,
                            std::span<const Matrix> grad_h_seq, CellParams& grads) {
  const std::size_t steps = cache.steps();
  if (steps == 0 || grad_h_seq.size() != steps) {
    throw ShapeError("cell_backward: " + std::to_string(grad_h_seq.size()) +
                     " gradient steps for a cache of " + std::to_string(steps));
  }
  if (grads.type != params.type) throw ShapeError("cell_backward: gradient cell type mismatch");
  require_same_shape(grads.w, params.w, "cell_backward w");
  require_same_shape(grads.u, params.u, "cell_backward u");
  require_same_shape(grads.b, params.b, "cell_backward b");
  const bool lstm = params.type == CellType::lstm;
  const std::size_t batch = cache.prev_h.front().rows();
  const std::size_t h = params.hidden_dim();
  const std::size_t in = params.input_dim();
  const std::size_t n = params.gates() * h;
  for (const auto& g : grad_h_seq) {
    if (g.rows() != batch || g.cols() != h) {
      throw ShapeError("cell_backward: gradient step " + g.shape_string() + " expected " +
                       std::to_string(batch) + "x" + std::to_string(h));
    }
  }

  CellGradients out;
  out.x.resize(steps);
  Matrix dh_next(batch, h);
  Matrix dc_next(batch, lstm ? h : 0);
  Matrix da(batch, n);
  Matrix d_rh(batch, h);
  const Activation act = params.activation;

  for (std::size_t step = steps; step-- > 0;) {
    const Matrix& gates = cache.gates[step];
    const Matrix& h_prev = cache.prev_h[step];
    const Matrix& x = cache.inputs[step];
    const Matrix& dh_out = grad_h_seq[step];
    Matrix dh_prev(batch, h);

    if (!lstm) {
      for (std::size_t r = 0; r < batch; ++r) {
        const double* g = gates.data() + r * n;
        const double* hp = h_prev.data() + r * h;
        double* a = da.data() + r * n;
        double* dp = dh_prev.data() + r * h;
        for (std::size_t c = 0; c < h; ++c) {
          const double dh = dh_out(r, c) + dh_next(r, c);
          const double z = g[c];
          const double cand = g[2 * h + c];
          a[c] = dh * (hp[c] - cand) * z * (1.0 - z);
          a[2 * h + c] = dh * (1.0 - z) * activation_grad_from_output(act, cand);
          dp[c] = dh * z;
        }
      }
      // d(r*h) = da_c * U_c^T
      kernels::gemm_nt(batch, h, h, da.data() + 2 * h, n, params.u.data() + 2 * h, n, d_rh.data(),
                       h, false);
      for (std::size_t r = 0; r < batch; ++r) {
        const double* g = gates.data() + r * n;
        const double* hp = h_prev.data() + r * h;
        const double* drh = d_rh.data() + r * h;
        double* a = da.data() + r * n;
        double* dp = dh_prev.data() + r * h;
        for (std::size_t c = 0; c < h; ++c) {
          const double rg = g[h + c];
          a[h + c] = drh[c] * hp[c] * rg * (1.0 - rg);
          dp[c] += drh[c] * rg;
        }
      }
      kernels::gemm_nt(batch, h, 2 * h, da.data(), n, params.u.data(), n, dh_prev.data(), h, true);
      kernels::gemm_tn(h, 2 * h, batch, h_prev.data(), h, da.data(), n, grads.u.data(), n, true);
      kernels::gemm_tn(h, h, batch, cache.reset_h[step].data(), h, da.data() + 2 * h, n,
                       grads.u.data() + 2 * h, n, true);
    } else {
      const Matrix& c_prev = cache.prev_c[step];
      const Matrix& cell_out = cache.cell_out[step];
      Matrix dc_prev(batch, h);
      for (std::size_t r = 0; r < batch; ++r) {
        const double* g = gates.data() + r * n;
        const double* cp = c_prev.data() + r * h;
        const double* m = cell_out.data() + r * h;
        double* a = da.data() + r * n;
        double* dcp = dc_prev.data() + r * h;
        for (std::size_t c = 0; c < h; ++c) {
          const double dh = dh_out(r, c) + dh_next(r, c);
          const double ig = g[c];
          const double fg = g[h + c];
          const double og = g[2 * h + c];
          const double cand = g[3 * h + c];
          const double dc = dc_next(r, c) + dh * og * activation_grad_from_output(act, m[c]);
          a[c] = dc * cand * ig * (1.0 - ig);
          a[h + c] = dc * cp[c] * fg * (1.0 - fg);
          a[2 * h + c] = dh * m[c] * og * (1.0 - og);
          a[3 * h + c] = dc * ig * activation_grad_from_output(act, cand);
          dcp[c] = dc * fg;
        }
      }
      kernels::gemm_nt(batch, h, n, da.data(), n, params.u.data(), n, dh_prev.data(), h, false);
      kernels::gemm_tn(h, n, batch, h_prev.data(), h, da.data(), n, grads.u.data(), n, true);
      dc_next = std::move(dc_prev);
    }

    kernels::gemm_tn(in, n, batch, x.data(), in, da.data(), n, grads.w.data(), n, true);
    kernels::add_column_sums(batch, n, da.data(), n, grads.b.data());
    out.x[step] = Matrix(batch, in);
    kernels::gemm_nt(batch, in, n, da.data(), n, params.w.data(), n, out.x[step].data(), in, false);
    dh_next = std::move(dh_prev);
  }
  out.h0 = std::move(dh_next);
  if (lstm) out.c0 = std::move(dc_next);
  return out;
}

DropoutResult dropout(const Matrix& input, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) {
    return {input, Matrix::ones(input.rows(), input.cols())};
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  DropoutResult out{input, Matrix(input.rows(), input.cols())};
  auto o = out.output.values();
  auto m = out.mask.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    m[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    o[i] *= m[i];
  }
  return out;
}

LayerRecord run_recurrent_layer(const CellParams& cell, std::span<const Matrix> inputs, double rate, Rng& rng,
                      bool training) {
  const Matrix h0(inputs.front().rows(), cell.hidden_dim());
  CellForward fwd = cell_forward(cell, inputs, h0);
  LayerRecord rec;
  rec.cell = std::move(fwd.cache);
  rec.hidden = std::move(fwd.h);
  rec.masks.reserve(rec.hidden.size());
  rec.output.reserve(rec.hidden.size());
  for (const Matrix& h : rec.hidden) {
    DropoutResult d = dropout(h, rate, rng, training);
    rec.output.push_back(std::move(d.output));
    rec.masks.push_back(std::move(d.mask));
  }
  return rec;
}

std::vector<Matrix> backprop_recurrent_layer(const CellParams& cell, const LayerRecord& rec,
                                   std::span<const Matrix> grad_output, CellParams& grads) {
  std::vector<Matrix> grad_hidden;
  grad_hidden.reserve(grad_output.size());
  for (std::size_t t = 0; t < grad_output.size(); ++t)
    grad_hidden.push_back(hadamard(grad_output[t], rec.masks[t]));
  return cell_backward(cell, rec.cell, grad_hidden, grads).x;
}

}  // namespace msrnn
