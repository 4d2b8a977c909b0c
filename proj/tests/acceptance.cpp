// Acceptance checks. `msrnn_acceptance <n>` runs criterion n (or `all`) and
// prints one "criterion <n>: PASS|FAIL (<detail>)" line per criterion. The exit
// status is nonzero when any requested criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "msrnn/cli.hpp"
#include "msrnn/experiment.hpp"
#include "support.hpp"

using namespace msrnn;
namespace mt = msrnn::testing;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradEps = 1e-5;
// Central differences at kGradEps carry roughly 1e-10 absolute rounding noise
// on these losses, so gradients smaller than this are compared against it.
constexpr double kGradFloor = 1e-6;
constexpr double kMetricTolerance = 1e-12;
constexpr double kResidualTolerance = 1e-6;
constexpr double kOverfitThreshold = 1e-2;
constexpr std::size_t kOverfitEpochs = 500;
constexpr std::size_t kInvariantSeeds = 100;
constexpr std::size_t kMetricInstances = 1000;
constexpr std::size_t kNeighbourInstances = 100;
constexpr double kGradBudgetSeconds = 300;
constexpr double kOverfitBudgetSeconds = 600;
constexpr double kDirectionalBudgetSeconds = 3600;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::string> tensor_names(const auto& params) {
  std::vector<std::string> names;
  for (const auto& [n, m] : params.named_tensors()) names.push_back(n);
  return names;
}

// ---------------------------------------------------------------- gradients

mt::GradCheck check_cell(CellType type) {
  Rng rng(1);
  CellParams p = CellParams::random(type, 4, 8, Activation::tanh, rng);
  std::vector<Matrix> xs;
  for (int t = 0; t < 24; ++t) xs.push_back(rng_uniform(rng, -1, 1, 2, 4));
  const Matrix h0 = rng_uniform(rng, -0.5, 0.5, 2, 8), c0 = rng_uniform(rng, -0.5, 0.5, 2, 8);
  std::vector<Matrix> weights;
  for (int t = 0; t < 24; ++t) weights.push_back(rng_uniform(rng, -1, 1, 2, 8));
  auto run = [&] { return type == CellType::gru ? cell_forward(p, xs, h0) : cell_forward(p, xs, h0, c0); };
  const auto fwd = run();
  CellParams grads = CellParams::zeros(type, 4, 8, Activation::tanh);
  cell_backward(p, fwd.cache, weights, grads);
  return mt::finite_difference_check(p.tensors(), std::as_const(grads).tensors(),
                                     [&] { return mt::weighted_sum(run().h, weights); }, kGradEps, {"w", "u", "b"}, kGradFloor);
}

mt::GradCheck check_rnn_baseline() {
  RnnBaselineConfig c;
  c.hidden_dim = 8;
  Rng rng(2);
  RnnBaselineParams p = RnnBaselineParams::random(c, rng);
  const Matrix window = rng_uniform(rng, -1, 1, 168, 4);
  const std::vector<const Matrix*> ptrs{&window};
  const std::vector<Matrix> g{rng_uniform(rng, -1, 1, 24, 4)};
  auto loss = [&] {
    Rng drop(3);
    return mt::weighted_sum(rnn_baseline_forward(c, p, ptrs, drop, true).forecasts, g);
  };
  Rng drop(3);
  const auto fwd = rnn_baseline_forward(c, p, ptrs, drop, true);
  const RnnBaselineParams grads = rnn_baseline_backward(c, p, fwd.cache, g);
  return mt::finite_difference_check(p.tensors(), grads.tensors(), loss, kGradEps, tensor_names(std::as_const(p)), kGradFloor);
}

mt::GradCheck check_msrnn(CellType cell) {
  MsRnnConfig c;
  c.cell_type = cell;
  c.hidden_dim = 8;
  Rng rng(4);
  MsRnnParams p = MsRnnParams::random(c, rng);
  const Matrix window = rng_uniform(rng, -1, 1, 168, 4);
  const std::vector<Matrix> g{rng_uniform(rng, -1, 1, 24, 4)};
  auto loss = [&] {
    Rng drop(5);
    return mt::weighted_sum({forward(c, p, window, drop, true).first}, g);
  };
  Rng drop(5);
  const auto [f, cache] = forward(c, p, window, drop, true);
  const MsRnnParams grads = backward(c, p, cache, g);
  return mt::finite_difference_check(p.tensors(), grads.tensors(), loss, kGradEps, tensor_names(std::as_const(p)), kGradFloor);
}

Outcome criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::pair<std::string, std::function<mt::GradCheck()>> checks[] = {
      {"gru-cell", [] { return check_cell(CellType::gru); }},
      {"lstm-cell", [] { return check_cell(CellType::lstm); }},
      {"rnn-baseline", check_rnn_baseline},
      {"ms-rnn-gru", [] { return check_msrnn(CellType::gru); }},
      {"ms-rnn-lstm", [] { return check_msrnn(CellType::lstm); }},
  };
  bool pass = true;
  std::string detail;
  for (const auto& [name, run] : checks) {
    const auto r = run();
    pass = pass && r.max_rel_error < kGradTolerance;
    detail += name + " max rel " + fmt("%.2e", r.max_rel_error) + " over " + std::to_string(r.checked) + "; ";
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < kGradBudgetSeconds;
  return {pass, detail + fmt("%.1fs", secs)};
}

// ------------------------------------------------------------------- shrink

Outcome criterion_shrink() {
  const auto a = shrink_dims(256, 2, 4, 7);
  const auto b = shrink_dims(1, 2, 4, 2);
  const bool pass = a == std::vector<std::size_t>{256, 128, 64, 32, 16, 8, 4} && b == std::vector<std::size_t>{1, 4};
  auto show = [](const std::vector<std::size_t>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + "]";
  };
  return {pass, show(a) + " " + show(b)};
}

// --------------------------------------------------------------- invariants

Outcome criterion_invariants() {
  std::size_t failures = 0;
  std::string first_failure;
  auto fail = [&](std::uint64_t seed, const std::string& what) {
    if (failures++ == 0) first_failure = "seed " + std::to_string(seed) + ": " + what;
  };
  for (std::uint64_t seed = 0; seed < kInvariantSeeds; ++seed) {
    Rng rng(seed);
    MsRnnConfig c;
    c.cell_type = seed % 2 ? CellType::lstm : CellType::gru;
    c.hidden_dim = 1 + seed % 6;
    c.daily_layers = seed % 3 == 0 ? 2 : 1;
    if (seed % 5 == 0) c.shrink = ShrinkConfig{2, 1, 2};
    const MsRnnParams p = MsRnnParams::random(c, rng);
    const Matrix window = rng_uniform(rng, -2, 2, 168, 4);
    const auto [forecast, cache] = forward(c, p, window, rng, false);

    if (forecast.rows() != 24 || forecast.cols() != 4 || !forecast.all_finite()) fail(seed, "output shape");
    if (forward(c, MsRnnParams::zeros(c), window, rng, false).first != Matrix(24, 4)) fail(seed, "zero params");

    // Perturbing one stream's parameters moves that stream only.
    const std::size_t stream = seed % 7;
    MsRnnParams moved = p;
    for (double& v : moved.daily[stream][0].w.values()) v += 0.25;
    const auto moved_cache = forward(c, moved, window, rng, false).second;
    for (std::size_t s = 0; s < 7; ++s) {
      const bool same = moved_cache.daily[s].back().hidden == cache.daily[s].back().hidden;
      if (same != (s != stream)) fail(seed, "stream isolation at stream " + std::to_string(s));
    }

    // Relabelling days together with their streams leaves the forecast unchanged.
    std::vector<std::size_t> order(7);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    const auto days = split_week(window);
    std::vector<Matrix> permuted_days;
    MsRnnParams permuted = p;
    for (std::size_t s = 0; s < 7; ++s) {
      permuted_days.push_back(days[order[s]]);
      permuted.daily[s] = p.daily[order[s]];
    }
    const Matrix relabelled = forward(c, permuted, vconcat(permuted_days), rng, false).first;
    if (mt::max_abs_diff(relabelled, forecast) > 1e-12) fail(seed, "merge permutation");

    std::vector<Matrix> hs;
    for (int s = 0; s < 7; ++s) hs.push_back(rng_uniform(rng, -1, 1, 2, c.hidden_dim));
    std::vector<Matrix> hs_perm;
    for (auto i : order) hs_perm.push_back(hs[i]);
    if (mt::max_abs_diff(merge(hs_perm), merge(hs)) > 1e-12) fail(seed, "merge sum");
  }
  return {failures == 0, std::to_string(kInvariantSeeds) + " seeds, " + std::to_string(failures) + " violations" +
                             (failures ? "; first " + first_failure : "")};
}

// ------------------------------------------------------------------ metrics

double loop_rmse(const std::vector<Matrix>& p, const std::vector<Matrix>& t) {
  double s = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t r = 0; r < p[i].rows(); ++r)
      for (std::size_t c = 0; c < p[i].cols(); ++c) {
        const double d = p[i](r, c) - t[i](r, c);
        s += d * d;
        ++n;
      }
  return std::sqrt(s / static_cast<double>(n));
}

Matrix loop_znorm(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double mean = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, c);
    mean /= static_cast<double>(m.rows());
    double var = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) var += (m(r, c) - mean) * (m(r, c) - mean);
    double sd = std::sqrt(var / static_cast<double>(m.rows()));
    if (sd <= 1e-12) sd = 1.0;
    for (std::size_t r = 0; r < m.rows(); ++r) out(r, c) = (m(r, c) - mean) / sd;
  }
  return out;
}

Outcome criterion_metrics() {
  Rng rng(44);
  double worst_rmse = 0, worst_nrmse = 0, worst_affine = 0;
  for (std::size_t trial = 0; trial < kMetricInstances; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    std::vector<Matrix> p, t, zp, zt, affine;
    for (std::size_t i = 0; i < n; ++i) {
      p.push_back(rng_uniform(rng, -5, 5, 24, 4));
      t.push_back(rng_uniform(rng, 0, 10, 24, 4));
      zp.push_back(loop_znorm(p.back()));
      zt.push_back(loop_znorm(t.back()));
      Matrix a = t.back();
      for (double& v : a.values()) v = 2.0 * v + 5.0;
      affine.push_back(std::move(a));
    }
    worst_rmse = std::max(worst_rmse, std::abs(rmse(p, t) - loop_rmse(p, t)));
    worst_nrmse = std::max(worst_nrmse, std::abs(normalized_rmse(p, t) - loop_rmse(zp, zt)));
    worst_affine = std::max(worst_affine, std::abs(normalized_rmse(affine, t)));
  }
  const bool pass = worst_rmse <= kMetricTolerance && worst_nrmse <= kMetricTolerance && worst_affine <= kMetricTolerance;
  return {pass, std::to_string(kMetricInstances) + " instances; max |rmse - oracle| " + fmt("%.1e", worst_rmse) +
                    ", max |nrmse - oracle| " + fmt("%.1e", worst_nrmse) + ", max nrmse(2t+5, t) " +
                    fmt("%.1e", worst_affine)};
}

// ------------------------------------------------------------- optimization

Outcome criterion_overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticOptions o;
  o.n_merchants = 1;
  o.n_weeks = 3;
  o.noise = 0.0;
  auto pairs = windowize(generate_synthetic(o), 24);
  pairs.resize(10);  // the 8 earliest windows train, the latest 2 validate
  const Scaler sc = fit_scaler(pairs, ScalerMode::zscore);
  for (auto& p : pairs) p = scale_pair(p, sc);

  MsRnnConfig c;
  c.cell_type = CellType::gru;
  c.hidden_dim = 32;
  c.dropout_rate = 0.0;
  TrainConfig cfg;
  cfg.max_epochs = kOverfitEpochs;
  cfg.early_stopping = false;
  cfg.batch_size = 2;
  cfg.learning_rate = 0.01;
  const auto split = split_validation(pairs, cfg.validation_fraction);
  const auto r = train(MsRnnNetwork{c}, pairs, cfg);
  double best = 1e300;
  std::size_t best_epoch = 0;
  for (const auto& e : r.history.epochs)
    if (e.train_loss < best) {
      best = e.train_loss;
      best_epoch = e.epoch;
    }
  const double secs = seconds_since(t0);
  const bool pass = split.train.size() == 8 && best < kOverfitThreshold && secs < kOverfitBudgetSeconds;
  return {pass, std::to_string(split.train.size()) + " training windows, lowest training loss " + fmt("%.4g", best) +
                    " (per output " + fmt("%.3g", best / 96.0) + ") at epoch " + std::to_string(best_epoch) + " of " +
                    std::to_string(r.history.epochs.size()) + ", threshold " + fmt("%g", kOverfitThreshold) + ", " +
                    fmt("%.1fs", secs)};
}

// ----------------------------------------------------------- early stopping

Outcome criterion_early_stopping() {
  SyntheticOptions o;
  o.n_merchants = 2;
  o.n_weeks = 3;
  auto pairs = windowize(generate_synthetic(o), 24);
  const Scaler sc = fit_scaler(pairs, ScalerMode::zscore);
  for (auto& p : pairs) p = scale_pair(p, sc);
  MsRnnConfig c;
  c.hidden_dim = 3;
  TrainConfig cfg;
  cfg.max_epochs = 30;
  cfg.patience = 5;
  cfg.batch_size = 8;
  const std::vector<double> script = {5.0, 4.0, 3.0, 3.1, 3.2, 3.3, 3.4, 3.5, 0.1, 0.1};
  std::vector<MsRnnParams> snapshots;
  TrainHooks<MsRnnParams> hooks;
  hooks.validation_override = [&](std::size_t epoch, double) { return script.at(epoch - 1); };
  hooks.on_epoch_end = [&](std::size_t, const MsRnnParams& p) { snapshots.push_back(p); };
  const auto r = train(MsRnnNetwork{c}, pairs, cfg, hooks);

  bool params_match = snapshots.size() >= 3;
  if (params_match) {
    const auto got = std::as_const(r.params).tensors(), want = std::as_const(snapshots[2]).tensors();
    for (std::size_t i = 0; i < got.size(); ++i) params_match = params_match && *got[i] == *want[i];
  }
  const bool pass = r.history.stopped_epoch == 8 && r.history.best_epoch == 3 && r.history.epochs.size() == 8 &&
                    params_match;
  return {pass, "stopped at epoch " + std::to_string(r.history.stopped_epoch) + " (expected 8), best epoch " +
                    std::to_string(r.history.best_epoch) + " (expected 3), returned parameters " +
                    (params_match ? "equal" : "differ from") + " the epoch-3 snapshot"};
}

// -------------------------------------------------------------- directional

Outcome criterion_directional() {
  const auto t0 = std::chrono::steady_clock::now();
  constexpr std::uint64_t kSeeds = 3;
  double ms_sum = 0, rnn_sum = 0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    SyntheticOptions o;
    o.n_merchants = 200;
    o.n_weeks = 5;
    o.seed = 7 + seed;
    const auto data = generate_synthetic(o);
    ExperimentConfig cfg;
    cfg.msrnn.cell_type = CellType::gru;
    cfg.msrnn.hidden_dim = 64;
    cfg.msrnn.daily_layers = 1;
    cfg.rnn.cell_type = CellType::gru;
    cfg.rnn.hidden_dim = 64;
    cfg.rnn.layers = 1;
    cfg.train.seed = seed;
    std::vector<ForecastRecord> records;
    for (Method m : {Method::ms_rnn, Method::rnn}) {
      const auto part = predict_test(fit_method(m, data, cfg), data);
      records.insert(records.end(), part.begin(), part.end());
    }
    const EvalReport report = build_report(records);
    const double ms = report.find("AVERAGE", "ms-rnn")->all().nrmse;
    const double rnn = report.find("AVERAGE", "rnn")->all().nrmse;
    ms_sum += ms;
    rnn_sum += rnn;
    per_seed += "seed " + std::to_string(seed) + " " + fmt("%.4f", ms) + " vs " + fmt("%.4f", rnn) + "; ";
    std::cerr << "directional seed " << seed << ": ms-rnn " << ms << ", rnn " << rnn << " after "
              << seconds_since(t0) << "s\n";
  }
  const double ms_mean = ms_sum / kSeeds, rnn_mean = rnn_sum / kSeeds;
  const double secs = seconds_since(t0);
  const bool pass = ms_mean <= rnn_mean && secs < kDirectionalBudgetSeconds;
  return {pass, "mean nRMSE ms-rnn " + fmt("%.4f", ms_mean) + " vs rnn " + fmt("%.4f", rnn_mean) + "; " + per_seed +
                    fmt("%.0fs", secs)};
}

// ---------------------------------------------------------------- baselines

double ridge_residual(const Matrix& x, const Matrix& y, const RidgeSolution& s, double lambda) {
  const std::size_t n = x.rows(), p = x.cols(), q = y.cols();
  Matrix xc = x, yc = y;
  for (std::size_t j = 0; j < p; ++j) {
    double m = 0;
    for (std::size_t i = 0; i < n; ++i) m += x(i, j);
    for (std::size_t i = 0; i < n; ++i) xc(i, j) -= m / n;
  }
  for (std::size_t j = 0; j < q; ++j) {
    double m = 0;
    for (std::size_t i = 0; i < n; ++i) m += y(i, j);
    for (std::size_t i = 0; i < n; ++i) yc(i, j) -= m / n;
  }
  const Matrix xt = transpose(xc);
  Matrix lhs = matmul(matmul(xt, xc), s.weights);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < q; ++k) lhs(j, k) += lambda * s.weights(j, k);
  const Matrix rhs = matmul(xt, yc);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    const double d = lhs.values()[i] - rhs.values()[i];
    num += d * d;
    den += rhs.values()[i] * rhs.values()[i];
  }
  return std::sqrt(num / den);
}

Outcome criterion_baselines() {
  Rng rng(88);
  double worst = 0;
  std::size_t systems = 0;
  for (double lambda : kDefaultLambdas) {
    for (int trial = 0; trial < 4; ++trial) {
      const std::size_t n = 30 + rng.below(40), p = 2 + rng.below(20);
      const Matrix x = rng_uniform(rng, -1, 1, n, p), y = rng_uniform(rng, -3, 3, n, 3);
      worst = std::max(worst, ridge_residual(x, y, solve_ridge(x, y, lambda), lambda));
      ++systems;
    }
  }
  // One full-size fit on flattened windows.
  SyntheticOptions o;
  o.n_merchants = 8;
  o.n_weeks = 6;
  auto pairs = windowize(generate_synthetic(o), 24);
  const Scaler sc = fit_scaler(pairs, ScalerMode::zscore);
  for (auto& pr : pairs) pr = scale_pair(pr, sc);
  const Matrix fx = flatten_inputs(pairs), fy = flatten_targets(pairs);
  const LinearBaseline lb = fit_linear(pairs, 1.0);
  worst = std::max(worst, ridge_residual(fx, fy, RidgeSolution{lb.weights, lb.intercepts}, 1.0));
  ++systems;

  std::size_t nn_mismatch = 0;
  for (std::size_t trial = 0; trial < kNeighbourInstances; ++trial) {
    const std::size_t hours = 192 + rng.below(60);
    const Matrix history = rng_uniform(rng, 0, 1, hours, 4);
    const Matrix query = rng_uniform(rng, 0, 1, 168, 4);
    double best = 1e300;
    std::size_t best_offset = 0;
    for (std::size_t off = 0; off + 192 <= hours; ++off) {
      double d = 0;
      for (std::size_t r = 0; r < 168; ++r)
        for (std::size_t c = 0; c < 4; ++c) d += (history(off + r, c) - query(r, c)) * (history(off + r, c) - query(r, c));
      if (d < best) {
        best = d;
        best_offset = off;
      }
    }
    if (nn_predict(history, query) != slice_rows(history, best_offset + 168, 24)) ++nn_mismatch;
  }
  const bool pass = worst <= kResidualTolerance && nn_mismatch == 0;
  return {pass, "max normal-equation residual " + fmt("%.2e", worst) + " over " + std::to_string(systems) +
                    " systems; nearest neighbour mismatches " + std::to_string(nn_mismatch) + "/" +
                    std::to_string(kNeighbourInstances)};
}

// ---------------------------------------------------------- reproducibility

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion_repro() {
  const fs::path root = fs::temp_directory_path() / "msrnn_acceptance_repro";
  fs::remove_all(root);
  for (const char* run : {"a", "b"}) {
    std::ostringstream out, err;
    const std::vector<std::string> args{"repro", "--out-dir", (root / run).string()};
    if (const int code = run_cli(args, out, err); code != kExitOk) {
      return {false, std::string("repro run ") + run + " exited " + std::to_string(code) + ": " + err.str()};
    }
  }
  std::size_t compared = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    const bool relevant = name.rfind("predictions_", 0) == 0 || name.find("report") != std::string::npos ||
                          name == "summary.csv" || name == "horizon.csv";
    if (!relevant) continue;
    const fs::path rel = fs::relative(entry.path(), root / "a");
    ++compared;
    if (slurp(entry.path()) != slurp(root / "b" / rel)) differing.push_back(rel.string());
  }
  fs::remove_all(root);
  const bool pass = compared >= 6 && differing.empty();
  std::string detail = std::to_string(compared) + " prediction/report files compared byte for byte";
  if (!differing.empty()) detail += "; differing: " + differing.front();
  return {pass, detail};
}

// ----------------------------------------------------------- data integrity

Outcome criterion_data() {
  SyntheticOptions o;
  o.n_merchants = 12;
  o.n_weeks = 3;
  const auto data = generate_synthetic(o);
  const fs::path file = fs::temp_directory_path() / "msrnn_acceptance_roundtrip.csv";
  save_csv(data, file);
  const auto back = load_csv(file);
  fs::remove(file);
  bool identical = back.size() == data.size();
  for (std::size_t i = 0; identical && i < data.size(); ++i) {
    identical = back[i].merchant_id == data[i].merchant_id && back[i].category == data[i].category &&
                back[i].start_hour == data[i].start_hour && back[i].values == data[i].values;
  }
  std::vector<std::size_t> counts;
  for (std::size_t hours : {191u, 192u, 216u}) {
    const std::vector<MerchantSeries> one{{"m", "sports", 0, Matrix(hours, 4)}};
    counts.push_back(windowize(one, 24).size());
  }
  const bool pass = identical && counts == std::vector<std::size_t>{0, 1, 2};
  return {pass, std::string("round trip ") + (identical ? "value-identical" : "differs") + "; 191/192/216 hours -> " +
                    std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + "/" + std::to_string(counts[2]) +
                    " pairs"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {
      criterion_gradients, criterion_shrink,      criterion_invariants, criterion_metrics, criterion_overfit,
      criterion_early_stopping, criterion_directional, criterion_baselines, criterion_repro, criterion_data,
  };
  std::vector<std::size_t> selected;
  const std::string arg = argc > 1 ? argv[1] : "all";
  if (arg == "all") {
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(i);
  } else {
    const std::size_t n = std::strtoul(arg.c_str(), nullptr, 10);
    if (n < 1 || n > criteria.size()) {
      std::cerr << "usage: msrnn_acceptance <1-" << criteria.size() << "|all>\n";
      return 2;
    }
    selected.push_back(n);
  }
  bool all_pass = true;
  for (std::size_t n : selected) {
    Outcome o;
    try {
      o = criteria[n - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all_pass = all_pass && o.pass;
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << ")" << std::endl;
  }
  return all_pass ? 0 : 1;
}
