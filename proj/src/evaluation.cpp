#include "msrnn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace msrnn {

namespace {

void check_pairs(std::span<const Matrix> preds, std::span<const Matrix> truths, std::string_view op) {
  if (preds.empty()) throw std::invalid_argument(std::string(op) + ": no samples");
  if (preds.size() != truths.size()) {
    throw ShapeError(std::string(op) + ": " + std::to_string(preds.size()) + " predictions vs " +
                     std::to_string(truths.size()) + " truths");
  }
  for (std::size_t i = 0; i < preds.size(); ++i) require_same_shape(preds[i], truths[i], op);
}

double sum_squared(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    s += d * d;
  }
  return s;
}

}  // namespace

double rmse(std::span<const Matrix> preds, std::span<const Matrix> truths) {
  check_pairs(preds, truths, "rmse");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    total += sum_squared(preds[i], truths[i]);
    count += preds[i].size();
  }
  return std::sqrt(total / static_cast<double>(count));
}

ZNormalized z_normalize(const Matrix& series) {
  if (series.rows() < 2) throw std::invalid_argument("z_normalize: need at least 2 points per series");
  ZNormalized out{series, false};
  const double n = static_cast<double>(series.rows());
  for (std::size_t c = 0; c < series.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < series.rows(); ++r) mean += series(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < series.rows(); ++r) {
      const double d = series(r, c) - mean;
      var += d * d;
    }
    double sd = std::sqrt(var / n);
    if (!(sd > 1e-12)) {
      sd = 1.0;
      out.flagged = true;
    }
    for (std::size_t r = 0; r < series.rows(); ++r) out.values(r, c) = (series(r, c) - mean) / sd;
  }
  return out;
}

NrmseResult normalized_rmse_detail(std::span<const Matrix> preds, std::span<const Matrix> truths) {
  check_pairs(preds, truths, "normalized_rmse");
  NrmseResult out;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const ZNormalized p = z_normalize(preds[i]);
    const ZNormalized t = z_normalize(truths[i]);
    if (p.flagged || t.flagged) ++out.flagged_samples;
    total += sum_squared(p.values, t.values);
    count += preds[i].size();
  }
  out.value = std::sqrt(total / static_cast<double>(count));
  return out;
}

double normalized_rmse(std::span<const Matrix> preds, std::span<const Matrix> truths) {
  return normalized_rmse_detail(preds, truths).value;
}

namespace {

Matrix column(const Matrix& m, std::size_t c) {
  Matrix out(m.rows(), 1);
  for (std::size_t r = 0; r < m.rows(); ++r) out(r, 0) = m(r, c);
  return out;
}

ReportEntry score_group(const std::string& profile, const std::string& method,
                        const std::vector<const ForecastRecord*>& group) {
  std::vector<Matrix> pred, truth, pred_orig, truth_orig, pred_z, truth_z;
  std::size_t flagged = 0;
  for (const ForecastRecord* r : group) {
    pred.push_back(r->predicted);
    truth.push_back(r->actual);
    pred_orig.push_back(r->predicted_original);
    truth_orig.push_back(r->actual_original);
    ZNormalized pz = z_normalize(r->predicted);
    ZNormalized tz = z_normalize(r->actual);
    if (pz.flagged || tz.flagged) ++flagged;
    pred_z.push_back(std::move(pz.values));
    truth_z.push_back(std::move(tz.values));
  }
  ReportEntry e;
  e.profile = profile;
  e.method = method;
  e.samples = group.size();
  e.flagged_samples = flagged;
  const std::size_t features = pred.front().cols();
  const std::size_t hours = pred.front().rows();
  for (std::size_t k = 0; k < features; ++k) {
    std::vector<Matrix> p, t, po, to, pz, tz;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      p.push_back(column(pred[i], k));
      t.push_back(column(truth[i], k));
      po.push_back(column(pred_orig[i], k));
      to.push_back(column(truth_orig[i], k));
      pz.push_back(column(pred_z[i], k));
      tz.push_back(column(truth_z[i], k));
    }
    const std::string name = k < kFeatureNames.size() ? std::string(kFeatureNames[k]) : "f" + std::to_string(k);
    e.features.push_back({name, rmse(p, t), rmse(pz, tz), rmse(po, to)});
  }
  e.features.push_back({"ALL", rmse(pred, truth), rmse(pred_z, truth_z), rmse(pred_orig, truth_orig)});
  for (std::size_t h = 0; h < hours; ++h) {
    std::vector<Matrix> p, t, pz, tz;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      p.push_back(slice_rows(pred[i], h, 1));
      t.push_back(slice_rows(truth[i], h, 1));
      pz.push_back(slice_rows(pred_z[i], h, 1));
      tz.push_back(slice_rows(truth_z[i], h, 1));
    }
    e.horizon_rmse.push_back(rmse(p, t));
    e.horizon_nrmse.push_back(rmse(pz, tz));
  }
  return e;
}

std::size_t profile_rank(const std::string& p) {
  const auto known = concrete_profiles();
  for (std::size_t i = 0; i < known.size(); ++i)
    if (to_string(known[i]) == p) return i;
  return known.size();
}

}  // namespace

EvalReport build_report(std::span<const ForecastRecord> records) {
  if (records.empty()) throw std::invalid_argument("build_report: no forecast records");
  std::vector<std::string> methods;
  std::vector<std::string> profiles;
  std::map<std::pair<std::string, std::string>, std::vector<const ForecastRecord*>> groups;
  for (const auto& r : records) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    if (std::find(profiles.begin(), profiles.end(), r.category) == profiles.end()) profiles.push_back(r.category);
    groups[{r.category, r.method}].push_back(&r);
  }
  std::stable_sort(profiles.begin(), profiles.end(), [](const std::string& a, const std::string& b) {
    const auto ra = profile_rank(a), rb = profile_rank(b);
    return ra != rb ? ra < rb : a < b;
  });

  EvalReport report;
  for (const auto& profile : profiles)
    for (const auto& method : methods) {
      auto it = groups.find({profile, method});
      if (it != groups.end()) report.entries.push_back(score_group(profile, method, it->second));
    }

  for (const auto& method : methods) {
    std::vector<const ReportEntry*> rows;
    for (const auto& e : report.entries)
      if (e.method == method) rows.push_back(&e);
    ReportEntry avg = *rows.front();
    avg.profile = "AVERAGE";
    const double n = static_cast<double>(rows.size());
    for (std::size_t k = 0; k < avg.features.size(); ++k) {
      double r = 0.0, z = 0.0, o = 0.0;
      for (const ReportEntry* e : rows) {
        r += e->features[k].rmse;
        z += e->features[k].nrmse;
        o += e->features[k].rmse_original;
      }
      avg.features[k].rmse = r / n;
      avg.features[k].nrmse = z / n;
      avg.features[k].rmse_original = o / n;
    }
    for (std::size_t h = 0; h < avg.horizon_rmse.size(); ++h) {
      double r = 0.0, z = 0.0;
      for (const ReportEntry* e : rows) {
        r += e->horizon_rmse[h];
        z += e->horizon_nrmse[h];
      }
      avg.horizon_rmse[h] = r / n;
      avg.horizon_nrmse[h] = z / n;
    }
    avg.samples = 0;
    avg.flagged_samples = 0;
    for (const ReportEntry* e : rows) {
      avg.samples += e->samples;
      avg.flagged_samples += e->flagged_samples;
    }
    report.entries.push_back(std::move(avg));
  }
  return report;
}

const ReportEntry* EvalReport::find(std::string_view profile, std::string_view method) const {
  for (const auto& e : entries)
    if (e.profile == profile && e.method == method) return &e;
  return nullptr;
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "profile,method,feature,rmse,nrmse,rmse_original\n";
  char buf[128];
  for (const auto& e : entries)
    for (const auto& f : e.features) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", f.rmse, f.nrmse, f.rmse_original);
      out << e.profile << ',' << e.method << ',' << f.feature << buf;
    }
}

void EvalReport::write_horizon_csv(std::ostream& out) const {
  out << "profile,method,horizon,rmse,nrmse\n";
  char buf[96];
  for (const auto& e : entries)
    for (std::size_t h = 0; h < e.horizon_rmse.size(); ++h) {
      std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g\n", h, e.horizon_rmse[h], e.horizon_nrmse[h]);
      out << e.profile << ',' << e.method << buf;
    }
}

std::vector<TraceRow> horizon_trace(std::span<const ForecastRecord> records,
                                    std::span<const std::size_t> hours, const Scaler& minmax) {
  if (hours.empty()) throw std::invalid_argument("horizon_trace: no hours requested");
  for (std::size_t h : hours)
    if (h >= kOutputHours) throw std::invalid_argument("horizon_trace: hour " + std::to_string(h) + " outside [0, 23]");
  if (minmax.mode != ScalerMode::minmax01) throw std::invalid_argument("horizon_trace: scaler must be minmax01");
  std::vector<TraceRow> rows;
  for (const auto& r : records) {
    const Matrix truth = minmax.apply(r.actual_original);
    const Matrix pred = minmax.apply(r.predicted_original);
    for (std::size_t k = 0; k < truth.cols(); ++k)
      for (std::size_t h : hours) {
        rows.push_back({r.merchant_id, r.origin_hour, std::string(kFeatureNames.at(k)), h, r.method,
                        truth(h, k), pred(h, k)});
      }
  }
  return rows;
}

void write_trace_csv(std::span<const TraceRow> rows, std::ostream& out) {
  out << "merchant_id,origin_hour,feature,hour,method,truth,predicted\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", r.truth, r.predicted);
    out << r.merchant_id << ',' << r.origin_hour << ',' << r.feature << ',' << r.hour << ',' << r.method << buf;
  }
}

std::size_t DensityGrid::truth_total() const noexcept {
  std::size_t s = 0;
  for (auto c : truth) s += c;
  return s;
}

std::size_t DensityGrid::predicted_total() const noexcept {
  std::size_t s = 0;
  for (auto c : predicted) s += c;
  return s;
}

void DensityGrid::write_csv(std::ostream& out) const {
  out << "surface,row,col,count\n";
  for (const auto* surface : {&truth, &predicted}) {
    const char* name = surface == &truth ? "truth" : "predicted";
    for (std::size_t r = 0; r < bins; ++r)
      for (std::size_t c = 0; c < bins; ++c)
        out << name << ',' << r << ',' << c << ',' << (*surface)[r * bins + c] << '\n';
  }
}

DensityGrid density_grid(std::span<const Matrix> preds, std::span<const Matrix> truths,
                         std::size_t bins, std::size_t hour, std::size_t x_feature,
                         std::size_t y_feature) {
  if (bins < 2) throw std::invalid_argument("density_grid: need at least 2 bins");
  check_pairs(preds, truths, "density_grid");
  const Matrix& first = preds.front();
  if (hour >= first.rows() || x_feature >= first.cols() || y_feature >= first.cols()) {
    throw std::invalid_argument("density_grid: hour or feature index out of range for " + first.shape_string());
  }
  DensityGrid g;
  g.bins = bins;
  g.truth.assign(bins * bins, 0);
  g.predicted.assign(bins * bins, 0);
  auto cell = [&](double v) {
    if (!(v >= 0.0 && v <= 1.0)) {
      ++g.clamped;
      v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
    }
    return std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)));
  };
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Matrix& p = preds[i];
    const Matrix& t = truths[i];
    ++g.truth[cell(t(hour, y_feature)) * bins + cell(t(hour, x_feature))];
    ++g.predicted[cell(p(hour, y_feature)) * bins + cell(p(hour, x_feature))];
    ++g.points;
  }
  return g;
}

}  // namespace msrnn
