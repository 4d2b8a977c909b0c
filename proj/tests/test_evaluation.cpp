#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "msrnn/evaluation.hpp"
#include "support.hpp"

using namespace msrnn;

namespace {

double oracle_rmse(const std::vector<Matrix>& p, const std::vector<Matrix>& t) {
  double s = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p[i].size(); ++j) {
      const double d = p[i].values()[j] - t[i].values()[j];
      s += d * d;
      ++n;
    }
  return std::sqrt(s / static_cast<double>(n));
}

std::vector<double> znorm_column(const Matrix& m, std::size_t c) {
  double mean = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, c);
  mean /= static_cast<double>(m.rows());
  double var = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) var += (m(r, c) - mean) * (m(r, c) - mean);
  double sd = std::sqrt(var / static_cast<double>(m.rows()));
  if (sd <= 1e-12) sd = 1.0;
  std::vector<double> out;
  for (std::size_t r = 0; r < m.rows(); ++r) out.push_back((m(r, c) - mean) / sd);
  return out;
}

double oracle_nrmse(const std::vector<Matrix>& p, const std::vector<Matrix>& t) {
  double s = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t c = 0; c < p[i].cols(); ++c) {
      const auto a = znorm_column(p[i], c), b = znorm_column(t[i], c);
      for (std::size_t r = 0; r < a.size(); ++r) {
        s += (a[r] - b[r]) * (a[r] - b[r]);
        ++n;
      }
    }
  return std::sqrt(s / static_cast<double>(n));
}

ForecastRecord record(std::string method, std::string category, const Matrix& pred, const Matrix& truth) {
  return {std::move(method), "m", std::move(category), 0, pred, truth, pred, truth};
}

}  // namespace

TEST(Rmse, Examples) {
  const std::vector<Matrix> p{Matrix{{1, 2}, {3, 4}}}, t{Matrix{{1, 2}, {3, 6}}};
  EXPECT_DOUBLE_EQ(rmse(p, t), 1.0);
  EXPECT_EQ(rmse(t, t), 0.0);
  EXPECT_THROW(rmse(std::vector<Matrix>{}, std::vector<Matrix>{}), std::invalid_argument);
  EXPECT_THROW(rmse(p, std::vector<Matrix>{Matrix(2, 3)}), ShapeError);
}

TEST(Rmse, MatchesOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Matrix> p, t;
    const std::size_t n = 1 + rng.below(5);
    for (std::size_t i = 0; i < n; ++i) {
      p.push_back(rng_uniform(rng, -3, 3, 24, 4));
      t.push_back(rng_uniform(rng, -3, 3, 24, 4));
    }
    EXPECT_NEAR(rmse(p, t), oracle_rmse(p, t), 1e-12);
  }
}

TEST(Nrmse, MatchesOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Matrix> p, t;
    for (int i = 0; i < 3; ++i) {
      p.push_back(rng_uniform(rng, -3, 3, 24, 4));
      t.push_back(rng_uniform(rng, 0, 10, 24, 4));
    }
    EXPECT_NEAR(normalized_rmse(p, t), oracle_nrmse(p, t), 1e-12);
  }
}

TEST(Nrmse, AffineTransformScoresZero) {
  Rng rng(3);
  const Matrix truth = rng_uniform(rng, 0, 1, 24, 4);
  Matrix pred = truth;
  for (double& v : pred.values()) v = 2.0 * v + 5.0;
  EXPECT_NEAR(normalized_rmse(std::vector<Matrix>{pred}, std::vector<Matrix>{truth}), 0.0, 1e-12);
  // Negated shape is maximally wrong: every z-score flips sign, giving 2.
  Matrix flipped = truth;
  for (double& v : flipped.values()) v = -v;
  EXPECT_NEAR(normalized_rmse(std::vector<Matrix>{flipped}, std::vector<Matrix>{truth}), 2.0, 1e-12);
}

TEST(Nrmse, FlatSeriesFlaggedAndFinite) {
  Matrix truth(24, 4, 3.0);
  Rng rng(4);
  const Matrix pred = rng_uniform(rng, 0, 1, 24, 4);
  const auto d = normalized_rmse_detail(std::vector<Matrix>{pred}, std::vector<Matrix>{truth});
  EXPECT_EQ(d.flagged_samples, 1u);
  EXPECT_TRUE(std::isfinite(d.value));
  EXPECT_NEAR(d.value, 1.0, 1e-12);  // z-scores of pred have unit RMS, truth maps to 0
  const ZNormalized z = z_normalize(truth);
  EXPECT_TRUE(z.flagged);
  EXPECT_EQ(z.values, Matrix(24, 4));
  EXPECT_THROW(z_normalize(Matrix(1, 4)), std::invalid_argument);
}

TEST(Report, AverageIsMeanOverProfiles) {
  Rng rng(5);
  std::vector<ForecastRecord> recs;
  for (const char* cat : {"restaurant", "sports", "medical"})
    for (int i = 0; i < 2; ++i)
      recs.push_back(record("a", cat, rng_uniform(rng, 0, 1, 24, 4), rng_uniform(rng, 0, 1, 24, 4)));
  const EvalReport r = build_report(recs);
  const ReportEntry* avg = r.find("AVERAGE", "a");
  ASSERT_NE(avg, nullptr);
  double mean = 0, mean_n = 0;
  for (const char* cat : {"restaurant", "sports", "medical"}) {
    const ReportEntry* e = r.find(cat, "a");
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(e->samples, 2u);
    EXPECT_EQ(e->features.size(), 5u);
    EXPECT_EQ(e->horizon_rmse.size(), 24u);
    mean += e->all().rmse / 3;
    mean_n += e->all().nrmse / 3;
  }
  EXPECT_NEAR(avg->all().rmse, mean, 1e-12);
  EXPECT_NEAR(avg->all().nrmse, mean_n, 1e-12);
  EXPECT_EQ(r.entries.front().profile, "restaurant");
  EXPECT_EQ(r.find("department_store", "a"), nullptr);

  std::ostringstream csv;
  r.write_csv(csv);
  EXPECT_EQ(csv.str().rfind("profile,method,feature,rmse,nrmse,rmse_original\n", 0), 0u);
}

TEST(Report, PerfectPredictorScoresZero) {
  Rng rng(6);
  std::vector<ForecastRecord> recs;
  for (int i = 0; i < 4; ++i) {
    const Matrix t = rng_uniform(rng, 0, 1, 24, 4);
    recs.push_back(record("perfect", "sports", t, t));
  }
  const EvalReport r = build_report(recs);
  for (const auto& f : r.find("AVERAGE", "perfect")->features) {
    EXPECT_EQ(f.rmse, 0.0);
    EXPECT_EQ(f.nrmse, 0.0);
  }
}

TEST(Trace, RowsPerDayFeatureMethod) {
  Rng rng(7);
  std::vector<ForecastRecord> recs;
  for (const char* m : {"a", "b"})
    for (int d = 0; d < 7; ++d) {
      const Matrix t = rng_uniform(rng, 0, 10, 24, 4);
      recs.push_back(record(m, "sports", t, t));
    }
  std::vector<MerchantSeries> hist{{"m", "sports", 0, rng_uniform(rng, 0, 10, 200, 4)}};
  const Scaler mm = fit_scaler(hist, ScalerMode::minmax01);
  const std::size_t hours[] = {0, 12, 23};
  const auto rows = horizon_trace(recs, hours, mm);
  EXPECT_EQ(rows.size(), 2u * 7u * 4u * 3u);
  for (const auto& row : rows) EXPECT_EQ(row.truth, row.predicted);
  EXPECT_THROW(horizon_trace(recs, std::span<const std::size_t>{}, mm), std::invalid_argument);
  const std::size_t bad[] = {24};
  EXPECT_THROW(horizon_trace(recs, bad, mm), std::invalid_argument);
  EXPECT_THROW(horizon_trace(recs, hours, fit_scaler(hist, ScalerMode::zscore)), std::invalid_argument);
}

TEST(Density, CountsAreConserved) {
  Rng rng(8);
  std::vector<Matrix> p, t;
  for (int i = 0; i < 37; ++i) {
    p.push_back(rng_uniform(rng, 0, 1, 24, 4));
    t.push_back(rng_uniform(rng, 0, 1, 24, 4));
  }
  const DensityGrid g = density_grid(p, t, 10);
  EXPECT_EQ(g.points, 37u);
  EXPECT_EQ(g.truth_total(), 37u);
  EXPECT_EQ(g.predicted_total(), 37u);
  EXPECT_FALSE(g.flagged());
  EXPECT_THROW(density_grid(p, t, 1), std::invalid_argument);
}

TEST(Density, SinglePointLandsInOneCell) {
  Matrix m(24, 4);
  m(23, 0) = 0.55;  // x bin 5
  m(23, 1) = 1.0;   // y bin 9, top edge folded into the last cell
  const DensityGrid g = density_grid(std::vector<Matrix>{m}, std::vector<Matrix>{m}, 10);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(g.truth[i], i == 9 * 10 + 5 ? 1u : 0u) << i;
  EXPECT_EQ(g.truth, g.predicted);
}

TEST(Density, OutOfRangeIsClampedAndFlagged) {
  Matrix m(24, 4);
  m(23, 0) = -0.5;
  m(23, 1) = 1.7;
  const DensityGrid g = density_grid(std::vector<Matrix>{m}, std::vector<Matrix>{Matrix(24, 4)}, 4);
  EXPECT_TRUE(g.flagged());
  EXPECT_EQ(g.clamped, 2u);
  EXPECT_EQ(g.predicted[3 * 4 + 0], 1u);
  EXPECT_EQ(g.truth[0], 1u);
}
