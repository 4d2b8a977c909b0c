#include "msrnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace msrnn {

InputError::InputError(const std::string& message, std::size_t line)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

namespace {

constexpr std::array<Profile, 4> kConcreteProfiles = {Profile::department_store, Profile::restaurant,
                                                      Profile::sports, Profile::medical};

struct Bump {
  double center;
  double width;
  double amplitude;
};

struct ProfileShape {
  std::vector<Bump> weekday;
  std::vector<Bump> saturday;
  std::vector<Bump> sunday;
  std::array<double, 7> day_factor;
  double base_rate;
  double avg_ticket;
};

const ProfileShape& shape_of(Profile p) {
  static const ProfileShape department{
      {{13.0, 3.0, 1.0}, {18.0, 2.5, 0.8}},
      {{14.0, 3.5, 1.4}},
      {{14.5, 3.0, 1.1}},
      {0.9, 0.9, 0.95, 1.0, 1.15, 1.5, 1.3},
      30.0,
      60.0};
  static const ProfileShape restaurant{
      {{12.5, 1.2, 1.0}, {19.0, 1.8, 1.2}},
      {{11.0, 1.5, 0.8}, {20.0, 2.0, 1.6}},
      {{11.5, 2.0, 1.2}, {18.5, 1.8, 0.9}},
      {0.8, 0.85, 0.9, 1.0, 1.3, 1.5, 1.2},
      25.0,
      30.0};
  static const ProfileShape sports{
      {{7.0, 1.5, 0.7}, {18.5, 2.0, 1.2}},
      {{10.0, 2.5, 1.3}, {16.0, 2.5, 0.9}},
      {{9.0, 2.0, 1.1}},
      {1.0, 1.05, 1.0, 1.0, 0.9, 1.3, 1.2},
      10.0,
      25.0};
  static const ProfileShape medical{
      {{9.5, 2.0, 1.0}, {15.0, 2.0, 0.9}},
      {{10.0, 1.5, 0.4}},
      {{11.0, 1.0, 0.1}},
      {1.1, 1.05, 1.0, 1.05, 1.0, 0.4, 0.15},
      8.0,
      120.0};
  switch (p) {
    case Profile::department_store: return department;
    case Profile::restaurant: return restaurant;
    case Profile::sports: return sports;
    case Profile::medical: return medical;
    case Profile::mixed: break;
  }
  throw std::invalid_argument("no shape for the mixed profile");
}

// Per-merchant hour-of-week intensity, fully determined by the merchant's draws.
std::array<double, 168> weekly_intensity(const ProfileShape& shape, Rng& rng) {
  const double shift = 0.7 * rng.normal();
  auto jitter = [&](const std::vector<Bump>& bumps) {
    std::vector<Bump> out = bumps;
    for (auto& b : out) {
      b.center += shift;
      b.amplitude *= std::exp(0.2 * rng.normal());
    }
    return out;
  };
  const auto weekday = jitter(shape.weekday);
  const auto saturday = jitter(shape.saturday);
  const auto sunday = jitter(shape.sunday);
  std::array<double, 7> factor{};
  for (std::size_t d = 0; d < 7; ++d) factor[d] = shape.day_factor[d] * std::exp(0.1 * rng.normal());

  std::array<double, 168> out{};
  for (std::size_t d = 0; d < 7; ++d) {
    const auto& bumps = d < 5 ? weekday : (d == 5 ? saturday : sunday);
    for (std::size_t h = 0; h < 24; ++h) {
      double v = 0.05;
      for (const auto& b : bumps) {
        const double z = (static_cast<double>(h) - b.center) / b.width;
        v += b.amplitude * std::exp(-0.5 * z * z);
      }
      out[d * 24 + h] = v * factor[d];
    }
  }
  return out;
}

MerchantSeries generate_merchant(std::size_t index, Profile profile, const SyntheticOptions& opt) {
  Rng rng = Rng(opt.seed).fork(index);
  const ProfileShape& shape = shape_of(profile);
  const double base = shape.base_rate * std::exp(0.3 * rng.normal());
  const double ticket = shape.avg_ticket * std::exp(0.3 * rng.normal());
  const double gamma = rng.uniform(0.6, 0.95);
  const double approval = rng.uniform(0.9, 0.98);
  const auto intensity = weekly_intensity(shape, rng);

  char id[16];
  std::snprintf(id, sizeof id, "m%05zu", index);
  MerchantSeries s{id, std::string(to_string(profile)), 0, Matrix(opt.n_weeks * 168, kFeatureCount)};
  const double a = opt.noise;
  double level = 0.0;
  for (std::size_t hour = 0; hour < s.hours(); ++hour) {
    if (hour % 24 == 0) level = 0.7 * level + 0.15 * a * rng.normal();
    const double mean = base * intensity[hour % 168] * std::exp(level + 0.15 * a * rng.normal());
    const double count = std::max(1.0, std::round(mean));
    const double cards =
        std::clamp(std::round(gamma * count * std::exp(0.05 * a * rng.normal())), 1.0, count);
    const double amount = std::round(count * ticket * std::exp(0.2 * a * rng.normal()) * 100.0) / 100.0;
    const double rate = std::clamp(approval + 0.02 * a * rng.normal(), 0.8, 1.0);
    s.values(hour, 0) = count;
    s.values(hour, 1) = cards;
    s.values(hour, 2) = amount;
    s.values(hour, 3) = rate;
  }
  return s;
}

}  // namespace

Profile parse_profile(std::string_view tag) {
  if (tag == "department_store") return Profile::department_store;
  if (tag == "restaurant") return Profile::restaurant;
  if (tag == "sports") return Profile::sports;
  if (tag == "medical") return Profile::medical;
  if (tag == "mixed") return Profile::mixed;
  throw std::invalid_argument("unknown profile '" + std::string(tag) +
                              "' (department_store|restaurant|sports|medical|mixed)");
}

std::string_view to_string(Profile p) noexcept {
  switch (p) {
    case Profile::department_store: return "department_store";
    case Profile::restaurant: return "restaurant";
    case Profile::sports: return "sports";
    case Profile::medical: return "medical";
    case Profile::mixed: return "mixed";
  }
  return "mixed";
}

std::span<const Profile> concrete_profiles() noexcept { return kConcreteProfiles; }

std::vector<MerchantSeries> generate_synthetic(const SyntheticOptions& options) {
  if (options.n_merchants < 1) throw std::invalid_argument("generate: need at least one merchant");
  if (options.n_weeks < 2) throw std::invalid_argument("generate: need at least two weeks");
  if (!(options.noise >= 0.0) || !std::isfinite(options.noise)) {
    throw std::invalid_argument("generate: noise must be a finite non-negative amplitude");
  }
  std::vector<MerchantSeries> out;
  out.reserve(options.n_merchants);
  for (std::size_t m = 0; m < options.n_merchants; ++m) {
    const Profile p = options.profile == Profile::mixed ? kConcreteProfiles[m % 4] : options.profile;
    out.push_back(generate_merchant(m, p, options));
  }
  return out;
}

namespace {

constexpr std::string_view kHeader =
    "merchant_id,category,hour,approved_txn_count,unique_card_count,amount_sum,approval_rate";

void append_double(std::string& line, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  line.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

void write_csv(std::span<const MerchantSeries> data, std::ostream& out) {
  out << kHeader << '\n';
  std::string line;
  for (const auto& s : data) {
    if (s.merchant_id.find_first_of(",\n") != std::string::npos ||
        s.category.find_first_of(",\n") != std::string::npos) {
      throw std::invalid_argument("merchant id and category must not contain commas or newlines");
    }
    for (std::size_t h = 0; h < s.hours(); ++h) {
      line = s.merchant_id;
      line += ',';
      line += s.category;
      line += ',';
      line += std::to_string(s.start_hour + static_cast<std::int64_t>(h));
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        line += ',';
        append_double(line, s.values(h, f));
      }
      line += '\n';
      out << line;
    }
  }
}

void save_csv(std::span<const MerchantSeries> data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  write_csv(data, out);
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <class T>
T parse_number(std::string_view field, std::size_t line, std::string_view what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw InputError("invalid " + std::string(what) + " '" + std::string(field) + "'", line);
  }
  return v;
}

}  // namespace

std::vector<MerchantSeries> read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line()) throw InputError("empty file: missing header", 1);
  if (line != kHeader) throw InputError("unexpected header '" + line + "'", line_no);

  struct Building {
    MerchantSeries series;
    std::vector<double> values;
    std::int64_t last_hour;
  };
  std::vector<Building> merchants;
  std::unordered_map<std::string, std::size_t> index;

  while (next_line()) {
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3 + kFeatureCount) {
      throw InputError("expected " + std::to_string(3 + kFeatureCount) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    if (fields[0].empty()) throw InputError("empty merchant_id", line_no);
    const auto hour = parse_number<std::int64_t>(fields[2], line_no, "hour");
    std::array<double, kFeatureCount> row{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      row[f] = parse_number<double>(fields[3 + f], line_no, kFeatureNames[f]);
      if (!std::isfinite(row[f])) throw InputError("non-finite " + std::string(kFeatureNames[f]), line_no);
    }
    for (std::size_t f = 0; f < 3; ++f)
      if (row[f] < 0.0) throw InputError("negative " + std::string(kFeatureNames[f]), line_no);
    if (row[3] < 0.0 || row[3] > 1.0) throw InputError("approval_rate outside [0, 1]", line_no);

    const std::string id(fields[0]);
    auto it = index.find(id);
    if (it == index.end()) {
      index.emplace(id, merchants.size());
      merchants.push_back({{id, std::string(fields[1]), hour, Matrix()}, {}, hour - 1});
      it = index.find(id);
    }
    Building& b = merchants[it->second];
    if (b.series.category != fields[1]) {
      throw InputError("merchant '" + id + "' changes category", line_no);
    }
    if (hour != b.last_hour + 1) {
      throw InputError("hours for merchant '" + id + "' must be contiguous and ascending (expected " +
                           std::to_string(b.last_hour + 1) + ", got " + std::to_string(hour) + ")",
                       line_no);
    }
    b.last_hour = hour;
    b.values.insert(b.values.end(), row.begin(), row.end());
  }

  std::vector<MerchantSeries> out;
  out.reserve(merchants.size());
  for (auto& b : merchants) {
    const std::size_t hours = b.values.size() / kFeatureCount;
    b.series.values = Matrix(hours, kFeatureCount, std::move(b.values));
    out.push_back(std::move(b.series));
  }
  return out;
}

std::vector<MerchantSeries> load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read_csv(in);
}

std::vector<WindowPair> windowize(std::span<const MerchantSeries> data, std::size_t stride_hours) {
  if (stride_hours < 1) throw std::invalid_argument("windowize: stride must be >= 1");
  std::vector<WindowPair> out;
  for (const auto& s : data) {
    for (std::size_t o = 0; o + kPairHours <= s.hours(); o += stride_hours) {
      out.push_back({slice_rows(s.values, o, kInputHours), slice_rows(s.values, o + kInputHours, kOutputHours),
                     s.merchant_id, s.category, s.start_hour + static_cast<std::int64_t>(o)});
    }
  }
  return out;
}

std::vector<MerchantSeries> slice_hours(std::span<const MerchantSeries> data, std::size_t first,
                                        std::size_t count) {
  std::vector<MerchantSeries> out;
  out.reserve(data.size());
  for (const auto& s : data) {
    if (first + count > s.hours()) {
      throw InputError("merchant '" + s.merchant_id + "' has " + std::to_string(s.hours()) +
                       " hours, need " + std::to_string(first + count));
    }
    out.push_back({s.merchant_id, s.category, s.start_hour + static_cast<std::int64_t>(first),
                   slice_rows(s.values, first, count)});
  }
  return out;
}

TemporalSplit split_train_test(std::span<const MerchantSeries> data, std::size_t test_hours) {
  TemporalSplit split;
  split.test_hours = test_hours;
  split.train.reserve(data.size());
  for (const auto& s : data) {
    if (s.hours() <= test_hours) {
      throw InputError("merchant '" + s.merchant_id + "' has " + std::to_string(s.hours()) +
                       " hours, not enough for a " + std::to_string(test_hours) + "-hour test span");
    }
    split.train.push_back({s.merchant_id, s.category, s.start_hour,
                           slice_rows(s.values, 0, s.hours() - test_hours)});
  }
  return split;
}

std::vector<WindowPair> test_windows(std::span<const MerchantSeries> data, std::size_t test_hours) {
  if (test_hours == 0 || test_hours % kOutputHours != 0) {
    throw std::invalid_argument("test span must be a positive multiple of 24 hours");
  }
  std::vector<WindowPair> out;
  for (const auto& s : data) {
    if (s.hours() < test_hours + kInputHours) {
      throw InputError("merchant '" + s.merchant_id + "' has " + std::to_string(s.hours()) +
                       " hours; forecasting a " + std::to_string(test_hours) +
                       "-hour test span needs " + std::to_string(test_hours + kInputHours));
    }
    const std::size_t test_start = s.hours() - test_hours;
    for (std::size_t d = 0; d < test_hours / kOutputHours; ++d) {
      const std::size_t target = test_start + d * kOutputHours;
      const std::size_t origin = target - kInputHours;
      out.push_back({slice_rows(s.values, origin, kInputHours), slice_rows(s.values, target, kOutputHours),
                     s.merchant_id, s.category, s.start_hour + static_cast<std::int64_t>(origin)});
    }
  }
  return out;
}

ScalerMode parse_scaler_mode(std::string_view tag) {
  if (tag == "zscore") return ScalerMode::zscore;
  if (tag == "minmax01") return ScalerMode::minmax01;
  throw std::invalid_argument("unknown scaler mode '" + std::string(tag) + "'");
}

std::string_view to_string(ScalerMode m) noexcept {
  return m == ScalerMode::zscore ? "zscore" : "minmax01";
}

Matrix Scaler::apply(const Matrix& x) const {
  if (x.cols() != offset.size()) {
    throw ShapeError("scaler fitted on " + std::to_string(offset.size()) + " features applied to " +
                     x.shape_string());
  }
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = (out(r, c) - offset[c]) / spread[c];
  return out;
}

Matrix Scaler::invert(const Matrix& x) const {
  if (x.cols() != offset.size()) {
    throw ShapeError("scaler fitted on " + std::to_string(offset.size()) + " features applied to " +
                     x.shape_string());
  }
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = out(r, c) * spread[c] + offset[c];
  return out;
}

bool Scaler::any_degenerate() const noexcept {
  return std::find(degenerate.begin(), degenerate.end(), true) != degenerate.end();
}

namespace {

Scaler fit_from_rows(const std::vector<const Matrix*>& blocks, ScalerMode mode) {
  if (blocks.empty()) throw std::invalid_argument("fit_scaler: no training data");
  const std::size_t f = blocks.front()->cols();
  Scaler s;
  s.mode = mode;
  s.offset.assign(f, 0.0);
  s.spread.assign(f, 1.0);
  s.degenerate.assign(f, false);
  if (mode == ScalerMode::zscore) {
    // Two passes for numerical stability.
    std::vector<double> sum(f, 0.0), sq(f, 0.0);
    std::size_t n = 0;
    for (const Matrix* m : blocks) {
      for (std::size_t r = 0; r < m->rows(); ++r)
        for (std::size_t c = 0; c < f; ++c) sum[c] += (*m)(r, c);
      n += m->rows();
    }
    for (std::size_t c = 0; c < f; ++c) s.offset[c] = sum[c] / static_cast<double>(n);
    for (const Matrix* m : blocks)
      for (std::size_t r = 0; r < m->rows(); ++r)
        for (std::size_t c = 0; c < f; ++c) {
          const double d = (*m)(r, c) - s.offset[c];
          sq[c] += d * d;
        }
    for (std::size_t c = 0; c < f; ++c) {
      const double sd = std::sqrt(sq[c] / static_cast<double>(n));
      if (sd > 1e-12) {
        s.spread[c] = sd;
      } else {
        s.degenerate[c] = true;
      }
    }
  } else {
    std::vector<double> lo(f, INFINITY), hi(f, -INFINITY);
    for (const Matrix* m : blocks)
      for (std::size_t r = 0; r < m->rows(); ++r)
        for (std::size_t c = 0; c < f; ++c) {
          lo[c] = std::min(lo[c], (*m)(r, c));
          hi[c] = std::max(hi[c], (*m)(r, c));
        }
    for (std::size_t c = 0; c < f; ++c) {
      s.offset[c] = lo[c];
      if (hi[c] - lo[c] > 1e-12) {
        s.spread[c] = hi[c] - lo[c];
      } else {
        s.degenerate[c] = true;
      }
    }
  }
  return s;
}

}  // namespace

Scaler fit_scaler(std::span<const WindowPair> train, ScalerMode mode) {
  std::vector<const Matrix*> blocks;
  for (const auto& p : train) blocks.push_back(&p.input);
  return fit_from_rows(blocks, mode);
}

Scaler fit_scaler(std::span<const MerchantSeries> train, ScalerMode mode) {
  std::vector<const Matrix*> blocks;
  for (const auto& s : train)
    if (s.hours() > 0) blocks.push_back(&s.values);
  return fit_from_rows(blocks, mode);
}

WindowPair scale_pair(const WindowPair& pair, const Scaler& scaler) {
  return {scaler.apply(pair.input), scaler.apply(pair.target), pair.merchant_id, pair.category,
          pair.origin_hour};
}

std::vector<MerchantSeries> scale_series(std::span<const MerchantSeries> data, const Scaler& scaler) {
  std::vector<MerchantSeries> out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back({s.merchant_id, s.category, s.start_hour, scaler.apply(s.values)});
  return out;
}

}  // namespace msrnn
