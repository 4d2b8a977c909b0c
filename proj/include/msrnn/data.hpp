#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "msrnn/tensor.hpp"

namespace msrnn {

inline constexpr std::size_t kFeatureCount = 4;
inline constexpr std::size_t kInputHours = 168;
inline constexpr std::size_t kOutputHours = 24;
inline constexpr std::size_t kPairHours = kInputHours + kOutputHours;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "approved_txn_count", "unique_card_count", "amount_sum", "approval_rate"};

/// Raised for unreadable or malformed input files. `line` is 1-based, 0 when
/// the problem is not tied to a line.
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& message, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct MerchantSeries {
  std::string merchant_id;
  std::string category;
  std::int64_t start_hour = 0;
  Matrix values;  // hours x 4, columns ordered as kFeatureNames

  std::size_t hours() const noexcept { return values.rows(); }
};

struct WindowPair {
  Matrix input;   // 168 x 4
  Matrix target;  // 24 x 4
  std::string merchant_id;
  std::string category;
  std::int64_t origin_hour = 0;  // absolute hour of the first input row
};

enum class Profile { department_store, restaurant, sports, medical, mixed };

Profile parse_profile(std::string_view tag);
std::string_view to_string(Profile p) noexcept;
/// The four concrete categories, in report order.
std::span<const Profile> concrete_profiles() noexcept;

struct SyntheticOptions {
  std::size_t n_merchants = 50;
  std::size_t n_weeks = 5;
  std::uint64_t seed = 7;
  Profile profile = Profile::mixed;
  /// Scales every stochastic component; 0 yields exactly 168-hour-periodic series.
  double noise = 1.0;
};

/// Seeded synthetic merchant corpus. `mixed` cycles merchants through the four
/// categories. Merchant ids are "m00000", "m00001", ...
std::vector<MerchantSeries> generate_synthetic(const SyntheticOptions& options);

void save_csv(std::span<const MerchantSeries> data, const std::filesystem::path& path);
void write_csv(std::span<const MerchantSeries> data, std::ostream& out);
std::vector<MerchantSeries> load_csv(const std::filesystem::path& path);
std::vector<MerchantSeries> read_csv(std::istream& in);

/// Window pairs at offsets 0, stride, 2*stride, ... while 192 hours remain,
/// ordered by merchant then origin.
std::vector<WindowPair> windowize(std::span<const MerchantSeries> data, std::size_t stride_hours);

/// Copies hours [first, first + count) of every merchant.
std::vector<MerchantSeries> slice_hours(std::span<const MerchantSeries> data, std::size_t first,
                                        std::size_t count);

struct TemporalSplit {
  std::vector<MerchantSeries> train;  // everything before the test span
  std::size_t test_hours = 0;
};

/// Holds out the trailing test_hours (default one week) of every merchant.
TemporalSplit split_train_test(std::span<const MerchantSeries> data, std::size_t test_hours = 168);

/// Forecast days inside the trailing test span, each fed by the 168 hours that
/// precede it (stride 24). Throws InputError when a merchant is too short.
std::vector<WindowPair> test_windows(std::span<const MerchantSeries> data,
                                     std::size_t test_hours = 168);

enum class ScalerMode { zscore, minmax01 };

ScalerMode parse_scaler_mode(std::string_view tag);
std::string_view to_string(ScalerMode m) noexcept;

/// Per-feature affine scaling fitted on training inputs only.
struct Scaler {
  ScalerMode mode = ScalerMode::zscore;
  std::vector<double> offset;  // mean or min
  std::vector<double> spread;  // std or (max - min), clamped to 1 when degenerate
  std::vector<bool> degenerate;

  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& x) const;
  bool any_degenerate() const noexcept;
};

Scaler fit_scaler(std::span<const WindowPair> train, ScalerMode mode);
/// Same statistics computed over raw series rows.
Scaler fit_scaler(std::span<const MerchantSeries> train, ScalerMode mode);

WindowPair scale_pair(const WindowPair& pair, const Scaler& scaler);
std::vector<MerchantSeries> scale_series(std::span<const MerchantSeries> data, const Scaler& scaler);

}  // namespace msrnn
