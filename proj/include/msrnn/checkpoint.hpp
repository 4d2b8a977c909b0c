#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msrnn/data.hpp"
#include "msrnn/tensor.hpp"

namespace msrnn {

/// Line-oriented text container:
///
///   msrnn-checkpoint 1
///   method <name>
///   setting <key> <value>            (any number, in order)
///   scaler <mode> <features>         (optional, followed by three lines)
///   offset <hexfloat>...
///   spread <hexfloat>...
///   degenerate <0|1>...
///   tensor <name> <rows> <cols>      (followed by one line of row-major hexfloats)
///   end
///
/// Hexadecimal floats make write -> read reproduce every value bit for bit.
struct Checkpoint {
  struct Tensor {
    std::string name;
    Matrix value;
  };

  std::string method;
  std::vector<std::pair<std::string, std::string>> settings;
  std::optional<Scaler> scaler;
  std::vector<Tensor> tensors;

  void set(std::string key, std::string value);
  /// Throws InputError when the key is absent.
  const std::string& setting(std::string_view key) const;
  const Matrix& tensor(std::string_view name) const;

  void write(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static Checkpoint read(std::istream& in);
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace msrnn
