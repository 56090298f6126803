#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace acdne::nn {

// Versioned text container for named tensors plus free-form metadata.
//
//   acdne-checkpoint 1
//   meta <key> <value...>            zero or more, in insertion order
//   vocabulary <count>               followed by <count> lines, one name each
//   tensor <name> <rows> <cols>      followed by <rows> lines of <cols> values
//   end
//
// Values use the shortest decimal form that round-trips exactly, so a
// write/read cycle is lossless and equal tensors give identical bytes.
struct NamedTensor {
  std::string name;
  Eigen::MatrixXd values;
};

struct Checkpoint {
  static constexpr int kVersion = 1;

  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> vocabulary;
  std::vector<NamedTensor> tensors;

  void set_meta(std::string key, std::string value);
  std::optional<std::string> get_meta(std::string_view key) const;
  const NamedTensor* find(std::string_view name) const;
};

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace acdne::nn
