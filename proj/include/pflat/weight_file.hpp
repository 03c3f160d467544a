#pragma once

// Weight file layout:
//   "PFLT1\n"
//   one canonical JSON line: {"config": {...}, "tensors": [{"name", "shape", "offset"}]}
//   little-endian f32 payloads in header order; offsets are bytes from the
//   first payload byte.

#include "pflat/core.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pflat {

inline constexpr std::string_view kWeightFileMagic = "PFLT1";

struct TensorInfo {
  std::string name;
  std::vector<std::int64_t> shape;
  std::uint64_t offset = 0;

  std::int64_t numel() const;
};

struct WeightFileHeader {
  nlohmann::json config;
  std::vector<TensorInfo> tensors;
};

struct TensorView {
  std::string name;
  std::vector<std::int64_t> shape;
  std::span<const Scalar> values;
};

struct WeightFileContents {
  WeightFileHeader header;
  std::vector<std::vector<float>> tensors;

  /// Throws FormatError when absent.
  const std::vector<float>& tensor(std::string_view name) const;
  const TensorInfo& info(std::string_view name) const;
};

/// Values are narrowed to f32. Throws IoError.
void write_weight_file(const std::filesystem::path& path, const nlohmann::json& config,
                       std::span<const TensorView> tensors);

/// Throws IoError or FormatError (bad magic, bad header, truncated payload).
WeightFileHeader read_weight_file_header(const std::filesystem::path& path);
WeightFileContents read_weight_file(const std::filesystem::path& path);

/// Prefix saved as a single tensor named "prefix".
void save_prefix(const std::filesystem::path& path, const PrefixParameters& prefix);
PrefixParameters load_prefix(const std::filesystem::path& path);

}  // namespace pflat
