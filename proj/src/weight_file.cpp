#include "pflat/weight_file.hpp"

#include "pflat/canonical_json.hpp"
#include "pflat/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace pflat {
namespace {

static_assert(sizeof(float) == 4);

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Parsed {
  WeightFileHeader header;
  std::size_t payload_start = 0;
};

Parsed parse_header(const std::string& bytes, const std::filesystem::path& path) {
  const std::string where = path.string() + ": ";
  const std::string magic_line = std::string(kWeightFileMagic) + "\n";
  if (bytes.compare(0, magic_line.size(), magic_line) != 0) throw Error(ErrorCode::FormatError, where + "bad magic");
  const auto header_end = bytes.find('\n', magic_line.size());
  if (header_end == std::string::npos) throw Error(ErrorCode::FormatError, where + "header line is not terminated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(magic_line.size()),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(header_end));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, where + "header is not JSON: " + e.what());
  }
  Parsed parsed;
  parsed.payload_start = header_end + 1;
  try {
    parsed.header.config = header.at("config");
    std::uint64_t expected_offset = 0;
    for (const auto& t : header.at("tensors")) {
      TensorInfo info;
      info.name = t.at("name").get<std::string>();
      info.shape = t.at("shape").get<std::vector<std::int64_t>>();
      info.offset = t.at("offset").get<std::uint64_t>();
      for (auto d : info.shape) {
        if (d < 0) throw Error(ErrorCode::FormatError, where + "negative dimension in tensor " + info.name);
      }
      if (info.offset != expected_offset) {
        throw Error(ErrorCode::FormatError, where + "tensor " + info.name + " is not contiguous");
      }
      expected_offset += static_cast<std::uint64_t>(info.numel()) * 4;
      parsed.header.tensors.push_back(std::move(info));
    }
    if (bytes.size() - parsed.payload_start != expected_offset) {
      throw Error(ErrorCode::FormatError, where + "payload has " + std::to_string(bytes.size() - parsed.payload_start) +
                                              " bytes, header describes " + std::to_string(expected_offset));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, where + "malformed header: " + e.what());
  }
  return parsed;
}

}  // namespace

std::int64_t TensorInfo::numel() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

const std::vector<float>& WeightFileContents::tensor(std::string_view name) const {
  for (std::size_t i = 0; i < header.tensors.size(); ++i) {
    if (header.tensors[i].name == name) return tensors[i];
  }
  throw Error(ErrorCode::FormatError, "weight file has no tensor '" + std::string(name) + "'");
}

const TensorInfo& WeightFileContents::info(std::string_view name) const {
  for (const auto& t : header.tensors) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::FormatError, "weight file has no tensor '" + std::string(name) + "'");
}

void write_weight_file(const std::filesystem::path& path, const nlohmann::json& config,
                       std::span<const TensorView> tensors) {
  nlohmann::json header;
  header["config"] = config;
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    std::int64_t numel = 1;
    for (auto d : t.shape) numel *= d;
    if (numel != static_cast<std::int64_t>(t.values.size())) {
      throw Error(ErrorCode::ShapeMismatch, "tensor " + t.name + " shape does not match its value count");
    }
    header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(numel) * 4;
  }

  std::string bytes = std::string(kWeightFileMagic) + "\n" + canonical_dump(header) + "\n";
  bytes.reserve(bytes.size() + offset);
  for (const auto& t : tensors) {
    for (Scalar v : t.values) {
      const std::uint32_t word = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      char raw[4];
      std::memcpy(raw, &word, 4);
      bytes.append(raw, 4);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

WeightFileHeader read_weight_file_header(const std::filesystem::path& path) {
  return parse_header(read_all(path), path).header;
}

WeightFileContents read_weight_file(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  auto parsed = parse_header(bytes, path);
  WeightFileContents contents;
  contents.header = std::move(parsed.header);
  for (const auto& info : contents.header.tensors) {
    std::vector<float> values(static_cast<std::size_t>(info.numel()));
    const char* src = bytes.data() + parsed.payload_start + info.offset;
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::uint32_t word;
      std::memcpy(&word, src + 4 * i, 4);
      values[i] = std::bit_cast<float>(to_little_endian(word));
    }
    contents.tensors.push_back(std::move(values));
  }
  return contents;
}

void save_prefix(const std::filesystem::path& path, const PrefixParameters& prefix) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = prefix;
  const TensorView view{"prefix", {prefix.rows(), prefix.cols()}, {rows.data(), static_cast<std::size_t>(rows.size())}};
  const nlohmann::json config = {{"kind", "prefix"}, {"prefix_len", prefix.rows()}, {"width", prefix.cols()}};
  write_weight_file(path, config, std::span<const TensorView>(&view, 1));
}

PrefixParameters load_prefix(const std::filesystem::path& path) {
  const auto contents = read_weight_file(path);
  const auto& info = contents.info("prefix");
  if (info.shape.size() != 2) throw Error(ErrorCode::ShapeMismatch, "prefix tensor must be 2-D");
  const auto& values = contents.tensor("prefix");
  PrefixParameters prefix(info.shape[0], info.shape[1]);
  for (Index r = 0; r < prefix.rows(); ++r) {
    for (Index c = 0; c < prefix.cols(); ++c) prefix(r, c) = values[static_cast<std::size_t>(r * prefix.cols() + c)];
  }
  return prefix;
}

}  // namespace pflat
