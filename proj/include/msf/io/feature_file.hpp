#pragma once

// Feature file layout, all integers and floats little-endian:
//
//   offset  size  field
//   0       4     magic "MSFF"
//   4       2     version (u16) = 1
//   6       1     dtype (u8): 0 = f32, 1 = f64
//   7       8     rows (u64)
//   15      8     cols (u64)
//   23      1     labels present (u8): 0 or 1
//   24      ...   rows * cols values, row-major
//   ...     ...   rows * u32 class ids, when labels are present
//
// The header is 24 bytes. Nothing may follow the payload.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msf/error.hpp"
#include "msf/io/atomic_file.hpp"
#include "msf/semantic/fusion.hpp"
#include "msf/tensor/matrix.hpp"

namespace msf {

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1 };

inline constexpr std::string_view kFeatureMagic = "MSFF";
inline constexpr std::uint16_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderSize = 24;

struct FeatureData {
  Matrix<double> values;
  std::optional<std::vector<ClassId>> labels;
  Dtype dtype = Dtype::f64;
};

namespace detail {

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

template <typename U>
U get_le(std::string_view in, std::size_t offset) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return v;
}

}  // namespace detail

// Serializes a feature matrix. f32 output rounds each value to float.
inline std::string encode_features(const Matrix<double>& values, const std::vector<ClassId>* labels,
                                   Dtype dtype = Dtype::f64) {
  if (labels && labels->size() != values.rows()) {
    throw ShapeError("feature file: " + std::to_string(labels->size()) + " labels for " +
                     std::to_string(values.rows()) + " rows");
  }
  if (!values.all_finite()) throw NumericError("feature file: refusing to write non-finite values");
  const std::size_t width = dtype == Dtype::f32 ? 4 : 8;
  std::string out;
  out.reserve(kFeatureHeaderSize + values.size() * width + (labels ? labels->size() * 4 : 0));
  out.append(kFeatureMagic);
  detail::put_le<std::uint16_t>(out, kFeatureVersion);
  out.push_back(static_cast<char>(dtype));
  detail::put_le<std::uint64_t>(out, values.rows());
  detail::put_le<std::uint64_t>(out, values.cols());
  out.push_back(labels ? 1 : 0);
  for (double v : values.values()) {
    if (dtype == Dtype::f32) {
      const auto f = static_cast<float>(v);
      if (!std::isfinite(f)) throw NumericError("feature file: value overflows f32");
      detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    } else {
      detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  if (labels) {
    for (ClassId id : *labels) detail::put_le<std::uint32_t>(out, id);
  }
  return out;
}

inline FeatureData decode_features(std::string_view bytes) {
  if (bytes.size() < kFeatureHeaderSize) {
    if (bytes.size() >= 4 && bytes.substr(0, 4) != kFeatureMagic) throw FormatError("feature file: bad magic");
    throw LengthError("feature file: truncated header (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (bytes.substr(0, 4) != kFeatureMagic) throw FormatError("feature file: bad magic");
  const auto version = detail::get_le<std::uint16_t>(bytes, 4);
  if (version != kFeatureVersion) throw FormatError("feature file: unsupported version " + std::to_string(version));
  const auto dtype_byte = static_cast<std::uint8_t>(bytes[6]);
  if (dtype_byte > 1) throw FormatError("feature file: unknown dtype " + std::to_string(dtype_byte));
  const auto dtype = static_cast<Dtype>(dtype_byte);
  const auto rows = detail::get_le<std::uint64_t>(bytes, 7);
  const auto cols = detail::get_le<std::uint64_t>(bytes, 15);
  const auto has_labels = static_cast<std::uint8_t>(bytes[23]);
  if (has_labels > 1) throw FormatError("feature file: labels flag must be 0 or 1");

  const std::uint64_t width = dtype == Dtype::f32 ? 4 : 8;
  const std::uint64_t available = bytes.size() - kFeatureHeaderSize;
  // Overflow-safe check that rows * cols * width (+ labels) fits the payload.
  if (cols != 0 && rows > available / width / cols) throw LengthError("feature file: payload shorter than header claims");
  const std::uint64_t value_bytes = rows * cols * width;
  const std::uint64_t label_bytes = has_labels ? rows * 4 : 0;
  if (has_labels && rows > available / 4) throw LengthError("feature file: payload shorter than header claims");
  if (value_bytes + label_bytes > available) throw LengthError("feature file: payload shorter than header claims");
  if (value_bytes + label_bytes < available) throw LengthError("feature file: trailing bytes after payload");

  FeatureData data;
  data.dtype = dtype;
  std::vector<double> values(rows * cols);
  std::size_t offset = kFeatureHeaderSize;
  for (auto& v : values) {
    if (dtype == Dtype::f32) {
      v = std::bit_cast<float>(detail::get_le<std::uint32_t>(bytes, offset));
    } else {
      v = std::bit_cast<double>(detail::get_le<std::uint64_t>(bytes, offset));
    }
    if (!std::isfinite(v)) throw NumericError("feature file: non-finite value in payload");
    offset += width;
  }
  data.values = Matrix<double>(rows, cols, std::move(values));
  if (has_labels) {
    std::vector<ClassId> labels(rows);
    for (auto& id : labels) {
      id = detail::get_le<std::uint32_t>(bytes, offset);
      offset += 4;
    }
    data.labels = std::move(labels);
  }
  return data;
}

inline void write_features(const std::filesystem::path& path, const Matrix<double>& values,
                           const std::vector<ClassId>* labels = nullptr, Dtype dtype = Dtype::f64) {
  write_file_atomic(path, encode_features(values, labels, dtype));
}

inline void write_features(const std::filesystem::path& path, const FeatureData& data) {
  write_features(path, data.values, data.labels ? &*data.labels : nullptr, data.dtype);
}

inline FeatureData read_features(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("feature file not found: " + path.string());
  return decode_features(read_file(path));
}

}  // namespace msf
