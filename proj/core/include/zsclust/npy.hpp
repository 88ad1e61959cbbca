#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace zsclust::npy {

enum class DType { Float32, Int64 };

struct Header {
    DType dtype = DType::Float32;
    std::vector<std::size_t> shape;
};

/// Raw array contents as read from disk, before domain validation.
struct RawArray {
    Header header;
    std::vector<float> f32;
    std::vector<std::int64_t> i64;
};

RawArray read(const std::filesystem::path& path);

/// Encodes the v1.0 preamble: magic, version, header length, and the dict
/// padded with spaces to a 64-byte boundary and terminated by '\n'.
std::string encode_header(const Header& header);
/// Parses a preamble; throws FormatError on anything unexpected.
/// `header_bytes` receives the total preamble length.
Header decode_header(std::span<const char> bytes, std::size_t& header_bytes);

void write(const std::filesystem::path& path, std::span<const std::size_t> shape,
           std::span<const float> data);
void write(const std::filesystem::path& path, std::span<const std::size_t> shape,
           std::span<const std::int64_t> data);

}  // namespace zsclust::npy
