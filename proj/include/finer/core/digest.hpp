#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace finer {

using Bytes = std::vector<std::uint8_t>;

std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view text);

// First 8 bytes of SHA-256, big-endian. Used to derive sub-seeds.
std::uint64_t digest64(std::string_view text);

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);

// Little-endian float32 arrays, base64 wrapped, as stored in classifier.json.
std::string encode_f32(std::span<const double> values);
std::vector<double> decode_f32(std::string_view b64);

Bytes read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view content);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace finer
