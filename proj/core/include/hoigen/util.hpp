#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hoigen {

using Bytes = std::vector<std::uint8_t>;

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::span<const std::uint8_t> data);
/// Throws std::invalid_argument on malformed input.
Bytes base64_decode(std::string_view text);

/// splitmix64 finalizer; used for counter-based seed derivation.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base) { return mix64(base); }

template <typename... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t next,
                                    Rest... rest) {
  return derive_seed(mix64(base ^ mix64(next)), rest...);
}

/// First 8 bytes of SHA-256 as an integer. Stable across platforms.
std::uint64_t stable_hash64(std::string_view text);

/// Uniform integer in [0, bound) from the raw engine output. The standard
/// distributions are implementation-defined, this is not.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// Uniform double in [0, 1) with 53 bits of precision.
double uniform_unit(std::uint64_t bits);

/// Current UTC time as ISO-8601 with millisecond precision.
std::string utc_timestamp();

std::string_view trim(std::string_view s);
std::vector<std::string_view> split_lines(std::string_view text);

/// Reads a whole file as bytes. Throws StorageFailure.
Bytes read_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Writes `data` to a unique temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> data);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

/// Appends one line (a trailing '\n' is added) with a single write(2) on an
/// O_APPEND descriptor, so concurrent or crashed writers never interleave
/// partial records except possibly a torn final line.
void append_line(const std::filesystem::path& path, std::string_view line);

}  // namespace hoigen
