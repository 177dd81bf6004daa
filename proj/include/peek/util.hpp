// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace peek {

using json = nlohmann::json;

/// Lowercase hex MD5 of the input. Used as a stable content key, not for security.
std::string md5_hex(std::string_view data);

/// First 64 bits of the MD5 digest, big-endian.
std::uint64_t hash64(std::string_view data);

std::uint64_t splitmix64(std::uint64_t x);

/// Seeded generator with platform-independent derived distributions.
///
/// The std distributions are implementation-defined, so bounded integers,
/// uniform reals, normals and shuffles are derived here directly from the
/// mt19937_64 stream, which the standard does pin down.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();
  double normal();
  bool coin() { return (next_u64() >> 63) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

/// Calls fn(line_number, line) for every line; strips a trailing '\r'.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, std::string_view)>& fn);

/// JSON text with sorted keys, no whitespace, and every floating value
/// printed with exactly `decimals` fractional digits. Byte-stable.
std::string canonical_dump(const json& j, int decimals = 4, int indent = -1);

std::string format_fixed(double value, int decimals);

double round_to(double value, int decimals);

}  // namespace peek
