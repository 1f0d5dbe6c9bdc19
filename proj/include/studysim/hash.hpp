#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace studysim {

// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

// First `chars` hex digits of the SHA-256; used for readable content ids.
std::string short_hash(std::string_view data, std::size_t chars = 16);

// Joins parts with a NUL separator before hashing so ("ab","c") != ("a","bc").
std::string hash_parts(std::initializer_list<std::string_view> parts, std::size_t chars = 16);

// splitmix64 step; deterministic across platforms.
std::uint64_t splitmix64(std::uint64_t& state);

// Uniform double in [0,1) from 53 high bits.
inline double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace studysim
