/*
 * Copyright 2026 The lrv Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Seed derivation helpers. Engines are std::mt19937_64; keyed draws use a
// SplitMix64 finalizer so a draw depends only on (seed, key), never on how
// many draws happened before it.

#ifndef LRV_RNG_H_
#define LRV_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <cstring>
#include <random>
#include <string_view>
#include <type_traits>

namespace lrv {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

// Uniform in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double keyed_uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  return to_unit(derive_seed(seed, keys));
}

// Stream labels so independent components never share an engine.
enum class Stream : std::uint64_t {
  kPopulation = 1,
  kPosting = 2,
  kAssignment = 3,
  kGbdt = 4,
  kHoldoutRotation = 5,
  kFollowUp = 6,
  kDataset = 7,
};

inline Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t sub = 0) {
  return Engine(derive_seed(seed, {static_cast<std::uint64_t>(stream), sub}));
}

// 64-bit FNV-1a over raw bytes. Used for content fingerprints and config
// hashes, never for seeding.
class Fnv1a {
 public:
  Fnv1a& bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& text(std::string_view s) { return bytes(s.data(), s.size()); }
  template <typename T>
  Fnv1a& value(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    return bytes(buf, sizeof(T));
  }
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace lrv

#endif  // LRV_RNG_H_
