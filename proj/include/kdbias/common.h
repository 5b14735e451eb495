/*
 * Copyright 2026 The kdbias Authors.
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

// Error types, the seeded random engine and small hashing helpers shared by
// every module.

#ifndef KDBIAS_COMMON_H_
#define KDBIAS_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kdbias {

// Invalid configuration or arguments. The CLI maps it to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A file or record that does not follow its documented schema.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Training diverged or a runtime computation failed (exit code 3).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Required input artifacts are absent (exit code 4).
class MissingArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Seeded random engine. The raw 64-bit stream of std::mt19937_64 is fully
// specified by the standard, but the std distributions are not, so every
// derived quantity is computed here to keep runs reproducible across
// standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  uint64_t uniform_int(uint64_t n);

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed from a base seed and a tag.
uint64_t derive_seed(uint64_t base, std::string_view tag);

// 64-bit FNV-1a.
uint64_t fnv1a(const void* data, size_t size, uint64_t h = 0xcbf29ce484222325ULL);
uint64_t fnv1a(std::string_view s);

// 16 lowercase hex digits.
std::string hex64(uint64_t v);

}  // namespace kdbias

#endif  // KDBIAS_COMMON_H_
