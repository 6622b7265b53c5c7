// Copyright 2026 The IWR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IWR_RANDOM_H_
#define IWR_RANDOM_H_

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace iwr {

// splitmix64 finalizer
uint64_t Mix64(uint64_t x);

// order-sensitive hash of a key tuple, used to derive independent streams
uint64_t HashKey(std::initializer_list<uint64_t> parts);

// Counter-based generator: the i-th draw is a pure function of (key, i), so
// streams are reproducible bit-for-bit on every platform. Conversions to
// floating point are done here rather than through <random> distributions,
// whose output is implementation-defined.
class Rng {
 public:
  using result_type = uint64_t;

  explicit Rng(uint64_t key) : key_(Mix64(key)) {}
  Rng(std::initializer_list<uint64_t> key_parts) : key_(HashKey(key_parts)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  // uniform on [0, 1) with 53 random bits
  double Uniform();
  double Uniform(double lo, double hi);

  // standard normal via Box-Muller; consumes exactly two draws
  double Gaussian();

  // uniform integer in [0, n), unbiased; n must be positive
  uint64_t UniformInt(uint64_t n);

  uint64_t counter() const { return counter_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace iwr

#endif  // IWR_RANDOM_H_
