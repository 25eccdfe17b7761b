//
// Copyright 2026 The dppmt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPPMT_RANDOM_HPP_
#define DPPMT_RANDOM_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace dppmt {

// A keyed pseudo-random stream. The engine state is a pure function of the
// key (root seed followed by any number of 64-bit path components), so child
// streams can be derived in any order and the same key always replays the
// same sequence.
class RandomStream {
 public:
  using Engine = std::mt19937_64;

  explicit RandomStream(std::uint64_t seed) : key_{seed} { reseed(); }

  // Stream for key = this->key() ++ path. Does not touch this stream's state.
  RandomStream child(std::initializer_list<std::uint64_t> path) const {
    std::vector<std::uint64_t> key = key_;
    key.insert(key.end(), path.begin(), path.end());
    return RandomStream(std::move(key));
  }

  double normal() { return normal_(engine_); }

  Engine& engine() { return engine_; }
  const std::vector<std::uint64_t>& key() const { return key_; }

 private:
  explicit RandomStream(std::vector<std::uint64_t> key) : key_(std::move(key)) {
    reseed();
  }

  void reseed() {
    std::vector<std::uint32_t> words;
    words.reserve(2 * key_.size() + 1);
    // Length prefix keeps (a) and (a, 0) distinct.
    words.push_back(static_cast<std::uint32_t>(key_.size()));
    for (std::uint64_t k : key_) {
      words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
      words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
    normal_.reset();
  }

  std::vector<std::uint64_t> key_;
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dppmt

#endif  // DPPMT_RANDOM_HPP_
