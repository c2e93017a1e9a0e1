// Copyright 2026 The summae Authors.
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

// Template-generated five-sentence stories with three reference summaries
// each. Small vocabulary, strong regularities: enough for desk-scale runs
// to learn something measurable in minutes.

#ifndef SUMMAE_TESTS_SYNTHETIC_HPP_
#define SUMMAE_TESTS_SYNTHETIC_HPP_

#include <cstdint>
#include <vector>

#include "summae/corpus.hpp"

namespace summae::testing {

struct SyntheticCorpus {
  std::vector<Story> stories;
  ReferenceMap references;
};

SyntheticCorpus make_synthetic_corpus(std::size_t n, std::uint64_t seed);

}  // namespace summae::testing

#endif  // SUMMAE_TESTS_SYNTHETIC_HPP_
