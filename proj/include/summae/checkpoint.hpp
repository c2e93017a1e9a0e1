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

// Binary checkpoints.
//
//   "SAE1" | u32 version | u64 len, metadata text (key=value lines)
//   | u64 tensor count | per tensor: u32 name len, name, u64 rows, u64 cols,
//   rows*cols little-endian f64 | u32 CRC-32 of everything before it
//
// Tensor names are prefixed with their group ("params/", "adam.m/", ...).
// Values round-trip exactly, so a resumed run continues bit-identically.

#ifndef SUMMAE_CHECKPOINT_HPP_
#define SUMMAE_CHECKPOINT_HPP_

#include <cstdint>
#include <string>

#include "summae/model.hpp"
#include "summae/trainer.hpp"

namespace summae {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainSchedule schedule;
  TrainingState state;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
// Throws DataError on a bad magic, version mismatch, truncation or CRC failure.
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Just the parameters, for summarize/evaluate. Uses the best parameters
// when validation ran.
Params<float> load_model(const std::string& path);

}  // namespace summae

#endif  // SUMMAE_CHECKPOINT_HPP_
