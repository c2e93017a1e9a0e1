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

// Run configuration: flat `section.key=value` text. Sections are paths,
// data, model and train. Unknown keys are errors.

#ifndef SUMMAE_RUN_CONFIG_HPP_
#define SUMMAE_RUN_CONFIG_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "summae/model.hpp"
#include "summae/trainer.hpp"

namespace summae {

struct PathConfig {
  std::string corpus;
  std::string format = "csv";  // "csv" or "tsv"
  std::string references;      // empty when no references are available
  std::string out_dir;         // vocab, splits, checkpoints, logs and reports
};

struct DataConfig {
  std::array<double, 3> split{0.8, 0.1, 0.1};
  std::uint64_t split_seed = 0;
};

struct RunConfig {
  PathConfig paths;
  DataConfig data;
  ModelConfig model;
  TrainSchedule train;

  std::map<std::string, std::string> to_map() const;
  // One key=value per line, sorted.
  std::string to_text() const;
};

// Missing keys keep their defaults. Throws ConfigError.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// "section.key=value" overrides applied on top of `base`.
RunConfig apply_overrides(const RunConfig& base, const std::vector<std::string>& overrides);

}  // namespace summae

#endif  // SUMMAE_RUN_CONFIG_HPP_
