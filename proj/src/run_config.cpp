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

#include "summae/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "summae/corpus.hpp"
#include "summae/error.hpp"

namespace summae {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

std::pair<std::string, std::string> split_assignment(const std::string& line, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError(where + ": expected key=value, got '" + line + "'");
  return {trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
}

RunConfig from_flat(const std::map<std::string, std::string>& kv) {
  RunConfig cfg;
  std::map<std::string, std::string> model_kv = cfg.model.to_map();
  std::map<std::string, std::string> train_kv = cfg.train.to_map();
  for (const auto& [k, v] : kv) {
    const auto dot = k.find('.');
    const std::string section = dot == std::string::npos ? "" : k.substr(0, dot);
    const std::string key = dot == std::string::npos ? k : k.substr(dot + 1);
    if (section == "model") {
      if (!model_kv.count(key)) throw ConfigError("unknown key " + k);
      model_kv[key] = v;
    } else if (section == "train") {
      if (!train_kv.count(key)) throw ConfigError("unknown key " + k);
      train_kv[key] = v;
    } else if (k == "paths.corpus") {
      cfg.paths.corpus = v;
    } else if (k == "paths.format") {
      parse_corpus_format(v);
      cfg.paths.format = v;
    } else if (k == "paths.references") {
      cfg.paths.references = v;
    } else if (k == "paths.out_dir") {
      cfg.paths.out_dir = v;
    } else if (k == "data.split_train") {
      cfg.data.split[0] = to_double(k, v);
    } else if (k == "data.split_valid") {
      cfg.data.split[1] = to_double(k, v);
    } else if (k == "data.split_test") {
      cfg.data.split[2] = to_double(k, v);
    } else if (k == "data.split_seed") {
      try {
        cfg.data.split_seed = std::stoull(v);
      } catch (const std::exception&) {
        throw ConfigError(k + ": expected an integer, got '" + v + "'");
      }
    } else {
      throw ConfigError("unknown key " + k);
    }
  }
  cfg.model = ModelConfig::from_map(model_kv);
  cfg.train = TrainSchedule::from_map(train_kv);
  return cfg;
}

}  // namespace

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> out{
      {"paths.corpus", paths.corpus},
      {"paths.format", paths.format},
      {"paths.references", paths.references},
      {"paths.out_dir", paths.out_dir},
      {"data.split_train", fmt(data.split[0])},
      {"data.split_valid", fmt(data.split[1])},
      {"data.split_test", fmt(data.split[2])},
      {"data.split_seed", std::to_string(data.split_seed)},
  };
  for (const auto& [k, v] : model.to_map()) out["model." + k] = v;
  for (const auto& [k, v] : train.to_map()) out["train." + k] = v;
  return out;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : to_map()) out += k + "=" + v + "\n";
  return out;
}

RunConfig parse_run_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto [k, v] = split_assignment(line, "line " + std::to_string(lineno));
    if (kv.count(k)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key " + k);
    kv[k] = v;
  }
  return from_flat(kv);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

RunConfig apply_overrides(const RunConfig& base, const std::vector<std::string>& overrides) {
  std::map<std::string, std::string> kv = base.to_map();
  for (const auto& o : overrides) {
    auto [k, v] = split_assignment(o, "override");
    if (!kv.count(k)) throw ConfigError("unknown key " + k);
    kv[k] = v;
  }
  return from_flat(kv);
}

}  // namespace summae
