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


// summae: command-line driver. Every command reads a flat key=value config
// (--config), applies --set overrides, validates its inputs up front and
// echoes the effective config next to its outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "summae/checkpoint.hpp"
#include "summae/corpus.hpp"
#include "summae/csv.hpp"
#include "summae/error.hpp"
#include "summae/eval.hpp"
#include "summae/noising.hpp"
#include "summae/run_config.hpp"
#include "summae/subword.hpp"
#include "summae/trainer.hpp"

namespace fs = std::filesystem;
using namespace summae;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

RunConfig effective_config(const Common& c) {
  if (c.config_path.empty()) throw ConfigError("--config is required");
  if (!fs::is_regular_file(c.config_path)) throw ConfigError("config file not found: " + c.config_path);
  RunConfig cfg = apply_overrides(load_run_config(c.config_path), c.overrides);
  if (cfg.paths.out_dir.empty()) throw ConfigError("paths.out_dir is not set");
  return cfg;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " is not set");
  if (!fs::is_regular_file(path)) throw DataError(what + " not found: " + path);
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

void echo_config(const RunConfig& cfg, const std::string& command) {
  write_file(fs::path(cfg.paths.out_dir) / (command + ".config"), cfg.to_text());
}

fs::path vocab_path(const RunConfig& cfg) { return fs::path(cfg.paths.out_dir) / "vocab.txt"; }
fs::path split_path(const RunConfig& cfg, const std::string& name) {
  return fs::path(cfg.paths.out_dir) / ("split_" + name + ".txt");
}

std::vector<Story> load_corpus(const RunConfig& cfg) {
  return load_stories(cfg.paths.corpus, parse_corpus_format(cfg.paths.format));
}

// Selects the stories listed in a split manifest, in manifest order.
std::vector<Story> load_split(const RunConfig& cfg, const std::vector<Story>& corpus, const std::string& name) {
  const fs::path path = split_path(cfg, name);
  require_file(path.string(), "split manifest (run `summae prepare` first)");
  std::map<std::string, const Story*> by_id;
  for (const auto& s : corpus) by_id.emplace(s.id, &s);
  std::ifstream in(path);
  std::vector<Story> out;
  std::string id;
  while (std::getline(in, id)) {
    if (id.empty()) continue;
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError(path.string() + ": story '" + id + "' is not in the corpus");
    out.push_back(*it->second);
  }
  return out;
}

ReferenceMap maybe_references(const RunConfig& cfg) {
  if (cfg.paths.references.empty()) return {};
  return load_references(cfg.paths.references);
}

// Stories from --input when given, otherwise from a prepared split.
std::vector<Story> select_stories(const RunConfig& cfg, const std::string& input, const std::string& split) {
  if (!input.empty()) return load_stories(input, parse_corpus_format(cfg.paths.format));
  if (split != "train" && split != "valid" && split != "test")
    throw ConfigError("--split must be train, valid or test, got '" + split + "'");
  return load_split(cfg, load_corpus(cfg), split);
}

// ---- prepare ---------------------------------------------------------------

int cmd_prepare(const Common& c) {
  const RunConfig cfg = effective_config(c);
  require_file(cfg.paths.corpus, "paths.corpus");
  if (!cfg.paths.references.empty()) require_file(cfg.paths.references, "paths.references");

  const auto stories = load_corpus(cfg);
  if (stories.empty()) throw DataError(cfg.paths.corpus + ": no stories");
  const CorpusSplit split = split_corpus(stories, cfg.data.split, cfg.data.split_seed);
  const Vocab vocab = train_vocab(split.train, cfg.model.vocab_size);

  fs::create_directories(cfg.paths.out_dir);
  echo_config(cfg, "prepare");
  vocab.save(vocab_path(cfg).string());
  for (const auto& [name, part] : {std::pair{"train", &split.train}, {"valid", &split.valid}, {"test", &split.test}}) {
    std::string ids;
    for (const auto& s : *part) ids += s.id + "\n";
    write_file(split_path(cfg, name), ids);
  }
  std::fprintf(stderr, "prepared %zu stories (train %zu, valid %zu, test %zu), vocab %d (%d merges)\n",
               stories.size(), split.train.size(), split.valid.size(), split.test.size(), vocab.size(),
               vocab.num_merges());
  return kExitOk;
}

// ---- pretrain / train ------------------------------------------------------

struct TrainArgs {
  std::string from;  // checkpoint to continue from
};

int run_training(const Common& c, const TrainArgs& a, bool pretrain) {
  const std::string name = pretrain ? "pretrain" : "train";
  const RunConfig cfg = effective_config(c);
  cfg.train.validate();
  require_file(cfg.paths.corpus, "paths.corpus");
  require_file(vocab_path(cfg).string(), "vocab (run `summae prepare` first)");
  for (const char* s : {"train", "valid"}) require_file(split_path(cfg, s).string(), "split manifest");
  if (!cfg.paths.references.empty()) require_file(cfg.paths.references, "paths.references");
  if (!a.from.empty()) require_file(a.from, "--from checkpoint");

  const Vocab vocab = Vocab::load(vocab_path(cfg).string());
  const auto corpus = load_corpus(cfg);
  const auto train = load_split(cfg, corpus, "train");
  const ReferenceMap refs = maybe_references(cfg);
  std::vector<Story> valid;
  if (!pretrain && !refs.empty()) {
    for (auto& s : load_split(cfg, corpus, "valid"))
      if (refs.count(s.id)) valid.push_back(std::move(s));
  }

  Trainer trainer(cfg.model, cfg.train, vocab, train, valid, refs);
  const bool resuming = !a.from.empty();
  if (resuming) trainer.restore(load_checkpoint(a.from).state);

  echo_config(cfg, name);
  const fs::path ckpt_path = fs::path(cfg.paths.out_dir) / "checkpoints" / (name + ".ckpt");
  const fs::path log_path = fs::path(cfg.paths.out_dir) / "logs" / (name + ".log");
  fs::create_directories(ckpt_path.parent_path());
  fs::create_directories(log_path.parent_path());
  std::ofstream log(log_path, resuming ? std::ios::app : std::ios::trunc);

  auto save = [&] { save_checkpoint(ckpt_path.string(), Checkpoint{cfg.train, trainer.state()}); };
  const long every = std::max<long>(1, cfg.train.eval_every);
  auto on_step = [&](const StepRecord& r) {
    log << r.to_log_line() << '\n';
    if (r.step % every == 0) {
      log.flush();
      std::fprintf(stderr, "%s\n", r.to_log_line().c_str());
      save();
    }
  };
  if (pretrain) {
    trainer.run_pretrain(on_step);
  } else {
    trainer.run_finetune(on_step);
  }
  save();
  const auto& st = trainer.state();
  std::fprintf(stderr, "%s done: step %ld (pretrain %ld, finetune %ld)%s -> %s\n", name.c_str(), st.step,
               st.pretrain_done, st.finetune_done, st.stopped ? ", early stopped" : "",
               ckpt_path.string().c_str());
  return kExitOk;
}

// ---- summarize -------------------------------------------------------------

struct IoArgs {
  std::string checkpoint;
  std::string input;
  std::string split = "test";
  std::string output;
};

int cmd_summarize(const Common& c, const IoArgs& a) {
  const RunConfig cfg = effective_config(c);
  require_file(a.checkpoint, "--checkpoint");
  require_file(vocab_path(cfg).string(), "vocab");
  if (!a.input.empty()) require_file(a.input, "--input");
  if (a.output.empty()) throw ConfigError("--output is required");

  const Vocab vocab = Vocab::load(vocab_path(cfg).string());
  const Params<float> params = load_model(a.checkpoint);
  if (params.config.vocab_size != vocab.size()) throw ConfigError("checkpoint vocab size differs from the vocab file");
  const auto stories = select_stories(cfg, a.input, a.split);

  std::vector<std::string> rows(stories.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t i = 0; i < stories.size(); ++i)
    rows[i] = truncate_summary(summarize(params, vocab, encode_story(stories[i], vocab)));

  std::string out;
  for (std::size_t i = 0; i < stories.size(); ++i) {
    std::string text = rows[i];
    for (char& ch : text)
      if (ch == '\t' || ch == '\n' || ch == '\r') ch = ' ';
    out += stories[i].id + "\t" + text + "\n";
  }
  echo_config(cfg, "summarize");
  write_file(a.output, out);
  std::fprintf(stderr, "wrote %zu summaries to %s\n", stories.size(), a.output.c_str());
  return kExitOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvalArgs {
  std::string mode;
  std::string summaries;
  std::size_t index = 1;
  std::string input;
  std::string split = "test";
  std::string report;
};

std::map<std::string, std::string> read_summaries(const std::string& path) {
  std::map<std::string, std::string> out;
  for (const auto& rec : csv::parse(csv::read_file(path), '\t', false)) {
    if (rec.fields.empty() || (rec.fields.size() == 1 && rec.fields[0].empty())) continue;
    if (rec.fields.size() != 2)
      throw DataError(path + ":" + std::to_string(rec.line) + ": expected storyid<TAB>summary");
    if (!out.emplace(rec.fields[0], rec.fields[1]).second)
      throw DataError(path + ": duplicate story id '" + rec.fields[0] + "'");
  }
  return out;
}

void print_row(const EvalReport& r) {
  std::printf("%-16s R1 %5.1f  RL %5.1f  words %5.1f  sentences %4.1f  n=%zu\n", r.name.c_str(), r.rouge1,
              r.rougeL, r.mean_words, r.mean_sentences, r.examples.size());
}

int cmd_evaluate(const Common& c, const EvalArgs& a) {
  const RunConfig cfg = effective_config(c);
  require_file(cfg.paths.references, "paths.references");
  if (!a.input.empty()) require_file(a.input, "--input");
  if (a.mode == "model") require_file(a.summaries, "--summaries");

  const ReferenceMap refs = load_references(cfg.paths.references);
  const auto stories = select_stories(cfg, a.input, a.split);
  if (const auto missing = missing_references(stories, refs); !missing.empty()) {
    std::string ids;
    for (const auto& id : missing) ids += (ids.empty() ? "" : ", ") + id;
    throw DataError("no references for: " + ids);
  }

  std::vector<EvalReport> reports;
  if (a.mode == "model") {
    const auto sums = read_summaries(a.summaries);
    std::vector<std::string> candidates;
    std::vector<std::string> missing;
    for (const auto& s : stories) {
      auto it = sums.find(s.id);
      if (it == sums.end()) {
        missing.push_back(s.id);
      } else {
        candidates.push_back(it->second);
      }
    }
    if (!missing.empty()) {
      std::string ids;
      for (const auto& id : missing) ids += (ids.empty() ? "" : ", ") + id;
      throw DataError(a.summaries + ": no summary for: " + ids);
    }
    reports.push_back(score_candidates("model", stories, candidates, refs));
  } else if (a.mode == "extract") {
    if (a.index < 1 || a.index > kSentencesPerStory) throw ConfigError("--index must be in [1, 5]");
    reports.push_back(extract_baseline(stories, refs, a.index));
  } else if (a.mode == "oracle") {
    reports.push_back(extract_oracle(stories, refs));
  } else if (a.mode == "human") {
    auto hb = human_bounds(stories, refs);
    reports.push_back(std::move(hb.average));
    reports.push_back(std::move(hb.maximum));
  } else {
    throw ConfigError("--mode must be model, extract, oracle or human, got '" + a.mode + "'");
  }

  const fs::path dir = a.report.empty() ? fs::path(cfg.paths.out_dir) / "reports" : fs::path(a.report);
  echo_config(cfg, "evaluate");
  for (const auto& r : reports) {
    print_row(r);
    write_file(dir / (r.name + ".jsonl"), r.to_jsonl());
  }
  return kExitOk;
}

// ---- latents ---------------------------------------------------------------

struct LatentArgs {
  IoArgs io;
  std::size_t sample = 0;
  std::uint64_t seed = 0;
};

int cmd_export_latents(const Common& c, const LatentArgs& a) {
  const RunConfig cfg = effective_config(c);
  require_file(a.io.checkpoint, "--checkpoint");
  require_file(vocab_path(cfg).string(), "vocab");
  if (!a.io.input.empty()) require_file(a.io.input, "--input");
  if (a.io.output.empty()) throw ConfigError("--output is required");

  const Vocab vocab = Vocab::load(vocab_path(cfg).string());
  const Params<float> params = load_model(a.io.checkpoint);
  const auto stories = select_stories(cfg, a.io.input, a.io.split);
  const std::size_t n = a.sample == 0 ? stories.size() : a.sample;
  if (n > stories.size())
    throw ConfigError("--sample " + std::to_string(n) + " exceeds the " + std::to_string(stories.size()) +
                      " available stories");
  const auto records = export_latents(params, vocab, stories, n, a.seed);
  echo_config(cfg, "export-latents");
  write_file(a.io.output, latents_to_tsv(records));
  std::fprintf(stderr, "wrote %zu latent records to %s\n", records.size(), a.io.output.c_str());
  return kExitOk;
}

int cmd_probe(const std::string& latents, std::uint64_t seed) {
  require_file(latents, "--latents");
  const double acc = segregation_probe(latents_from_tsv(csv::read_file(latents)), seed);
  std::printf("%s\n", nlohmann::json{{"probe_accuracy", acc}, {"seed", seed}}.dump().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"summae: unsupervised abstractive summarization with a denoising auto-encoder"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_path, "run config (key=value lines)")->required();
    sub->add_option("-s,--set", common.overrides, "override a config key, e.g. --set train.seed=3");
  };

  auto* prepare = app.add_subcommand("prepare", "train the subword vocabulary and write split manifests");
  add_common(prepare);

  TrainArgs pre_args;
  auto* pretrain = app.add_subcommand("pretrain", "run the self-supervised pre-training phase");
  add_common(pretrain);
  pretrain->add_option("--from", pre_args.from, "continue from this checkpoint");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "run auto-encoder fine-tuning (with the critic if enabled)");
  add_common(train);
  train->add_option("--from", train_args.from, "start from (or resume) this checkpoint");

  IoArgs sum_args;
  auto* summarize_cmd = app.add_subcommand("summarize", "decode one sentence per story");
  add_common(summarize_cmd);
  summarize_cmd->add_option("--checkpoint", sum_args.checkpoint)->required();
  summarize_cmd->add_option("--input", sum_args.input, "stories file in paths.format (default: a split)");
  summarize_cmd->add_option("--split", sum_args.split, "prepared split to read without --input")
      ->capture_default_str();
  summarize_cmd->add_option("-o,--output", sum_args.output, "TSV: storyid<TAB>summary")->required();

  EvalArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "score summaries or baselines against references");
  add_common(evaluate);
  evaluate->add_option("--mode", eval_args.mode, "model, extract, oracle or human")->required();
  evaluate->add_option("--summaries", eval_args.summaries, "summaries TSV for --mode model");
  evaluate->add_option("--index", eval_args.index, "sentence index for --mode extract")->capture_default_str();
  evaluate->add_option("--input", eval_args.input, "stories file in paths.format (default: a split)");
  evaluate->add_option("--split", eval_args.split)->capture_default_str();
  evaluate->add_option("--report-dir", eval_args.report, "where to write JSON-lines reports");

  LatentArgs lat_args;
  auto* latents = app.add_subcommand("export-latents", "write sentence and paragraph latents as TSV");
  add_common(latents);
  latents->add_option("--checkpoint", lat_args.io.checkpoint)->required();
  latents->add_option("--input", lat_args.io.input);
  latents->add_option("--split", lat_args.io.split)->capture_default_str();
  latents->add_option("--sample", lat_args.sample, "number of stories (0 = all)")->capture_default_str();
  latents->add_option("--seed", lat_args.seed)->capture_default_str();
  latents->add_option("-o,--output", lat_args.io.output)->required();

  std::string probe_latents;
  std::uint64_t probe_seed = 0;
  auto* probe = app.add_subcommand("probe-segregation", "held-out accuracy of a sentence/paragraph classifier");
  probe->add_option("--latents", probe_latents)->required();
  probe->add_option("--seed", probe_seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*prepare) return cmd_prepare(common);
    if (*pretrain) return run_training(common, pre_args, true);
    if (*train) return run_training(common, train_args, false);
    if (*summarize_cmd) return cmd_summarize(common, sum_args);
    if (*evaluate) return cmd_evaluate(common, eval_args);
    if (*latents) return cmd_export_latents(common, lat_args);
    if (*probe) return cmd_probe(probe_latents, probe_seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  }
  return kExitConfig;
}
