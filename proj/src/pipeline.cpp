// Copyright 2026 The fasr Authors. All Rights Reserved.
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

#include "fasr/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "fasr/checkpoint.hpp"
#include "fasr/error.hpp"
#include "fasr/parallel.hpp"
#include "fasr/synth.hpp"
#include "fasr/trainer.hpp"

namespace fasr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Seed streams derived from the experiment seed.
enum Stream : std::uint64_t {
  kSeedCorpus = 100,  // + 2 * language index (+1 for valid)
  kTargetTrain = 200,
  kTargetValid = 201,
  kTargetTest = 202,
  kLmText = 203,
  kSeedModel = 300,
  kLmModel = 400,
  kAdapt = 500,
};

constexpr std::pair<Stage, std::string_view> kStageNames[] = {
    {Stage::kGenData, "gen-data"}, {Stage::kPrep, "prep"},     {Stage::kTrainSeed, "train-seed"},
    {Stage::kTrainLm, "train-lm"}, {Stage::kAdapt, "adapt"},   {Stage::kDecode, "decode"},
    {Stage::kScore, "score"},      {Stage::kAll, "all"},
};

void say(const PipelineOptions& o, const std::string& line) {
  if (o.log) *o.log << line << std::endl;
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

std::string display(const fs::path& p, const fs::path& root) {
  const fs::path rel = p.lexically_normal().lexically_relative(root.lexically_normal());
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return fs::absolute(p).lexically_normal().generic_string();
}

// config.json plus run.json with the stage, seeds and inputs.
void write_run_files(const fs::path& dir, const ExperimentConfig& config, const PipelineOptions& options,
                     std::string_view stage, const json& seeds, const std::vector<fs::path>& inputs) {
  json in = json::array();
  for (const auto& p : inputs) in.push_back(display(p, options.out));
  write_json(dir / "config.json", to_json(config));
  write_json(dir / "run.json", {{"stage", stage}, {"seed", config.seed}, {"seeds", seeds}, {"inputs", in}});
}

void require(const fs::path& path, std::string_view stage) {
  if (!fs::exists(path)) {
    throw DataError("missing " + path.string() + "; run --stage " + std::string(stage) + " first");
  }
}

std::string lang_of(const ExperimentConfig& c) { return c.data.target.name; }

synth::SyntheticLanguage language(const ExperimentConfig& c, const LanguageSpec& spec) {
  return synth::make_language(spec.name, c.data.pool_seed, spec.seed, spec.alphabet_size, c.data.options);
}

synth::CorpusSpec corpus_spec(const ExperimentConfig& c, int n, std::uint64_t stream, const std::string& prefix) {
  synth::CorpusSpec s;
  s.num_utterances = n;
  s.min_length = c.data.min_length;
  s.max_length = c.data.max_length;
  s.seed = mix_seed(c.seed, stream);
  s.id_prefix = prefix;
  return s;
}

Manifest manifest_at(const fs::path& dir) {
  require(dir / "manifest.jsonl", "gen-data");
  return read_manifest(dir / "manifest.jsonl");
}

std::vector<std::string> transcripts(const Manifest& m) {
  std::vector<std::string> out;
  for (const auto& r : m.records) out.push_back(r.text);
  return out;
}

std::vector<Utterance> load_split(const Workspace& ws, const ExperimentConfig& c, const std::string& split,
                                  bool seed_languages, const FeatureStats& stats, const Vocabulary& vocab) {
  std::vector<Utterance> out;
  auto add = [&](const fs::path& dir) {
    auto u = load_utterances(manifest_at(dir), stats, vocab);
    out.insert(out.end(), std::make_move_iterator(u.begin()), std::make_move_iterator(u.end()));
  };
  if (seed_languages) {
    for (const auto& l : c.data.seed_languages) add(ws.seed_corpus(l.name, split));
  } else {
    add(ws.target_corpus(split));
  }
  return out;
}

Vocabulary load_vocab(const fs::path& path) {
  require(path, "prep");
  return Vocabulary::load(path);
}

FeatureStats load_stats_file(const fs::path& path) {
  require(path, "prep");
  return load_stats(path);
}

EpochCallback epoch_logger(const PipelineOptions& options, std::ofstream& log, const std::string& tag) {
  return [&options, &log, tag](const EpochRecord& r) {
    const json j = {{"epoch", r.epoch},     {"train_loss", r.train_loss},     {"valid_accuracy", r.valid_accuracy},
                    {"epsilon", r.epsilon}, {"wall_seconds", r.wall_seconds}, {"ctc_excluded", r.ctc_excluded}};
    log << j.dump() << '\n';
    log.flush();
    say(options, tag + " " + j.dump());
  };
}

json train_metadata(const TrainResult& r, std::uint64_t seed) {
  return {{"epochs", r.history.size()},
          {"best_valid_accuracy", r.best_accuracy},
          {"diverged", r.diverged},
          {"seed", seed}};
}

void check_diverged(const TrainResult& r, const fs::path& saved) {
  if (r.diverged) {
    throw NumericalError("training diverged (non-finite loss); best model so far saved to " + saved.string());
  }
}

fs::path lm_input(const PipelineOptions& o, const Workspace& ws) {
  if (o.lm) return *o.lm;
  require(ws.lm_model(), "train-lm");
  return ws.lm_model();
}

}  // namespace

std::string_view to_string(Stage stage) {
  for (const auto& [s, name] : kStageNames)
    if (s == stage) return name;
  return "?";
}

Stage parse_stage(std::string_view text) {
  for (const auto& [s, name] : kStageNames)
    if (name == text) return s;
  throw ConfigError("unknown stage '" + std::string(text) +
                    "' (expected gen-data, prep, train-seed, train-lm, adapt, decode, score or all)");
}

fs::path Workspace::seed_corpus(const std::string& language, const std::string& split) const {
  return data() / "seed" / language / split;
}
fs::path Workspace::target_corpus(const std::string& split) const { return data() / "target" / split; }
fs::path Workspace::adapt_dir(FusionMode mode) const { return root / ("adapt-" + std::string(to_string(mode))); }
fs::path Workspace::decode_dir(FusionMode mode) const { return root / ("decode-" + std::string(to_string(mode))); }
fs::path Workspace::score_dir(FusionMode mode) const { return root / ("score-" + std::string(to_string(mode))); }

void gen_data(const ExperimentConfig& c, const PipelineOptions& o) {
  const Workspace ws{o.out};
  json seeds = json::object();
  for (std::size_t i = 0; i < c.data.seed_languages.size(); ++i) {
    const auto& spec = c.data.seed_languages[i];
    const auto lang = language(c, spec);
    const std::uint64_t train_stream = kSeedCorpus + 2 * i;
    synth::write_corpus(lang, corpus_spec(c, c.data.seed_train_utterances, train_stream, spec.name + "-train"),
                        ws.seed_corpus(spec.name, "train"));
    synth::write_corpus(lang, corpus_spec(c, c.data.seed_valid_utterances, train_stream + 1, spec.name + "-valid"),
                        ws.seed_corpus(spec.name, "valid"));
    seeds[spec.name] = {{"train", mix_seed(c.seed, train_stream)}, {"valid", mix_seed(c.seed, train_stream + 1)}};
    say(o, "gen-data: seed language " + spec.name);
  }
  const auto& t = c.data.target;
  const auto target = language(c, t);
  synth::write_corpus(target, corpus_spec(c, c.data.target_train_utterances, kTargetTrain, t.name + "-train"),
                      ws.target_corpus("train"));
  synth::write_corpus(target, corpus_spec(c, c.data.target_valid_utterances, kTargetValid, t.name + "-valid"),
                      ws.target_corpus("valid"));
  synth::write_corpus(target, corpus_spec(c, c.data.target_test_utterances, kTargetTest, t.name + "-test"),
                      ws.target_corpus("test"));
  const int lm_lines = c.data.lm_text_factor * c.data.target_train_utterances;
  if (lm_lines > 0) {
    synth::write_text(ws.lm_text(), synth::sample_texts(target, corpus_spec(c, lm_lines, kLmText, t.name + "-lm")));
  } else {
    synth::write_text(ws.lm_text(), {});
  }
  seeds[t.name] = {{"train", mix_seed(c.seed, kTargetTrain)},
                   {"valid", mix_seed(c.seed, kTargetValid)},
                   {"test", mix_seed(c.seed, kTargetTest)},
                   {"lm_text", mix_seed(c.seed, kLmText)}};
  say(o, "gen-data: target language " + t.name + " with " + std::to_string(lm_lines) + " LM-only sentences");
  write_run_files(ws.data(), c, o, "gen-data", seeds, {});
}

void prep(const ExperimentConfig& c, const PipelineOptions& o) {
  const Workspace ws{o.out};
  std::vector<LanguageCorpus> seed_text;
  std::vector<Features> frames;
  std::vector<fs::path> inputs;
  for (const auto& l : c.data.seed_languages) {
    const fs::path dir = ws.seed_corpus(l.name, "train");
    const Manifest m = manifest_at(dir);
    seed_text.push_back({l.name, transcripts(m)});
    for (const auto& r : m.records) frames.push_back(load_utterance(m, r));
    inputs.push_back(dir / "manifest.jsonl");
  }
  const Vocabulary seed_vocab = Vocabulary::build(seed_text);

  const Manifest target_train = manifest_at(ws.target_corpus("train"));
  require(ws.lm_text(), "gen-data");
  std::vector<std::string> target_text = transcripts(target_train);
  for (auto& line : synth::read_text(ws.lm_text())) target_text.push_back(std::move(line));
  const LanguageCorpus target_corpus{lang_of(c), target_text};
  const Vocabulary target_vocab = seed_vocab.extended(std::span(&target_corpus, 1));
  inputs.push_back(ws.target_corpus("train") / "manifest.jsonl");
  inputs.push_back(ws.lm_text());

  fs::create_directories(ws.prep());
  seed_vocab.save(ws.seed_vocab());
  target_vocab.save(ws.target_vocab());
  save_stats(ws.stats(), compute_stats(frames));
  say(o, "prep: seed vocabulary " + std::to_string(seed_vocab.size()) + " tokens, target vocabulary " +
             std::to_string(target_vocab.size()) + " tokens");
  write_run_files(ws.prep(), c, o, "prep", json::object(), inputs);
}

void train_seed(const ExperimentConfig& c, const PipelineOptions& o) {
  const Workspace ws{o.out};
  const Vocabulary vocab = load_vocab(ws.seed_vocab());
  const FeatureStats stats = load_stats_file(ws.stats());
  const auto train_set = load_split(ws, c, "train", true, stats, vocab);
  const auto valid_set = load_split(ws, c, "valid", true, stats, vocab);

  const std::uint64_t init_seed = mix_seed(c.seed, kSeedModel);
  const std::uint64_t train_seed = mix_seed(init_seed, 1);
  const AsrModel initial = make_asr_model(c.model, vocab, init_seed);
  fs::create_directories(ws.seed_dir());
  std::ofstream log(ws.seed_dir() / "train_log.jsonl", std::ios::binary);
  say(o, "train-seed: " + std::to_string(train_set.size()) + " utterances, " +
             std::to_string(initial.params.total_size()) + " parameters");
  const TrainResult r = train(initial, all_trainable(initial.params), train_set, valid_set, c.seed_train, train_seed,
                              epoch_logger(o, log, "train-seed"));
  save_checkpoint(ws.seed_model(), r.model, train_metadata(r, train_seed));
  write_run_files(ws.seed_dir(), c, o, "train-seed", {{"init", init_seed}, {"train", train_seed}},
                  {ws.seed_vocab(), ws.stats()});
  check_diverged(r, ws.seed_model());
}

void train_lm_stage(const ExperimentConfig& c, const PipelineOptions& o) {
  const Workspace ws{o.out};
  const Vocabulary vocab = load_vocab(ws.target_vocab());
  require(ws.lm_text(), "gen-data");
  std::vector<std::string> lines = synth::read_text(ws.lm_text());
  for (auto& t : transcripts(manifest_at(ws.target_corpus("train")))) lines.push_back(std::move(t));
  const auto train_sentences = encode_lines(vocab, lines, lang_of(c));
  const auto valid_sentences = encode_lines(vocab, transcripts(manifest_at(ws.target_corpus("valid"))), lang_of(c));

  LanguageModel lm;
  lm.config = c.lm;
  lm.config.vocab_size = vocab.size();
  lm.vocab = vocab;
  LmTrainConfig options = c.lm_train;
  options.seed = mix_seed(c.seed, kLmModel);
  say(o, "train-lm: " + std::to_string(train_sentences.size()) + " sentences");
  const LmTrainResult r = train_lm(lm.config, train_sentences, valid_sentences, options);
  lm.params = r.params;

  fs::create_directories(ws.lm_dir());
  std::ofstream log(ws.lm_dir() / "train_log.jsonl", std::ios::binary);
  for (const auto& e : r.history) {
    const json j = {{"epoch", e.epoch},
                    {"train_perplexity", e.train_perplexity},
                    {"valid_perplexity", e.valid_perplexity},
                    {"learning_rate", e.learning_rate}};
    log << j.dump() << '\n';
    say(o, "train-lm " + j.dump());
  }
  save_checkpoint(ws.lm_model(), lm,
                  {{"epochs", r.history.size()}, {"valid_perplexity", r.valid_perplexity}, {"seed", options.seed}});
  write_run_files(ws.lm_dir(), c, o, "train-lm", {{"train", options.seed}},
                  {ws.target_vocab(), ws.lm_text(), ws.target_corpus("train") / "manifest.jsonl"});
}

void adapt_stage(const ExperimentConfig& c, const PipelineOptions& o) {
  const Workspace ws{o.out};
  const FusionMode mode = c.fusion;
  if (mode != FusionMode::kNone && !o.lm) {
    throw ConfigError("adapt with --fusion " + std::string(to_string(mode)) + " requires --lm");
  }
  const fs::path seed_path = o.seed_ckpt ? *o.seed_ckpt : ws.seed_model();
  require(seed_path, "train-seed");
  const Vocabulary vocab = load_vocab(ws.target_vocab());
  const FeatureStats stats = load_stats_file(ws.stats());
  const AsrModel seed_model = load_asr_checkpoint(seed_path);
  std::optional<LanguageModel> lm;
  if (o.lm) {
    require(*o.lm, "train-lm");
    lm = load_lm_checkpoint(*o.lm);
    if (!(lm->vocab == vocab)) throw ConfigError("LM vocabulary differs from the target vocabulary");
  }
  const auto train_set = load_split(ws, c, "train", false, stats, vocab);
  const auto valid_set = load_split(ws, c, "valid", false, stats, vocab);

  const fs::path dir = ws.adapt_dir(mode);
  fs::create_directories(dir);
  std::ofstream log(dir / "train_log.jsonl", std::ios::binary);
  const std::uint64_t seed = mix_seed(c.seed, kAdapt);
  say(o, "adapt: fusion " + std::string(to_string(mode)) + ", " + std::to_string(train_set.size()) + " utterances");
  const AdaptResult r = adapt(seed_model, vocab, mode, lm ? &*lm : nullptr, c.fusion_layer, train_set, valid_set,
                              c.adapt_train, seed, epoch_logger(o, log, "adapt"));
  json init = {{"copied", r.init.copied}, {"initialized", r.init.initialized}, {"frozen", r.init.frozen}};
  std::vector<fs::path> inputs = {seed_path, ws.target_vocab(), ws.stats()};
  if (o.lm) inputs.push_back(*o.lm);
  if (mode == FusionMode::kDeep) {
    save_checkpoint(dir / "stage1.ckpt", r.stage1.model, train_metadata(r.stage1, seed));
    check_diverged(r.stage1, dir / "stage1.ckpt");
    save_checkpoint(dir / "model.ckpt", r.stage2.model, train_metadata(r.stage2, seed));
    write_json(dir / "transfer.json", init);
    write_run_files(dir, c, o, "adapt", {{"adapt", seed}}, inputs);
    check_diverged(r.stage2, dir / "model.ckpt");
    return;
  }
  save_checkpoint(dir / "model.ckpt", r.stage1.model, train_metadata(r.stage1, seed));
  write_json(dir / "transfer.json", init);
  write_run_files(dir, c, o, "adapt", {{"adapt", seed}}, inputs);
  check_diverged(r.stage1, dir / "model.ckpt");
}

void decode_stage(const ExperimentConfig& c, const PipelineOptions& o) {
  const Workspace ws{o.out};
  const FusionMode mode = c.fusion;
  const fs::path model_path = ws.adapted_model(mode);
  require(model_path, "adapt --fusion " + std::string(to_string(mode)));
  const AsrModel model = load_asr_checkpoint(model_path);
  const FeatureStats stats = load_stats_file(ws.stats());
  std::vector<fs::path> inputs = {model_path, ws.stats()};
  std::optional<LanguageModel> lm;
  if (mode == FusionMode::kShallow) {
    const fs::path p = lm_input(o, ws);
    lm = load_lm_checkpoint(p);
    inputs.push_back(p);
  }
  const Manifest test = manifest_at(ws.target_corpus("test"));
  auto utts = load_utterances(test, stats, model.vocab);
  std::sort(utts.begin(), utts.end(), [](const Utterance& a, const Utterance& b) { return a.id < b.id; });

  std::vector<std::vector<ScoredHypothesis>> results(utts.size());
  parallel_for(utts.size(), resolve_threads(c.adapt_train.threads), [&](std::size_t i) {
    results[i] = beam_search(model, lm ? &*lm : nullptr, utts[i].features, c.decode, utts[i].language);
  });
  std::vector<NBestRecord> records;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    for (std::size_t k = 0; k < results[i].size(); ++k) {
      const auto& h = results[i][k];
      records.push_back({utts[i].id, static_cast<int>(k), model.vocab.decode(h.tokens), h.att, h.ctc, h.lm, h.score});
    }
  }
  const fs::path dir = ws.decode_dir(mode);
  write_nbest(dir / "nbest.jsonl", records);
  write_run_files(dir, c, o, "decode", json::object(), inputs);
  say(o, "decode: " + std::to_string(utts.size()) + " utterances -> " + (dir / "nbest.jsonl").string());
}

ScoreReport score_stage(const ExperimentConfig& c, const PipelineOptions& o) {
  const Workspace ws{o.out};
  const FusionMode mode = c.fusion;
  require(ws.nbest(mode), "decode --fusion " + std::string(to_string(mode)));
  const Manifest test = manifest_at(ws.target_corpus("test"));
  const ScoreReport report = score(test.records, read_nbest(ws.nbest(mode)));
  const fs::path dir = ws.score_dir(mode);
  write_json(dir / "report.json", report.to_json());
  write_run_files(dir, c, o, "score", json::object(), {ws.nbest(mode), ws.target_corpus("test") / "manifest.jsonl"});
  say(o, "score: fusion " + std::string(to_string(mode)) + " WER " + std::to_string(report.wer()) + " CER " +
             std::to_string(report.cer()));
  return report;
}

void run_pipeline(const ExperimentConfig& config, const PipelineOptions& options) {
  config.validate();
  switch (options.stage) {
    case Stage::kGenData: return gen_data(config, options);
    case Stage::kPrep: return prep(config, options);
    case Stage::kTrainSeed: return train_seed(config, options);
    case Stage::kTrainLm: return train_lm_stage(config, options);
    case Stage::kAdapt: return adapt_stage(config, options);
    case Stage::kDecode: return decode_stage(config, options);
    case Stage::kScore: score_stage(config, options); return;
    case Stage::kAll: break;
  }
  gen_data(config, options);
  prep(config, options);
  train_seed(config, options);
  PipelineOptions with_lm = options;
  if (config.fusion != FusionMode::kNone) {
    train_lm_stage(config, options);
    if (!with_lm.lm) with_lm.lm = Workspace{options.out}.lm_model();
  }
  adapt_stage(config, with_lm);
  decode_stage(config, with_lm);
  score_stage(config, with_lm);
}

}  // namespace fasr
