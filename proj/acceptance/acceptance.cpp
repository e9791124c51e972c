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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
//
//   fasr_acceptance [--work DIR] [--only N]...

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "fasr/checkpoint.hpp"
#include "fasr/ctc.hpp"
#include "fasr/decoder.hpp"
#include "fasr/fusion.hpp"
#include "fasr/pipeline.hpp"
#include "fasr/synth.hpp"
#include "fasr/trainer.hpp"
#include "fasr/utf8.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace fasr;
using testing::random_log_softmax;
using testing::random_matrix;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<int> random_labels(int max_len, int v, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(0, max_len), tok(1, v - 1);
  std::vector<int> y(static_cast<std::size_t>(len(rng)));
  for (int& t : y) t = tok(rng);
  return y;
}

// 1. CTC loss against brute-force alignment enumeration.
Outcome ctc_oracle() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> tdist(1, 6), vdist(2, 3);
  double worst = 0.0;
  int finite_cases = 0;
  for (int c = 0; c < 100; ++c) {
    const int v = vdist(rng);
    const Matrix lp = random_log_softmax(tdist(rng), v, rng);
    const std::vector<int> y = random_labels(3, v, rng);
    const double oracle = -testing::brute_force_ctc_log_likelihood(lp, y);
    const double loss = ctc::ctc_loss(Var::constant(lp), y).item();
    if (std::isinf(oracle) || std::isinf(loss)) {
      if (!(std::isinf(oracle) && std::isinf(loss))) worst = INFINITY;
      continue;
    }
    ++finite_cases;
    worst = std::max(worst, std::abs(loss - oracle));
  }
  return {worst < 1e-6, "max |diff| " + fmt(worst) + " over 100 cases (" + std::to_string(finite_cases) +
                            " realizable)"};
}

// 2. Incremental prefix scores telescope to the forward likelihood.
Outcome prefix_consistency() {
  std::mt19937_64 rng(1002);
  std::uniform_int_distribution<int> tdist(1, 8);
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const int v = 5;  // blank, three labels, eos
    const int eos = v - 1;
    const Matrix lp = random_log_softmax(tdist(rng), v, rng);
    const std::vector<int> y = random_labels(4, v - 1, rng);
    ctc::PrefixState s = ctc::initial_prefix_state(lp);
    double total = 0.0;
    for (int tok : y) {
      const auto ext = ctc::extend_prefix(s, tok, lp, eos);
      total += ext.increment;
      s = ext.state;
    }
    total += ctc::extend_prefix(s, eos, lp, eos).increment;
    const double forward = ctc::log_likelihood(lp, y);
    if (std::isinf(forward) || std::isinf(total)) {
      if (!(std::isinf(forward) && std::isinf(total))) worst = INFINITY;
      continue;
    }
    worst = std::max(worst, std::abs(total - forward));
  }
  return {worst < 1e-9, "max |diff| " + fmt(worst) + " over 100 cases"};
}

ParameterSet subset(const ParameterSet& all, const std::vector<std::string>& prefixes) {
  ParameterSet out;
  for (const auto& name : all.names())
    for (const auto& p : prefixes)
      if (name.starts_with(p)) out.add(name, all.at(name));
  return out;
}

Utterance toy_utterance(const Vocabulary& v, const std::string& text, int frames, std::mt19937_64& rng) {
  return {"toy-" + text, "xx", random_matrix(frames, 3, rng), v.encode(text, "xx")};
}

// 3. Finite-difference gradient checks.
Outcome gradient_checks() {
  const Vocabulary vocab = testing::tiny_vocab();
  const S2SConfig c = testing::tiny_s2s_config(vocab.size());
  std::map<std::string, double> worst;
  bool finite = true;
  auto record = [&](const std::string& what, const GradcheckResult& r) {
    finite = finite && r.finite;
    worst[what] = std::max(worst[what], r.max_relative_error);
  };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(5000 + seed);
    const AsrModel model = make_asr_model(c, vocab, 100 + seed);

    const Matrix h = random_matrix(4, c.encoder_dim(), rng);
    const Matrix s = random_matrix(1, c.decoder.units, rng);
    const Matrix prev = random_log_softmax(1, 4, rng);
    Matrix alpha(1, 4);
    for (int t = 0; t < 4; ++t) alpha(0, t) = std::exp(prev(0, t));
    const Matrix wc = random_matrix(1, c.encoder_dim(), rng);
    const Matrix wa = random_matrix(1, 4, rng);
    record("attention", testing::gradcheck_scope(subset(model.params, {"attention."}), [&](ParamScope& scope) {
             const AttentionMemory mem = prepare_attention(scope, Var::constant(h));
             const AttentionResult a = attend(scope, c, mem, Var::constant(s), Var::constant(alpha));
             return add(sum(mul(a.context, Var::constant(wc))), sum(mul(a.weights, Var::constant(wa))));
           }));

    const int target = 4 + static_cast<int>(seed % 4);
    record("decoder", testing::gradcheck_scope(
                          subset(model.params, {"attention.", "decoder.", "output."}), [&](ParamScope& scope) {
                            const AttentionMemory mem = prepare_attention(scope, Var::constant(h));
                            DecoderState st = initial_decoder_state(c, mem);
                            st = decode_step(scope, c, st, kSos, mem);
                            st = decode_step(scope, c, st, target, mem);
                            return sum(pick(log_softmax(output_logits(scope, st.top())), std::vector<int>{target}));
                          }));

    ParameterSet fusion;
    add_fusion_params(fusion, 5, 6, 9, FusionConfig{4, 3}, rng);
    fusion.add("input.s", random_matrix(1, 5, rng));
    fusion.add("input.d", random_matrix(1, 6, rng));
    const int pick_col = static_cast<int>(seed % 9);
    record("cold-fusion head", testing::gradcheck_scope(fusion, [&](ParamScope& scope) {
             const Var lp = cold_fusion_log_probs(scope, scope.get("input.s"), scope.get("input.d"));
             return sum(pick(lp, std::vector<int>{pick_col}));
           }));

    std::uniform_int_distribution<int> tdist(1, 6);
    Var x = Var::leaf(random_matrix(tdist(rng), 4, rng), true);
    std::vector<int> y = random_labels(3, 4, rng);
    while (!ctc::realizable(y, x.rows())) y.pop_back();
    std::vector<Var> xs = {x};
    record("ctc loss", gradcheck([&] { return ctc::ctc_loss(log_softmax(x), y); }, xs));

    AsrModel joint_model = model;
    if (seed % 2 == 1) {
      const LanguageModel lm = testing::random_lm(vocab, testing::tiny_lm_config(vocab.size()), 200 + seed);
      joint_model = attach_fusion(model, lm, FusionMode::kCold, FusionConfig{3, 4}, 300 + seed).model;
    }
    const std::vector<Utterance> batch = {toy_utterance(vocab, "ab", 4, rng), toy_utterance(vocab, "cd", 4, rng)};
    record("joint loss", testing::gradcheck_scope(joint_model.params, [&](ParamScope& scope) {
             return joint_loss(scope, joint_model, batch, {0.5, 0.0, 0.0, 0}).loss;
           }));
  }
  bool pass = finite;
  std::string detail;
  for (const auto& [what, err] : worst) {
    pass = pass && err < 1e-4;
    detail += (detail.empty() ? "" : ", ") + what + " " + fmt(err, 2);
  }
  return {pass, "max rel err over 20 seeds: " + detail};
}

// 4. Beam search with a wide beam equals exhaustive enumeration.
Outcome beam_exhaustive() {
  int cases = 0, mismatches = 0;
  double worst = 0.0;
  for (const std::string chars : {"ab", "abcd"}) {
    const Vocabulary vocab = testing::tiny_vocab(chars);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      AsrModel model = make_asr_model(testing::tiny_s2s_config(vocab.size()), vocab, 700 + seed);
      LanguageModel lm = testing::random_lm(vocab, testing::tiny_lm_config(vocab.size()), 800 + seed);
      testing::scale_params(model.params, 3.0);
      testing::scale_params(lm.params, 3.0);
      std::mt19937_64 rng(900 + seed);
      const Matrix h = random_matrix(1 + static_cast<int>(seed % 3), model.config.encoder_dim(), rng);
      for (double lambda : {0.0, 0.3, 1.0}) {
        for (double beta : {0.0, 0.3}) {
          DecodeConfig c;
          c.beam = 64;
          c.ctc_weight = lambda;
          c.lm_weight = beta;
          c.max_length = 3;
          c.nbest = 1;
          const auto oracle = testing::exhaustive_best(model, &lm, h, c, "xx");
          const auto hyps = beam_search_encoded(model, &lm, h, c, "xx");
          ++cases;
          if (hyps.empty() || hyps.front().tokens != oracle.tokens) {
            ++mismatches;
            continue;
          }
          worst = std::max(worst, std::abs(hyps.front().score - oracle.score.score));
        }
      }
    }
  }
  return {mismatches == 0 && worst <= 1e-9, std::to_string(cases) + " cases (2 and 4 characters), " +
                                                std::to_string(mismatches) + " sequence mismatches, max |score diff| " +
                                                fmt(worst)};
}

// 5. beta = 0 equals no LM; a closed cold-fusion gate ignores the LM state.
Outcome fusion_identities() {
  const Vocabulary vocab = testing::tiny_vocab();
  int differing = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const AsrModel model = make_asr_model(testing::tiny_s2s_config(vocab.size()), vocab, 1100 + seed);
    const LanguageModel lm = testing::random_lm(vocab, testing::tiny_lm_config(vocab.size()), 1200 + seed);
    std::mt19937_64 rng(1300 + seed);
    const Matrix h = random_matrix(4, model.config.encoder_dim(), rng);
    DecodeConfig c;
    c.beam = 4;
    c.nbest = 4;
    c.lm_weight = 0.0;
    const auto with_lm = beam_search_encoded(model, &lm, h, c, "xx");
    const auto without = beam_search_encoded(model, nullptr, h, c, "xx");
    bool same = with_lm.size() == without.size();
    for (std::size_t i = 0; same && i < with_lm.size(); ++i)
      same = with_lm[i].tokens == without[i].tokens && with_lm[i].score == without[i].score;
    if (!same) ++differing;
  }

  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(1400 + seed);
    ParameterSet p;
    add_fusion_params(p, 5, 6, 9, FusionConfig{4, 3}, rng);
    for (double& b : p.at("fusion.gate.b").data) b = -1e3;
    ParamScope scope(p);
    const Var s = Var::constant(random_matrix(1, 5, rng));
    const Matrix base = cold_fusion_log_probs(scope, s, Var::constant(random_matrix(1, 6, rng))).value();
    for (int k = 0; k < 5; ++k) {
      const Matrix other = cold_fusion_log_probs(scope, s, Var::constant(random_matrix(1, 6, rng, 10.0))).value();
      for (std::size_t i = 0; i < base.size(); ++i) worst = std::max(worst, std::abs(base.data[i] - other.data[i]));
    }

    // The same at model level: swapping the embedded LM leaves the output unchanged.
    const AsrModel model = make_asr_model(testing::tiny_s2s_config(vocab.size()), vocab, 1500 + seed);
    const LanguageModel lm_a = testing::random_lm(vocab, testing::tiny_lm_config(vocab.size()), 1600 + seed);
    const LanguageModel lm_b = testing::random_lm(vocab, testing::tiny_lm_config(vocab.size()), 1700 + seed);
    AsrModel fused_a = attach_fusion(model, lm_a, FusionMode::kCold, FusionConfig{3, 4}, 1).model;
    for (double& b : fused_a.params.at("fusion.gate.b").data) b = -1e3;
    AsrModel fused_b = fused_a;
    for (const auto& name : lm_b.params.names()) fused_b.params.set(name, lm_b.params.at(name));
    const Matrix h = random_matrix(3, model.config.encoder_dim(), rng);
    for (const std::vector<int>& prefix : {std::vector<int>{kSos}, std::vector<int>{kSos, 4, 5, 6}}) {
      std::vector<Matrix> outs;
      for (const AsrModel* m : {&fused_a, &fused_b}) {
        NoGradGuard no_grad;
        ParamScope ms(m->params);
        const AttentionMemory mem = prepare_attention(ms, Var::constant(h));
        const LanguageModel emb = embedded_lm(*m);
        ParamScope ls(emb.params);
        const LmBinding binding{&ls, &emb.config};
        ModelState st = initial_model_state(*m, mem, binding);
        ModelStep step;
        for (int tok : prefix) {
          step = model_step(ms, *m, st, tok, mem, binding);
          st = step.state;
        }
        outs.push_back(step.log_probs.value());
      }
      for (std::size_t i = 0; i < outs[0].size(); ++i)
        worst = std::max(worst, std::abs(outs[0].data[i] - outs[1].data[i]));
    }
  }
  return {differing == 0 && worst <= 1e-9, "beta=0 vs no LM: " + std::to_string(differing) +
                                               "/20 differ; closed gate max |diff| " + fmt(worst)};
}

// 6. Copy and freeze contracts of the transfer workflows.
Outcome freeze_copy() {
  const Vocabulary vocab = testing::tiny_vocab();
  std::mt19937_64 rng(1800);
  std::vector<Utterance> train_set, valid_set;
  const std::vector<std::string> texts = {"ab", "ba", "cd", "dca", "a", "bdc"};
  for (int i = 0; i < 6; ++i) train_set.push_back(toy_utterance(vocab, texts[static_cast<std::size_t>(i)], 10, rng));
  for (int i = 0; i < 2; ++i) valid_set.push_back(toy_utterance(vocab, texts[static_cast<std::size_t>(i)], 9, rng));
  TrainConfig c;
  c.batch_size = 3;
  c.epsilon = 1e-4;
  c.max_epochs = 3;
  c.sampling_prob = 0.4;
  c.dropout = 0.2;
  c.threads = 1;

  int ok = 0, total = 0;
  auto check = [&](bool b) {
    ++total;
    ok += b ? 1 : 0;
  };
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const AsrModel seed_model = make_asr_model(testing::tiny_s2s_config(vocab.size()), vocab, 1900 + seed);
    const LanguageModel lm = testing::random_lm(vocab, testing::tiny_lm_config(vocab.size()), 2000 + seed);

    const TransferInit none = transfer_init(seed_model, vocab, FusionMode::kNone, nullptr, {}, seed);
    check(none.model.params == seed_model.params);

    const AdaptResult df = df_transfer(seed_model, lm, FusionConfig{3, 4}, train_set, valid_set, c, seed);
    bool df_ok = true;
    for (const auto& name : df.stage2.model.params.names()) {
      if (name.starts_with("fusion.")) continue;
      const Matrix& after = df.stage2.model.params.at(name);
      const Matrix& before = name.starts_with("lm.") ? lm.params.at(name) : df.stage1.model.params.at(name);
      df_ok = df_ok && after == before;
    }
    check(df_ok);
    check(!(df.stage1.model.params == seed_model.params));

    const AdaptResult cf = cf_transfer(seed_model, lm, FusionConfig{3, 4}, train_set, valid_set, c, seed);
    bool cf_ok = true;
    for (const auto& name : lm.params.names()) cf_ok = cf_ok && cf.stage1.model.params.at(name) == lm.params.at(name);
    check(cf_ok);
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " copy/freeze checks hold"};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

void copy_tree(const fs::path& from, const fs::path& to) {
  fs::create_directories(to);
  fs::copy(from, to, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
}

// 7. Trend suite on the desk-scale synthetic benchmark.
Outcome trend_suite(const fs::path& work, std::ostream& log) {
  constexpr double kTie = 0.003;  // 0.3 CER points
  std::vector<double> scratch, transfer, shallow, cold;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    ExperimentConfig c = preset_config("desk");
    c.seed = s;
    c.lm_train.seed = s;
    PipelineOptions o;
    o.out = work / ("trend-seed" + std::to_string(s));
    fs::remove_all(o.out);
    gen_data(c, o);
    prep(c, o);
    train_seed(c, o);
    train_lm_stage(c, o);
    const Workspace ws{o.out};
    o.lm = ws.lm_model();
    auto run_mode = [&](FusionMode mode, PipelineOptions opts) {
      ExperimentConfig m = c;
      m.fusion = mode;
      adapt_stage(m, opts);
      decode_stage(m, opts);
      return score_stage(m, opts).cer();
    };
    transfer.push_back(run_mode(FusionMode::kNone, o));
    shallow.push_back(run_mode(FusionMode::kShallow, o));
    cold.push_back(run_mode(FusionMode::kCold, o));

    // Scratch: the same adaptation recipe from a random initialization.
    PipelineOptions so = o;
    so.out = work / ("trend-scratch" + std::to_string(s));
    so.lm.reset();
    fs::remove_all(so.out);
    copy_tree(ws.data(), Workspace{so.out}.data());
    copy_tree(ws.prep(), Workspace{so.out}.prep());
    const Vocabulary target = Vocabulary::load(ws.target_vocab());
    save_checkpoint(so.out / "scratch_init.ckpt", make_asr_model(c.model, target, mix_seed(s, 600)));
    so.seed_ckpt = so.out / "scratch_init.ckpt";
    scratch.push_back(run_mode(FusionMode::kNone, so));

    log << "  seed " << s << ": CER scratch " << fmt(scratch.back()) << ", transfer " << fmt(transfer.back())
        << ", transfer+SF " << fmt(shallow.back()) << ", CF+SF " << fmt(cold.back()) << std::endl;
  }
  const double ms = median(scratch), mt = median(transfer), msf = median(shallow), mcf = median(cold);
  const bool a = mt < ms;
  const bool b = msf < mt || std::abs(msf - mt) <= kTie;
  const bool cc = mcf <= msf || std::abs(mcf - msf) <= kTie;
  return {a && b && cc, std::string("median CER scratch ") + fmt(ms) + ", transfer " + fmt(mt) + ", transfer+SF " +
                            fmt(msf) + ", CF+SF " + fmt(mcf) + "; (a) " + (a ? "ok" : "fails") + ", (b) " +
                            (b ? "ok" : "fails") + ", (c) " + (cc ? "ok" : "fails")};
}

// 8. RNNLM perplexity against the analytic perplexity of a bigram chain.
Outcome lm_quality() {
  const ExperimentConfig c = preset_config("desk");
  const synth::SyntheticLanguage lang =
      synth::make_language("chain", c.data.pool_seed, 77, c.data.target.alphabet_size, c.data.options);
  const int lo = c.data.min_length, hi = c.data.max_length;
  auto texts = [&](int n, std::uint64_t seed) {
    synth::CorpusSpec spec;
    spec.num_utterances = n;
    spec.min_length = lo;
    spec.max_length = hi;
    spec.seed = seed;
    return synth::sample_texts(lang, spec);
  };
  std::vector<LanguageCorpus> corpus = {{"chain", texts(1, 1)}};
  for (char32_t ch : lang.alphabet) corpus.front().transcripts.push_back(utf8::encode(ch));
  const Vocabulary vocab = Vocabulary::build(corpus);
  const auto train = encode_lines(vocab, texts(3000, 11), "chain");
  const auto valid = encode_lines(vocab, texts(300, 12), "chain");
  const auto test = encode_lines(vocab, texts(1000, 13), "chain");

  LmConfig config = c.lm;
  config.vocab_size = vocab.size();
  LmTrainConfig options = c.lm_train;
  options.seed = 5;
  const LmTrainResult r = train_lm(config, train, valid, options);
  const double ppl = perplexity(r.params, config, test);
  const double truth = std::exp(synth::true_token_entropy(lang, lo, hi));
  const double rel = std::abs(ppl - truth) / truth;
  return {rel <= 0.10, "test perplexity " + fmt(ppl) + " vs analytic " + fmt(truth) + " (" + fmt(100 * rel, 3) +
                           "% off, " + std::to_string(r.history.size()) + " epochs)"};
}

std::string strip_wall_time(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::string line, out;
  while (std::getline(in, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    j.erase("wall_seconds");
    out += j.dump() + "\n";
  }
  return out;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    const std::string rel = fs::relative(e.path(), root).generic_string();
    files[rel] = e.path().filename() == "train_log.jsonl" ? strip_wall_time(s.str()) : s.str();
  }
  return files;
}

// 9. Every stage reproduces its artifacts byte for byte.
Outcome determinism(const fs::path& work) {
  ExperimentConfig c = preset_config("desk");
  c.data.seed_train_utterances = 40;
  c.data.target_test_utterances = 10;
  c.seed_train.max_epochs = 2;
  c.adapt_train.max_epochs = 2;
  c.lm_train.epochs = 2;
  c.seed = 9;
  c.lm_train.seed = 9;

  std::vector<std::map<std::string, std::string>> runs;
  for (const std::string name : {"det-a", "det-b"}) {
    PipelineOptions o;
    o.out = work / name;
    fs::remove_all(o.out);
    gen_data(c, o);
    prep(c, o);
    train_seed(c, o);
    train_lm_stage(c, o);
    o.lm = Workspace{o.out}.lm_model();
    for (FusionMode mode : {FusionMode::kNone, FusionMode::kShallow, FusionMode::kCold, FusionMode::kDeep}) {
      ExperimentConfig m = c;
      m.fusion = mode;
      adapt_stage(m, o);
      decode_stage(m, o);
      score_stage(m, o);
    }
    runs.push_back(snapshot(o.out));
  }
  std::vector<std::string> differing;
  std::set<std::string> names;
  for (const auto& r : runs)
    for (const auto& [k, v] : r) names.insert(k);
  for (const auto& n : names) {
    const auto a = runs[0].find(n), b = runs[1].find(n);
    if (a == runs[0].end() || b == runs[1].end() || a->second != b->second) differing.push_back(n);
  }
  std::string detail = std::to_string(names.size()) + " artifacts compared, " + std::to_string(differing.size()) +
                       " differ";
  for (std::size_t i = 0; i < std::min<std::size_t>(differing.size(), 5); ++i) detail += " " + differing[i];
  return {differing.empty() && names.size() > 20, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fasr acceptance suite"};
  std::string work = (fs::temp_directory_path() / "fasr-acceptance").string();
  std::vector<int> only;
  app.add_option("--work", work, "scratch directory for pipeline runs");
  app.add_option("--only", only, "run only these criteria")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const fs::path root = work;
  fs::create_directories(root);
  struct Criterion {
    int id;
    std::string name;
    double budget_seconds;  // 0: none
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "CTC oracle equivalence", 5, ctc_oracle},
      {2, "prefix-score consistency", 5, prefix_consistency},
      {3, "gradient checks", 60, gradient_checks},
      {4, "beam/exhaustive equivalence", 30, beam_exhaustive},
      {5, "fusion identities", 0, fusion_identities},
      {6, "freeze/copy bit-identity", 0, freeze_copy},
      {7, "synthetic trend suite", 1200, [&] { return trend_suite(root, std::cout); }},
      {8, "LM quality", 120, lm_quality},
      {9, "determinism", 0, [&] { return determinism(root); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = seconds_since(start);
    if (c.budget_seconds > 0 && secs > c.budget_seconds) {
      out.pass = false;
      out.detail += "; over the " + fmt(c.budget_seconds) + " s budget";
    }
    if (!out.pass) ++failed;
    std::cout << "criterion " << c.id << " " << (out.pass ? "PASS" : "FAIL") << " " << c.name << ": " << out.detail
              << " [" << fmt(secs, 3) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
