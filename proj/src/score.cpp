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

#include "fasr/score.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "fasr/error.hpp"
#include "fasr/utf8.hpp"

namespace fasr {

using nlohmann::json;

std::size_t edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp) {
  std::vector<std::size_t> prev(hyp.size() + 1), cur(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split_chars(std::string_view text) {
  std::vector<std::string> out;
  for (char32_t c : utf8::decode(text)) {
    if (c == U' ') continue;
    out.push_back(utf8::encode(c));
  }
  return out;
}

std::string strip_language_tags(std::string_view text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<') {
      const auto close = text.find('>', i);
      if (close != std::string_view::npos && text.substr(i, close - i + 1) != "<unk>") {
        i = close + 1;
        continue;
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

ErrorCounts word_errors(std::string_view ref, std::string_view hyp) {
  const auto r = split_words(strip_language_tags(ref));
  const auto h = split_words(strip_language_tags(hyp));
  return {edit_distance(r, h), r.size()};
}

ErrorCounts char_errors(std::string_view ref, std::string_view hyp) {
  const auto r = split_chars(strip_language_tags(ref));
  const auto h = split_chars(strip_language_tags(hyp));
  return {edit_distance(r, h), r.size()};
}

void write_nbest(const std::filesystem::path& path, std::span<const NBestRecord> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) {
    const json j = {{"utt_id", r.utt_id}, {"rank", r.rank}, {"text", r.text}, {"att", r.att},
                    {"ctc", r.ctc},       {"lm", r.lm},     {"score", r.score}};
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<NBestRecord> read_nbest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open n-best file " + path.string());
  std::vector<NBestRecord> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      NBestRecord r;
      r.utt_id = j.at("utt_id").get<std::string>();
      r.rank = j.at("rank").get<int>();
      r.text = j.at("text").get<std::string>();
      // Non-finite scores are written as null.
      auto num = [&](const char* k) { return j.at(k).is_null() ? -INFINITY : j.at(k).get<double>(); };
      r.att = num("att");
      r.ctc = num("ctc");
      r.lm = num("lm");
      r.score = num("score");
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

json ScoreReport::to_json() const {
  json per = json::array();
  for (const auto& u : utterances) {
    per.push_back({{"utt_id", u.utt_id},
                   {"word_errors", u.words.errors},
                   {"words", u.words.ref_tokens},
                   {"char_errors", u.chars.errors},
                   {"chars", u.chars.ref_tokens}});
  }
  return {{"wer", wer()},
          {"cer", cer()},
          {"word_errors", words.errors},
          {"words", words.ref_tokens},
          {"char_errors", chars.errors},
          {"chars", chars.ref_tokens},
          {"utterances", per}};
}

ScoreReport score(std::span<const UtteranceRecord> refs, std::span<const NBestRecord> hyps) {
  std::map<std::string, std::string> best;
  for (const auto& h : hyps)
    if (h.rank == 0) best[h.utt_id] = h.text;
  std::set<std::string> ref_ids;
  for (const auto& r : refs) ref_ids.insert(r.utt_id);

  std::string missing, unknown;
  for (const auto& id : ref_ids)
    if (!best.count(id)) missing += " " + id;
  for (const auto& [id, text] : best)
    if (!ref_ids.count(id)) unknown += " " + id;
  if (!missing.empty() || !unknown.empty()) {
    std::string msg = "reference and hypothesis sets differ;";
    if (!missing.empty()) msg += " missing hypotheses:" + missing + ";";
    if (!unknown.empty()) msg += " hypotheses without reference:" + unknown;
    throw DataError(msg);
  }

  ScoreReport report;
  std::vector<const UtteranceRecord*> sorted;
  for (const auto& r : refs) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->utt_id < b->utt_id; });
  for (const auto* r : sorted) {
    UtteranceScore u{r->utt_id, word_errors(r->text, best[r->utt_id]), char_errors(r->text, best[r->utt_id])};
    report.words.errors += u.words.errors;
    report.words.ref_tokens += u.words.ref_tokens;
    report.chars.errors += u.chars.errors;
    report.chars.ref_tokens += u.chars.ref_tokens;
    report.utterances.push_back(std::move(u));
  }
  return report;
}

}  // namespace fasr
