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

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "fasr/error.hpp"
#include "fasr/score.hpp"
#include "temp_dir.hpp"

using namespace fasr;

namespace {

// Plain recursive Levenshtein distance.
std::size_t recursive_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == 0) return j;
    if (j == 0) return i;
    return std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1)});
  };
  return d(a.size(), b.size());
}

std::vector<std::string> random_tokens(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(0, 6), tok(0, 2);
  std::vector<std::string> out(static_cast<std::size_t>(len(rng)));
  for (auto& t : out) t = std::string(1, static_cast<char>('a' + tok(rng)));
  return out;
}

UtteranceRecord ref(const std::string& id, const std::string& text) { return {id, "xx", id + ".feat", text, 1}; }
NBestRecord hyp(const std::string& id, const std::string& text, int rank = 0) {
  return {id, rank, text, 0.0, 0.0, 0.0, 0.0};
}

}  // namespace

TEST_CASE("error rate examples") {
  CHECK(word_errors("a b c", "a x c").rate() == doctest::Approx(1.0 / 3.0));
  CHECK(word_errors("a b", "").rate() == 1.0);
  CHECK(char_errors("ab", "ba").rate() == 1.0);
  CHECK(char_errors("ab", "ba").errors == 2);
}

TEST_CASE("edit distance matches the recursive definition") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_tokens(rng);
    const auto b = random_tokens(rng);
    CHECK(edit_distance(a, b) == recursive_distance(a, b));
    CHECK(edit_distance(a, b) == edit_distance(b, a));
    CHECK(edit_distance(a, a) == 0);
  }
}

TEST_CASE("tokenization") {
  CHECK(split_words("  a  b ") == std::vector<std::string>{"a", "b"});
  CHECK(split_words("").empty());
  CHECK(split_chars("a b\xc3\xa9") == std::vector<std::string>{"a", "b", "\xc3\xa9"});
  CHECK(strip_language_tags("<xx>ab<unk>") == "ab<unk>");
  CHECK(word_errors("<xx>a b", "a  b").errors == 0);
  CHECK(char_errors("a b", "ab").errors == 0);
}

TEST_CASE("corpus report aggregates rank-0 hypotheses") {
  const std::vector<UtteranceRecord> refs = {ref("u2", "ab"), ref("u1", "abc")};
  const std::vector<NBestRecord> hyps = {hyp("u1", "abd"), hyp("u1", "abc", 1), hyp("u2", "ab")};
  const ScoreReport r = score(refs, hyps);
  CHECK(r.chars.errors == 1);
  CHECK(r.chars.ref_tokens == 5);
  CHECK(r.cer() == doctest::Approx(0.2));
  CHECK(r.words.errors == 1);
  CHECK(r.wer() == 0.5);
  REQUIRE(r.utterances.size() == 2);
  CHECK(r.utterances[0].utt_id == "u1");
  const auto j = r.to_json();
  CHECK(j.at("char_errors") == 1);
  CHECK(j.at("utterances").size() == 2);
}

TEST_CASE("score rejects mismatched id sets") {
  const std::vector<UtteranceRecord> refs = {ref("u1", "a"), ref("u2", "b")};
  try {
    score(refs, std::vector<NBestRecord>{hyp("u1", "a"), hyp("u9", "b")});
    FAIL("expected a data error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("u2") != std::string::npos);
    CHECK(msg.find("u9") != std::string::npos);
  }
}

TEST_CASE("n-best files roundtrip") {
  testing::TempDir dir;
  const std::vector<NBestRecord> in = {{"u1", 0, "ab", -1.5, -2.25, -0.5, -3.0},
                                       {"u1", 1, "", -INFINITY, 0.0, 0.0, -INFINITY}};
  write_nbest(dir.path() / "n.jsonl", in);
  const auto out = read_nbest(dir.path() / "n.jsonl");
  REQUIRE(out.size() == 2);
  CHECK(out[0].text == "ab");
  CHECK(out[0].ctc == -2.25);
  CHECK(out[1].att == -INFINITY);
  CHECK(out[1].rank == 1);
  CHECK_THROWS_AS(read_nbest(dir.path() / "missing.jsonl"), DataError);
}
