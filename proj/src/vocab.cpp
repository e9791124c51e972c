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

#include "fasr/vocab.hpp"

#include <fstream>
#include <set>

#include "fasr/error.hpp"
#include "fasr/utf8.hpp"

namespace fasr {
namespace {

constexpr const char* kReservedTokens[kNumReserved] = {"<blank>", "<unk>", "<sos>", "<eos>"};

void validate_language_name(std::string_view name) {
  if (name.empty()) throw DataError("empty language name");
  for (char c : name) {
    if (c == '<' || c == '>' || c == '\n' || c == '\r' || c == ' ' || c == '\t') {
      throw DataError("invalid character in language name '" + std::string(name) + "'");
    }
  }
}

bool looks_like_language_token(std::string_view tok) {
  return tok.size() >= 3 && tok.front() == '<' && tok.back() == '>';
}

// Languages and characters of the corpora, with per-language validation.
void collect(std::span<const LanguageCorpus> corpora, std::set<std::string>& languages,
             std::set<char32_t>& characters) {
  std::map<std::string, bool> has_text;
  for (const auto& corpus : corpora) {
    validate_language_name(corpus.language);
    languages.insert(corpus.language);
    bool& any = has_text[corpus.language];
    any = any || !corpus.transcripts.empty();
    for (const auto& line : corpus.transcripts) {
      for (char32_t cp : utf8::decode(line)) {
        if (cp == U'\n' || cp == U'\r') throw DataError("line break inside transcript of " + corpus.language);
        characters.insert(cp);
      }
    }
  }
  for (const auto& [lang, any] : has_text) {
    if (!any) throw DataError("language '" + lang + "' has an empty transcript set");
  }
}

}  // namespace

std::string Vocabulary::language_token_text(std::string_view language) {
  return "<" + std::string(language) + ">";
}

Vocabulary Vocabulary::build(std::span<const LanguageCorpus> corpora) {
  if (corpora.empty()) throw DataError("vocabulary needs at least one language");
  std::set<std::string> languages;
  std::set<char32_t> characters;
  collect(corpora, languages, characters);

  std::vector<std::string> tokens(std::begin(kReservedTokens), std::end(kReservedTokens));
  for (const auto& lang : languages) tokens.push_back(language_token_text(lang));
  for (char32_t cp : characters) tokens.push_back(utf8::encode(cp));
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumReserved) throw DataError("vocabulary is missing reserved tokens");
  for (int i = 0; i < kNumReserved; ++i) {
    if (tokens[static_cast<std::size_t>(i)] != kReservedTokens[i]) {
      throw DataError("reserved index " + std::to_string(i) + " must be " + kReservedTokens[i]);
    }
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.rebuild_index();
  return v;
}

void Vocabulary::rebuild_index() {
  index_.clear();
  is_language_.assign(tokens_.size(), false);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const std::string& tok = tokens_[i];
    if (!index_.emplace(tok, static_cast<int>(i)).second) throw DataError("duplicate token '" + tok + "'");
    if (i >= kNumReserved) {
      if (looks_like_language_token(tok)) {
        is_language_[i] = true;
      } else if (utf8::decode(tok).size() != 1) {
        throw DataError("token '" + tok + "' is neither a language id nor a single character");
      }
    }
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  for (const auto& tok : tokens_) out << tok << '\n';
  if (!out) throw DataError("failed writing vocabulary " + path.string());
}

Vocabulary Vocabulary::extended(std::span<const LanguageCorpus> corpora) const {
  std::set<std::string> languages;
  std::set<char32_t> characters;
  collect(corpora, languages, characters);
  std::vector<std::string> tokens = tokens_;
  for (const auto& lang : languages) {
    const std::string tok = language_token_text(lang);
    if (!index_.contains(tok)) tokens.push_back(tok);
  }
  for (char32_t cp : characters) {
    const std::string tok = utf8::encode(cp);
    if (!index_.contains(tok)) tokens.push_back(tok);
  }
  return from_tokens(std::move(tokens));
}

const std::string& Vocabulary::token(int index) const {
  if (index < 0 || index >= size()) throw DataError("token index " + std::to_string(index) + " out of range");
  return tokens_[static_cast<std::size_t>(index)];
}

std::optional<int> Vocabulary::index(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::has_language(std::string_view language) const {
  return index_.contains(language_token_text(language));
}

int Vocabulary::language_token(std::string_view language) const {
  auto it = index_.find(language_token_text(language));
  if (it == index_.end()) throw DataError("unknown language '" + std::string(language) + "'");
  return it->second;
}

bool Vocabulary::is_language_token(int index) const {
  return index >= 0 && index < size() && is_language_[static_cast<std::size_t>(index)];
}

std::vector<std::string> Vocabulary::languages() const {
  std::vector<std::string> out;
  for (int i : language_tokens()) out.push_back(language_name(i));
  return out;
}

std::vector<int> Vocabulary::language_tokens() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (is_language_[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

std::string Vocabulary::language_name(int index) const {
  if (!is_language_token(index)) throw DataError("token " + std::to_string(index) + " is not a language id");
  const std::string& tok = tokens_[static_cast<std::size_t>(index)];
  return tok.substr(1, tok.size() - 2);
}

std::vector<int> Vocabulary::encode_characters(std::string_view text) const {
  std::vector<int> out;
  for (char32_t cp : utf8::decode(text)) {
    auto it = index_.find(utf8::encode(cp));
    const bool is_char = it != index_.end() && it->second >= kNumReserved && !is_language_token(it->second);
    out.push_back(is_char ? it->second : kUnk);
  }
  return out;
}

std::vector<int> Vocabulary::encode(std::string_view text, std::string_view language) const {
  std::vector<int> out{language_token(language)};
  const auto chars = encode_characters(text);
  out.insert(out.end(), chars.begin(), chars.end());
  return out;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kUnk) {
      out += "<unk>";
    } else if (id >= kNumReserved && !is_language_token(id)) {
      out += token(id);
    }
  }
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& tok : tokens_) {
    for (char c : tok) feed(static_cast<unsigned char>(c));
    feed('\n');
  }
  return h;
}

}  // namespace fasr
