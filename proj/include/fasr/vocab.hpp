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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fasr {

inline constexpr int kBlank = 0;
inline constexpr int kUnk = 1;
inline constexpr int kSos = 2;
inline constexpr int kEos = 3;
inline constexpr int kNumReserved = 4;

struct LanguageCorpus {
  std::string language;
  std::vector<std::string> transcripts;
};

// Universal character vocabulary shared by every language.
//
// Layout of a freshly built table: <blank> <unk> <sos> <eos>, then one
// "<name>" token per language in lexicographic order, then every character
// seen in any transcript ordered by code point. extended() keeps all existing
// indices and appends new language tokens and characters at the end.
class Vocabulary {
 public:
  static Vocabulary build(std::span<const LanguageCorpus> corpora);
  static Vocabulary from_tokens(std::vector<std::string> tokens);
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  Vocabulary extended(std::span<const LanguageCorpus> corpora) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int index) const;
  std::optional<int> index(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool has_language(std::string_view language) const;
  // Throws DataError for an unknown language.
  int language_token(std::string_view language) const;
  bool is_language_token(int index) const;
  std::vector<std::string> languages() const;
  std::vector<int> language_tokens() const;
  // Name of the language a language token stands for.
  std::string language_name(int index) const;

  // [language token] ++ per-character indices; unseen characters map to unk.
  std::vector<int> encode(std::string_view text, std::string_view language) const;
  std::vector<int> encode_characters(std::string_view text) const;
  // Character tokens only: specials and language tokens are dropped, unk
  // renders as "<unk>".
  std::string decode(std::span<const int> ids) const;

  // FNV-1a over the newline-joined token table.
  std::uint64_t hash() const;

  static std::string language_token_text(std::string_view language);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void rebuild_index();

  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> index_;
  std::vector<bool> is_language_;
};

}  // namespace fasr
