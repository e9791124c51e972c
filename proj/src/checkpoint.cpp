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

#include "fasr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fasr/config.hpp"
#include "fasr/error.hpp"

namespace fasr {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("checkpoint is truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << v;
  return s.str();
}

std::string serialize(const std::string& kind, json topology, const Vocabulary& vocab, const ParameterSet& params,
                      const json& metadata) {
  json arrays = json::array();
  for (const auto& [name, m] : params.entries()) arrays.push_back({{"name", name}, {"rows", m.rows}, {"cols", m.cols}});
  const json header = {{"kind", kind},
                       {"topology", std::move(topology)},
                       {"vocab", {{"tokens", vocab.tokens()}, {"hash", hex64(vocab.hash())}}},
                       {"metadata", metadata},
                       {"arrays", arrays}};
  const std::string text = header.dump();
  std::string out(kCheckpointMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& [name, m] : params.entries())
    for (double v : m.data) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

struct Parsed {
  json header;
  Vocabulary vocab;
  ParameterSet params;
};

Parsed parse(std::string_view bytes, const std::string& expected_kind) {
  Reader r(bytes);
  if (r.take(4) != std::string_view(kCheckpointMagic, 4)) throw DataError("not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto header_size = r.get<std::uint64_t>();
  Parsed p;
  try {
    p.header = json::parse(r.take(header_size));
    const std::string kind = p.header.at("kind").get<std::string>();
    if (kind != expected_kind) throw DataError("expected a " + expected_kind + " checkpoint, found " + kind);
    p.vocab = Vocabulary::from_tokens(p.header.at("vocab").at("tokens").get<std::vector<std::string>>());
    if (p.header.at("vocab").at("hash").get<std::string>() != hex64(p.vocab.hash())) {
      throw DataError("checkpoint vocabulary hash mismatch");
    }
    for (const auto& a : p.header.at("arrays")) {
      const int rows = a.at("rows").get<int>();
      const int cols = a.at("cols").get<int>();
      if (rows < 0 || cols < 0) throw DataError("negative array shape in checkpoint");
      Matrix m(rows, cols);
      for (double& v : m.data) v = std::bit_cast<double>(r.get<std::uint64_t>());
      p.params.add(a.at("name").get<std::string>(), std::move(m));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint header: ") + e.what());
  }
  if (!r.done()) throw DataError("trailing bytes after checkpoint arrays");
  return p;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

std::string serialize_checkpoint(const AsrModel& model, const json& metadata) {
  json topology = {{"s2s", to_json(model.config)},
                   {"fusion_mode", std::string(to_string(model.fusion))},
                   {"fusion_layer", to_json(model.fusion_config)}};
  if (model.lm_config) topology["lm"] = to_json(*model.lm_config);
  return serialize("asr", std::move(topology), model.vocab, model.params, metadata);
}

std::string serialize_checkpoint(const LanguageModel& lm, const json& metadata) {
  return serialize("lm", {{"lm", to_json(lm.config)}}, lm.vocab, lm.params, metadata);
}

AsrModel parse_asr_checkpoint(std::string_view bytes, json* metadata) {
  Parsed p = parse(bytes, "asr");
  AsrModel m;
  try {
    const json& t = p.header.at("topology");
    m.config = s2s_config_from_json(t.at("s2s"));
    m.fusion = parse_fusion_mode(t.at("fusion_mode").get<std::string>());
    m.fusion_config = fusion_config_from_json(t.at("fusion_layer"));
    if (t.contains("lm")) m.lm_config = lm_config_from_json(t.at("lm"));
    if (metadata) *metadata = p.header.at("metadata");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint topology: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed checkpoint topology: ") + e.what());
  }
  if (m.config.vocab_size != p.vocab.size()) throw DataError("checkpoint vocabulary size mismatch");
  m.vocab = std::move(p.vocab);
  m.params = std::move(p.params);
  return m;
}

LanguageModel parse_lm_checkpoint(std::string_view bytes, json* metadata) {
  Parsed p = parse(bytes, "lm");
  LanguageModel lm;
  try {
    lm.config = lm_config_from_json(p.header.at("topology").at("lm"));
    if (metadata) *metadata = p.header.at("metadata");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint topology: ") + e.what());
  }
  if (lm.config.vocab_size != p.vocab.size()) throw DataError("checkpoint vocabulary size mismatch");
  lm.vocab = std::move(p.vocab);
  lm.params = std::move(p.params);
  return lm;
}

void save_checkpoint(const std::filesystem::path& path, const AsrModel& model, const json& metadata) {
  write_file(path, serialize_checkpoint(model, metadata));
}

void save_checkpoint(const std::filesystem::path& path, const LanguageModel& lm, const json& metadata) {
  write_file(path, serialize_checkpoint(lm, metadata));
}

AsrModel load_asr_checkpoint(const std::filesystem::path& path, json* metadata) {
  return parse_asr_checkpoint(read_file(path), metadata);
}

LanguageModel load_lm_checkpoint(const std::filesystem::path& path, json* metadata) {
  return parse_lm_checkpoint(read_file(path), metadata);
}

}  // namespace fasr
