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

#include "fasr/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

namespace fasr {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FeatureFormatError(FeatureErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string serialize_features(const Features& f) {
  if (f.frames < 0 || f.dim < 0 || f.data.size() != static_cast<std::size_t>(f.frames) * f.dim) {
    throw DataError("feature matrix shape does not match its data");
  }
  std::string out(kFeatureMagic, 4);
  put_u32(out, kFeatureVersion);
  put_u32(out, static_cast<std::uint32_t>(f.frames));
  put_u32(out, static_cast<std::uint32_t>(f.dim));
  out.reserve(out.size() + f.data.size() * 4);
  for (float v : f.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Features parse_features(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kFeatureMagic, 4) != 0) {
    throw FeatureFormatError(FeatureErrorCode::kBadMagic, "bad magic");
  }
  if (bytes.size() < 16) throw FeatureFormatError(FeatureErrorCode::kTruncated, "truncated header");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kFeatureVersion) {
    throw FeatureFormatError(FeatureErrorCode::kBadVersion, "unsupported version " + std::to_string(version));
  }
  Features f;
  const std::uint64_t frames = get_u32(bytes, 8);
  const std::uint64_t dim = get_u32(bytes, 12);
  const std::uint64_t count = frames * dim;
  if (bytes.size() != 16 + count * 4) {
    throw FeatureFormatError(FeatureErrorCode::kTruncated,
                             "payload holds " + std::to_string(bytes.size() - 16) + " bytes, expected " +
                                 std::to_string(count * 4));
  }
  f.frames = static_cast<int>(frames);
  f.dim = static_cast<int>(dim);
  f.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) f.data[i] = std::bit_cast<float>(get_u32(bytes, 16 + 4 * i));
  return f;
}

void write_features(const std::filesystem::path& path, const Features& features) {
  const std::string bytes = serialize_features(features);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FeatureFormatError(FeatureErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FeatureFormatError(FeatureErrorCode::kIo, "failed writing " + path.string());
}

Features read_features(const std::filesystem::path& path) {
  try {
    return parse_features(read_file(path));
  } catch (const FeatureFormatError& e) {
    throw FeatureFormatError(e.code(), path.string() + ": " + e.what());
  }
}

std::filesystem::path Manifest::feature_path(const UtteranceRecord& record) const {
  std::filesystem::path p(record.feat_path);
  return p.is_absolute() ? p : directory / p;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest " + path.string());
  Manifest m;
  m.directory = path.parent_path();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      UtteranceRecord r;
      r.utt_id = j.at("utt_id").get<std::string>();
      r.lang = j.at("lang").get<std::string>();
      r.feat_path = j.at("feat_path").get<std::string>();
      r.text = j.at("text").get<std::string>();
      r.num_frames = j.at("num_frames").get<int>();
      m.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, std::span<const UtteranceRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["utt_id"] = r.utt_id;
    j["lang"] = r.lang;
    j["feat_path"] = r.feat_path;
    j["text"] = r.text;
    j["num_frames"] = r.num_frames;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing manifest " + path.string());
}

Features load_utterance(const Manifest& manifest, const UtteranceRecord& record) {
  Features f = read_features(manifest.feature_path(record));
  if (f.frames != record.num_frames) {
    throw DataError("utterance " + record.utt_id + ": manifest says " + std::to_string(record.num_frames) +
                    " frames, file has " + std::to_string(f.frames));
  }
  return f;
}

FeatureStats compute_stats(std::span<const Features> utterances) {
  FeatureStats stats;
  if (utterances.empty()) throw DataError("no utterances to compute statistics from");
  const int dim = utterances.front().dim;
  std::vector<double> sum(static_cast<std::size_t>(dim), 0.0);
  std::uint64_t n = 0;
  for (const auto& u : utterances) {
    if (u.dim != dim) {
      throw DataError("feature dimension mismatch: " + std::to_string(u.dim) + " vs " + std::to_string(dim));
    }
    for (int t = 0; t < u.frames; ++t)
      for (int d = 0; d < dim; ++d) sum[d] += u.at(t, d);
    n += static_cast<std::uint64_t>(u.frames);
  }
  if (n == 0) throw DataError("no frames to compute statistics from");
  stats.mean.resize(sum.size());
  for (std::size_t d = 0; d < sum.size(); ++d) stats.mean[d] = sum[d] / static_cast<double>(n);
  std::vector<double> sq(static_cast<std::size_t>(dim), 0.0);
  for (const auto& u : utterances)
    for (int t = 0; t < u.frames; ++t)
      for (int d = 0; d < dim; ++d) {
        const double c = u.at(t, d) - stats.mean[d];
        sq[d] += c * c;
      }
  stats.std.resize(sq.size());
  for (std::size_t d = 0; d < sq.size(); ++d) {
    stats.std[d] = std::max(std::sqrt(sq[d] / static_cast<double>(n)), FeatureStats::kStdFloor);
  }
  stats.frame_count = n;
  return stats;
}

Matrix normalize(const Features& f, const FeatureStats& stats) {
  if (static_cast<std::size_t>(f.dim) != stats.mean.size()) {
    throw DataError("feature dimension " + std::to_string(f.dim) + " does not match statistics (" +
                    std::to_string(stats.mean.size()) + ")");
  }
  Matrix out(f.frames, f.dim);
  for (int t = 0; t < f.frames; ++t)
    for (int d = 0; d < f.dim; ++d) out(t, d) = (f.at(t, d) - stats.mean[d]) / stats.std[d];
  return out;
}

void save_stats(const std::filesystem::path& path, const FeatureStats& stats) {
  nlohmann::ordered_json j;
  j["frame_count"] = stats.frame_count;
  j["mean"] = stats.mean;
  j["std"] = stats.std;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write statistics " + path.string());
  out << j.dump(1) << '\n';
}

FeatureStats load_stats(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open statistics " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    FeatureStats s;
    s.frame_count = j.at("frame_count").get<std::uint64_t>();
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
    if (s.mean.size() != s.std.size()) throw DataError("statistics mean/std sizes differ in " + path.string());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

NormalizedCorpus compute_and_apply_norm(const Manifest& manifest) {
  std::vector<Features> raw;
  raw.reserve(manifest.records.size());
  for (const auto& r : manifest.records) raw.push_back(load_utterance(manifest, r));
  NormalizedCorpus out;
  out.stats = compute_stats(raw);
  out.frames.reserve(raw.size());
  for (const auto& f : raw) out.frames.push_back(normalize(f, out.stats));
  return out;
}

std::vector<Matrix> apply_norm(const Manifest& manifest, const FeatureStats& stats) {
  std::vector<Matrix> out;
  out.reserve(manifest.records.size());
  for (const auto& r : manifest.records) out.push_back(normalize(load_utterance(manifest, r), stats));
  return out;
}

}  // namespace fasr
