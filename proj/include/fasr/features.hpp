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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fasr/error.hpp"
#include "fasr/tensor.hpp"

namespace fasr {

// Frames x dim float32 feature matrix, row-major.
struct Features {
  int frames = 0;
  int dim = 0;
  std::vector<float> data;

  float at(int t, int d) const { return data[static_cast<std::size_t>(t) * dim + d]; }
  friend bool operator==(const Features&, const Features&) = default;
};

// Binary feature file, little-endian:
//   "EFEA" | u32 version (1) | u32 num_frames | u32 dim | frames*dim f32
inline constexpr char kFeatureMagic[4] = {'E', 'F', 'E', 'A'};
inline constexpr std::uint32_t kFeatureVersion = 1;

enum class FeatureErrorCode { kIo, kBadMagic, kBadVersion, kTruncated };

class FeatureFormatError : public DataError {
 public:
  FeatureFormatError(FeatureErrorCode code, const std::string& what) : DataError(what), code_(code) {}
  FeatureErrorCode code() const noexcept { return code_; }

 private:
  FeatureErrorCode code_;
};

std::string serialize_features(const Features& features);
Features parse_features(std::string_view bytes);
void write_features(const std::filesystem::path& path, const Features& features);
Features read_features(const std::filesystem::path& path);

struct UtteranceRecord {
  std::string utt_id;
  std::string lang;
  std::string feat_path;  // relative paths resolve against the manifest directory
  std::string text;
  int num_frames = 0;

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

struct Manifest {
  std::filesystem::path directory;
  std::vector<UtteranceRecord> records;

  std::filesystem::path feature_path(const UtteranceRecord& record) const;
};

// One JSON object per line with utt_id, lang, feat_path, text, num_frames.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const UtteranceRecord> records);

// Reads one utterance's features and checks num_frames against the file.
Features load_utterance(const Manifest& manifest, const UtteranceRecord& record);

struct FeatureStats {
  static constexpr double kStdFloor = 1e-8;

  std::vector<double> mean;
  std::vector<double> std;
  std::uint64_t frame_count = 0;

  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

// Population mean and standard deviation per dimension, std floored at
// kStdFloor. Throws DataError on dimension mismatch.
FeatureStats compute_stats(std::span<const Features> utterances);
Matrix normalize(const Features& features, const FeatureStats& stats);

void save_stats(const std::filesystem::path& path, const FeatureStats& stats);
FeatureStats load_stats(const std::filesystem::path& path);

struct NormalizedCorpus {
  FeatureStats stats;
  std::vector<Matrix> frames;  // one per manifest record, in manifest order
};

// Computes statistics over every frame of the manifest and returns the
// normalized features.
NormalizedCorpus compute_and_apply_norm(const Manifest& manifest);
// Applies previously computed (training) statistics to another split.
std::vector<Matrix> apply_norm(const Manifest& manifest, const FeatureStats& stats);

}  // namespace fasr
