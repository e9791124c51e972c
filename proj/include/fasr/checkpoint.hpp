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

// Checkpoint file, little-endian:
//   "FCKP" | u32 version | u64 header bytes | JSON header | arrays
// The header records the kind ("asr" or "lm"), topology, vocabulary tokens
// and hash, fusion mode, free-form metadata, and the name and shape of every
// array. Arrays follow in header order as raw IEEE-754 doubles.

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fasr/model.hpp"
#include "fasr/rnnlm.hpp"

namespace fasr {

inline constexpr char kCheckpointMagic[4] = {'F', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const AsrModel& model, const nlohmann::json& metadata = nlohmann::json::object());
std::string serialize_checkpoint(const LanguageModel& lm, const nlohmann::json& metadata = nlohmann::json::object());

// Throw DataError on malformed input or a checkpoint of the other kind.
AsrModel parse_asr_checkpoint(std::string_view bytes, nlohmann::json* metadata = nullptr);
LanguageModel parse_lm_checkpoint(std::string_view bytes, nlohmann::json* metadata = nullptr);

void save_checkpoint(const std::filesystem::path& path, const AsrModel& model,
                     const nlohmann::json& metadata = nlohmann::json::object());
void save_checkpoint(const std::filesystem::path& path, const LanguageModel& lm,
                     const nlohmann::json& metadata = nlohmann::json::object());
AsrModel load_asr_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);
LanguageModel load_lm_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

}  // namespace fasr
