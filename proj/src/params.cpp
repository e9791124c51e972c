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

#include "fasr/params.hpp"

#include <stdexcept>

#include "fasr/error.hpp"

namespace fasr {

void ParameterSet::add(const std::string& name, Matrix value) {
  if (!values_.emplace(name, std::move(value)).second) {
    throw std::invalid_argument("duplicate parameter '" + name + "'");
  }
}

void ParameterSet::set(const std::string& name, Matrix value) { values_[name] = std::move(value); }

const Matrix& ParameterSet::at(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw ConfigError("missing parameter '" + name + "'");
  return it->second;
}

Matrix& ParameterSet::at(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw ConfigError("missing parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [name, _] : values_) out.push_back(name);
  return out;
}

std::vector<std::string> ParameterSet::names_with_prefix(std::string_view prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, _] : values_)
    if (std::string_view(name).starts_with(prefix)) out.push_back(name);
  return out;
}

void ParameterSet::erase_prefix(std::string_view prefix) {
  std::erase_if(values_, [&](const auto& kv) { return std::string_view(kv.first).starts_with(prefix); });
}

void ParameterSet::merge(const ParameterSet& other) {
  for (const auto& [name, value] : other.values_) add(name, value);
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& [_, value] : values_) n += value.size();
  return n;
}

TrainableMask all_trainable(const ParameterSet& params) {
  TrainableMask mask;
  for (const auto& name : params.names()) mask[name] = true;
  return mask;
}

TrainableMask none_trainable(const ParameterSet& params) {
  TrainableMask mask;
  for (const auto& name : params.names()) mask[name] = false;
  return mask;
}

std::vector<std::string> trainable_names(const TrainableMask& mask) {
  std::vector<std::string> out;
  for (const auto& [name, on] : mask)
    if (on) out.push_back(name);
  return out;
}

ParamScope::ParamScope(const ParameterSet& params, const TrainableMask* trainable)
    : params_(params), trainable_(trainable) {}

Var ParamScope::get(const std::string& name) {
  auto it = cache_.find(name);
  if (it != cache_.end()) return it->second;
  bool train = false;
  if (trainable_ != nullptr) {
    auto m = trainable_->find(name);
    train = m != trainable_->end() && m->second;
  }
  Var leaf = Var::leaf(params_.at(name), train, name);
  cache_.emplace(name, leaf);
  return leaf;
}

std::vector<std::pair<std::string, Var>> ParamScope::bound() const {
  return {cache_.begin(), cache_.end()};
}

std::map<std::string, Matrix> ParamScope::gradients() const {
  std::map<std::string, Matrix> out;
  for (const auto& [name, leaf] : cache_)
    if (leaf.requires_grad() && leaf.has_grad()) out.emplace(name, leaf.grad());
  return out;
}

Matrix uniform_matrix(int rows, int cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.data) v = dist(rng);
  return m;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the combined state.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace fasr
