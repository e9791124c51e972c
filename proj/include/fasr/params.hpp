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
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fasr/tensor.hpp"

namespace fasr {

// Named trainable arrays, ordered by name. Names are dotted paths such as
// "encoder.blstm0.fwd.W_ih"; the first component is the owning module.
class ParameterSet {
 public:
  void add(const std::string& name, Matrix value);
  void set(const std::string& name, Matrix value);
  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  const Matrix& at(const std::string& name) const;
  Matrix& at(const std::string& name);
  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(std::string_view prefix) const;
  void erase_prefix(std::string_view prefix);
  // Copies every entry of `other`; names must not collide.
  void merge(const ParameterSet& other);
  std::size_t total_size() const;
  std::size_t count() const { return values_.size(); }
  const std::map<std::string, Matrix>& entries() const { return values_; }

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::map<std::string, Matrix> values_;
};

// Per-parameter trainability. Names absent from the mask are frozen.
using TrainableMask = std::map<std::string, bool>;

TrainableMask all_trainable(const ParameterSet& params);
TrainableMask none_trainable(const ParameterSet& params);
std::vector<std::string> trainable_names(const TrainableMask& mask);

// Binds parameters into graph leaves for one forward/backward pass. Leaves are
// created on first use and cached, so a pass touches each array once. Without
// a mask every leaf is frozen (inference).
class ParamScope {
 public:
  explicit ParamScope(const ParameterSet& params, const TrainableMask* trainable = nullptr);

  Var get(const std::string& name);
  const ParameterSet& parameters() const { return params_; }

  // Leaves created so far, in name order.
  std::vector<std::pair<std::string, Var>> bound() const;
  // Gradients of trainable leaves that received one during backward().
  std::map<std::string, Matrix> gradients() const;

 private:
  const ParameterSet& params_;
  const TrainableMask* trainable_;
  std::map<std::string, Var> cache_;
};

// Uniform(-bound, bound) entries.
Matrix uniform_matrix(int rows, int cols, double bound, std::mt19937_64& rng);

// 64-bit mix used to derive independent seeds from (seed, stream) pairs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace fasr
