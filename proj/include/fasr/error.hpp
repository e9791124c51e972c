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
#include <stdexcept>
#include <string>

namespace fasr {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  kConfig = 2,
  kData = 3,
  kNumerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

// Raised by tensor ops whose operand shapes are inconsistent. Carries the op
// name and the id of the node that was being built.
class ShapeError : public Error {
 public:
  ShapeError(const std::string& op, std::uint64_t node_id, const std::string& detail)
      : Error(ErrorKind::kNumerical,
              "shape mismatch in " + op + " (node #" + std::to_string(node_id) + "): " + detail),
        op_(op),
        node_id_(node_id) {}
  const std::string& op() const noexcept { return op_; }
  std::uint64_t node_id() const noexcept { return node_id_; }

 private:
  std::string op_;
  std::uint64_t node_id_;
};

}  // namespace fasr
