// Copyright 2026 The tpgd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TPGD_ERRORS_H_
#define TPGD_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tpgd {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(std::string field, const std::string& detail = "")
      : Error("invalid config field '" + field + "'" +
              (detail.empty() ? "" : ": " + detail)),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class TokenizationError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss() : Error("forward pass produced a non-finite loss") {}
};

class DegenerateGradient : public Error {
 public:
  explicit DegenerateGradient(double norm)
      : Error("gradient norm " + std::to_string(norm) + " is below 1e-12"),
        norm_(norm) {}
  double norm() const { return norm_; }

 private:
  double norm_;
};

class NoMaskablePosition : public Error {
 public:
  NoMaskablePosition() : Error("sequence has no non-special position to mask") {}
};

class BudgetExhausted : public Error {
 public:
  explicit BudgetExhausted(int budget)
      : Error("victim query budget of " + std::to_string(budget) +
              " exhausted") {}
};

class RemoteUnavailable : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  EmptyInput() : Error("empty input") {}
};

class ScorerUnavailable : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& detail)
      : Error("line " + std::to_string(line) + ": " + detail), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MissingFile : public Error {
 public:
  explicit MissingFile(const std::string& path)
      : Error("missing file: " + path) {}
};

class InsufficientCorrect : public Error {
 public:
  InsufficientCorrect(std::size_t available, std::size_t requested)
      : Error("only " + std::to_string(available) +
              " correctly classified samples available, " +
              std::to_string(requested) + " requested"),
        available_(available) {}
  std::size_t available() const { return available_; }

 private:
  std::size_t available_;
};

class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

}  // namespace tpgd

#endif  // TPGD_ERRORS_H_
