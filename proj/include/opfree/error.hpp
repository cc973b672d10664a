// Copyright 2026 The opfree Authors
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

#ifndef OPFREE_ERROR_HPP
#define OPFREE_ERROR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace opfree {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (ragged blocks, non-finite entries,
/// level mismatch, bad JSON field).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Input is well formed but the operation is undefined for it
/// (zero matrix for a singular pair, A == B for a compression witness).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// An enumeration would exceed its budget. `required` is the exact count.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(const std::string& what, std::uint64_t required)
      : Error(what + " (required " + std::to_string(required) + ")"),
        required_(required) {}
  std::uint64_t required() const noexcept { return required_; }

 private:
  std::uint64_t required_;
};

/// An iterative kernel failed to converge within its iteration cap.
class NumericalInstability : public Error {
 public:
  using Error::Error;
};

/// Should be unreachable; indicates a bug.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// A certified invariant (e.g. weak duality of a bracket) was violated.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace opfree

#endif  // OPFREE_ERROR_HPP
