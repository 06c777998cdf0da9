// Copyright 2026  The antispoof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace antispoof {

// Base of every error thrown by the library. The CLI maps InputError and its
// subclasses to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, invalid configuration, missing data.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

class FormatError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

// Tensor shapes that do not fit the operation. A programming or wiring error,
// so it is not an InputError.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Every stochastic component draws from one of these, seeded by the caller.
using Rng = std::mt19937_64;

// Hex SHA-256 of a byte string. Used for feature-config hashes and the
// extraction cache index.
std::string Sha256Hex(const std::string& bytes);

// Keeps freed tensor buffers in the process heap instead of returning them
// to the OS, so steady-state training does not page-fault on every large
// allocation. Executables call this once at startup; a no-op off glibc.
void ConfigureAllocator();

// Shortest decimal form that reads back to the same double.
std::string FormatNumber(double value);

}  // namespace antispoof
