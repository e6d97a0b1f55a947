// Copyright 2026 The gopt Authors.
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

#include <stdexcept>
#include <string>

namespace gopt {

// Root of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed graph / partition / CSV document.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a structural invariant (cycle, dangling
// edge, inconsistent shapes, unknown node, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Fusion pair outside what the iteration-space analysis certifies.
class FusionError : public Error {
 public:
  using Error::Error;
};

// Schedule that is illegal for the subgraph it is applied to.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

// File that cannot be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gopt
