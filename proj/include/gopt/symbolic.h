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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gopt {

// (sum of symbols + constant) / divisor, e.g. "(15+C2)", "(W2/16)", "H1".
struct SymFactor {
  std::vector<std::string> symbols;
  int64_t constant = 0;
  int64_t divisor = 1;

  static SymFactor symbol(std::string name) { return {{std::move(name)}, 0, 1}; }

  int64_t evaluate(const std::map<std::string, int64_t>& bindings) const;
  std::string str() const;
};

// coefficient * product of factors.
struct SymProduct {
  int64_t coefficient = 1;
  std::vector<SymFactor> factors;

  // Constant factors fold into the coefficient.
  void multiply(SymFactor factor);
  int64_t evaluate(const std::map<std::string, int64_t>& bindings) const;
  // Factors joined by '*', e.g. "N*O2*H2*(W2/16)*O1*R2*(15+C2)".
  std::string str() const;
};

}  // namespace gopt
