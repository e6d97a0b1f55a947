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

#include "gopt/symbolic.h"

#include "gopt/error.h"

namespace gopt {

int64_t SymFactor::evaluate(const std::map<std::string, int64_t>& bindings) const {
  int64_t sum = constant;
  for (const auto& s : symbols) {
    auto it = bindings.find(s);
    if (it == bindings.end()) throw ValidationError("unbound symbol '" + s + "'");
    sum += it->second;
  }
  return sum / divisor;
}

std::string SymFactor::str() const {
  if (symbols.empty()) return std::to_string(constant / divisor);
  std::string body;
  if (constant > 0) body = std::to_string(constant) + "+";
  for (size_t k = 0; k < symbols.size(); ++k) {
    if (k) body += "+";
    body += symbols[k];
  }
  if (constant < 0) body += std::to_string(constant);
  if (divisor != 1) body += "/" + std::to_string(divisor);
  const bool bare = symbols.size() == 1 && constant == 0 && divisor == 1;
  return bare ? body : "(" + body + ")";
}

void SymProduct::multiply(SymFactor factor) {
  if (factor.symbols.empty()) {
    coefficient *= factor.constant / factor.divisor;
    return;
  }
  factors.push_back(std::move(factor));
}

int64_t SymProduct::evaluate(const std::map<std::string, int64_t>& bindings) const {
  int64_t product = coefficient;
  for (const auto& f : factors) product *= f.evaluate(bindings);
  return product;
}

std::string SymProduct::str() const {
  std::string out;
  if (coefficient != 1 || factors.empty()) out = std::to_string(coefficient);
  for (const auto& f : factors) {
    if (!out.empty()) out += "*";
    out += f.str();
  }
  return out;
}

}  // namespace gopt
