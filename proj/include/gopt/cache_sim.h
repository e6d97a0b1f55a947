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
#include <string>
#include <vector>

#include "gopt/loop_interp.h"

namespace gopt {

// Fully associative LRU cache over dense line numbers.
class LruCache {
 public:
  explicit LruCache(int64_t capacity_lines);

  // Returns true on a hit. Lines are non-negative.
  bool touch(int64_t line);

  int64_t hits() const { return hits_; }
  int64_t misses() const { return misses_; }
  int64_t resident() const { return resident_; }

 private:
  void unlink(int64_t line);
  void push_front(int64_t line);

  int64_t capacity_;
  int64_t resident_ = 0;
  int64_t hits_ = 0;
  int64_t misses_ = 0;
  int64_t head_ = -1;  // most recent
  int64_t tail_ = -1;  // least recent
  std::vector<int64_t> prev_;
  std::vector<int64_t> next_;
  std::vector<char> present_;
};

// Lays tensors out back to back, each starting on a fresh line, and feeds
// every access through an LruCache.
class CacheSimSink : public AccessSink {
 public:
  CacheSimSink(int64_t cache_lines, int64_t line_elems);

  void declare(int slot, const std::string& name, int64_t size) override;
  void access(int slot, int64_t index, AccessKind kind) override;

  int64_t misses() const { return cache_.misses(); }
  int64_t accesses() const { return accesses_; }

 private:
  LruCache cache_;
  int64_t line_elems_;
  int64_t next_base_ = 0;
  int64_t accesses_ = 0;
  std::vector<int64_t> base_;
};

}  // namespace gopt
