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

#include "gopt/cache_sim.h"

#include "gopt/error.h"

namespace gopt {

LruCache::LruCache(int64_t capacity_lines) : capacity_(capacity_lines) {
  if (capacity_lines < 1) throw ValidationError("cache needs at least one line");
}

void LruCache::unlink(int64_t line) {
  const int64_t p = prev_[line], n = next_[line];
  (p >= 0 ? next_[p] : head_) = n;
  (n >= 0 ? prev_[n] : tail_) = p;
}

void LruCache::push_front(int64_t line) {
  prev_[line] = -1;
  next_[line] = head_;
  if (head_ >= 0) prev_[head_] = line;
  head_ = line;
  if (tail_ < 0) tail_ = line;
}

bool LruCache::touch(int64_t line) {
  if (line == head_) {
    ++hits_;
    return true;
  }
  if (line >= static_cast<int64_t>(present_.size())) {
    const size_t size = static_cast<size_t>(line) + 1;
    prev_.resize(size, -1);
    next_.resize(size, -1);
    present_.resize(size, 0);
  }
  if (present_[line]) {
    ++hits_;
    unlink(line);
    push_front(line);
    return true;
  }
  ++misses_;
  if (resident_ == capacity_) {
    const int64_t victim = tail_;
    unlink(victim);
    present_[victim] = 0;
    --resident_;
  }
  present_[line] = 1;
  ++resident_;
  push_front(line);
  return false;
}

CacheSimSink::CacheSimSink(int64_t cache_lines, int64_t line_elems)
    : cache_(cache_lines), line_elems_(line_elems) {
  if (line_elems < 1) throw ValidationError("cache line must hold at least one element");
}

void CacheSimSink::declare(int slot, const std::string&, int64_t size) {
  if (static_cast<int>(base_.size()) <= slot) base_.resize(slot + 1, 0);
  base_[slot] = next_base_;
  next_base_ += (size + line_elems_ - 1) / line_elems_ * line_elems_;
}

void CacheSimSink::access(int slot, int64_t index, AccessKind) {
  ++accesses_;
  cache_.touch((base_[slot] + index) / line_elems_);
}

}  // namespace gopt
