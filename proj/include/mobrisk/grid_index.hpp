// Copyright 2026 The mobrisk Authors
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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "mobrisk/geo.hpp"

namespace mobrisk {

// Uniform grid over projected coordinates. With cell_size >= r, the 3x3 block
// around a point's cell holds every entry within distance r of it.
class GridIndex {
 public:
  using Entry = std::uint32_t;

  explicit GridIndex(double cell_size) : cell_size_(cell_size) {}

  std::uint64_t cell_of(PointXY p) const {
    const auto cx = static_cast<std::int64_t>(std::floor(p.x / cell_size_));
    const auto cy = static_cast<std::int64_t>(std::floor(p.y / cell_size_));
    return key(cx, cy);
  }

  void insert(Entry e, PointXY p) {
    cells_[cell_of(p)].push_back(e);
    ++size_;
  }

  void remove(Entry e, PointXY p) {
    auto it = cells_.find(cell_of(p));
    if (it == cells_.end()) return;
    auto& v = it->second;
    auto pos = std::find(v.begin(), v.end(), e);
    if (pos == v.end()) return;
    *pos = v.back();
    v.pop_back();
    --size_;
    if (v.empty()) cells_.erase(it);
  }

  void move(Entry e, PointXY from, PointXY to) {
    if (cell_of(from) == cell_of(to)) return;
    remove(e, from);
    insert(e, to);
  }

  template <typename F>
  void for_each_near(PointXY p, F&& f) const {
    const auto cx = static_cast<std::int64_t>(std::floor(p.x / cell_size_));
    const auto cy = static_cast<std::int64_t>(std::floor(p.y / cell_size_));
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = cells_.find(key(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (Entry e : it->second) f(e);
      }
    }
  }

  std::size_t size() const { return size_; }
  double cell_size() const { return cell_size_; }

 private:
  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
           static_cast<std::uint32_t>(cy);
  }

  double cell_size_;
  std::size_t size_ = 0;
  std::unordered_map<std::uint64_t, std::vector<Entry>> cells_;
};

}  // namespace mobrisk
