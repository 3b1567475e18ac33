// Copyright 2026 The cotloop Authors
// SPDX-License-Identifier: Apache-2.0
//
// Named slot ranges of a compiled program's hidden vector.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cotloop/errors.hpp"

namespace cotloop {

struct SlotRange {
  std::string name;
  std::size_t offset = 0;
  std::size_t width = 0;

  std::size_t operator[](std::size_t k) const { return offset + k; }
};

class Layout {
 public:
  // Appends a range and returns its offset.
  std::size_t add(const std::string& name, std::size_t width) {
    for (const auto& s : slots_) {
      if (s.name == name) throw Error(ErrorCode::kInvalidArgument, "layout: duplicate slot " + name);
    }
    slots_.push_back({name, dim_, width});
    dim_ += width;
    return slots_.back().offset;
  }

  const SlotRange& at(const std::string& name) const {
    for (const auto& s : slots_) {
      if (s.name == name) return s;
    }
    throw Error(ErrorCode::kInvalidArgument, "layout: no slot named " + name);
  }

  std::size_t dim() const { return dim_; }
  const std::vector<SlotRange>& slots() const { return slots_; }

 private:
  std::vector<SlotRange> slots_;
  std::size_t dim_ = 0;
};

}  // namespace cotloop
