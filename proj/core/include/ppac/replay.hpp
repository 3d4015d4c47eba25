#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ppac/geometry.hpp"
#include "ppac/mdp.hpp"
#include "ppac/rng.hpp"

namespace ppac {

/// Bounded FIFO of transitions. A memory bound to an axis only accepts
/// transitions whose action lies in that axis's partial space.
class ReplayMemory {
public:
  /// Throws ConfigError if capacity is zero.
  explicit ReplayMemory(std::size_t capacity, std::optional<Axis> axis = std::nullopt);

  /// Appends t, evicting the oldest entry when full. Throws
  /// ContractViolation on an axis mismatch.
  void push(const Transition& t);

  /// b draws uniformly with replacement. Throws Unavailable when empty.
  std::vector<Transition> sample(std::size_t b, Rng& rng) const;

  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return buffer_.size(); }
  bool empty() const { return size_ == 0; }
  std::optional<Axis> axis() const { return axis_; }
  void clear();

private:
  std::vector<Transition> buffer_;
  std::optional<Axis> axis_;
  std::size_t head_ = 0; // index of the oldest entry
  std::size_t size_ = 0;
};

} // namespace ppac
