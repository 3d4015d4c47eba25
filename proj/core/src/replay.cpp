#include "ppac/replay.hpp"

#include <string>

#include "ppac/error.hpp"

namespace ppac {

ReplayMemory::ReplayMemory(std::size_t capacity, std::optional<Axis> axis) : axis_(axis) {
  if (capacity == 0) throw ConfigError("replay_capacity: must be positive");
  buffer_.resize(capacity);
}

void ReplayMemory::push(const Transition& t) {
  if (axis_ && t.axis() != *axis_) {
    throw ContractViolation("replay: " + std::string(axis_name(t.axis())) + "-axis transition pushed into the " +
                            std::string(axis_name(*axis_)) + "-axis memory");
  }
  if (size_ < buffer_.size()) {
    buffer_[(head_ + size_) % buffer_.size()] = t;
    ++size_;
  } else {
    buffer_[head_] = t;
    head_ = (head_ + 1) % buffer_.size();
  }
}

std::vector<Transition> ReplayMemory::sample(std::size_t b, Rng& rng) const {
  if (size_ == 0) throw Unavailable("replay: cannot sample from an empty memory");
  std::vector<Transition> out;
  out.reserve(b);
  for (std::size_t i = 0; i < b; ++i) out.push_back(at(static_cast<std::size_t>(rng() % size_)));
  return out;
}

const Transition& ReplayMemory::at(std::size_t i) const {
  if (i >= size_) throw ContractViolation("replay: index out of range");
  return buffer_[(head_ + i) % buffer_.size()];
}

void ReplayMemory::clear() {
  head_ = 0;
  size_ = 0;
}

} // namespace ppac
