#include "saferl/train/replay_buffer.hpp"

#include <utility>

#include "saferl/util/errors.hpp"

namespace saferl::train {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) {
    throw InputError("replay buffer: capacity must be positive");
  }
  slots_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
  if (size_ < capacity_) {
    slots_.push_back(std::move(t));
    ++size_;
  } else {
    slots_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) {
    throw SizeError("replay buffer: index past the filled region");
  }
  return slots_[i];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n,
                                                      Rng& rng) const {
  if (size_ == 0) {
    throw InputError("replay buffer: cannot sample while empty");
  }
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(size_) - 1));
  }
  return out;
}

}  // namespace saferl::train
