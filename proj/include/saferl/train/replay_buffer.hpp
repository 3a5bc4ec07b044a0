#pragma once

#include <cstddef>
#include <vector>

#include "saferl/util/rng.hpp"

namespace saferl::train {

// One environment transition as the critics see it. Observations are in the
// network input space (scaled, and corrupted when the run is configured
// that way); the action is the one the environment executed.
struct Transition {
  std::vector<double> obs;
  std::vector<double> action;
  std::vector<double> next_obs;
  double reward = 0.0;
  double cost = 0.0;
};

// Fixed-capacity ring buffer. Once full, pushes overwrite the oldest
// entries; sampling is uniform with replacement over the filled region.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }
  const Transition& at(std::size_t i) const;

  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_ = 0;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  std::vector<Transition> slots_;
};

}  // namespace saferl::train
