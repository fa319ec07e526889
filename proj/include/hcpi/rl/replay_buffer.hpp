#pragma once

#include <cstddef>
#include <vector>

#include "hcpi/core/error.hpp"
#include "hcpi/rl/trajectory.hpp"

namespace hcpi::rl {

/// Trajectories of the current behavior policy, split into disjoint train
/// and test sets. Within each appended batch, positions 0, 3, 6, ... go to
/// the train set and the rest to the test set.
class ReplayBuffer {
 public:
  void split_append(std::vector<Trajectory> batch) {
    require(batch.size() % 3 == 0, "ReplayBuffer::split_append: batch size must be divisible by 3");
    for (std::size_t i = 0; i < batch.size(); ++i) {
      (i % 3 == 0 ? train_ : test_).push_back(trajectories_.size());
      trajectories_.push_back(std::move(batch[i]));
    }
  }

  void clear() {
    trajectories_.clear();
    train_.clear();
    test_.clear();
  }

  bool empty() const { return trajectories_.empty(); }
  std::size_t size() const { return trajectories_.size(); }
  std::size_t train_size() const { return train_.size(); }
  std::size_t test_size() const { return test_.size(); }
  const std::vector<std::size_t>& train_indices() const { return train_; }
  const std::vector<std::size_t>& test_indices() const { return test_; }
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }

  std::vector<const Trajectory*> train_set() const { return view(train_); }
  std::vector<const Trajectory*> test_set() const { return view(test_); }

 private:
  std::vector<const Trajectory*> view(const std::vector<std::size_t>& idx) const {
    std::vector<const Trajectory*> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(&trajectories_[i]);
    return out;
  }

  std::vector<Trajectory> trajectories_;
  std::vector<std::size_t> train_;
  std::vector<std::size_t> test_;
};

}  // namespace hcpi::rl
