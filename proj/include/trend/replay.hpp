#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace trend {

// One stored environment transition. The reward slot holds the learned
// reward and is rewritten wholesale whenever the reward model changes.
struct Transition {
    std::vector<double> s;
    std::vector<double> a;
    double r_hat = 0.0;
    std::vector<double> s_next;
    bool done = false;
};

// Fixed-capacity ring buffer with FIFO eviction and uniform
// without-replacement batch sampling.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const { return storage_[i]; }
    Transition& operator[](std::size_t i) { return storage_[i]; }

    // Uniform random subset of `count` distinct indices (Floyd's algorithm).
    std::vector<std::size_t> sample_indices(std::size_t count, std::mt19937_64& rng) const;

  private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> storage_;
};

// Rewrites every stored reward with reward_fn(s, a). Idempotent for a fixed fn.
void relabel_all(ReplayBuffer& buffer,
                 const std::function<double(std::span<const double>, std::span<const double>)>& reward_fn);

}  // namespace trend
