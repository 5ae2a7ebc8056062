#include "trend/replay.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace trend {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    storage_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
    if (storage_.size() < capacity_) {
        storage_.push_back(std::move(t));
    } else {
        storage_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, std::mt19937_64& rng) const {
    const std::size_t n = storage_.size();
    if (count > n) throw std::invalid_argument("ReplayBuffer: batch larger than buffer");
    std::vector<std::size_t> out;
    out.reserve(count);
    std::unordered_set<std::size_t> seen;
    seen.reserve(count * 2);
    // Floyd's subset sampling: uniform over all size-`count` subsets.
    for (std::size_t j = n - count; j < n; ++j) {
        std::uniform_int_distribution<std::size_t> dist(0, j);
        std::size_t t = dist(rng);
        if (seen.insert(t).second) {
            out.push_back(t);
        } else {
            seen.insert(j);
            out.push_back(j);
        }
    }
    return out;
}

void relabel_all(ReplayBuffer& buffer,
                 const std::function<double(std::span<const double>, std::span<const double>)>& reward_fn) {
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        Transition& t = buffer[i];
        t.r_hat = reward_fn(t.s, t.a);
    }
}

}  // namespace trend
