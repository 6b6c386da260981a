#pragma once
#include <array>
#include <cstddef>
#include <deque>
#include <vector>

#include "microgrid/env.hpp"
#include "microgrid/errors.hpp"
#include "microgrid/rng.hpp"

namespace microgrid {

/// One stored interaction.
struct Transition {
    std::array<double, kObservationDim> obs{};
    int action = 0;
    double reward = 0.0;
    std::array<double, kObservationDim> next_obs{};
    bool terminal = false;
};

/// Bounded FIFO experience pool with uniform sampling. Mutations and samples
/// are expected to be externally serialized (the trainer holds one lock for
/// the pool); the pool itself is a plain value.
class ReplayPool {
public:
    explicit ReplayPool(std::size_t capacity, std::uint64_t seed)
        : capacity_(capacity), rng_(derive_seed(seed, seed_tag::replay)) {}

    void push(const Transition& t) {
        if (buffer_.size() == capacity_) buffer_.pop_front(); // evict oldest
        buffer_.push_back(t);
    }

    std::size_t size() const { return buffer_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return buffer_[i]; }

    /// Uniform sample of k distinct transitions (indices without
    /// replacement). Throws if the pool holds fewer than k.
    std::vector<Transition> sample(std::size_t k) {
        if (k > buffer_.size()) throw DomainError("replay sample larger than pool");
        // Partial Fisher-Yates over an index vector.
        std::vector<std::size_t> idx(buffer_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::vector<Transition> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
            std::swap(idx[i], idx[pick(rng_)]);
            out.push_back(buffer_[idx[i]]);
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::deque<Transition> buffer_;
    Rng rng_;
};

} // namespace microgrid
