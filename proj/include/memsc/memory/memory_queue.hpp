#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "memsc/numerics/tensor.hpp"

// Receiver-side short-term memory: a fixed-capacity queue of recovered
// sentence features plus sinusoidal temporal codes. Slots are ordered oldest
// (index 0) to newest (index T-1); unoccupied slots hold the zero feature.

namespace memsc::memory {

// Queue semantics shared between the plain evaluation path (slots are
// Tensors) and the training graph (slots are graph variables). Pushing at
// full capacity drops exactly the oldest slot; updates return a new value.
template <typename Slot>
class BasicQueue {
public:
    BasicQueue(std::size_t capacity, Slot zero)
        : capacity_(capacity), slots_(capacity, zero) {
        if (capacity < 1) throw std::invalid_argument("memory queue capacity must be >= 1");
    }

    std::size_t capacity() const { return capacity_; }
    const std::vector<Slot>& slots() const { return slots_; }
    const Slot& slot(std::size_t i) const { return slots_[i]; }

    BasicQueue pushed(Slot next) const {
        BasicQueue out = *this;
        for (std::size_t i = 0; i + 1 < out.capacity_; ++i) out.slots_[i] = out.slots_[i + 1];
        out.slots_[out.capacity_ - 1] = std::move(next);
        return out;
    }

private:
    std::size_t capacity_;
    std::vector<Slot> slots_;
};

class MemoryQueue {
public:
    // capacity T slots of width N, zero-filled
    MemoryQueue(std::size_t capacity, std::size_t width);

    std::size_t capacity() const { return queue_.capacity(); }
    std::size_t width() const { return width_; }
    const numerics::Tensor& slot(std::size_t i) const { return queue_.slot(i); }

    // newest feature enters at the back; the oldest is dropped
    MemoryQueue pushed(const numerics::Tensor& feature) const;

    // queue contents as a [T x N] matrix, oldest row first
    numerics::Tensor contents() const;

private:
    std::size_t width_;
    BasicQueue<numerics::Tensor> queue_;
};

MemoryQueue queue_init(std::size_t capacity, std::size_t width);
MemoryQueue queue_push(const MemoryQueue& q, const numerics::Tensor& feature);

// Row k is the code of slot k (oldest = 0):
//   t_k[2i] = sin(k / 10000^(2i/width)),  t_k[2i+1] = cos(k / 10000^(2i/width)).
// Inner products of rows depend only on the slot offset. Width must be even.
numerics::Tensor temporal_matrix(std::size_t capacity, std::size_t width);

// contents + temporal codes; pure, the queue is unmodified
numerics::Tensor temporal_code(const MemoryQueue& q);

}  // namespace memsc::memory
