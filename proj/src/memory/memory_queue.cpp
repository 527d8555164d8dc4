#include "memsc/memory/memory_queue.hpp"

#include <algorithm>

#include "memsc/kernels/kernels.hpp"
#include "memsc/numerics/layers.hpp"

namespace memsc::memory {

using numerics::Tensor;

MemoryQueue::MemoryQueue(std::size_t capacity, std::size_t width)
    : width_(width), queue_(capacity, Tensor::zeros({width})) {
    if (width < 1) throw std::invalid_argument("memory queue width must be >= 1");
}

MemoryQueue MemoryQueue::pushed(const Tensor& feature) const {
    if (feature.rank() != 1 || feature.numel() != width_)
        throw std::invalid_argument("memory queue push: feature width mismatch");
    MemoryQueue out = *this;
    out.queue_ = queue_.pushed(feature);
    return out;
}

Tensor MemoryQueue::contents() const {
    Tensor m = Tensor::zeros({capacity(), width_});
    for (std::size_t i = 0; i < capacity(); ++i)
        std::copy_n(queue_.slot(i).data(), width_, m.data() + i * width_);
    return m;
}

MemoryQueue queue_init(std::size_t capacity, std::size_t width) {
    return MemoryQueue(capacity, width);
}

MemoryQueue queue_push(const MemoryQueue& q, const Tensor& feature) { return q.pushed(feature); }

Tensor temporal_matrix(std::size_t capacity, std::size_t width) {
    return numerics::sinusoidal_codes(capacity, width);
}

Tensor temporal_code(const MemoryQueue& q) {
    Tensor m = q.contents();
    const Tensor codes = temporal_matrix(q.capacity(), q.width());
    kernels::vadd(m.data(), codes.data(), m.data(), m.numel());
    return m;
}

}  // namespace memsc::memory
