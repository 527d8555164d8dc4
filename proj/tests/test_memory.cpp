#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "memsc/memory/memory_queue.hpp"
#include "memsc/rng.hpp"

using namespace memsc;
using namespace memsc::memory;
using numerics::Tensor;

namespace {

Tensor feature(double fill, std::size_t width = 4) { return Tensor::full({width}, fill); }

double row_dot(const Tensor& m, std::size_t a, std::size_t b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += m(a, j) * m(b, j);
    return acc;
}

}  // namespace

TEST_CASE("fresh queue is zero-filled and ordered") {
    const MemoryQueue q = queue_init(3, 4);
    CHECK(q.capacity() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(q.slot(i)(j) == 0.0);

    // readback order equals insertion order
    MemoryQueue filled = queue_push(queue_push(queue_push(q, feature(1)), feature(2)), feature(3));
    CHECK(filled.slot(0)(0) == 1.0);
    CHECK(filled.slot(1)(0) == 2.0);
    CHECK(filled.slot(2)(0) == 3.0);

    // zero queue + temporal codes = the code matrix itself
    const Tensor coded = temporal_code(q);
    const Tensor codes = temporal_matrix(3, 4);
    for (std::size_t i = 0; i < coded.numel(); ++i) CHECK(coded.v[i] == codes.v[i]);
}

TEST_CASE("push drops exactly the oldest at capacity") {
    MemoryQueue q = queue_init(2, 4);
    q = queue_push(q, feature(10));  // [0, a]
    CHECK(q.slot(0)(0) == 0.0);
    CHECK(q.slot(1)(0) == 10.0);
    q = queue_push(q, feature(20));
    q = queue_push(q, feature(30));  // [b, c]: the first item is gone
    CHECK(q.slot(0)(0) == 20.0);
    CHECK(q.slot(1)(0) == 30.0);

    CHECK_THROWS_AS(queue_push(q, Tensor::zeros({5})), std::invalid_argument);
}

TEST_CASE("queue contents equal the last T pushes in order") {
    Rng rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t capacity = 1 + rng.below(6);
        const std::size_t pushes = capacity + rng.below(12);
        MemoryQueue q = queue_init(capacity, 3);
        std::vector<double> tags;
        for (std::size_t i = 0; i < pushes; ++i) {
            const double tag = rng.uniform(-5, 5);
            tags.push_back(tag);
            q = queue_push(q, feature(tag, 3));
        }
        for (std::size_t i = 0; i < capacity; ++i)
            CHECK(q.slot(i)(0) == tags[pushes - capacity + i]);
    }
}

TEST_CASE("temporal codes: origin row and offset property") {
    const Tensor codes = temporal_matrix(12, 8);
    // slot 0: sin(0), cos(0) interleaved
    for (std::size_t j = 0; j < 8; j += 2) {
        CHECK(codes(0, j) == doctest::Approx(0.0));
        CHECK(codes(0, j + 1) == doctest::Approx(1.0));
    }

    // <t_2, t_5> = <t_7, t_10> (offset 3 either way)
    CHECK(std::abs(row_dot(codes, 2, 5) - row_dot(codes, 7, 10)) <= 1e-9);

    // |<t_m, t_n>| depends only on m - n for every aligned pair
    Rng rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t offset = rng.below(6);
        const std::size_t m1 = rng.below(12 - offset);
        const std::size_t m2 = rng.below(12 - offset);
        CHECK(std::abs(row_dot(codes, m1, m1 + offset) - row_dot(codes, m2, m2 + offset)) <= 1e-9);
    }

    CHECK_THROWS_AS(temporal_matrix(4, 5), std::invalid_argument);
}

TEST_CASE("temporal_code is pure") {
    MemoryQueue q = queue_init(3, 4);
    q = queue_push(q, feature(2.5));
    const Tensor before = q.contents();
    (void)temporal_code(q);
    const Tensor after = q.contents();
    for (std::size_t i = 0; i < before.numel(); ++i) CHECK(before.v[i] == after.v[i]);
}
