#pragma once

#include <cstdint>
#include <initializer_list>

namespace memsc {

// xoshiro256++ with splitmix64 seeding. Self-contained so that every draw is
// reproducible across standard libraries and platforms; std::normal_distribution
// would tie results to one libstdc++ version.
//
// Stream contract used throughout the project: the channel realization of one
// transmission is drawn from Rng::stream(global_seed, episode_index, slot_index),
// so evaluation results do not depend on scheduling order.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    // uniform in [0, 1)
    double uniform();
    double uniform(double lo, double hi);
    // standard normal via Box-Muller (one spare cached)
    double normal();
    // uniform integer in [0, bound), bound >= 1
    std::uint64_t below(std::uint64_t bound);

    static std::uint64_t mix(std::initializer_list<std::uint64_t> words);
    static Rng stream(std::uint64_t global_seed, std::uint64_t episode_index,
                      std::uint64_t slot_index);

private:
    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace memsc
