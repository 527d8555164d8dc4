#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "memsc/adaptive/adaptive.hpp"
#include "memsc/channel/channel.hpp"
#include "memsc/numerics/numerics.hpp"

using namespace memsc;
using namespace memsc::adaptive;

TEST_CASE("codeword capacity") {
    CHECK(codeword_capacity(2, 3, 1) == doctest::Approx(4.0));
    CHECK(codeword_capacity(11, 0.0, 2.5) == doctest::Approx(1.0));
    // frozen from the long-double oracle (1 + 1/1.44)^8
    const long double oracle = powl(1.0L + 1.0L / 1.44L, 8.0L);
    CHECK(static_cast<double>(oracle) == doctest::Approx(67.95457082).epsilon(1e-7));
    CHECK(codeword_capacity(16, 1.0, 1.44) == doctest::Approx(67.95457082).epsilon(1e-7));
    CHECK_THROWS_AS(codeword_capacity(4, 1, 0), std::domain_error);
}

TEST_CASE("planned length reproduces the published dynamic schedule") {
    LinkBudget b{16, 1.0, 1.44, 0.0, 32};
    CHECK(plan_length(b) == 16);  // no channel noise: the base length

    const double snrs[] = {-6, 0, 6, 12, 18};
    const std::size_t expect[] = {32, 25, 18, 17, 16};  // 12 dB rounds 16.54 -> 17
    for (int i = 0; i < 5; ++i) {
        b.sigma_n_sq = channel::snr_to_noise_var(snrs[i]);
        CHECK(plan_length(b) == expect[i]);
    }

    // monotone in the channel noise at fixed budget
    LinkBudget lo = b, hi = b;
    lo.sigma_n_sq = 1.0;
    hi.sigma_n_sq = 4.0;
    CHECK(plan_length(hi) >= plan_length(lo));
}

TEST_CASE("planned length is nonincreasing in snr and clamps at both ends") {
    LinkBudget b{8, 1.0, 1.44, 0.0, 16};
    std::size_t prev = SIZE_MAX;
    for (double snr = -12.0; snr <= 24.0; snr += 1.5) {
        b.sigma_n_sq = channel::snr_to_noise_var(snr);
        const std::size_t planned = plan_length(b);
        CHECK(planned <= prev);
        CHECK(planned >= b.base_length);
        CHECK(planned <= b.cap);
        prev = planned;
    }
    b.sigma_n_sq = 1e9;
    CHECK(plan_length(b) == b.cap);
}

TEST_CASE("case-3 length inverts the capacity") {
    CHECK(case3_length(4, 3, 1) == doctest::Approx(2.0));
    // 18 dB channel noise, capacity of the (16, 1, 1.44) budget
    const double n = codeword_capacity(16, 1.0, 1.44);
    CHECK(case3_length(n, 1.0, channel::snr_to_noise_var(18.0)) ==
          doctest::Approx(2.028).epsilon(1e-3));
    // algebraic inverse within 1e-9
    for (double len : {2.0, 7.5, 16.0}) {
        const double cap = codeword_capacity(len, 1.0, 0.3);
        CHECK(case3_length(cap, 1.0, 0.3) == doctest::Approx(len).epsilon(1e-9));
    }
    CHECK_THROWS_AS(case3_length(0.5, 1, 1), std::domain_error);
}

TEST_CASE("exact-budget mask and threshold semantics") {
    const MaskPlan plan = mask_for_budget({0.9, 0.1, 0.5, 0.7}, 2);
    CHECK(plan.mask == std::vector<std::uint8_t>{1, 0, 0, 1});
    CHECK(plan.threshold == doctest::Approx(0.7));
    CHECK(plan.budget == 2);

    const MaskPlan all = mask_for_budget({0.3, 0.2, 0.1}, 3);
    CHECK(all.mask == std::vector<std::uint8_t>{1, 1, 1});

    // all-equal scores: ties keep the lowest indices
    const MaskPlan ties = mask_for_budget({0.5, 0.5, 0.5, 0.5}, 2);
    CHECK(ties.mask == std::vector<std::uint8_t>{1, 1, 0, 0});

    CHECK_THROWS_AS(mask_for_budget({0.5, 0.5}, 3), std::invalid_argument);
    CHECK_THROWS_AS(mask_for_budget({0.5, 0.5}, 0), std::invalid_argument);
}

TEST_CASE("mask plans always keep a score-dominating set") {
    Rng rng(77);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + rng.below(30);
        std::vector<double> scores(n);
        for (double& s : scores) s = rng.uniform(-2, 2);
        const std::size_t budget = 1 + rng.below(n);
        const MaskPlan plan = mask_for_budget(scores, budget);
        std::size_t ones = 0;
        double min_kept = 1e300, max_dropped = -1e300;
        for (std::size_t i = 0; i < n; ++i) {
            if (plan.mask[i]) {
                ++ones;
                min_kept = std::min(min_kept, scores[i]);
            } else {
                max_dropped = std::max(max_dropped, scores[i]);
            }
        }
        CHECK(ones == budget);
        if (ones < n) CHECK(min_kept >= max_dropped);
    }
}

TEST_CASE("apply_mask zeroes complex elements") {
    const std::vector<double> x = {1, 2, 3, 4, 5, 6};
    CHECK(apply_mask(x, {1, 1, 1}) == x);
    CHECK(apply_mask(x, {0, 0, 0}) == std::vector<double>(6, 0.0));
    const auto once = apply_mask(x, {1, 0, 1});
    CHECK(apply_mask(once, {1, 0, 1}) == once);
    CHECK(once[2] == 0.0);
    CHECK(once[3] == 0.0);
    CHECK_THROWS_AS(apply_mask(x, {1, 0}), std::invalid_argument);
}

TEST_CASE("soft-k-max forward is the hard mask, backward the sigmoid surrogate") {
    const std::vector<double> scores = {0.9, 0.1, 0.5, 0.7};
    const MaskPlan plan = mask_for_budget(scores, 2);
    const SoftMask soft = soft_k_max(plan, 1.0);
    for (std::size_t i = 0; i < scores.size(); ++i)
        CHECK(soft.forward[i] == (plan.mask[i] ? 1.0 : 0.0));

    // the graph op's gradient of sum(mask) w.r.t. scores equals the analytic
    // derivative of sum_i sigmoid((p_i - kappa(p))/T), kappa being the
    // threshold element's own score
    numerics::ParameterSet ps;
    ps.add("p", numerics::ParamTag::importance,
           numerics::Tensor::from({scores.size()}, scores));
    numerics::GradientSet gs = numerics::grad(
        [&](numerics::Graph& g, numerics::ParamBinder& bind) {
            return g.sum(g.hard_mask_st(bind("p"), plan.mask, plan.threshold,
                                        plan.threshold_index, 1.0));
        },
        ps);
    double slope_total = 0.0;
    for (double s : soft.surrogate_grad) slope_total += s;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        double expect = soft.surrogate_grad[i];
        if (i == plan.threshold_index) expect -= slope_total;
        CHECK(std::abs(gs.at("p").v[i] - expect) <= 1e-8);
    }

    // a uniform score shift cannot change a budget-exact mask, and the
    // attached-kappa surrogate agrees: the gradient sums to zero
    CHECK(std::abs([&] {
              double acc = 0.0;
              for (std::size_t i = 0; i < scores.size(); ++i) acc += gs.at("p").v[i];
              return acc;
          }()) <= 1e-12);
}

TEST_CASE("soft-k-max surrogate concentrates near the threshold as T -> 0") {
    const std::vector<double> scores = {1.0, 0.45, 0.5, -0.2};
    const MaskPlan plan = mask_for_budget(scores, 2);  // kappa = 0.5
    auto mass_at_nearest = [&](double temperature) {
        const SoftMask soft = soft_k_max(plan, temperature);
        double total = 0.0;
        for (double g : soft.surrogate_grad) total += g;
        return (soft.surrogate_grad[1] + soft.surrogate_grad[2]) / total;  // scores nearest kappa
    };
    const double spread = mass_at_nearest(1.0);
    const double tight = mass_at_nearest(0.01);
    CHECK(tight > spread);
    CHECK(tight > 0.999);
}

TEST_CASE("consecutive mask keeps a prefix") {
    std::vector<double> x(16);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i + 1);
    CHECK(consecutive_mask(x, 8) == x);
    const auto masked = consecutive_mask(x, 5);
    for (std::size_t k = 0; k < 5; ++k) CHECK(masked[2 * k] == x[2 * k]);
    for (std::size_t k = 5; k < 8; ++k) {
        CHECK(masked[2 * k] == 0.0);
        CHECK(masked[2 * k + 1] == 0.0);
    }
    CHECK_THROWS_AS(consecutive_mask(x, 0), std::invalid_argument);
    CHECK_THROWS_AS(consecutive_mask(x, 9), std::invalid_argument);
}

TEST_CASE("random mask keeps a uniform subset and is seed-deterministic") {
    Rng rng(555);
    std::vector<double> x(32, 1.0);
    CHECK(random_mask(x, 16, rng) == x);

    std::vector<std::size_t> kept_count(16, 0);
    const std::size_t draws = 100000;
    for (std::size_t d = 0; d < draws; ++d) {
        const auto mask = random_mask_vector(16, 4, rng);
        for (std::size_t k = 0; k < 16; ++k)
            if (mask[k]) ++kept_count[k];
    }
    for (std::size_t k = 0; k < 16; ++k) {
        const double p = static_cast<double>(kept_count[k]) / static_cast<double>(draws);
        CHECK(p == doctest::Approx(0.25).epsilon(0.02));
    }

    Rng a(42), b(42);
    CHECK(random_mask_vector(16, 5, a) == random_mask_vector(16, 5, b));
}

TEST_CASE("masked frame roundtrip and wire accounting") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t length = 1 + rng.below(40);
        const std::size_t budget = 1 + rng.below(length);
        std::vector<double> x(2 * length);
        // single-precision values so the f32 wire format is lossless
        for (double& v : x) v = static_cast<double>(static_cast<float>(rng.normal()));
        const MaskPlan plan = mask_for_budget(
            [&] {
                std::vector<double> s(length);
                for (double& v : s) v = rng.uniform(0, 1);
                return s;
            }(),
            budget);
        const std::vector<double> masked = apply_mask(x, plan.mask);
        const MaskedFrame frame = pack_masked(masked, plan.mask);
        CHECK(frame.kept_count() == budget);
        CHECK(unpack_masked(frame) == masked);

        const std::vector<std::uint8_t> bytes = serialize_frame(frame);
        CHECK(bytes.size() == frame_wire_bytes(length, budget));
        const MaskedFrame back = parse_frame(bytes);
        CHECK(unpack_masked(back) == masked);
    }

    // all-kept frame has an all-ones bitmap
    const MaskedFrame full = pack_masked({1, 2, 3, 4}, {1, 1});
    CHECK((full.bitmap[0] & 0x3) == 0x3);

    // bitmap/value mismatch is rejected
    MaskedFrame bad = full;
    bad.kept_ri.resize(2);
    CHECK_THROWS_AS(unpack_masked(bad), std::invalid_argument);

    std::vector<std::uint8_t> truncated = serialize_frame(full);
    truncated.pop_back();
    CHECK_THROWS_AS(parse_frame(truncated), std::invalid_argument);
}

TEST_CASE("importance scorer is deterministic with per-element outputs") {
    ImportanceConfig cfg{8, 2};
    numerics::ParameterSet ps;
    Rng rng(99);
    add_importance_params(ps, cfg, rng);

    std::vector<double> x(16);
    for (double& v : x) v = rng.normal();
    const std::vector<double> s1 = importance_scores(x, ps, cfg);
    const std::vector<double> s2 = importance_scores(x, ps, cfg);
    CHECK(s1.size() == 8);
    CHECK(s1 == s2);

    // gradient flows through the scorer
    numerics::ParameterSet probe;
    probe.add("x", numerics::ParamTag::importance, numerics::Tensor::from({16}, x));
    for (std::size_t i = 0; i < ps.size(); ++i)
        probe.add(ps.entry(i).name, ps.entry(i).tag, ps.entry(i).value);
    const double err = numerics::finite_diff_check(
        [&](numerics::Graph& g, numerics::ParamBinder& bind) {
            return g.sum_squares(build_importance_scores(g, bind, bind("x"), cfg));
        },
        probe, 1e-5);
    CHECK(err <= 1e-4);
}
