#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "memsc/numerics/numerics.hpp"
#include "memsc/training/losses.hpp"

using namespace memsc;
using namespace memsc::training;
using numerics::Tensor;

namespace {

codec::AnswerDistribution dist_from_probs(std::vector<double> probs) {
    const std::size_t n = probs.size();
    codec::AnswerDistribution d;
    Tensor logits = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) logits.v[i] = std::log(std::max(probs[i], 1e-300));
    d.logits = logits;
    d.probabilities = Tensor::from({n}, std::move(probs));
    return d;
}

Tensor random_joint(std::size_t nx, std::size_t na, Rng& rng) {
    Tensor j = Tensor::zeros({nx, na});
    double total = 0.0;
    for (double& p : j.v) {
        p = 0.05 + rng.uniform(0, 1);
        total += p;
    }
    for (double& p : j.v) p /= total;
    return j;
}

}  // namespace

TEST_CASE("cross-entropy loss values") {
    CHECK(ce_loss(dist_from_probs({1.0, 0.0}), 0).value == doctest::Approx(0.0));
    const LossValue uniform = ce_loss(dist_from_probs({0.25, 0.25, 0.25, 0.25}), 2);
    CHECK(uniform.value == doctest::Approx(std::log(4.0)).epsilon(1e-9));
    CHECK(uniform.true_label_prob == doctest::Approx(0.25));
    // clamped, never infinite
    CHECK(std::isfinite(ce_loss(dist_from_probs({0.0, 1.0}), 0).value));
    CHECK_THROWS_AS(ce_loss(dist_from_probs({1.0}), 3), std::invalid_argument);
}

TEST_CASE("mse loss values") {
    CHECK(mse_loss(Tensor::from({2}, {1, 0}), Tensor::from({2}, {1, 0})).value ==
          doctest::Approx(0.0));
    CHECK(mse_loss(Tensor::from({2}, {1, 0}), Tensor::from({2}, {0, 0})).value ==
          doctest::Approx(1.0));
    CHECK_THROWS_AS(mse_loss(Tensor::zeros({2}), Tensor::zeros({3})), std::invalid_argument);
}

TEST_CASE("accuracy loss values") {
    CHECK(acc_loss(dist_from_probs({0.3, 0.7}), 1).value == doctest::Approx(-0.7));
    CHECK(acc_loss(dist_from_probs({0.0, 1.0}), 1).value == doctest::Approx(-1.0));
}

TEST_CASE("accuracy-loss gradient is p_hat times the cross-entropy gradient") {
    // p_hat(label) = 0.5 forces the componentwise ratio 0.5
    const Prop1Report half = prop1_gradient_check(Tensor::from({2}, {0.0, 0.0}), 0);
    CHECK(half.p_true == doctest::Approx(0.5));
    CHECK(half.max_deviation <= 1e-9);

    Rng rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(7);
        Tensor logits = Tensor::gaussian({n}, 2.0, rng);
        const Prop1Report rep = prop1_gradient_check(logits, rng.below(n));
        CHECK(rep.max_deviation <= 1e-9);
    }
}

TEST_CASE("both optimization directions flagged by the gradient analysis") {
    // p_hat -> 1: both gradients vanish
    const Prop1Report sure = prop1_gradient_check(Tensor::from({3}, {30.0, 0.0, 0.0}), 0);
    CHECK(sure.acc_grad_norm <= 1e-8);
    CHECK(sure.ce_grad_norm <= 1e-8);

    // p_hat -> 0: the accuracy route loses its gradient, cross entropy does not
    const Prop1Report hopeless = prop1_gradient_check(Tensor::from({3}, {-30.0, 0.0, 0.0}), 0);
    CHECK(hopeless.p_true <= 1e-12);
    CHECK(hopeless.acc_grad_norm <= 1e-8);
    CHECK(hopeless.ce_grad_norm >= 0.5);
}

TEST_CASE("classification mi bound: independence and determinism endpoints") {
    // independent joint, marginal predictor: bound = mi = 0
    Tensor indep = Tensor::from({2, 2}, {0.25, 0.25, 0.25, 0.25});
    Tensor marginal = Tensor::from({2, 2}, {0.5, 0.5, 0.5, 0.5});
    const MiBound zero = mi_bound_classification(indep, marginal);
    CHECK(zero.exact_mi == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(zero.bound == doctest::Approx(0.0).epsilon(1e-12));

    // deterministic label, perfect predictor: bound = H(a) = mi
    Tensor det = Tensor::from({2, 2}, {0.5, 0.0, 0.0, 0.5});
    Tensor perfect = Tensor::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
    const MiBound tight = mi_bound_classification(det, perfect);
    CHECK(tight.exact_mi == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(tight.bound == doctest::Approx(tight.exact_mi).epsilon(1e-12));
    CHECK(tight.label_entropy == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("classification mi bound: posterior is tight, everything else is below") {
    Rng rng(321);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t nx = 2 + rng.below(5);  // up to 6
        const std::size_t na = 2 + rng.below(3);  // up to 4
        const Tensor joint = random_joint(nx, na, rng);
        const Tensor posterior = posterior_of(joint);

        const MiBound at_posterior = mi_bound_classification(joint, posterior);
        CHECK(std::abs(at_posterior.bound - at_posterior.exact_mi) <= 1e-9);

        // random predictor: still a valid lower bound
        Tensor noisy = posterior;
        for (std::size_t x = 0; x < nx; ++x) {
            double row = 0.0;
            for (std::size_t a = 0; a < na; ++a) {
                noisy(x, a) = 0.1 + rng.uniform(0, 1);
                row += noisy(x, a);
            }
            for (std::size_t a = 0; a < na; ++a) noisy(x, a) /= row;
        }
        const MiBound loose = mi_bound_classification(joint, noisy);
        CHECK(loose.bound <= loose.exact_mi + 1e-12);
    }
}

TEST_CASE("mi bound rejects invalid distributions") {
    Tensor joint = Tensor::from({2, 2}, {0.5, 0.5, 0.25, 0.25});  // sums to 1.5
    Tensor pred = Tensor::from({2, 2}, {0.5, 0.5, 0.5, 0.5});
    CHECK_THROWS_AS(mi_bound_classification(joint, pred), std::invalid_argument);
    Tensor ok = Tensor::from({2, 2}, {0.25, 0.25, 0.25, 0.25});
    Tensor bad_rows = Tensor::from({2, 2}, {0.9, 0.3, 0.5, 0.5});
    CHECK_THROWS_AS(mi_bound_classification(ok, bad_rows), std::invalid_argument);
}

TEST_CASE("regression surrogate is the mean absolute error with bounded gradient") {
    const Tensor a = Tensor::from({3}, {1.0, -2.0, 0.5});
    CHECK(mi_bound_regression_surrogate(a, a).value == doctest::Approx(0.0));
    const Tensor off = Tensor::from({3}, {2.0, -3.0, 1.5});
    CHECK(mi_bound_regression_surrogate(a, off).value == doctest::Approx(1.0));

    // elementwise gradient magnitude of sum|a - a_hat| is exactly 1 off the kink
    numerics::ParameterSet ps;
    ps.add("pred", numerics::ParamTag::semantic_dec, off);
    numerics::GradientSet gs = numerics::grad(
        [&](numerics::Graph& g, numerics::ParamBinder& p) {
            return g.scale(g.mean_abs(g.sub(p("pred"), g.constant(a))), 3.0);
        },
        ps);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(std::abs(gs.at("pred").v[i]) - 1.0) <= 1e-12);
}
