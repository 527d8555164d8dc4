#include "memsc/training/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "memsc/numerics/numerics.hpp"

namespace memsc::training {

using numerics::GradientSet;
using numerics::Graph;
using numerics::ParamBinder;
using numerics::ParameterSet;
using numerics::ParamTag;

LossValue ce_loss(const codec::AnswerDistribution& dist, std::size_t label) {
    if (label >= dist.probabilities.numel())
        throw std::invalid_argument("ce_loss: label out of range");
    const double p = dist.probabilities.v[label];
    return {-std::log(std::max(p, 1e-12)), p};
}

LossValue mse_loss(const Tensor& z, const Tensor& z_hat) {
    if (!z.same_shape(z_hat)) throw std::invalid_argument("mse_loss: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < z.numel(); ++i) {
        const double d = z.v[i] - z_hat.v[i];
        acc += d * d;
    }
    return {acc, 0.0};
}

LossValue acc_loss(const codec::AnswerDistribution& dist, std::size_t label) {
    if (label >= dist.probabilities.numel())
        throw std::invalid_argument("acc_loss: label out of range");
    const double p = dist.probabilities.v[label];
    return {-p, p};
}

Prop1Report prop1_gradient_check(const Tensor& logits, std::size_t label) {
    if (logits.rank() != 1 || label >= logits.numel())
        throw std::invalid_argument("prop1_gradient_check: bad logits/label");

    ParameterSet ps;
    ps.add("l", ParamTag::semantic_dec, logits);

    // accuracy route: -softmax(l)[label]
    GradientSet g_acc = numerics::grad(
        [&](Graph& g, ParamBinder& p) { return g.neg(g.pick(g.softmax(p("l")), label)); }, ps);
    // cross-entropy route: -log softmax(l)[label]
    GradientSet g_ce = numerics::grad(
        [&](Graph& g, ParamBinder& p) {
            return g.neg(g.log_elem(g.pick(g.softmax(p("l")), label)));
        },
        ps);

    const Tensor probs = numerics::softmax(logits);
    Prop1Report report;
    report.p_true = probs.v[label];
    double na = 0.0, nc = 0.0;
    for (std::size_t j = 0; j < logits.numel(); ++j) {
        const double a = g_acc.at("l").v[j];
        const double c = g_ce.at("l").v[j];
        report.max_deviation = std::max(report.max_deviation, std::abs(a - report.p_true * c));
        na += a * a;
        nc += c * c;
    }
    report.acc_grad_norm = std::sqrt(na);
    report.ce_grad_norm = std::sqrt(nc);
    return report;
}

namespace {

void check_distribution(const Tensor& joint) {
    if (joint.rank() != 2) throw std::invalid_argument("mi bound: joint must be rank 2");
    double total = 0.0;
    for (double p : joint.v) {
        if (p < 0.0 || !std::isfinite(p))
            throw std::invalid_argument("mi bound: invalid joint distribution");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("mi bound: joint must sum to 1");
}

}  // namespace

Tensor posterior_of(const Tensor& joint) {
    check_distribution(joint);
    const std::size_t nx = joint.rows(), na = joint.cols();
    Tensor post = Tensor::zeros({nx, na});
    for (std::size_t x = 0; x < nx; ++x) {
        double px = 0.0;
        for (std::size_t a = 0; a < na; ++a) px += joint(x, a);
        for (std::size_t a = 0; a < na; ++a)
            post(x, a) = px > 0.0 ? joint(x, a) / px : 1.0 / static_cast<double>(na);
    }
    return post;
}

MiBound mi_bound_classification(const Tensor& joint, const Tensor& predictor) {
    check_distribution(joint);
    const std::size_t nx = joint.rows(), na = joint.cols();
    if (predictor.rank() != 2 || predictor.rows() != nx || predictor.cols() != na)
        throw std::invalid_argument("mi bound: predictor shape mismatch");
    for (std::size_t x = 0; x < nx; ++x) {
        double row = 0.0;
        for (std::size_t a = 0; a < na; ++a) {
            if (predictor(x, a) < 0.0 || !std::isfinite(predictor(x, a)))
                throw std::invalid_argument("mi bound: invalid predictor distribution");
            row += predictor(x, a);
        }
        if (std::abs(row - 1.0) > 1e-9)
            throw std::invalid_argument("mi bound: predictor rows must sum to 1");
    }

    std::vector<double> px(nx, 0.0), pa(na, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t a = 0; a < na; ++a) {
            px[x] += joint(x, a);
            pa[a] += joint(x, a);
        }

    MiBound out;
    for (std::size_t a = 0; a < na; ++a)
        if (pa[a] > 0.0) out.label_entropy -= pa[a] * std::log(pa[a]);

    double expected_ce = 0.0;
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t a = 0; a < na; ++a) {
            const double p = joint(x, a);
            if (p <= 0.0) continue;
            out.exact_mi += p * std::log(p / (px[x] * pa[a]));
            expected_ce -= p * std::log(std::max(predictor(x, a), 1e-12));
        }
    out.bound = out.label_entropy - expected_ce;
    return out;
}

LossValue mi_bound_regression_surrogate(const Tensor& a, const Tensor& a_hat) {
    if (!a.same_shape(a_hat))
        throw std::invalid_argument("mi_bound_regression_surrogate: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += std::abs(a.v[i] - a_hat.v[i]);
    return {acc / static_cast<double>(std::max<std::size_t>(a.numel(), 1)), 0.0};
}

}  // namespace memsc::training
