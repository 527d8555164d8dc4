#include "memsc/numerics/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace memsc::numerics {

Tensor dense_apply(const Tensor& x, const Tensor& weights, const Tensor& bias) {
    Graph g;
    return g.value(g.dense(g.constant(x), g.constant(weights), g.constant(bias)));
}

Tensor softmax(const Tensor& v) {
    Graph g;
    return g.value(g.softmax(g.constant(v)));
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift) {
    Graph g;
    return g.value(g.layer_norm(g.constant(x), g.constant(gain), g.constant(shift)));
}

Tensor attention(const Tensor& queries, const Tensor& keys, const Tensor& values,
                 std::size_t heads) {
    Graph g;
    return g.value(
        attention(g, g.constant(queries), g.constant(keys), g.constant(values), heads));
}

Graph::Var ParamBinder::operator()(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    Graph::Var v = g_.param(ps_, name);
    bound_.emplace(name, v);
    return v;
}

double eval_loss(const LossFn& loss, const ParameterSet& params) {
    Graph g;
    ParamBinder binder(g, params);
    Graph::Var out = loss(g, binder);
    const Tensor& t = g.value(out);
    if (t.numel() != 1) throw std::invalid_argument("loss must evaluate to a scalar");
    return t.v[0];
}

GradientSet grad(const LossFn& loss, const ParameterSet& params, double* loss_value) {
    Graph g;
    ParamBinder binder(g, params);
    Graph::Var out = loss(g, binder);
    if (loss_value) *loss_value = g.value(out).v[0];
    g.backward(out);
    GradientSet gs = g.extract_gradients(params);
    if (!gs.all_finite()) throw std::runtime_error("grad: non-finite gradient");
    return gs;
}

double finite_diff_compare(const LossFn& loss, const ParameterSet& params,
                           const GradientSet& grads, double step) {
    if (step <= 0.0) throw std::invalid_argument("finite_diff_compare: step must be positive");
    ParameterSet probe = params;
    double worst = 0.0;
    for (std::size_t p = 0; p < probe.size(); ++p) {
        Tensor& t = probe.entry(p).value;
        const Tensor& g = grads.at(probe.entry(p).name);
        for (std::size_t i = 0; i < t.numel(); ++i) {
            const double keep = t.v[i];
            t.v[i] = keep + step;
            const double up = eval_loss(loss, probe);
            t.v[i] = keep - step;
            const double down = eval_loss(loss, probe);
            t.v[i] = keep;
            const double fd = (up - down) / (2.0 * step);
            const double ad = g.v[i];
            const double denom = std::max({std::abs(fd), std::abs(ad), 1e-8});
            worst = std::max(worst, std::abs(fd - ad) / denom);
        }
    }
    return worst;
}

double finite_diff_check(const LossFn& loss, const ParameterSet& params, double step) {
    return finite_diff_compare(loss, params, grad(loss, params), step);
}

}  // namespace memsc::numerics
