#pragma once

#include <functional>
#include <unordered_map>

#include "memsc/numerics/graph.hpp"
#include "memsc/numerics/tensor.hpp"

namespace memsc::numerics {

// Untracked single-shot versions of the differentiable building blocks. Each
// runs the same forward code as the Graph ops.
Tensor dense_apply(const Tensor& x, const Tensor& weights, const Tensor& bias);
Tensor softmax(const Tensor& v);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift);
Tensor attention(const Tensor& queries, const Tensor& keys, const Tensor& values,
                 std::size_t heads);

// Binds parameters into a graph on demand; each name is bound at most once.
class ParamBinder {
public:
    ParamBinder(Graph& g, const ParameterSet& ps) : g_(g), ps_(ps) {}
    Graph::Var operator()(const std::string& name);
    Graph& graph() { return g_; }
    const ParameterSet& params() const { return ps_; }

private:
    Graph& g_;
    const ParameterSet& ps_;
    std::unordered_map<std::string, Graph::Var> bound_;
};

// A scalar loss expressed as a graph build over bound parameters.
using LossFn = std::function<Graph::Var(Graph&, ParamBinder&)>;

double eval_loss(const LossFn& loss, const ParameterSet& params);
// Reverse-mode gradients of `loss` at `params`; optionally reports the loss value.
GradientSet grad(const LossFn& loss, const ParameterSet& params, double* loss_value = nullptr);

// Central-difference verification. Returns the maximum relative error over all
// parameter elements, with |a - b| / max(|a|, |b|, 1e-8) as the metric.
double finite_diff_compare(const LossFn& loss, const ParameterSet& params,
                           const GradientSet& grads, double step);
double finite_diff_check(const LossFn& loss, const ParameterSet& params, double step);

}  // namespace memsc::numerics
