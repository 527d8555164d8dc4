#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "memsc/numerics/tensor.hpp"

namespace memsc::numerics {

// Define-by-run reverse-mode tape over Tensors. A Graph is built for one
// forward pass, differentiated once with backward(), then discarded. Shapes
// are fixed per pass, which is all the fixed transceiver architectures need.
//
// Gradients flow through every op here except hard_mask_st, whose backward is
// a straight-through sigmoid surrogate by construction (the forward is a step
// function, so its true derivative is zero almost everywhere).
class Graph {
public:
    struct Var {
        std::uint32_t idx = UINT32_MAX;
        bool valid() const { return idx != UINT32_MAX; }
    };

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // leaves
    Var constant(Tensor t);                                  // no gradient tracking
    Var input(Tensor t);                                     // gradient-tracked leaf
    Var param(const ParameterSet& ps, const std::string& name);

    const Tensor& value(Var v) const;
    const Tensor& grad(Var v) const;  // valid after backward()

    // elementwise and structural
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var relu(Var a);
    Var log_elem(Var a);
    Var neg(Var a);
    Var pick(Var vec, std::size_t i);
    Var sum(Var a);
    Var sum_rows(Var m);
    Var row(Var m, std::size_t i);
    Var slice_cols(Var m, std::size_t c0, std::size_t c1);
    Var concat_cols(const std::vector<Var>& parts);
    Var stack_rows(const std::vector<Var>& rows);
    Var reshape(Var a, std::vector<std::size_t> shape);

    // linear algebra; dense applies y = W x + b (or row-wise for rank-2 x)
    Var dense(Var x, Var w, Var b);
    Var matmul_nt(Var a, Var b);  // A B^T
    Var matmul_nn(Var a, Var b);  // A B

    Var softmax(Var a);                          // last-dimension softmax
    Var layer_norm(Var x, Var gain, Var shift);  // last-dimension, eps 1e-5

    Var embed(Var table, const std::vector<std::int32_t>& ids);

    // scalar losses
    Var cross_entropy_with_logits(Var logits, std::size_t label);
    Var sum_squares(Var a);
    Var mean_abs(Var a);

    // transmit-path ops; x is an interleaved re/im vector of even length
    Var power_normalize(Var x);
    Var complex_affine(Var x, const Tensor& scale_ri, const Tensor& offset_ri);
    // forward: the given hard 0/1 mask (one flag per complex element);
    // backward into `scores`: the derivative of sigma((p - kappa)/temperature)
    // where kappa is the score of the threshold element, so a uniform shift of
    // all scores has zero gradient (the mask depends only on ranks)
    Var hard_mask_st(Var scores, const std::vector<std::uint8_t>& mask, double kappa,
                     std::size_t threshold_index, double temperature);
    Var expand_pairs(Var per_complex);  // [L] -> [2L]

    void backward(Var loss);
    GradientSet extract_gradients(const ParameterSet& ps) const;

    std::size_t size() const { return nodes_.size(); }
    bool requires_grad(Var v) const { return nodes_[v.idx].needs_grad; }

    static constexpr double kLayerNormEps = 1e-5;

private:
    struct Node {
        Tensor val;
        Tensor grad;
        bool needs_grad = false;
        std::function<void(Graph&)> back;
    };

    Var make(Tensor val, bool needs_grad, std::function<void(Graph&)> back);
    Tensor& grad_ref(std::uint32_t idx) { return nodes_[idx].grad; }
    void check_var(Var v) const;

    std::vector<Node> nodes_;
    std::vector<std::pair<std::string, std::uint32_t>> param_vars_;
    bool ran_backward_ = false;
};

// Scaled dot-product attention with `heads` heads over graph variables,
// composed from slice/matmul/softmax/concat primitives. queries [n x d],
// keys/values [m x d], d divisible by heads; per-head scale 1/sqrt(d/heads).
Graph::Var attention(Graph& g, Graph::Var queries, Graph::Var keys, Graph::Var values,
                     std::size_t heads);

}  // namespace memsc::numerics
