#include "memsc/numerics/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "memsc/numerics/numerics.hpp"

namespace memsc::numerics {

Tensor init_dense_weight(std::size_t fan_out, std::size_t fan_in, Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
    return Tensor::gaussian({fan_out, fan_in}, stddev, rng);
}

void add_dense_params(ParameterSet& ps, ParamTag tag, const std::string& prefix, std::size_t out,
                      std::size_t in, Rng& rng) {
    ps.add(prefix + ".w", tag, init_dense_weight(out, in, rng));
    ps.add(prefix + ".b", tag, Tensor::zeros({out}));
}

Tensor sinusoidal_codes(std::size_t count, std::size_t width) {
    if (width % 2 != 0) throw std::invalid_argument("sinusoidal_codes: width must be even");
    Tensor codes = Tensor::zeros({count, width});
    for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t i = 0; 2 * i < width; ++i) {
            const double freq =
                std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(width));
            const double angle = static_cast<double>(k) * freq;
            codes(k, 2 * i) = std::sin(angle);
            codes(k, 2 * i + 1) = std::cos(angle);
        }
    }
    return codes;
}

void add_transformer_layer_params(ParameterSet& ps, ParamTag tag, const std::string& prefix,
                                  std::size_t width, std::size_t ffn_hidden, Rng& rng) {
    add_dense_params(ps, tag, prefix + ".attn.wq", width, width, rng);
    // no key bias: a shared key offset shifts all scores of a query equally
    // and cancels in the softmax
    ps.add(prefix + ".attn.wk.w", tag, init_dense_weight(width, width, rng));
    add_dense_params(ps, tag, prefix + ".attn.wv", width, width, rng);
    add_dense_params(ps, tag, prefix + ".attn.wo", width, width, rng);
    ps.add(prefix + ".ln1.gain", tag, Tensor::full({width}, 1.0));
    ps.add(prefix + ".ln1.shift", tag, Tensor::zeros({width}));
    add_dense_params(ps, tag, prefix + ".ffn.w1", ffn_hidden, width, rng);
    add_dense_params(ps, tag, prefix + ".ffn.w2", width, ffn_hidden, rng);
    ps.add(prefix + ".ln2.gain", tag, Tensor::full({width}, 1.0));
    ps.add(prefix + ".ln2.shift", tag, Tensor::zeros({width}));
}

TransformerLayerVars bind_transformer_layer(ParamBinder& bind, const std::string& prefix) {
    TransformerLayerVars v;
    v.wq = bind(prefix + ".attn.wq.w");
    v.bq = bind(prefix + ".attn.wq.b");
    v.wk = bind(prefix + ".attn.wk.w");
    const std::size_t width = bind.graph().value(v.wk).rows();
    v.bk = bind.graph().constant(Tensor::zeros({width}));
    v.wv = bind(prefix + ".attn.wv.w");
    v.bv = bind(prefix + ".attn.wv.b");
    v.wo = bind(prefix + ".attn.wo.w");
    v.bo = bind(prefix + ".attn.wo.b");
    v.ln1_gain = bind(prefix + ".ln1.gain");
    v.ln1_shift = bind(prefix + ".ln1.shift");
    v.ff_w1 = bind(prefix + ".ffn.w1.w");
    v.ff_b1 = bind(prefix + ".ffn.w1.b");
    v.ff_w2 = bind(prefix + ".ffn.w2.w");
    v.ff_b2 = bind(prefix + ".ffn.w2.b");
    v.ln2_gain = bind(prefix + ".ln2.gain");
    v.ln2_shift = bind(prefix + ".ln2.shift");
    return v;
}

Graph::Var transformer_layer_step(Graph& g, Graph::Var x, const TransformerLayerVars& p,
                                  std::size_t heads) {
    Graph::Var q = g.dense(x, p.wq, p.bq);
    Graph::Var k = g.dense(x, p.wk, p.bk);
    Graph::Var v = g.dense(x, p.wv, p.bv);
    Graph::Var mixed = g.dense(attention(g, q, k, v, heads), p.wo, p.bo);
    x = g.layer_norm(g.add(x, mixed), p.ln1_gain, p.ln1_shift);
    Graph::Var ff = g.dense(g.relu(g.dense(x, p.ff_w1, p.ff_b1)), p.ff_w2, p.ff_b2);
    return g.layer_norm(g.add(x, ff), p.ln2_gain, p.ln2_shift);
}

}  // namespace memsc::numerics
