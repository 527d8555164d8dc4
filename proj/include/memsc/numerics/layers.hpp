#pragma once

#include <string>

#include "memsc/numerics/graph.hpp"
#include "memsc/numerics/tensor.hpp"
#include "memsc/rng.hpp"

// Shared neural building blocks: parameter creation with the project-wide
// Gaussian fan-in/fan-out initialization, sinusoidal position codes, and one
// pre-norm-free (post-LN) transformer encoder layer used by the sentence
// encoder, the answer decoder and the importance scorer.

namespace memsc::numerics {

// Gaussian init, stddev sqrt(2 / (fan_in + fan_out)).
Tensor init_dense_weight(std::size_t fan_out, std::size_t fan_in, Rng& rng);

// Adds "<prefix>.w" [out x in] and "<prefix>.b" [out].
void add_dense_params(ParameterSet& ps, ParamTag tag, const std::string& prefix, std::size_t out,
                      std::size_t in, Rng& rng);

// row k: code[2i] = sin(k / 10000^(2i/width)), code[2i+1] = cos(...); width even.
Tensor sinusoidal_codes(std::size_t count, std::size_t width);

// One shared-weight transformer encoder layer:
//   x = LN(x + attn_out(MHA(x)))
//   x = LN(x + W2 relu(W1 x + b1) + b2)
// Parameter names under <prefix>: attn.{wq,wk,wv,wo}, ln1, ffn.{w1,w2}, ln2.
void add_transformer_layer_params(ParameterSet& ps, ParamTag tag, const std::string& prefix,
                                  std::size_t width, std::size_t ffn_hidden, Rng& rng);

struct TransformerLayerVars {
    Graph::Var wq, bq, wk, bk, wv, bv, wo, bo;
    Graph::Var ln1_gain, ln1_shift;
    Graph::Var ff_w1, ff_b1, ff_w2, ff_b2;
    Graph::Var ln2_gain, ln2_shift;
};

class ParamBinder;  // from numerics.hpp

TransformerLayerVars bind_transformer_layer(class ParamBinder& bind, const std::string& prefix);

Graph::Var transformer_layer_step(Graph& g, Graph::Var x, const TransformerLayerVars& p,
                                  std::size_t heads);

}  // namespace memsc::numerics
