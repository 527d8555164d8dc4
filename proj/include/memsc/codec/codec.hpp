#pragma once

#include <cstdint>
#include <vector>

#include "memsc/adaptive/adaptive.hpp"
#include "memsc/channel/channel.hpp"
#include "memsc/data/babi.hpp"
#include "memsc/memory/memory_queue.hpp"
#include "memsc/numerics/graph.hpp"
#include "memsc/numerics/numerics.hpp"

// Sentence-level semantic transceiver: shared-weight transformer encoder with
// summation pooling, dense channel codec, receiver memory queue with temporal
// codes, and the answer decoder reading out at the question position.

namespace memsc::codec {

using numerics::Graph;
using numerics::ParamBinder;
using numerics::ParameterSet;
using numerics::Tensor;

struct Config {
    std::size_t vocab_size = 0;    // V (from data)
    std::size_t answer_vocab = 0;  // A (from data)
    std::size_t width = 128;       // d; also the sentence-feature width N
    std::size_t symbol_length = 32;  // L complex symbols per sentence
    std::size_t encoder_steps = 3;
    std::size_t decoder_steps = 6;
    std::size_t heads = 4;
    std::size_t memory_capacity = 10;  // T
    std::size_t jsc_hidden = 0;        // 0 derives 2*max(width, 2L)
    adaptive::ImportanceConfig importance{64, 2};

    static Config full_defaults();
    // shrunk profile for minutes-level CPU training
    static Config desk_defaults();

    std::size_t feature_width() const { return width; }
    std::size_t jsc_hidden_width() const;
    void validate() const;
};

// Fresh Gaussian-initialized parameters for every component, deterministic in
// the seed.
ParameterSet init_params(const Config& cfg, std::uint64_t seed);

struct AnswerDistribution {
    Tensor logits;
    Tensor probabilities;
};

AnswerDistribution answer_distribution(const Tensor& logits);
// argmax; ties break to the lowest index
std::size_t predict(const AnswerDistribution& d);

// ---- plain (untracked) per-operation entry points ----

// token ids -> pooled, normalized sentence feature of width N; padding ids are
// dropped, an all-padding or empty sentence throws
Tensor semantic_encode(const std::vector<std::int32_t>& token_ids, const ParameterSet& params,
                       const Config& cfg);
// feature -> L power-normalized complex symbols
channel::ChannelSymbols jsc_encode(const Tensor& feature, const ParameterSet& params,
                                   const Config& cfg);
// equalized interleaved symbols -> recovered feature
Tensor jsc_decode(const std::vector<double>& equalized_ri, const ParameterSet& params,
                  const Config& cfg);
// question feature + memory matrix (temporal codes already added) -> answer
AnswerDistribution semantic_decode(const Tensor& question_feature, const Tensor& memory,
                                   const ParameterSet& params, const Config& cfg);

// ---- full pipeline ----

struct LinkOptions {
    channel::Kind kind = channel::Kind::awgn;
    double rician_r = 2.0;
    double sigma_n2 = 0.0;
    double csi_error_var = 0.0;
};

enum class MaskStrategy { none, importance, consecutive, random };

MaskStrategy mask_strategy_from_name(const std::string& name);
const char* mask_strategy_name(MaskStrategy s);

struct MaskOptions {
    MaskStrategy strategy = MaskStrategy::none;
    std::size_t budget = 0;  // complex symbols kept; 0 means the full length
    double temperature = 1.0;
    // Algorithm-2 training bridge: masked signal goes through the full-length
    // channel and the mask enters the graph via the straight-through op.
    // Otherwise dropped elements are never transmitted and the receiver
    // zero-pads them.
    bool straight_through = false;
};

struct ForwardOptions {
    LinkOptions link;
    MaskOptions mask;
    bool channel_free = false;  // stage-1 pipeline: features enter memory directly
    bool zero_memory = false;   // ablation: decoder sees an all-zero memory matrix
};

// Graph route shared by training and evaluation. Channel draws come from
// Rng::stream(global_seed, episode_index, slot_index); context sentences use
// slots 0..K-1 and the question slot K. Context transmissions are masked,
// the question never is.
Graph::Var build_full_forward(Graph& g, ParamBinder& bind, const Config& cfg,
                              const data::EncodedEpisode& episode, const ForwardOptions& opt,
                              std::uint64_t global_seed, std::uint64_t episode_index);

AnswerDistribution full_forward(const data::EncodedEpisode& episode, const ParameterSet& params,
                                const Config& cfg, const ForwardOptions& opt,
                                std::uint64_t global_seed, std::uint64_t episode_index);

// component builders reused by the training stages
Graph::Var build_sentence_feature(Graph& g, ParamBinder& bind, const Config& cfg,
                                  const std::vector<std::int32_t>& token_ids);
Graph::Var build_jsc_encode(Graph& g, ParamBinder& bind, const Config& cfg, Graph::Var feature);
Graph::Var build_jsc_decode(Graph& g, ParamBinder& bind, const Config& cfg, Graph::Var equalized);
Graph::Var build_answer_logits(Graph& g, ParamBinder& bind, const Config& cfg,
                               Graph::Var question_feature,
                               const std::vector<Graph::Var>& memory_rows_with_codes);

}  // namespace memsc::codec
