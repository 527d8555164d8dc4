#include "memsc/codec/codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "memsc/numerics/layers.hpp"

namespace memsc::codec {

using numerics::ParamTag;

Config Config::full_defaults() {
    Config cfg;
    cfg.width = 128;
    cfg.symbol_length = 32;
    cfg.encoder_steps = 3;
    cfg.decoder_steps = 6;
    cfg.heads = 4;
    cfg.importance = {64, 2};
    return cfg;
}

Config Config::desk_defaults() {
    Config cfg;
    cfg.width = 32;
    cfg.symbol_length = 24;
    cfg.encoder_steps = 2;
    cfg.decoder_steps = 2;
    cfg.heads = 2;
    cfg.importance = {32, 2};
    return cfg;
}

std::size_t Config::jsc_hidden_width() const {
    return jsc_hidden != 0 ? jsc_hidden : 2 * std::max(width, 2 * symbol_length);
}

void Config::validate() const {
    if (vocab_size < 3) throw std::invalid_argument("config: vocab_size must cover pad/unk/tokens");
    if (answer_vocab < 1) throw std::invalid_argument("config: answer_vocab must be >= 1");
    if (width < 2 || width % 2 != 0) throw std::invalid_argument("config: width must be even");
    if (heads < 1 || width % heads != 0)
        throw std::invalid_argument("config: heads must divide width");
    if (symbol_length < 1) throw std::invalid_argument("config: symbol_length must be >= 1");
    if (encoder_steps < 1 || decoder_steps < 1)
        throw std::invalid_argument("config: step counts must be >= 1");
    if (memory_capacity < 1) throw std::invalid_argument("config: memory capacity must be >= 1");
    if (importance.width < 2 || importance.width % 2 != 0)
        throw std::invalid_argument("config: importance width must be even");
    if (importance.heads < 1 || importance.width % importance.heads != 0)
        throw std::invalid_argument("config: importance heads must divide its width");
}

ParameterSet init_params(const Config& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(Rng::mix({seed, 0x1417ULL, cfg.width, cfg.vocab_size}));
    ParameterSet ps;
    const std::size_t d = cfg.width;
    const std::size_t h = cfg.jsc_hidden_width();
    const std::size_t two_l = 2 * cfg.symbol_length;

    ps.add("emb.table", ParamTag::semantic_enc,
           numerics::init_dense_weight(cfg.vocab_size, d, rng));
    numerics::add_transformer_layer_params(ps, ParamTag::semantic_enc, "enc.layer", d, 2 * d, rng);
    ps.add("enc.norm.gain", ParamTag::semantic_enc, Tensor::full({d}, 1.0));
    ps.add("enc.norm.shift", ParamTag::semantic_enc, Tensor::zeros({d}));

    numerics::add_dense_params(ps, ParamTag::jsc_enc, "jsc.enc.l1", h, d, rng);
    numerics::add_dense_params(ps, ParamTag::jsc_enc, "jsc.enc.l2", two_l, h, rng);
    numerics::add_dense_params(ps, ParamTag::jsc_dec, "jsc.dec.l1", h, two_l, rng);
    numerics::add_dense_params(ps, ParamTag::jsc_dec, "jsc.dec.l2", d, h, rng);

    numerics::add_transformer_layer_params(ps, ParamTag::semantic_dec, "dec.layer", d, 2 * d, rng);
    numerics::add_dense_params(ps, ParamTag::semantic_dec, "dec.head", cfg.answer_vocab, d, rng);

    adaptive::add_importance_params(ps, cfg.importance, rng);
    return ps;
}

AnswerDistribution answer_distribution(const Tensor& logits) {
    AnswerDistribution d;
    d.logits = logits;
    d.probabilities = numerics::softmax(logits);
    return d;
}

std::size_t predict(const AnswerDistribution& d) {
    if (d.logits.numel() == 0) throw std::invalid_argument("predict: empty logits");
    return static_cast<std::size_t>(
        std::max_element(d.logits.v.begin(), d.logits.v.end()) - d.logits.v.begin());
}

MaskStrategy mask_strategy_from_name(const std::string& name) {
    if (name == "none") return MaskStrategy::none;
    if (name == "importance") return MaskStrategy::importance;
    if (name == "consecutive") return MaskStrategy::consecutive;
    if (name == "random") return MaskStrategy::random;
    throw std::invalid_argument("unknown mask strategy: " + name);
}

const char* mask_strategy_name(MaskStrategy s) {
    switch (s) {
        case MaskStrategy::none: return "none";
        case MaskStrategy::importance: return "importance";
        case MaskStrategy::consecutive: return "consecutive";
        case MaskStrategy::random: return "random";
    }
    return "unknown";
}

Graph::Var build_sentence_feature(Graph& g, ParamBinder& bind, const Config& cfg,
                                  const std::vector<std::int32_t>& token_ids) {
    std::vector<std::int32_t> ids;
    ids.reserve(token_ids.size());
    for (std::int32_t id : token_ids)
        if (id != data::Vocabulary::kPad) ids.push_back(id);
    if (ids.empty()) throw std::invalid_argument("semantic_encode: empty sentence");

    Graph::Var words = g.embed(bind("emb.table"), ids);
    words = g.add(words, g.constant(numerics::sinusoidal_codes(ids.size(), cfg.width)));
    const auto layer = numerics::bind_transformer_layer(bind, "enc.layer");
    for (std::size_t step = 0; step < cfg.encoder_steps; ++step)
        words = numerics::transformer_layer_step(g, words, layer, cfg.heads);
    Graph::Var pooled = g.sum_rows(words);
    return g.layer_norm(pooled, bind("enc.norm.gain"), bind("enc.norm.shift"));
}

Graph::Var build_jsc_encode(Graph& g, ParamBinder& bind, const Config& cfg, Graph::Var feature) {
    if (g.value(feature).numel() != cfg.feature_width())
        throw std::invalid_argument("jsc encode: feature width mismatch");
    Graph::Var h = g.relu(g.dense(feature, bind("jsc.enc.l1.w"), bind("jsc.enc.l1.b")));
    Graph::Var x = g.dense(h, bind("jsc.enc.l2.w"), bind("jsc.enc.l2.b"));
    return g.power_normalize(x);
}

Graph::Var build_jsc_decode(Graph& g, ParamBinder& bind, const Config& cfg, Graph::Var equalized) {
    if (g.value(equalized).numel() != 2 * cfg.symbol_length)
        throw std::invalid_argument("jsc decode: symbol length mismatch");
    Graph::Var h = g.relu(g.dense(equalized, bind("jsc.dec.l1.w"), bind("jsc.dec.l1.b")));
    return g.dense(h, bind("jsc.dec.l2.w"), bind("jsc.dec.l2.b"));
}

Graph::Var build_answer_logits(Graph& g, ParamBinder& bind, const Config& cfg,
                               Graph::Var question_feature,
                               const std::vector<Graph::Var>& memory_rows_with_codes) {
    std::vector<Graph::Var> rows;
    rows.reserve(memory_rows_with_codes.size() + 1);
    rows.push_back(question_feature);  // readout position 0
    for (Graph::Var r : memory_rows_with_codes) rows.push_back(r);
    Graph::Var seq = g.stack_rows(rows);
    const auto layer = numerics::bind_transformer_layer(bind, "dec.layer");
    for (std::size_t step = 0; step < cfg.decoder_steps; ++step)
        seq = numerics::transformer_layer_step(g, seq, layer, cfg.heads);
    Graph::Var readout = g.row(seq, 0);
    return g.dense(readout, bind("dec.head.w"), bind("dec.head.b"));
}

namespace {

// transmit one sentence feature through codec + channel, with optional masking
Graph::Var build_transmission(Graph& g, ParamBinder& bind, const Config& cfg, Graph::Var feature,
                              const ForwardOptions& opt, bool maskable, std::uint64_t global_seed,
                              std::uint64_t episode_index, std::uint64_t slot_index) {
    Graph::Var x = build_jsc_encode(g, bind, cfg, feature);
    const std::size_t length = cfg.symbol_length;

    Rng slot_rng = Rng::stream(global_seed, episode_index, slot_index);
    const channel::DetectedAffine affine = channel::draw_detected_affine(
        opt.link.kind, length, opt.link.rician_r, opt.link.sigma_n2, opt.link.csi_error_var,
        slot_rng);

    const MaskOptions& mask = opt.mask;
    const bool masking = maskable && mask.strategy != MaskStrategy::none && mask.budget != 0 &&
                         mask.budget < length;
    if (!masking) return build_jsc_decode(g, bind, cfg, g.complex_affine(x, affine.scale_ri,
                                                                         affine.offset_ri));

    std::vector<std::uint8_t> mask_vec;
    Graph::Var masked{};
    if (mask.strategy == MaskStrategy::importance && mask.straight_through) {
        // Algorithm-2 bridge: scores stay in the graph and the hard mask
        // enters through the straight-through op. The mask applies on both
        // sides of the link (dropped elements are never transmitted; the
        // receiver re-inserts zeros from the position bitmap), and gradients
        // reach the scorer through both applications.
        Graph::Var scores = adaptive::build_importance_scores(g, bind, x, cfg.importance);
        const adaptive::MaskPlan plan =
            adaptive::mask_for_budget(g.value(scores).v, mask.budget);
        Graph::Var m = g.hard_mask_st(scores, plan.mask, plan.threshold, plan.threshold_index,
                                      mask.temperature);
        Graph::Var m_pairs = g.expand_pairs(m);
        masked = g.mul(x, m_pairs);
        Graph::Var equalized_st =
            g.complex_affine(masked, affine.scale_ri, affine.offset_ri);
        return build_jsc_decode(g, bind, cfg, g.mul(equalized_st, m_pairs));
    }

    switch (mask.strategy) {
        case MaskStrategy::importance: {
            const adaptive::MaskPlan plan = adaptive::mask_for_budget(
                adaptive::importance_scores(g.value(x).v, bind.params(), cfg.importance),
                mask.budget);
            mask_vec = plan.mask;
            break;
        }
        case MaskStrategy::consecutive:
            mask_vec = adaptive::consecutive_mask_vector(length, mask.budget);
            break;
        case MaskStrategy::random:
            mask_vec = adaptive::random_mask_vector(length, mask.budget, slot_rng);
            break;
        case MaskStrategy::none:
            break;
    }

    Tensor mask_ri = Tensor::zeros({2 * length});
    for (std::size_t k = 0; k < length; ++k)
        mask_ri.v[2 * k] = mask_ri.v[2 * k + 1] = mask_vec[k] ? 1.0 : 0.0;
    Graph::Var mask_const = g.constant(mask_ri);
    masked = g.mul(x, mask_const);
    Graph::Var equalized = g.complex_affine(masked, affine.scale_ri, affine.offset_ri);
    // dropped elements are never transmitted; the receiver pads them with zeros
    equalized = g.mul(equalized, mask_const);
    return build_jsc_decode(g, bind, cfg, equalized);
}

}  // namespace

Graph::Var build_full_forward(Graph& g, ParamBinder& bind, const Config& cfg,
                              const data::EncodedEpisode& episode, const ForwardOptions& opt,
                              std::uint64_t global_seed, std::uint64_t episode_index) {
    if (episode.context.empty())
        throw std::invalid_argument("full_forward: episode has no context sentences");

    const std::size_t width = cfg.feature_width();
    memory::BasicQueue<Graph::Var> queue(cfg.memory_capacity, g.constant(Tensor::zeros({width})));

    for (std::size_t k = 0; k < episode.context.size(); ++k) {
        Graph::Var feature = build_sentence_feature(g, bind, cfg, episode.context[k]);
        Graph::Var recovered =
            opt.channel_free
                ? feature
                : build_transmission(g, bind, cfg, feature, opt, /*maskable=*/true, global_seed,
                                     episode_index, k);
        queue = queue.pushed(recovered);
    }

    Graph::Var question = build_sentence_feature(g, bind, cfg, episode.question);
    if (!opt.channel_free)
        question = build_transmission(g, bind, cfg, question, opt, /*maskable=*/false, global_seed,
                                      episode_index, episode.context.size());

    std::vector<Graph::Var> memory_rows;
    memory_rows.reserve(cfg.memory_capacity);
    if (opt.zero_memory) {
        for (std::size_t k = 0; k < cfg.memory_capacity; ++k)
            memory_rows.push_back(g.constant(Tensor::zeros({width})));
    } else {
        const Tensor codes = memory::temporal_matrix(cfg.memory_capacity, width);
        for (std::size_t k = 0; k < cfg.memory_capacity; ++k) {
            Tensor row = Tensor::from({width}, {codes.v.begin() + k * width,
                                                codes.v.begin() + (k + 1) * width});
            memory_rows.push_back(g.add(queue.slot(k), g.constant(row)));
        }
    }
    return build_answer_logits(g, bind, cfg, question, memory_rows);
}

AnswerDistribution full_forward(const data::EncodedEpisode& episode, const ParameterSet& params,
                                const Config& cfg, const ForwardOptions& opt,
                                std::uint64_t global_seed, std::uint64_t episode_index) {
    Graph g;
    ParamBinder bind(g, params);
    Graph::Var logits = build_full_forward(g, bind, cfg, episode, opt, global_seed, episode_index);
    return answer_distribution(g.value(logits));
}

Tensor semantic_encode(const std::vector<std::int32_t>& token_ids, const ParameterSet& params,
                       const Config& cfg) {
    Graph g;
    ParamBinder bind(g, params);
    return g.value(build_sentence_feature(g, bind, cfg, token_ids));
}

channel::ChannelSymbols jsc_encode(const Tensor& feature, const ParameterSet& params,
                                   const Config& cfg) {
    if (feature.rank() != 1 || feature.numel() != cfg.feature_width())
        throw std::invalid_argument("jsc_encode: feature width mismatch");
    Graph g;
    ParamBinder bind(g, params);
    Graph::Var x = build_jsc_encode(g, bind, cfg, g.constant(feature));
    channel::ChannelSymbols out;
    out.ri = g.value(x).v;
    return out;
}

Tensor jsc_decode(const std::vector<double>& equalized_ri, const ParameterSet& params,
                  const Config& cfg) {
    if (equalized_ri.size() != 2 * cfg.symbol_length)
        throw std::invalid_argument("jsc_decode: symbol length mismatch");
    Graph g;
    ParamBinder bind(g, params);
    return g.value(build_jsc_decode(
        g, bind, cfg, g.constant(Tensor::from({equalized_ri.size()}, equalized_ri))));
}

AnswerDistribution semantic_decode(const Tensor& question_feature, const Tensor& memory,
                                   const ParameterSet& params, const Config& cfg) {
    if (question_feature.rank() != 1 || question_feature.numel() != cfg.feature_width())
        throw std::invalid_argument("semantic_decode: question feature width mismatch");
    if (memory.rank() != 2 || memory.cols() != cfg.feature_width())
        throw std::invalid_argument("semantic_decode: memory width mismatch");
    Graph g;
    ParamBinder bind(g, params);
    std::vector<Graph::Var> rows;
    for (std::size_t k = 0; k < memory.rows(); ++k)
        rows.push_back(g.constant(Tensor::from(
            {memory.cols()}, {memory.v.begin() + k * memory.cols(),
                              memory.v.begin() + (k + 1) * memory.cols()})));
    Graph::Var logits = build_answer_logits(g, bind, cfg, g.constant(question_feature), rows);
    return answer_distribution(g.value(logits));
}

}  // namespace memsc::codec
