#include "memsc/training/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "memsc/kernels/kernels.hpp"

namespace memsc::training {

using numerics::GradientSet;
using numerics::Graph;
using numerics::ParamBinder;
using numerics::ParamTag;
using numerics::Tensor;
using memsc::Rng;

TrainProfile TrainProfile::full() {
    TrainProfile p;
    p.semantic = {200, 5e-4, 250};
    p.jsc = {100, 1e-4, 50};
    p.whole = {200, 5e-4, 30};
    p.importance = {200, 5e-4, 10};
    p.consecutive = {200, 1e-4, 50};
    return p;
}

TrainProfile TrainProfile::desk() {
    // Small batches and <= 30 epochs per stage keep a full run on CPU in the
    // low minutes; the learning rates are raised to fit the shorter schedules.
    TrainProfile p;
    p.semantic = {32, 1e-3, 30};
    p.jsc = {64, 1e-3, 10};
    p.whole = {32, 5e-4, 6};
    p.importance = {32, 1e-3, 14};
    p.consecutive = {32, 5e-4, 10};
    return p;
}

TrainProfile TrainProfile::named(const std::string& name) {
    if (name == "full") return full();
    if (name == "desk") return desk();
    throw std::invalid_argument("unknown train profile: " + name);
}

void MetricsLog::record(const std::string& stage, std::size_t epoch, double loss,
                        double val_accuracy) {
    rows_.push_back({stage, epoch, loss, val_accuracy});
    if (sink_)
        (*sink_) << "stage=" << stage << " epoch=" << epoch << " loss=" << loss
                 << " val_acc=" << val_accuracy << "\n";
}

namespace {

constexpr double kClipNorm = 1.0;

bool tag_in(ParamTag tag, const std::vector<ParamTag>& tags) {
    return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

// Adaptive-moment descent (beta1 0.9, beta2 0.999) over a tag subset.
class Adam {
public:
    Adam(const ParameterSet& params, double lr) : lr_(lr) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_.push_back(Tensor::zeros(params.entry(i).value.shape));
            v_.push_back(Tensor::zeros(params.entry(i).value.shape));
        }
    }

    void step(ParameterSet& params, const GradientSet& grads, const std::vector<ParamTag>& tags) {
        ++t_;
        const double c1 = 1.0 - std::pow(0.9, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(0.999, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& entry = params.entry(i);
            if (!tag_in(entry.tag, tags)) continue;
            const Tensor& g = grads.at(entry.name);
            Tensor& m = m_[i];
            Tensor& v = v_[i];
            for (std::size_t j = 0; j < g.numel(); ++j) {
                m.v[j] = 0.9 * m.v[j] + 0.1 * g.v[j];
                v.v[j] = 0.999 * v.v[j] + 0.001 * g.v[j] * g.v[j];
                entry.value.v[j] -=
                    lr_ * (m.v[j] / c1) / (std::sqrt(v.v[j] / c2) + 1e-8);
            }
        }
    }

private:
    double lr_;
    std::uint64_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

double trainable_norm(const ParameterSet& params, const GradientSet& grads,
                      const std::vector<ParamTag>& tags) {
    double acc = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!tag_in(params.entry(i).tag, tags)) continue;
        const Tensor& g = grads.at(params.entry(i).name);
        acc += kernels::dot(g.data(), g.data(), g.numel());
    }
    return std::sqrt(acc);
}

struct StageSpec {
    std::string name;
    std::size_t item_count = 0;
    std::vector<ParamTag> tags;
    // hook run once per batch (resamples SNR, budget, channel epoch seed)
    std::function<void(std::size_t epoch, Rng& rng)> pre_batch;
    std::function<Graph::Var(Graph&, ParamBinder&, std::size_t item)> item_loss;
    std::function<double()> validate;  // may be empty
};

void run_stage(ParameterSet& params, const TrainContext& ctx, const StageProfile& profile,
               const StageSpec& spec) {
    if (profile.epochs == 0) return;
    if (profile.batch_size == 0 || profile.learning_rate <= 0.0)
        throw std::invalid_argument("train " + spec.name + ": invalid profile");
    if (spec.item_count == 0)
        throw std::invalid_argument("train " + spec.name + ": no training items");

    Adam adam(params, profile.learning_rate);
    std::vector<std::size_t> order(spec.item_count);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < profile.epochs; ++epoch) {
        Rng shuffle_rng(Rng::mix({ctx.seed, 0x5f0f1eULL, epoch}));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        Rng batch_rng(Rng::mix({ctx.seed, 0xba7c4ULL, epoch}));

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += profile.batch_size) {
            const std::size_t stop = std::min(order.size(), start + profile.batch_size);
            if (spec.pre_batch) spec.pre_batch(epoch, batch_rng);

            GradientSet grads(params);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < stop; ++i) {
                Graph g;
                ParamBinder bind(g, params);
                Graph::Var loss = spec.item_loss(g, bind, order[i]);
                batch_loss += g.value(loss).v[0];
                g.backward(loss);  // throws on a non-finite loss
                grads.accumulate(g.extract_gradients(params));
            }
            const std::size_t count = stop - start;
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("training diverged in stage " + spec.name + ", epoch " +
                                         std::to_string(epoch + 1));
            grads.scale(1.0 / static_cast<double>(count));
            const double norm = trainable_norm(params, grads, spec.tags);
            if (norm > kClipNorm) grads.scale(kClipNorm / norm);
            adam.step(params, grads, spec.tags);
            epoch_loss += batch_loss;
            seen += count;
        }

        const double mean_loss = epoch_loss / static_cast<double>(seen);
        const double val = spec.validate ? spec.validate() : std::nan("");
        if (ctx.log) ctx.log->record(spec.name, epoch + 1, mean_loss, val);
    }
}

double sample_snr_noise_var(const TrainChannel& ch, Rng& rng) {
    return channel::snr_to_noise_var(rng.uniform(ch.snr_low_db, ch.snr_high_db));
}

codec::ForwardOptions link_options(const TrainChannel& ch, double sigma_n2) {
    codec::ForwardOptions opt;
    opt.link.kind = ch.kind;
    opt.link.rician_r = ch.rician_r;
    opt.link.sigma_n2 = sigma_n2;
    opt.link.csi_error_var = ch.csi_error_var;
    return opt;
}

std::size_t checked_label(const EncodedEpisode& ep) {
    if (ep.answer_id < 0)
        throw std::invalid_argument("training episode with an answer outside the vocabulary");
    return static_cast<std::size_t>(ep.answer_id);
}

}  // namespace

double evaluate_accuracy(const ParameterSet& params, const Config& cfg,
                         const std::vector<EncodedEpisode>& episodes,
                         const codec::ForwardOptions& opt, std::uint64_t seed, std::size_t limit,
                         std::size_t threads) {
    const std::size_t n = limit == 0 ? episodes.size() : std::min(limit, episodes.size());
    if (n == 0) return 0.0;
    threads = std::max<std::size_t>(1, std::min(threads, n));

    std::atomic<std::size_t> correct{0};
    auto worker = [&](std::size_t begin, std::size_t end) {
        std::size_t local = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const codec::AnswerDistribution dist =
                codec::full_forward(episodes[i], params, cfg, opt, seed, i);
            if (episodes[i].answer_id >= 0 &&
                codec::predict(dist) == static_cast<std::size_t>(episodes[i].answer_id))
                ++local;
        }
        correct += local;
    };

    if (threads == 1) {
        worker(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(n, begin + chunk);
            if (begin < end) pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    return static_cast<double>(correct.load()) / static_cast<double>(n);
}

void train_semantic_codec(ParameterSet& params, const TrainContext& ctx,
                          const StageProfile& profile) {
    codec::ForwardOptions fwd;
    fwd.channel_free = true;

    StageSpec spec;
    spec.name = "semantic";
    spec.item_count = ctx.train.size();
    spec.tags = {ParamTag::semantic_enc, ParamTag::semantic_dec};
    spec.item_loss = [&](Graph& g, ParamBinder& bind, std::size_t item) {
        const EncodedEpisode& ep = ctx.train[item];
        Graph::Var logits = codec::build_full_forward(g, bind, ctx.cfg, ep, fwd, ctx.seed, item);
        return g.cross_entropy_with_logits(logits, checked_label(ep));
    };
    spec.validate = [&] {
        return evaluate_accuracy(params, ctx.cfg, ctx.validation, fwd, ctx.seed, ctx.val_limit, 2);
    };
    run_stage(params, ctx, profile, spec);
}

void train_jsc_codec(ParameterSet& params, const TrainContext& ctx, const StageProfile& profile) {
    // harvest sentence features once with the frozen stage-1 encoder
    std::vector<Tensor> features;
    for (const EncodedEpisode& ep : ctx.train) {
        for (const auto& sentence : ep.context)
            features.push_back(codec::semantic_encode(sentence, params, ctx.cfg));
        features.push_back(codec::semantic_encode(ep.question, params, ctx.cfg));
    }

    struct BatchState {
        double sigma_n2 = 0.0;
        std::uint64_t channel_seed = 0;
    } state;

    StageSpec spec;
    spec.name = "jsc";
    spec.item_count = features.size();
    spec.tags = {ParamTag::jsc_enc, ParamTag::jsc_dec};
    spec.pre_batch = [&](std::size_t epoch, Rng& rng) {
        state.sigma_n2 = sample_snr_noise_var(ctx.channel, rng);
        state.channel_seed = Rng::mix({ctx.seed, 0x75cULL, epoch});
    };
    spec.item_loss = [&](Graph& g, ParamBinder& bind, std::size_t item) {
        Graph::Var z = g.constant(features[item]);
        Graph::Var x = codec::build_jsc_encode(g, bind, ctx.cfg, z);
        Rng slot_rng = Rng::stream(state.channel_seed, item, 0);
        const channel::DetectedAffine affine = channel::draw_detected_affine(
            ctx.channel.kind, ctx.cfg.symbol_length, ctx.channel.rician_r, state.sigma_n2,
            ctx.channel.csi_error_var, slot_rng);
        Graph::Var z_hat = codec::build_jsc_decode(
            g, bind, ctx.cfg, g.complex_affine(x, affine.scale_ri, affine.offset_ri));
        return g.sum_squares(g.sub(z_hat, z));
    };
    spec.validate = [&] {
        codec::ForwardOptions fwd = link_options(ctx.channel, channel::snr_to_noise_var(18.0));
        return evaluate_accuracy(params, ctx.cfg, ctx.validation, fwd, ctx.seed, ctx.val_limit, 2);
    };
    run_stage(params, ctx, profile, spec);
}

namespace {

// shared by stage 3 and consecutive retraining
void run_end_to_end_stage(ParameterSet& params, const TrainContext& ctx,
                          const StageProfile& profile, const std::string& name,
                          codec::MaskStrategy strategy, std::size_t min_budget,
                          std::size_t max_budget, double temperature,
                          const std::vector<ParamTag>& tags) {
    struct BatchState {
        codec::ForwardOptions fwd;
        std::uint64_t channel_seed = 0;
    } state;

    StageSpec spec;
    spec.name = name;
    spec.item_count = ctx.train.size();
    spec.tags = tags;
    spec.pre_batch = [&, strategy, min_budget, max_budget, temperature](std::size_t epoch,
                                                                        Rng& rng) {
        state.fwd = link_options(ctx.channel, sample_snr_noise_var(ctx.channel, rng));
        state.channel_seed = Rng::mix({ctx.seed, 0xe2eULL, epoch});
        if (strategy != codec::MaskStrategy::none) {
            state.fwd.mask.strategy = strategy;
            state.fwd.mask.budget = min_budget + rng.below(max_budget - min_budget + 1);
            state.fwd.mask.temperature = temperature;
            state.fwd.mask.straight_through = strategy == codec::MaskStrategy::importance;
        }
    };
    spec.item_loss = [&](Graph& g, ParamBinder& bind, std::size_t item) {
        const EncodedEpisode& ep = ctx.train[item];
        Graph::Var logits =
            codec::build_full_forward(g, bind, ctx.cfg, ep, state.fwd, state.channel_seed, item);
        return g.cross_entropy_with_logits(logits, checked_label(ep));
    };
    spec.validate = [&] {
        codec::ForwardOptions fwd = link_options(ctx.channel, channel::snr_to_noise_var(18.0));
        return evaluate_accuracy(params, ctx.cfg, ctx.validation, fwd, ctx.seed, ctx.val_limit, 2);
    };
    run_stage(params, ctx, profile, spec);
}

}  // namespace

void train_whole(ParameterSet& params, const TrainContext& ctx, const StageProfile& profile) {
    run_end_to_end_stage(params, ctx, profile, "whole", codec::MaskStrategy::none, 0, 0, 1.0,
                         {ParamTag::semantic_enc, ParamTag::jsc_enc, ParamTag::jsc_dec,
                          ParamTag::semantic_dec});
}

void train_importance(ParameterSet& params, const TrainContext& ctx, const StageProfile& profile,
                      std::size_t min_budget) {
    if (min_budget < 1 || min_budget > ctx.cfg.symbol_length)
        throw std::invalid_argument("train_importance: budget out of range");
    run_end_to_end_stage(params, ctx, profile, "importance", codec::MaskStrategy::importance,
                         min_budget, ctx.cfg.symbol_length, ctx.mask_temperature,
                         {ParamTag::importance});
}

void train_consecutive(ParameterSet& params, const TrainContext& ctx, const StageProfile& profile,
                       std::size_t min_budget) {
    if (min_budget < 1 || min_budget > ctx.cfg.symbol_length)
        throw std::invalid_argument("train_consecutive: budget out of range");
    run_end_to_end_stage(params, ctx, profile, "consecutive", codec::MaskStrategy::consecutive,
                         min_budget, ctx.cfg.symbol_length, 1.0,
                         {ParamTag::semantic_enc, ParamTag::jsc_enc, ParamTag::jsc_dec,
                          ParamTag::semantic_dec});
}

NoiseEstimate estimate_model_noise_from_samples(
    const std::vector<std::vector<std::vector<double>>>& samples) {
    const std::size_t models = samples.size();
    if (models < 2)
        throw std::invalid_argument("estimate_model_noise: need at least 2 models, got " +
                                    std::to_string(models));
    const std::size_t count = samples[0].size();
    if (count == 0) throw std::invalid_argument("estimate_model_noise: no probe samples");
    const std::size_t len = samples[0][0].size();
    for (const auto& model : samples) {
        if (model.size() != count)
            throw std::invalid_argument("estimate_model_noise: sample count mismatch");
        for (const auto& vec : model)
            if (vec.size() != len)
                throw std::invalid_argument("estimate_model_noise: vector length mismatch");
    }

    // per-model whitening (scalar mean/scale over all entries)
    std::vector<double> mean(models, 0.0), scale(models, 0.0);
    const double entries = static_cast<double>(count * len);
    for (std::size_t m = 0; m < models; ++m) {
        double acc = 0.0;
        for (const auto& vec : samples[m]) acc += kernels::vsum(vec.data(), vec.size());
        mean[m] = acc / entries;
        double var = 0.0;
        for (const auto& vec : samples[m])
            for (double x : vec) var += (x - mean[m]) * (x - mean[m]);
        scale[m] = std::sqrt(var / entries);
    }
    double pooled_var = 0.0, pooled_mean = 0.0;
    for (std::size_t m = 0; m < models; ++m) {
        pooled_var += scale[m] * scale[m];
        pooled_mean += mean[m];
    }
    pooled_var /= static_cast<double>(models);
    pooled_mean /= static_cast<double>(models);
    const double pooled_scale = std::sqrt(pooled_var);

    double var_sum = 0.0;
    double mu_max_whitened = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t e = 0; e < len; ++e) {
            double r = 0.0;
            for (std::size_t m = 0; m < models; ++m) {
                const double s = std::max(scale[m], 1e-12);
                r += (samples[m][i][e] - mean[m]) / s;
            }
            r /= static_cast<double>(models);
            double v = 0.0;
            for (std::size_t m = 0; m < models; ++m) {
                const double s = std::max(scale[m], 1e-12);
                const double w = (samples[m][i][e] - mean[m]) / s;
                v += (w - r) * (w - r);
            }
            var_sum += v / static_cast<double>(models - 1);
            mu_max_whitened = std::max(mu_max_whitened, std::abs(pooled_mean + pooled_scale * r));
        }
    }

    NoiseEstimate est;
    est.sigma_m_sq = var_sum / entries * pooled_var;
    est.mu_max = mu_max_whitened;
    return est;
}

NoiseEstimate estimate_model_noise(const std::vector<const ParameterSet*>& models,
                                   const std::vector<const Config*>& configs,
                                   const std::vector<EncodedEpisode>& probe) {
    if (models.size() != configs.size())
        throw std::invalid_argument("estimate_model_noise: model/config count mismatch");
    if (models.size() < 2)
        throw std::invalid_argument("estimate_model_noise: need at least 2 models, got " +
                                    std::to_string(models.size()));
    const std::size_t symbol_length = configs[0]->symbol_length;
    for (const Config* cfg : configs)
        if (cfg->symbol_length != symbol_length)
            throw std::invalid_argument("estimate_model_noise: models must share symbol_length");

    std::vector<std::vector<std::vector<double>>> samples(models.size());
    for (std::size_t m = 0; m < models.size(); ++m) {
        for (const EncodedEpisode& ep : probe) {
            for (const auto& sentence : ep.context) {
                const Tensor z = codec::semantic_encode(sentence, *models[m], *configs[m]);
                samples[m].push_back(codec::jsc_encode(z, *models[m], *configs[m]).ri);
            }
            const Tensor zq = codec::semantic_encode(ep.question, *models[m], *configs[m]);
            samples[m].push_back(codec::jsc_encode(zq, *models[m], *configs[m]).ri);
        }
    }
    return estimate_model_noise_from_samples(samples);
}

}  // namespace memsc::training
