#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "memsc/codec/codec.hpp"
#include "memsc/data/babi.hpp"

namespace memsc::training {

using codec::Config;
using data::EncodedEpisode;
using numerics::ParameterSet;

struct StageProfile {
    std::size_t batch_size = 0;
    double learning_rate = 0.0;
    std::size_t epochs = 0;
};

// Per-stage settings: sentence codec, channel codec, whole network, the
// importance scorer, and consecutive-mask retraining.
struct TrainProfile {
    StageProfile semantic;
    StageProfile jsc;
    StageProfile whole;
    StageProfile importance;
    StageProfile consecutive;

    static TrainProfile full();   // batch/lr/epochs 200/5e-4/250, 100/1e-4/50,
                                  // 200/5e-4/30, 200/5e-4/10, 200/1e-4/50
    static TrainProfile desk();   // same learning rates, small batches, few epochs
    static TrainProfile named(const std::string& name);
};

// Channel sampling while training the stages that see the air: one fading
// draw per sentence, SNR drawn uniformly in dB once per batch.
struct TrainChannel {
    channel::Kind kind = channel::Kind::awgn;
    double rician_r = 2.0;
    double csi_error_var = 0.0;
    double snr_low_db = -6.0;
    double snr_high_db = 18.0;
};

// One line per epoch: stage, epoch, mean training loss, validation accuracy.
class MetricsLog {
public:
    struct Row {
        std::string stage;
        std::size_t epoch;
        double loss;
        double val_accuracy;
    };

    explicit MetricsLog(std::ostream* sink = nullptr) : sink_(sink) {}
    void record(const std::string& stage, std::size_t epoch, double loss, double val_accuracy);
    const std::vector<Row>& rows() const { return rows_; }

private:
    std::ostream* sink_;
    std::vector<Row> rows_;
};

struct TrainContext {
    Config cfg;
    std::vector<EncodedEpisode> train;
    std::vector<EncodedEpisode> validation;
    TrainChannel channel;
    std::uint64_t seed = 1;
    MetricsLog* log = nullptr;
    // validation episodes evaluated per epoch for the log (0 = all)
    std::size_t val_limit = 300;
    // straight-through bridge temperature during importance training
    double mask_temperature = 1.0;
};

// Answer accuracy over episodes; channel realizations come from
// Rng::stream(seed, episode_index, slot_index), so thread partitioning cannot
// change the result. limit == 0 evaluates everything.
double evaluate_accuracy(const ParameterSet& params, const Config& cfg,
                         const std::vector<EncodedEpisode>& episodes,
                         const codec::ForwardOptions& opt, std::uint64_t seed,
                         std::size_t limit = 0, std::size_t threads = 1);

// Stage 1: sentence codec trained channel-free with cross entropy.
void train_semantic_codec(ParameterSet& params, const TrainContext& ctx,
                          const StageProfile& profile);
// Stage 2: channel codec trained on features harvested from stage 1, mean
// squared error through sampled channels; sentence codec stays frozen.
void train_jsc_codec(ParameterSet& params, const TrainContext& ctx, const StageProfile& profile);
// Stage 3: end-to-end cross entropy through the channel.
void train_whole(ParameterSet& params, const TrainContext& ctx, const StageProfile& profile);
// Algorithm-2: the importance scorer alone, straight-through masks, budgets
// drawn uniformly from [min_budget, L] per batch.
void train_importance(ParameterSet& params, const TrainContext& ctx, const StageProfile& profile,
                      std::size_t min_budget);
// Consecutive-mask retraining of the whole network; per-batch budget drawn
// uniformly from [min_budget, L].
void train_consecutive(ParameterSet& params, const TrainContext& ctx, const StageProfile& profile,
                       std::size_t min_budget);

// Model-noise estimation across an ensemble of trained models sharing the
// transmit length: align by per-model whitening, take the across-model mean
// as the latent codeword and the across-model variance as the model noise,
// both rescaled to the pooled units.
struct NoiseEstimate {
    double mu_max = 0.0;
    double sigma_m_sq = 0.0;
};

// samples[m][i] = transmit vector i (interleaved, length 2L) of model m.
// Throws when fewer than 2 models are supplied.
NoiseEstimate estimate_model_noise_from_samples(
    const std::vector<std::vector<std::vector<double>>>& samples);

// Harvests power-normalized transmit vectors of every model over the probe
// episodes (contexts and questions) and runs the sample estimator. Models may
// differ in width but must share symbol_length.
NoiseEstimate estimate_model_noise(const std::vector<const ParameterSet*>& models,
                                   const std::vector<const Config*>& configs,
                                   const std::vector<EncodedEpisode>& probe);

}  // namespace memsc::training
