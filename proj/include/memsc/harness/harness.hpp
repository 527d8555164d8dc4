#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "memsc/adaptive/adaptive.hpp"
#include "memsc/codec/codec.hpp"
#include "memsc/data/babi.hpp"
#include "memsc/training/train.hpp"

// Batch experiment driver: dataset loading, checkpoint persistence, accuracy
// sweeps, mask comparisons and the transmitted-symbol accounting table.
// Outputs are CSV rows with full provenance plus a JSON run manifest.

namespace memsc::harness {

using numerics::ParameterSet;

struct ExperimentConfig {
    std::string dataset_path;
    std::string task = "task1";
    std::uint64_t split_seed = 7;

    channel::Kind channel_kind = channel::Kind::awgn;
    double rician_r = 2.0;
    double csi_error_var = 0.0;  // 0 = perfect CSI

    std::vector<double> snr_grid_db = {-6, 0, 6, 12, 18};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::uint64_t train_seed = 1;

    std::string codec_profile = "desk";  // "desk" or "full"
    std::size_t memory_capacity_override = 0;  // 0 = max train context length

    std::string train_profile = "desk";
    // when the config carries an explicit profile object it overrides the name
    bool has_profile_override = false;
    training::TrainProfile profile_override;

    codec::MaskStrategy mask_strategy = codec::MaskStrategy::none;
    std::string budget_source = "fixed";  // "fixed" or "planner"
    std::size_t fixed_budget = 0;         // 0 = full length
    std::vector<std::size_t> mask_budgets;  // mask-compare grid; empty = {L, L/2}
    std::size_t min_train_budget = 0;       // 0 = L/2
    adaptive::LinkBudget link_budget{16, 1.0, 1.44, 0.0, 32};

    std::size_t eval_threads = 2;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    nlohmann::json to_json() const;
    void validate() const;
    std::string hash() const;  // over the canonical JSON form

    codec::Config codec_defaults() const;
    training::TrainChannel train_channel() const;
    training::TrainProfile resolve_train_profile() const;
    std::string csi_label() const;
};

struct Dataset {
    data::Vocabulary vocab;
    std::vector<data::EncodedEpisode> train;
    std::vector<data::EncodedEpisode> validation;
    std::vector<data::EncodedEpisode> test;
    std::size_t max_train_context = 0;
};

Dataset load_dataset(const ExperimentConfig& cfg);
// completes vocab sizes and memory capacity from the data
codec::Config resolve_codec_config(const ExperimentConfig& cfg, const Dataset& ds);

struct ResultRow {
    std::string strategy;
    std::string channel;
    std::string csi;
    double snr_db = 0.0;
    std::size_t budget = 0;  // complex symbols kept per context sentence
    double accuracy = 0.0;
    std::size_t symbols_per_sentence = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string checkpoint_hash;
};

std::string result_csv_header();
std::string to_csv(const std::vector<ResultRow>& rows);
void write_text_file(const std::string& path, const std::string& content);

// accuracy of the checkpoint over the test split at every (snr, seed) grid
// point; strategy/budget per the config
std::vector<ResultRow> run_accuracy_sweep(const ExperimentConfig& cfg, const ParameterSet& params,
                                          const codec::Config& model_cfg, const Dataset& ds,
                                          const std::string& checkpoint_hash,
                                          bool ablate_memory = false);

// rows for {none@L, none@L/2 (naive truncation), importance, consecutive,
// random} across the configured budgets and SNR grid; the consecutive rows
// use the retrained checkpoint
std::vector<ResultRow> run_mask_comparison(const ExperimentConfig& cfg,
                                           const ParameterSet& base_params,
                                           const ParameterSet& consecutive_params,
                                           const codec::Config& model_cfg, const Dataset& ds,
                                           const std::string& base_hash,
                                           const std::string& consecutive_hash);

// round(coded_bits / bits_per_symbol)
std::size_t modulation_symbols(double coded_bits, double bits_per_symbol);

// Conventional-baseline accounting: 760 coded bits per sentence (190 symbols
// at 16QAM), modulation order stepping up with SNR.
constexpr double kBaselineCodedBits = 760.0;

std::size_t amc_bits_per_symbol(double snr_db, channel::Kind kind);
const char* modulation_name(std::size_t bits_per_symbol);

struct SymbolTable {
    std::vector<double> snrs_db;
    std::size_t fixed_symbols = 0;          // full-length transceiver row
    std::vector<std::size_t> dynamic;       // planned lengths per SNR
    std::size_t utf8_turbo_symbols = 0;     // single-rate baseline
    std::vector<std::size_t> amc_awgn;
    std::vector<std::size_t> amc_rician;
};

SymbolTable symbol_table(const adaptive::LinkBudget& budget, const std::vector<double>& snrs_db);
std::string format_symbol_table(const SymbolTable& table);

// planned budgets over the SNR grid (the `plan` subcommand)
std::vector<std::size_t> plan_budgets(const adaptive::LinkBudget& budget,
                                      const std::vector<double>& snrs_db);

// ---- checkpoint persistence ----
// <base>.manifest.json holds names, tags, shapes, offsets, the config echo and
// the blob hash; <base>.bin is one little-endian f32 blob in manifest order.

void save_checkpoint(const ParameterSet& params, const nlohmann::json& config_echo,
                     const std::string& path_base);

struct LoadedCheckpoint {
    ParameterSet params;
    nlohmann::json config_echo;
    std::string blob_hash;
};

LoadedCheckpoint load_checkpoint(const std::string& path_base);

std::string fnv1a64_hex(const void* data, std::size_t bytes);

// ---- small statistics used by the trend/acceptance suites ----
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

struct PairedTTest {
    double t_stat = 0.0;
    double p_one_sided = 1.0;  // H1: mean(a - b) > 0
    std::size_t n = 0;
};

PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace memsc::harness
