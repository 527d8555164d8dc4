// Command-line experiment driver: corpus generation and inspection, staged
// training, accuracy sweeps, mask comparisons, symbol accounting and planned
// budgets, model-noise estimation.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "memsc/harness/harness.hpp"
#include "memsc/kernels/kernels.hpp"

namespace {

using namespace memsc;

harness::ExperimentConfig load_config(const std::string& path) {
    return harness::ExperimentConfig::load(path);
}

void write_run_manifest(const std::string& csv_path, const harness::ExperimentConfig& cfg,
                        const std::vector<std::string>& checkpoint_hashes) {
    nlohmann::json manifest;
    manifest["config"] = cfg.to_json();
    manifest["config_hash"] = cfg.hash();
    manifest["checkpoint_hashes"] = checkpoint_hashes;
    manifest["output_csv"] = csv_path;
    harness::write_text_file(csv_path + ".manifest.json", manifest.dump(2) + "\n");
}

struct LoadedModel {
    numerics::ParameterSet params;
    std::string hash;
};

LoadedModel load_model(const std::string& base) {
    harness::LoadedCheckpoint ck = harness::load_checkpoint(base);
    return {std::move(ck.params), ck.blob_hash};
}

int cmd_gen_data(const std::string& out_path, std::size_t stories, std::uint64_t seed) {
    data::GeneratorConfig gen;
    gen.stories = stories;
    gen.seed = seed;
    harness::write_text_file(out_path, data::generate_where_is_corpus(gen));
    std::cout << "wrote " << out_path << " (" << stories << " stories)\n";
    return 0;
}

int cmd_data_inspect(const std::string& config_path) {
    const auto cfg = load_config(config_path);
    const harness::Dataset ds = harness::load_dataset(cfg);
    const auto model = harness::resolve_codec_config(cfg, ds);
    std::cout << "dataset: " << cfg.dataset_path << "\n"
              << "episodes: train " << ds.train.size() << ", validation " << ds.validation.size()
              << ", test " << ds.test.size() << "\n"
              << "vocabulary: " << ds.vocab.size() << " tokens, " << ds.vocab.answer_size()
              << " answers\n"
              << "max train context: " << ds.max_train_context << " sentences\n"
              << "memory capacity: " << model.memory_capacity << "\n";
    if (!ds.train.empty()) {
        const auto& ep = ds.train.front();
        std::cout << "sample episode: " << ep.context.size() << " context sentences, answer id "
                  << ep.answer_id << "\n";
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& stages_arg,
              const std::string& init_path, const std::string& out_base,
              const std::string& log_path) {
    const auto cfg = load_config(config_path);
    const harness::Dataset ds = harness::load_dataset(cfg);
    const codec::Config model_cfg = harness::resolve_codec_config(cfg, ds);

    numerics::ParameterSet params;
    if (init_path.empty()) {
        params = codec::init_params(model_cfg, cfg.train_seed);
    } else {
        params = load_model(init_path).params;
    }

    std::ofstream log_file;
    if (!log_path.empty()) {
        log_file.open(log_path, std::ios::app);
        if (!log_file) throw std::runtime_error("cannot open log file " + log_path);
    }
    training::MetricsLog log(log_path.empty() ? &std::cout : &log_file);

    training::TrainContext ctx;
    ctx.cfg = model_cfg;
    ctx.train = ds.train;
    ctx.validation = ds.validation;
    ctx.channel = cfg.train_channel();
    ctx.seed = cfg.train_seed;
    ctx.log = &log;

    const training::TrainProfile profile = cfg.resolve_train_profile();
    const std::size_t min_budget =
        cfg.min_train_budget != 0 ? cfg.min_train_budget : model_cfg.symbol_length / 2;

    std::vector<std::string> stages;
    {
        std::string item;
        std::istringstream ss(stages_arg);
        while (std::getline(ss, item, ',')) stages.push_back(item);
    }
    if (stages.size() == 1 && stages[0] == "all") stages = {"semantic", "jsc", "whole"};

    for (const std::string& stage : stages) {
        if (stage == "semantic")
            training::train_semantic_codec(params, ctx, profile.semantic);
        else if (stage == "jsc")
            training::train_jsc_codec(params, ctx, profile.jsc);
        else if (stage == "whole")
            training::train_whole(params, ctx, profile.whole);
        else if (stage == "importance")
            training::train_importance(params, ctx, profile.importance, min_budget);
        else if (stage == "consecutive")
            training::train_consecutive(params, ctx, profile.consecutive, min_budget);
        else
            throw std::invalid_argument("unknown stage: " + stage);
    }

    nlohmann::json echo;
    echo["experiment"] = cfg.to_json();
    echo["codec"] = {{"vocab_size", model_cfg.vocab_size},
                     {"answer_vocab", model_cfg.answer_vocab},
                     {"width", model_cfg.width},
                     {"symbol_length", model_cfg.symbol_length},
                     {"encoder_steps", model_cfg.encoder_steps},
                     {"decoder_steps", model_cfg.decoder_steps},
                     {"heads", model_cfg.heads},
                     {"memory_capacity", model_cfg.memory_capacity},
                     {"importance_width", model_cfg.importance.width},
                     {"importance_heads", model_cfg.importance.heads}};
    echo["stages"] = stages;
    harness::save_checkpoint(params, echo, out_base);
    std::cout << "checkpoint written to " << out_base << ".manifest.json / .bin\n";
    return 0;
}

int cmd_eval_sweep(const std::string& config_path, const std::string& checkpoint,
                   const std::string& out_csv, bool ablate_memory) {
    const auto cfg = load_config(config_path);
    const harness::Dataset ds = harness::load_dataset(cfg);
    const codec::Config model_cfg = harness::resolve_codec_config(cfg, ds);
    const LoadedModel model = load_model(checkpoint);
    const auto rows =
        harness::run_accuracy_sweep(cfg, model.params, model_cfg, ds, model.hash, ablate_memory);
    const std::string csv = harness::to_csv(rows);
    if (out_csv.empty()) {
        std::cout << csv;
    } else {
        harness::write_text_file(out_csv, csv);
        write_run_manifest(out_csv, cfg, {model.hash});
        std::cout << "wrote " << rows.size() << " rows to " << out_csv << "\n";
    }
    return 0;
}

int cmd_mask_compare(const std::string& config_path, const std::string& checkpoint,
                     const std::string& consecutive_checkpoint, const std::string& out_csv) {
    const auto cfg = load_config(config_path);
    const harness::Dataset ds = harness::load_dataset(cfg);
    const codec::Config model_cfg = harness::resolve_codec_config(cfg, ds);
    const LoadedModel base = load_model(checkpoint);
    const LoadedModel consecutive =
        consecutive_checkpoint.empty() ? base : load_model(consecutive_checkpoint);
    const auto rows = harness::run_mask_comparison(cfg, base.params, consecutive.params, model_cfg,
                                                   ds, base.hash, consecutive.hash);
    const std::string csv = harness::to_csv(rows);
    if (out_csv.empty()) {
        std::cout << csv;
    } else {
        harness::write_text_file(out_csv, csv);
        write_run_manifest(out_csv, cfg, {base.hash, consecutive.hash});
        std::cout << "wrote " << rows.size() << " rows to " << out_csv << "\n";
    }
    return 0;
}

int cmd_symbol_table(const std::string& config_path) {
    harness::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    const auto table = harness::symbol_table(cfg.link_budget, cfg.snr_grid_db);
    std::cout << harness::format_symbol_table(table);
    return 0;
}

int cmd_plan(const std::string& config_path) {
    harness::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    const auto budgets = harness::plan_budgets(cfg.link_budget, cfg.snr_grid_db);
    std::cout << "snr_db,planned_symbols\n";
    for (std::size_t i = 0; i < budgets.size(); ++i)
        std::cout << cfg.snr_grid_db[i] << "," << budgets[i] << "\n";
    return 0;
}

int cmd_noise_estimate(const std::string& config_path,
                       const std::vector<std::string>& checkpoints, std::size_t probe_limit) {
    if (checkpoints.size() < 2)
        throw std::invalid_argument("noise-estimate needs at least 2 checkpoints");
    const auto cfg = load_config(config_path);
    const harness::Dataset ds = harness::load_dataset(cfg);

    std::vector<LoadedModel> models;
    std::vector<codec::Config> configs;
    for (const std::string& path : checkpoints) {
        models.push_back(load_model(path));
        harness::LoadedCheckpoint ck = harness::load_checkpoint(path);
        codec::Config mc = harness::resolve_codec_config(cfg, ds);
        if (ck.config_echo.contains("codec")) {
            const auto& jc = ck.config_echo["codec"];
            mc.width = jc.value("width", mc.width);
            mc.symbol_length = jc.value("symbol_length", mc.symbol_length);
            mc.encoder_steps = jc.value("encoder_steps", mc.encoder_steps);
            mc.decoder_steps = jc.value("decoder_steps", mc.decoder_steps);
            mc.heads = jc.value("heads", mc.heads);
            mc.memory_capacity = jc.value("memory_capacity", mc.memory_capacity);
            mc.vocab_size = jc.value("vocab_size", mc.vocab_size);
            mc.answer_vocab = jc.value("answer_vocab", mc.answer_vocab);
            mc.importance.width = jc.value("importance_width", mc.importance.width);
            mc.importance.heads = jc.value("importance_heads", mc.importance.heads);
        }
        configs.push_back(mc);
    }

    std::vector<data::EncodedEpisode> probe = ds.validation;
    if (probe_limit != 0 && probe.size() > probe_limit) probe.resize(probe_limit);

    std::vector<const numerics::ParameterSet*> param_ptrs;
    std::vector<const codec::Config*> cfg_ptrs;
    for (std::size_t i = 0; i < models.size(); ++i) {
        param_ptrs.push_back(&models[i].params);
        cfg_ptrs.push_back(&configs[i]);
    }
    const auto est = training::estimate_model_noise(param_ptrs, cfg_ptrs, probe);
    std::cout << "mu_max=" << est.mu_max << " sigma_m_sq=" << est.sigma_m_sq << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memory-aided semantic communication simulator"};
    app.require_subcommand(1);

    std::string config_path, out_path, checkpoint, consecutive_checkpoint, init_path, log_path;
    std::string stages = "all";
    std::vector<std::string> checkpoints;
    std::size_t stories = 500, probe_limit = 64;
    std::uint64_t seed = 7;
    bool ablate_memory = false;

    auto* gen = app.add_subcommand("gen-data", "write a synthetic scenario corpus");
    gen->add_option("--out", out_path, "output text file")->required();
    gen->add_option("--stories", stories, "number of stories");
    gen->add_option("--seed", seed, "generator seed");

    auto* inspect = app.add_subcommand("data-inspect", "parse and summarize the corpus");
    inspect->add_option("--config", config_path, "experiment config JSON")->required();

    auto* train = app.add_subcommand("train", "run training stages and save a checkpoint");
    train->add_option("--config", config_path, "experiment config JSON")->required();
    train->add_option("--stages", stages,
                      "comma-separated: semantic,jsc,whole,importance,consecutive or all");
    train->add_option("--init", init_path, "checkpoint to start from");
    train->add_option("--out", out_path, "checkpoint base path")->required();
    train->add_option("--log", log_path, "metrics log file (default stdout)");

    auto* sweep = app.add_subcommand("eval-sweep", "accuracy over the SNR/seed grid (CSV)");
    sweep->add_option("--config", config_path, "experiment config JSON")->required();
    sweep->add_option("--checkpoint", checkpoint, "checkpoint base path")->required();
    sweep->add_option("--out", out_path, "output CSV (default stdout)");
    sweep->add_flag("--ablate-memory", ablate_memory, "zero the memory matrix at the decoder");

    auto* maskc = app.add_subcommand("mask-compare", "mask strategies over budgets/SNRs (CSV)");
    maskc->add_option("--config", config_path, "experiment config JSON")->required();
    maskc->add_option("--checkpoint", checkpoint, "base checkpoint (with trained scorer)")
        ->required();
    maskc->add_option("--consecutive-checkpoint", consecutive_checkpoint,
                      "consecutive-retrained checkpoint (defaults to the base)");
    maskc->add_option("--out", out_path, "output CSV (default stdout)");

    auto* table = app.add_subcommand("symbol-table", "transmitted-symbol accounting table");
    table->add_option("--config", config_path, "experiment config JSON (optional)");

    auto* plan = app.add_subcommand("plan", "planned symbol budgets per SNR");
    plan->add_option("--config", config_path, "experiment config JSON (optional)");

    auto* noise = app.add_subcommand("noise-estimate", "model-noise constants from an ensemble");
    noise->add_option("--config", config_path, "experiment config JSON")->required();
    noise->add_option("--checkpoints", checkpoints, "two or more checkpoint base paths")
        ->required();
    noise->add_option("--probe-limit", probe_limit, "probe episodes (0 = all validation)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(out_path, stories, seed);
        if (inspect->parsed()) return cmd_data_inspect(config_path);
        if (train->parsed()) return cmd_train(config_path, stages, init_path, out_path, log_path);
        if (sweep->parsed()) return cmd_eval_sweep(config_path, checkpoint, out_path, ablate_memory);
        if (maskc->parsed())
            return cmd_mask_compare(config_path, checkpoint, consecutive_checkpoint, out_path);
        if (table->parsed()) return cmd_symbol_table(config_path);
        if (plan->parsed()) return cmd_plan(config_path);
        if (noise->parsed()) return cmd_noise_estimate(config_path, checkpoints, probe_limit);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
