#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "memsc/codec/codec.hpp"
#include "memsc/harness/harness.hpp"

using namespace memsc;
using namespace memsc::harness;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("memsc_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

numerics::ParameterSet tiny_params(std::uint64_t seed) {
    codec::Config cfg = codec::Config::desk_defaults();
    cfg.vocab_size = 12;
    cfg.answer_vocab = 4;
    cfg.width = 8;
    cfg.symbol_length = 4;
    cfg.heads = 2;
    cfg.importance = {4, 2};
    return codec::init_params(cfg, seed);
}

}  // namespace

TEST_CASE("modulation symbol counts") {
    CHECK(modulation_symbols(760, 4) == 190);
    CHECK(modulation_symbols(760, 1) == 760);
    CHECK(modulation_symbols(760, 3) == 253);
    CHECK(modulation_symbols(760, 2) == 380);
    CHECK_THROWS_AS(modulation_symbols(0, 2), std::invalid_argument);
}

TEST_CASE("symbol table reproduces the published schedule") {
    adaptive::LinkBudget budget{16, 1.0, 1.44, 0.0, 32};
    const SymbolTable t = symbol_table(budget, {-6, 0, 6, 12, 18});
    CHECK(t.fixed_symbols == 32);
    CHECK(t.dynamic == std::vector<std::size_t>{32, 25, 18, 17, 16});
    CHECK(t.utf8_turbo_symbols == 190);
    CHECK(t.amc_awgn == std::vector<std::size_t>{760, 760, 380, 253, 190});
    CHECK(t.amc_rician == std::vector<std::size_t>{760, 760, 380, 253, 253});
    const std::string text = format_symbol_table(t);
    CHECK(text.find("190") != std::string::npos);
    CHECK(text.find("BPSK") != std::string::npos);
}

TEST_CASE("checkpoints roundtrip bitwise in single precision") {
    TempDir dir;
    const numerics::ParameterSet params = tiny_params(5);
    nlohmann::json echo;
    echo["note"] = "roundtrip";
    const std::string base = dir.file("ckpt");
    save_checkpoint(params, echo, base);

    const LoadedCheckpoint loaded = load_checkpoint(base);
    CHECK(loaded.config_echo["note"] == "roundtrip");
    REQUIRE(loaded.params.size() == params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& original = params.entry(i);
        const auto& restored = loaded.params.entry(i);
        CHECK(original.name == restored.name);
        CHECK(original.tag == restored.tag);
        REQUIRE(original.value.same_shape(restored.value));
        for (std::size_t j = 0; j < original.value.numel(); ++j)
            CHECK(restored.value.v[j] == static_cast<double>(static_cast<float>(original.value.v[j])));
    }

    // saving the loaded values reproduces the blob byte for byte
    const std::string base2 = dir.file("ckpt2");
    save_checkpoint(loaded.params, echo, base2);
    std::ifstream a(base + ".bin", std::ios::binary), b(base2 + ".bin", std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
    const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
    CHECK(bytes_a == bytes_b);
}

TEST_CASE("checkpoint corruption and version mismatches are rejected") {
    TempDir dir;
    const std::string base = dir.file("ckpt");
    save_checkpoint(tiny_params(6), nlohmann::json::object(), base);

    // truncated blob
    {
        std::ifstream in(base + ".bin", std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        in.close();
        bytes.resize(bytes.size() - 8);
        std::ofstream out(base + ".bin", std::ios::binary);
        out << bytes;
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(base), doctest::Contains("truncated"),
                         std::runtime_error);

    // flipped byte: hash mismatch
    save_checkpoint(tiny_params(6), nlohmann::json::object(), base);
    {
        std::fstream io(base + ".bin", std::ios::binary | std::ios::in | std::ios::out);
        io.seekp(3);
        char c = 0x5a;
        io.write(&c, 1);
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(base), doctest::Contains("hash mismatch"),
                         std::runtime_error);

    // version bump
    save_checkpoint(tiny_params(6), nlohmann::json::object(), base);
    {
        std::ifstream in(base + ".manifest.json");
        nlohmann::json manifest;
        in >> manifest;
        in.close();
        manifest["format_version"] = 99;
        std::ofstream out(base + ".manifest.json");
        out << manifest.dump(2);
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(base), doctest::Contains("version"), std::runtime_error);
}

TEST_CASE("experiment config json roundtrip and validation") {
    nlohmann::json j;
    j["dataset_path"] = "corpus.txt";
    j["channel"] = {{"kind", "rician"}, {"rician_r", 2.0}};
    j["csi_error_var"] = 0.05;
    j["snr_grid_db"] = {-6.0, 18.0};
    j["seeds"] = {1, 2};
    j["mask"] = {{"strategy", "importance"},
                 {"budget_source", "planner"},
                 {"link_budget", {{"base_length", 8}, {"cap", 16}}}};
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);
    CHECK(cfg.channel_kind == channel::Kind::rician);
    CHECK(cfg.mask_strategy == codec::MaskStrategy::importance);
    CHECK(cfg.link_budget.base_length == 8);
    CHECK(cfg.link_budget.cap == 16);
    CHECK(cfg.link_budget.sigma_m_sq == doctest::Approx(1.44));

    const ExperimentConfig round = ExperimentConfig::from_json(cfg.to_json());
    CHECK(round.hash() == cfg.hash());

    nlohmann::json bad = j;
    bad["snr_grid_db"] = nlohmann::json::array();
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), std::invalid_argument);
    bad = j;
    bad["mask"]["strategy"] = "sideways";
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), std::invalid_argument);
}

TEST_CASE("spearman rank correlation") {
    CHECK(spearman_rho({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman_rho({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0));
    const double mixed = spearman_rho({1, 2, 3, 4, 5}, {2, 1, 3, 5, 4});
    CHECK(mixed > 0.0);
    CHECK(mixed < 1.0);
}

TEST_CASE("paired t test matches reference values") {
    // frozen from an independent statistics package: t = 4.2426406871,
    // one-sided p = 0.0066177998 (df = 4)
    const PairedTTest strong = paired_t_test({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0});
    CHECK(strong.t_stat == doctest::Approx(4.2426406871).epsilon(1e-9));
    CHECK(strong.p_one_sided == doctest::Approx(0.0066177998).epsilon(1e-6));

    // t = 0.9370425713, p = 0.2008938316
    const PairedTTest weak = paired_t_test({0.5, -0.2, 0.3, 0.1, -0.1}, {0, 0, 0, 0, 0});
    CHECK(weak.t_stat == doctest::Approx(0.9370425713).epsilon(1e-9));
    CHECK(weak.p_one_sided == doctest::Approx(0.2008938316).epsilon(1e-6));

    // a zero-variance positive difference is conclusive
    const PairedTTest sure = paired_t_test({1, 1, 1}, {0, 0, 0});
    CHECK(sure.p_one_sided == 0.0);
}

TEST_CASE("fnv hash is stable") {
    const char bytes[] = "abc";
    CHECK(fnv1a64_hex(bytes, 3) == "e71fa2190541574b");
}
