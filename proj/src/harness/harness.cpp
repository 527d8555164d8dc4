#include "memsc/harness/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace memsc::harness {

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.dataset_path = j.value("dataset_path", cfg.dataset_path);
    cfg.task = j.value("task", cfg.task);
    cfg.split_seed = j.value("split_seed", cfg.split_seed);
    if (j.contains("channel")) {
        const auto& c = j.at("channel");
        cfg.channel_kind = channel::kind_from_name(c.value("kind", "awgn"));
        cfg.rician_r = c.value("rician_r", cfg.rician_r);
    }
    cfg.csi_error_var = j.value("csi_error_var", cfg.csi_error_var);
    cfg.snr_grid_db = j.value("snr_grid_db", cfg.snr_grid_db);
    cfg.seeds = j.value("seeds", cfg.seeds);
    cfg.train_seed = j.value("train_seed", cfg.train_seed);
    cfg.codec_profile = j.value("codec_profile", cfg.codec_profile);
    cfg.memory_capacity_override =
        j.value("memory_capacity", cfg.memory_capacity_override);
    if (j.contains("train_profile") && j.at("train_profile").is_object()) {
        const auto& tp = j.at("train_profile");
        cfg.has_profile_override = true;
        cfg.profile_override = training::TrainProfile::desk();
        auto read_stage = [&](const char* name, training::StageProfile& stage) {
            if (!tp.contains(name)) return;
            const auto& js = tp.at(name);
            stage.batch_size = js.value("batch_size", stage.batch_size);
            stage.learning_rate = js.value("learning_rate", stage.learning_rate);
            stage.epochs = js.value("epochs", stage.epochs);
        };
        read_stage("semantic", cfg.profile_override.semantic);
        read_stage("jsc", cfg.profile_override.jsc);
        read_stage("whole", cfg.profile_override.whole);
        read_stage("importance", cfg.profile_override.importance);
        read_stage("consecutive", cfg.profile_override.consecutive);
    } else {
        cfg.train_profile = j.value("train_profile", cfg.train_profile);
    }
    if (j.contains("mask")) {
        const auto& m = j.at("mask");
        cfg.mask_strategy = codec::mask_strategy_from_name(m.value("strategy", "none"));
        cfg.budget_source = m.value("budget_source", cfg.budget_source);
        cfg.fixed_budget = m.value("fixed_budget", cfg.fixed_budget);
        cfg.mask_budgets = m.value("budgets", cfg.mask_budgets);
        cfg.min_train_budget = m.value("min_train_budget", cfg.min_train_budget);
        if (m.contains("link_budget")) {
            const auto& b = m.at("link_budget");
            cfg.link_budget.base_length = b.value("base_length", cfg.link_budget.base_length);
            cfg.link_budget.mu_max_sq = b.value("mu_max_sq", cfg.link_budget.mu_max_sq);
            cfg.link_budget.sigma_m_sq = b.value("sigma_m_sq", cfg.link_budget.sigma_m_sq);
            cfg.link_budget.cap = b.value("cap", cfg.link_budget.cap);
        }
    }
    cfg.eval_threads = j.value("eval_threads", cfg.eval_threads);
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("invalid JSON in " + path + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["dataset_path"] = dataset_path;
    j["task"] = task;
    j["split_seed"] = split_seed;
    j["channel"] = {{"kind", channel::kind_name(channel_kind)}, {"rician_r", rician_r}};
    j["csi_error_var"] = csi_error_var;
    j["snr_grid_db"] = snr_grid_db;
    j["seeds"] = seeds;
    j["train_seed"] = train_seed;
    j["codec_profile"] = codec_profile;
    j["memory_capacity"] = memory_capacity_override;
    if (has_profile_override) {
        auto stage_json = [](const training::StageProfile& s) {
            return nlohmann::json{{"batch_size", s.batch_size},
                                  {"learning_rate", s.learning_rate},
                                  {"epochs", s.epochs}};
        };
        j["train_profile"] = {{"semantic", stage_json(profile_override.semantic)},
                              {"jsc", stage_json(profile_override.jsc)},
                              {"whole", stage_json(profile_override.whole)},
                              {"importance", stage_json(profile_override.importance)},
                              {"consecutive", stage_json(profile_override.consecutive)}};
    } else {
        j["train_profile"] = train_profile;
    }
    j["mask"] = {{"strategy", codec::mask_strategy_name(mask_strategy)},
                 {"budget_source", budget_source},
                 {"fixed_budget", fixed_budget},
                 {"budgets", mask_budgets},
                 {"min_train_budget", min_train_budget},
                 {"link_budget",
                  {{"base_length", link_budget.base_length},
                   {"mu_max_sq", link_budget.mu_max_sq},
                   {"sigma_m_sq", link_budget.sigma_m_sq},
                   {"cap", link_budget.cap}}}};
    j["eval_threads"] = eval_threads;
    return j;
}

void ExperimentConfig::validate() const {
    if (snr_grid_db.empty()) throw std::invalid_argument("config: empty SNR grid");
    if (seeds.empty()) throw std::invalid_argument("config: empty seed list");
    if (codec_profile != "desk" && codec_profile != "full")
        throw std::invalid_argument("config: codec_profile must be desk or full");
    if (budget_source != "fixed" && budget_source != "planner")
        throw std::invalid_argument("config: budget_source must be fixed or planner");
    if (rician_r < 0.0) throw std::invalid_argument("config: rician_r must be >= 0");
    if (csi_error_var < 0.0) throw std::invalid_argument("config: csi_error_var must be >= 0");
    if (link_budget.sigma_m_sq <= 0.0)
        throw std::invalid_argument("config: link_budget.sigma_m_sq must be positive");
    if (link_budget.base_length > link_budget.cap)
        throw std::invalid_argument("config: link_budget base length exceeds its cap");
}

std::string ExperimentConfig::hash() const {
    // thread count is an execution detail with no effect on results, so it is
    // not part of the experiment identity
    nlohmann::json j = to_json();
    j.erase("eval_threads");
    const std::string dump = j.dump();
    return fnv1a64_hex(dump.data(), dump.size());
}

codec::Config ExperimentConfig::codec_defaults() const {
    return codec_profile == "full" ? codec::Config::full_defaults()
                                    : codec::Config::desk_defaults();
}

training::TrainProfile ExperimentConfig::resolve_train_profile() const {
    return has_profile_override ? profile_override : training::TrainProfile::named(train_profile);
}

training::TrainChannel ExperimentConfig::train_channel() const {
    training::TrainChannel ch;
    ch.kind = channel_kind;
    ch.rician_r = rician_r;
    ch.csi_error_var = csi_error_var;
    return ch;
}

std::string ExperimentConfig::csi_label() const {
    if (csi_error_var == 0.0) return "perfect";
    std::ostringstream os;
    os << "sigma_e2=" << csi_error_var;
    return os.str();
}

Dataset load_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset_path.empty())
        throw std::invalid_argument("config: dataset_path is required for this command");
    const std::vector<data::Episode> episodes = data::parse_babi_file(cfg.dataset_path);
    const data::Splits splits = data::split(episodes, cfg.split_seed);
    Dataset ds;
    ds.vocab = data::Vocabulary::build(splits.train);
    ds.train = data::encode_episodes(splits.train, ds.vocab);
    ds.validation = data::encode_episodes(splits.validation, ds.vocab);
    ds.test = data::encode_episodes(splits.test, ds.vocab);
    ds.max_train_context = data::max_context_length(splits.train);
    return ds;
}

codec::Config resolve_codec_config(const ExperimentConfig& cfg, const Dataset& ds) {
    codec::Config model = cfg.codec_defaults();
    model.vocab_size = ds.vocab.size();
    model.answer_vocab = ds.vocab.answer_size();
    model.memory_capacity = cfg.memory_capacity_override != 0 ? cfg.memory_capacity_override
                                                              : std::max<std::size_t>(
                                                                    ds.max_train_context, 1);
    model.validate();
    return model;
}

std::string result_csv_header() {
    return "strategy,channel,csi,snr_db,budget,accuracy,symbols_per_sentence,seed,config_hash,"
           "checkpoint_hash";
}

std::string to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << result_csv_header() << "\n";
    for (const ResultRow& r : rows) {
        os << r.strategy << ',' << r.channel << ',' << r.csi << ',' << r.snr_db << ',' << r.budget
           << ',' << r.accuracy << ',' << r.symbols_per_sentence << ',' << r.seed << ','
           << r.config_hash << ',' << r.checkpoint_hash << "\n";
    }
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

namespace {

std::size_t budget_for(const ExperimentConfig& cfg, const codec::Config& model, double snr_db) {
    if (cfg.budget_source == "planner") {
        adaptive::LinkBudget b = cfg.link_budget;
        b.sigma_n_sq = channel::snr_to_noise_var(snr_db);
        return std::min(adaptive::plan_length(b), model.symbol_length);
    }
    return cfg.fixed_budget == 0 ? model.symbol_length
                                 : std::min(cfg.fixed_budget, model.symbol_length);
}

ResultRow evaluate_point(const ExperimentConfig& cfg, const ParameterSet& params,
                         const codec::Config& model, const std::vector<data::EncodedEpisode>& eps,
                         codec::MaskStrategy strategy, std::size_t budget, double snr_db,
                         std::uint64_t seed, const std::string& checkpoint_hash,
                         bool ablate_memory) {
    codec::ForwardOptions opt;
    opt.link.kind = cfg.channel_kind;
    opt.link.rician_r = cfg.rician_r;
    opt.link.sigma_n2 = channel::snr_to_noise_var(snr_db);
    opt.link.csi_error_var = cfg.csi_error_var;
    opt.zero_memory = ablate_memory;
    opt.mask.strategy = strategy;
    opt.mask.budget = budget;

    ResultRow row;
    row.strategy = codec::mask_strategy_name(strategy);
    row.channel = channel::kind_name(cfg.channel_kind);
    row.csi = cfg.csi_label();
    row.snr_db = snr_db;
    row.budget = budget;
    row.symbols_per_sentence = budget;
    row.seed = seed;
    row.config_hash = cfg.hash();
    row.checkpoint_hash = checkpoint_hash;
    row.accuracy = training::evaluate_accuracy(params, model, eps, opt, seed, 0, cfg.eval_threads);
    return row;
}

}  // namespace

std::vector<ResultRow> run_accuracy_sweep(const ExperimentConfig& cfg, const ParameterSet& params,
                                          const codec::Config& model_cfg, const Dataset& ds,
                                          const std::string& checkpoint_hash, bool ablate_memory) {
    std::vector<ResultRow> rows;
    for (std::uint64_t seed : cfg.seeds) {
        for (double snr : cfg.snr_grid_db) {
            const std::size_t budget = budget_for(cfg, model_cfg, snr);
            const codec::MaskStrategy strategy =
                budget < model_cfg.symbol_length ? cfg.mask_strategy : codec::MaskStrategy::none;
            rows.push_back(evaluate_point(cfg, params, model_cfg, ds.test, strategy, budget, snr,
                                          seed, checkpoint_hash, ablate_memory));
        }
    }
    return rows;
}

std::vector<ResultRow> run_mask_comparison(const ExperimentConfig& cfg,
                                           const ParameterSet& base_params,
                                           const ParameterSet& consecutive_params,
                                           const codec::Config& model_cfg, const Dataset& ds,
                                           const std::string& base_hash,
                                           const std::string& consecutive_hash) {
    const std::size_t full = model_cfg.symbol_length;
    std::vector<std::size_t> fixed_budgets = cfg.mask_budgets;
    if (fixed_budgets.empty()) fixed_budgets = {full, full / 2};

    std::vector<ResultRow> rows;
    for (std::uint64_t seed : cfg.seeds) {
        for (double snr : cfg.snr_grid_db) {
            // the planner collapses the budget grid to its per-SNR plan
            const std::vector<std::size_t> budgets =
                cfg.budget_source == "planner"
                    ? std::vector<std::size_t>{budget_for(cfg, model_cfg, snr)}
                    : fixed_budgets;
            for (std::size_t b : budgets) {
                if (b >= full) {
                    // unmasked reference
                    rows.push_back(evaluate_point(cfg, base_params, model_cfg, ds.test,
                                                  codec::MaskStrategy::none, full, snr, seed,
                                                  base_hash, false));
                    continue;
                }
                // "none" at a reduced budget: naive prefix truncation of the
                // base checkpoint, no retraining and no learned selection
                ResultRow truncated =
                    evaluate_point(cfg, base_params, model_cfg, ds.test,
                                   codec::MaskStrategy::consecutive, b, snr, seed, base_hash,
                                   false);
                truncated.strategy = "none";
                rows.push_back(truncated);
                rows.push_back(evaluate_point(cfg, base_params, model_cfg, ds.test,
                                              codec::MaskStrategy::importance, b, snr, seed,
                                              base_hash, false));
                rows.push_back(evaluate_point(cfg, consecutive_params, model_cfg, ds.test,
                                              codec::MaskStrategy::consecutive, b, snr, seed,
                                              consecutive_hash, false));
                rows.push_back(evaluate_point(cfg, base_params, model_cfg, ds.test,
                                              codec::MaskStrategy::random, b, snr, seed, base_hash,
                                              false));
            }
        }
    }
    return rows;
}

std::size_t modulation_symbols(double coded_bits, double bits_per_symbol) {
    if (coded_bits <= 0.0 || bits_per_symbol <= 0.0)
        throw std::invalid_argument("modulation_symbols: positive inputs required");
    return static_cast<std::size_t>(std::llround(coded_bits / bits_per_symbol));
}

std::size_t amc_bits_per_symbol(double snr_db, channel::Kind kind) {
    if (snr_db < 6.0) return 1;   // BPSK
    if (snr_db < 12.0) return 2;  // 4QAM
    if (kind == channel::Kind::awgn) return snr_db < 18.0 ? 3 : 4;
    return 3;  // fading never reaches 16QAM on this schedule
}

const char* modulation_name(std::size_t bits_per_symbol) {
    switch (bits_per_symbol) {
        case 1: return "BPSK";
        case 2: return "4QAM";
        case 3: return "8QAM";
        case 4: return "16QAM";
    }
    return "?";
}

std::vector<std::size_t> plan_budgets(const adaptive::LinkBudget& budget,
                                      const std::vector<double>& snrs_db) {
    std::vector<std::size_t> out;
    out.reserve(snrs_db.size());
    for (double snr : snrs_db) {
        adaptive::LinkBudget b = budget;
        b.sigma_n_sq = channel::snr_to_noise_var(snr);
        out.push_back(adaptive::plan_length(b));
    }
    return out;
}

SymbolTable symbol_table(const adaptive::LinkBudget& budget, const std::vector<double>& snrs_db) {
    SymbolTable t;
    t.snrs_db = snrs_db;
    t.fixed_symbols = budget.cap;
    t.dynamic = plan_budgets(budget, snrs_db);
    t.utf8_turbo_symbols = modulation_symbols(kBaselineCodedBits, 4);
    for (double snr : snrs_db) {
        t.amc_awgn.push_back(
            modulation_symbols(kBaselineCodedBits, amc_bits_per_symbol(snr, channel::Kind::awgn)));
        t.amc_rician.push_back(modulation_symbols(
            kBaselineCodedBits, amc_bits_per_symbol(snr, channel::Kind::rician)));
    }
    return t;
}

std::string format_symbol_table(const SymbolTable& t) {
    std::ostringstream os;
    os << "transmitted symbols per sentence\n";
    os << std::left;
    auto row_label = [&](const std::string& name) { os << "  "; os.width(26); os << name; };
    row_label("snr_db");
    for (double s : t.snrs_db) {
        os.width(12);
        os << s;
    }
    os << "\n";
    row_label("semantic fixed");
    for (std::size_t i = 0; i < t.snrs_db.size(); ++i) {
        os.width(12);
        os << t.fixed_symbols;
    }
    os << "\n";
    row_label("semantic dynamic");
    for (std::size_t v : t.dynamic) {
        os.width(12);
        os << v;
    }
    os << "\n";
    row_label("utf8-turbo 16QAM");
    for (std::size_t i = 0; i < t.snrs_db.size(); ++i) {
        os.width(12);
        os << t.utf8_turbo_symbols;
    }
    os << "\n";
    row_label("utf8-turbo AMC (awgn)");
    for (std::size_t i = 0; i < t.snrs_db.size(); ++i) {
        std::ostringstream cell;
        cell << t.amc_awgn[i] << " ("
             << modulation_name(amc_bits_per_symbol(t.snrs_db[i], channel::Kind::awgn)) << ")";
        os.width(12);
        os << cell.str();
    }
    os << "\n";
    row_label("utf8-turbo AMC (rician)");
    for (std::size_t i = 0; i < t.snrs_db.size(); ++i) {
        std::ostringstream cell;
        cell << t.amc_rician[i] << " ("
             << modulation_name(amc_bits_per_symbol(t.snrs_db[i], channel::Kind::rician)) << ")";
        os.width(12);
        os << cell.str();
    }
    os << "\n";
    return os.str();
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman_rho: need two equal-length samples");
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return v[a] < v[b];
        });
        std::vector<double> rank(v.size(), 0.0);
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
            const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // ties share ranks
            for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mean_rank;
            i = j + 1;
        }
        return rank;
    };
    const std::vector<double> rx = ranks(x), ry = ranks(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(rx.size());
    my /= static_cast<double>(ry.size());
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0.0 || dy == 0.0) return 0.0;
    return num / std::sqrt(dx * dy);
}

namespace {

// regularized incomplete beta via the standard continued fraction
double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 200; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-12) break;
    }
    return h;
}

double reg_inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// one-sided survival function of Student's t with nu degrees of freedom
double student_t_sf(double t, double nu) {
    const double x = nu / (nu + t * t);
    const double half_tail = 0.5 * reg_inc_beta(nu / 2.0, 0.5, x);
    return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

}  // namespace

PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("paired_t_test: need two equal-length samples of size >= 2");
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    double mean = 0.0;
    for (double x : d) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : d) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n - 1);

    PairedTTest out;
    out.n = n;
    if (var == 0.0) {
        out.t_stat = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                : (mean < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
        out.p_one_sided = mean > 0.0 ? 0.0 : 1.0;
        return out;
    }
    out.t_stat = mean / std::sqrt(var / static_cast<double>(n));
    out.p_one_sided = student_t_sf(out.t_stat, static_cast<double>(n - 1));
    return out;
}

}  // namespace memsc::harness
