#include "memsc/adaptive/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "memsc/numerics/layers.hpp"

namespace memsc::adaptive {

using numerics::Graph;
using numerics::ParamBinder;
using numerics::ParamTag;
using numerics::Tensor;

double codeword_capacity(double length, double mu_max_sq, double sigma_sq) {
    if (sigma_sq <= 0.0) throw std::domain_error("codeword_capacity: sigma^2 must be positive");
    if (length < 0.0 || mu_max_sq < 0.0)
        throw std::domain_error("codeword_capacity: negative inputs");
    return std::pow(1.0 + mu_max_sq / sigma_sq, length / 2.0);
}

double plan_length_exact(const LinkBudget& b) {
    if (b.sigma_m_sq <= 0.0) throw std::domain_error("plan_length: sigma_m^2 must be positive");
    const double num = std::log(1.0 + b.mu_max_sq / b.sigma_m_sq);
    const double den = std::log(1.0 + b.mu_max_sq / (b.sigma_m_sq + b.sigma_n_sq));
    return static_cast<double>(b.base_length) * num / den;
}

std::size_t plan_length(const LinkBudget& b) {
    if (b.base_length > b.cap)
        throw std::invalid_argument("plan_length: base length exceeds the cap");
    const double exact = plan_length_exact(b);
    const auto rounded = static_cast<long long>(std::llround(exact));
    const long long lo = static_cast<long long>(b.base_length);
    const long long hi = static_cast<long long>(b.cap);
    return static_cast<std::size_t>(std::clamp(rounded, lo, hi));
}

double case3_length(double codewords, double mu_max_sq, double sigma_n_sq) {
    if (codewords <= 1.0) throw std::domain_error("case3_length: codeword count must exceed 1");
    if (sigma_n_sq <= 0.0) throw std::domain_error("case3_length: sigma_n^2 must be positive");
    return 2.0 * std::log(codewords) / std::log(1.0 + mu_max_sq / sigma_n_sq);
}

MaskPlan mask_for_budget(const std::vector<double>& scores, std::size_t budget) {
    if (budget < 1 || budget > scores.size())
        throw std::invalid_argument("mask_for_budget: budget out of range");
    std::vector<double> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + (budget - 1), sorted.end(),
                     std::greater<double>());
    const double kappa = sorted[budget - 1];

    MaskPlan plan;
    plan.budget = budget;
    plan.threshold = kappa;
    plan.scores = scores;
    plan.mask.assign(scores.size(), 0);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] > kappa) {
            plan.mask[i] = 1;
            ++kept;
        }
    }
    // ties at kappa keep lowest indices first, so exactly `budget` survive
    for (std::size_t i = 0; i < scores.size() && kept < budget; ++i) {
        if (plan.mask[i] == 0 && scores[i] == kappa) {
            plan.mask[i] = 1;
            ++kept;
        }
    }
    // the marginal kept element: the last kept one sitting exactly at kappa
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (plan.mask[i] && scores[i] == kappa) plan.threshold_index = i;
    return plan;
}

std::vector<double> apply_mask(const std::vector<double>& x_ri,
                               const std::vector<std::uint8_t>& mask) {
    if (x_ri.size() != 2 * mask.size())
        throw std::invalid_argument("apply_mask: signal/mask length mismatch");
    std::vector<double> out(x_ri.size(), 0.0);
    for (std::size_t k = 0; k < mask.size(); ++k) {
        if (mask[k]) {
            out[2 * k] = x_ri[2 * k];
            out[2 * k + 1] = x_ri[2 * k + 1];
        }
    }
    return out;
}

SoftMask soft_k_max(const MaskPlan& plan, double temperature) {
    if (temperature <= 0.0) throw std::invalid_argument("soft_k_max: temperature must be positive");
    SoftMask out;
    out.kappa = plan.threshold;
    out.threshold_index = plan.threshold_index;
    out.forward.resize(plan.mask.size());
    out.surrogate.resize(plan.mask.size());
    out.surrogate_grad.resize(plan.mask.size());
    for (std::size_t i = 0; i < plan.mask.size(); ++i) {
        out.forward[i] = plan.mask[i] ? 1.0 : 0.0;
        const double s = 1.0 / (1.0 + std::exp(-(plan.scores[i] - plan.threshold) / temperature));
        out.surrogate[i] = s;
        out.surrogate_grad[i] = s * (1.0 - s) / temperature;
    }
    return out;
}

std::vector<std::uint8_t> consecutive_mask_vector(std::size_t length, std::size_t budget) {
    if (budget < 1 || budget > length)
        throw std::invalid_argument("consecutive_mask: budget out of range");
    std::vector<std::uint8_t> mask(length, 0);
    std::fill(mask.begin(), mask.begin() + budget, 1);
    return mask;
}

std::vector<double> consecutive_mask(const std::vector<double>& x_ri, std::size_t budget) {
    return apply_mask(x_ri, consecutive_mask_vector(x_ri.size() / 2, budget));
}

std::vector<std::uint8_t> random_mask_vector(std::size_t length, std::size_t budget, Rng& rng) {
    if (budget < 1 || budget > length)
        throw std::invalid_argument("random_mask: budget out of range");
    // Fisher-Yates prefix of an index permutation
    std::vector<std::size_t> idx(length);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < budget; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(length - i));
        std::swap(idx[i], idx[j]);
    }
    std::vector<std::uint8_t> mask(length, 0);
    for (std::size_t i = 0; i < budget; ++i) mask[idx[i]] = 1;
    return mask;
}

std::vector<double> random_mask(const std::vector<double>& x_ri, std::size_t budget, Rng& rng) {
    return apply_mask(x_ri, random_mask_vector(x_ri.size() / 2, budget, rng));
}

MaskedFrame pack_masked(const std::vector<double>& masked_ri,
                        const std::vector<std::uint8_t>& mask) {
    if (masked_ri.size() != 2 * mask.size())
        throw std::invalid_argument("pack_masked: signal/mask length mismatch");
    if (mask.size() > UINT16_MAX) throw std::invalid_argument("pack_masked: signal too long");
    MaskedFrame frame;
    frame.full_length = static_cast<std::uint16_t>(mask.size());
    frame.bitmap.assign((mask.size() + 7) / 8, 0);
    for (std::size_t k = 0; k < mask.size(); ++k) {
        if (!mask[k]) continue;
        frame.bitmap[k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
        frame.kept_ri.push_back(static_cast<float>(masked_ri[2 * k]));
        frame.kept_ri.push_back(static_cast<float>(masked_ri[2 * k + 1]));
    }
    return frame;
}

std::vector<double> unpack_masked(const MaskedFrame& frame) {
    std::size_t ones = 0;
    for (std::size_t k = 0; k < frame.full_length; ++k)
        if (frame.bitmap[k / 8] & (1u << (k % 8))) ++ones;
    if (ones != frame.kept_count())
        throw std::invalid_argument("unpack_masked: bitmap/value count mismatch");
    std::vector<double> out(2 * static_cast<std::size_t>(frame.full_length), 0.0);
    std::size_t next = 0;
    for (std::size_t k = 0; k < frame.full_length; ++k) {
        if (frame.bitmap[k / 8] & (1u << (k % 8))) {
            out[2 * k] = static_cast<double>(frame.kept_ri[2 * next]);
            out[2 * k + 1] = static_cast<double>(frame.kept_ri[2 * next + 1]);
            ++next;
        }
    }
    return out;
}

std::size_t frame_wire_bytes(std::size_t full_length, std::size_t kept) {
    return 4 + (full_length + 7) / 8 + 8 * kept;
}

namespace {

void push_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void push_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(bits >> s));
}

}  // namespace

std::vector<std::uint8_t> serialize_frame(const MaskedFrame& frame) {
    std::vector<std::uint8_t> out;
    out.reserve(frame_wire_bytes(frame.full_length, frame.kept_count()));
    push_u16(out, frame.full_length);
    push_u16(out, static_cast<std::uint16_t>(frame.kept_count()));
    out.insert(out.end(), frame.bitmap.begin(), frame.bitmap.end());
    for (float v : frame.kept_ri) push_f32(out, v);
    return out;
}

MaskedFrame parse_frame(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4) throw std::invalid_argument("parse_frame: truncated header");
    MaskedFrame frame;
    frame.full_length = static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
    const std::size_t kept = static_cast<std::size_t>(bytes[2] | (bytes[3] << 8));
    const std::size_t bitmap_bytes = (frame.full_length + 7) / 8;
    if (bytes.size() != frame_wire_bytes(frame.full_length, kept))
        throw std::invalid_argument("parse_frame: frame size mismatch");
    frame.bitmap.assign(bytes.begin() + 4, bytes.begin() + 4 + bitmap_bytes);
    std::size_t ones = 0;
    for (std::size_t k = 0; k < frame.full_length; ++k)
        if (frame.bitmap[k / 8] & (1u << (k % 8))) ++ones;
    if (ones != kept) throw std::invalid_argument("parse_frame: bitmap/value count mismatch");
    frame.kept_ri.resize(2 * kept);
    const std::uint8_t* p = bytes.data() + 4 + bitmap_bytes;
    for (std::size_t i = 0; i < 2 * kept; ++i) {
        std::uint32_t bits = static_cast<std::uint32_t>(p[4 * i]) |
                             (static_cast<std::uint32_t>(p[4 * i + 1]) << 8) |
                             (static_cast<std::uint32_t>(p[4 * i + 2]) << 16) |
                             (static_cast<std::uint32_t>(p[4 * i + 3]) << 24);
        float v;
        std::memcpy(&v, &bits, sizeof(v));
        frame.kept_ri[i] = v;
    }
    return frame;
}

void add_importance_params(numerics::ParameterSet& ps, const ImportanceConfig& cfg, Rng& rng) {
    numerics::add_dense_params(ps, ParamTag::importance, "imp.in", cfg.width, 2, rng);
    numerics::add_transformer_layer_params(ps, ParamTag::importance, "imp.layer", cfg.width,
                                           2 * cfg.width, rng);
    numerics::add_dense_params(ps, ParamTag::importance, "imp.out", 1, cfg.width, rng);
}

Graph::Var build_importance_scores(Graph& g, ParamBinder& bind, Graph::Var x_ri,
                                   const ImportanceConfig& cfg) {
    const std::size_t n = g.value(x_ri).numel();
    if (n % 2 != 0) throw std::invalid_argument("importance scores: interleaved complex required");
    const std::size_t pairs = n / 2;
    Graph::Var tokens = g.reshape(x_ri, {pairs, 2});
    Graph::Var h = g.dense(tokens, bind("imp.in.w"), bind("imp.in.b"));
    h = g.add(h, g.constant(numerics::sinusoidal_codes(pairs, cfg.width)));
    h = numerics::transformer_layer_step(g, h, numerics::bind_transformer_layer(bind, "imp.layer"),
                                         cfg.heads);
    Graph::Var scores = g.dense(h, bind("imp.out.w"), bind("imp.out.b"));
    return g.reshape(scores, {pairs});
}

std::vector<double> importance_scores(const std::vector<double>& x_ri,
                                      const numerics::ParameterSet& params,
                                      const ImportanceConfig& cfg) {
    Graph g;
    ParamBinder bind(g, params);
    Graph::Var x = g.constant(Tensor::from({x_ri.size()}, x_ri));
    Graph::Var scores = build_importance_scores(g, bind, x, cfg);
    return g.value(scores).v;
}

}  // namespace memsc::adaptive
