#pragma once

#include <cstdint>
#include <vector>

#include "memsc/numerics/graph.hpp"
#include "memsc/numerics/numerics.hpp"
#include "memsc/rng.hpp"

// Analytic length planning from the noise model, importance masking,
// consecutive masking, the random-mask baseline, and the masked-signal wire
// format.

namespace memsc::adaptive {

// Everything entering the sphere-packing budget: the model-noise-only minimum
// length L, the peak squared codeword magnitude, the model- and channel-noise
// variances, and the hard cap on the planned length.
struct LinkBudget {
    std::size_t base_length = 16;  // L
    double mu_max_sq = 1.0;
    double sigma_m_sq = 1.44;
    double sigma_n_sq = 0.0;
    std::size_t cap = 32;  // L_max
};

// Codewords that fit with non-overlapping noise spheres:
//   N = (1 + mu_max^2 / sigma^2)^(length/2).
// Throws std::domain_error when sigma^2 <= 0.
double codeword_capacity(double length, double mu_max_sq, double sigma_sq);

// Unclamped planned length
//   L1 = L * log(1 + mu^2/sigma_m^2) / log(1 + mu^2/(sigma_m^2 + sigma_n^2)).
double plan_length_exact(const LinkBudget& b);

// round(L1), clamped to [base_length, cap]
std::size_t plan_length(const LinkBudget& b);

// Inverse of the capacity at model noise -> 0: length needed for `codewords`
// over channel noise alone, 2 log(N) / log(1 + mu^2/sigma_n^2).
double case3_length(double codewords, double mu_max_sq, double sigma_n_sq);

// Exact-budget mask: threshold kappa is the budget-th largest score, elements
// with score > kappa are kept, and ties at kappa are kept lowest-index-first
// until exactly `budget` elements survive.
struct MaskPlan {
    std::vector<std::uint8_t> mask;   // one flag per complex element
    std::size_t budget = 0;           // L1 = number of ones
    double threshold = 0.0;           // kappa
    std::size_t threshold_index = 0;  // the marginal kept element (score == kappa)
    std::vector<double> scores;
};

MaskPlan mask_for_budget(const std::vector<double>& scores, std::size_t budget);

// Element-wise product; mask has one flag per complex element of x.
std::vector<double> apply_mask(const std::vector<double>& x_ri,
                               const std::vector<std::uint8_t>& mask);

// Straight-through activation bridging the hard mask into backpropagation:
// forward value is exactly the plan's hard mask, the gradient path is
// sigmoid((p - kappa) / temperature) with kappa the threshold element's own
// score. Differentiating through kappa makes a uniform score shift
// gradient-free, matching the mask's rank-only dependence.
struct SoftMask {
    std::vector<double> forward;
    std::vector<double> surrogate;       // sigmoid((p - kappa)/T)
    std::vector<double> surrogate_grad;  // elementwise slope, the d/dp_i term
    double kappa = 0.0;
    std::size_t threshold_index = 0;     // collects the -sum(slope) kappa term
};

SoftMask soft_k_max(const MaskPlan& plan, double temperature);

// Prefix-keep mask: first `budget` complex elements survive, the tail is
// zeroed; the receiver zero-pads, so no position side-channel is needed.
std::vector<std::uint8_t> consecutive_mask_vector(std::size_t length, std::size_t budget);
std::vector<double> consecutive_mask(const std::vector<double>& x_ri, std::size_t budget);

// Uniformly random budget-subset keep.
std::vector<std::uint8_t> random_mask_vector(std::size_t length, std::size_t budget, Rng& rng);
std::vector<double> random_mask(const std::vector<double>& x_ri, std::size_t budget, Rng& rng);

// Wire format for importance-masked signals: the kept complex values plus the
// position bitmap.
//
// Serialized layout, little-endian:
//   [u16 full_length] [u16 kept_count] [bitmap ceil(full_length/8) bytes,
//   LSB-first] [kept_count complex values as f32 re,im pairs]
struct MaskedFrame {
    std::uint16_t full_length = 0;
    std::vector<std::uint8_t> bitmap;
    std::vector<float> kept_ri;
    std::size_t kept_count() const { return kept_ri.size() / 2; }
};

MaskedFrame pack_masked(const std::vector<double>& masked_ri,
                        const std::vector<std::uint8_t>& mask);
std::vector<double> unpack_masked(const MaskedFrame& frame);
std::vector<std::uint8_t> serialize_frame(const MaskedFrame& frame);
MaskedFrame parse_frame(const std::vector<std::uint8_t>& bytes);
std::size_t frame_wire_bytes(std::size_t full_length, std::size_t kept);

// Importance scorer: per-complex-element tokens through one transformer
// encoder layer, one real score per element (Algorithm-2 model, theta).
struct ImportanceConfig {
    std::size_t width = 64;
    std::size_t heads = 2;
};

// parameter names: imp.in.{w,b}, imp.layer.*, imp.out.{w,b}
void add_importance_params(numerics::ParameterSet& ps, const ImportanceConfig& cfg, Rng& rng);

// graph route used during Algorithm-2 training (x as an interleaved [2L] var)
numerics::Graph::Var build_importance_scores(numerics::Graph& g, numerics::ParamBinder& bind,
                                             numerics::Graph::Var x_ri,
                                             const ImportanceConfig& cfg);

// plain route: one score per complex element, higher = more important
std::vector<double> importance_scores(const std::vector<double>& x_ri,
                                      const numerics::ParameterSet& params,
                                      const ImportanceConfig& cfg);

}  // namespace memsc::adaptive
