#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "memsc/numerics/tensor.hpp"
#include "memsc/rng.hpp"

// Complex baseband link: power normalization, block fading, additive noise,
// CSI estimation error and per-element equalization. Complex vectors are
// carried as interleaved re/im doubles of length 2L throughout, matching the
// channel codec's real-valued outputs.

namespace memsc::channel {

enum class Kind { awgn, rayleigh, rician };

Kind kind_from_name(const std::string& name);
const char* kind_name(Kind kind);

// Power-normalized transmit signal: (1/L) sum |x_i|^2 == 1.
struct ChannelSymbols {
    std::vector<double> ri;
    std::size_t symbol_count() const { return ri.size() / 2; }
    double mean_symbol_power() const;
};

// One fading realization; AWGN is the all-ones vector. Rician coefficients
// have per-element mean sqrt(r/(r+1)) and variance 1/(r+1).
struct ChannelState {
    std::vector<double> ri;
    Kind kind = Kind::awgn;
    double rician_r = 0.0;
    std::size_t symbol_count() const { return ri.size() / 2; }
};

struct NoiseSpec {
    double sigma_n2 = 0.0;
    double snr_db = 0.0;
    static NoiseSpec from_snr_db(double snr_db);
};

// x * sqrt(L) / ||x||; throws std::domain_error on an all-zero input.
ChannelSymbols power_normalize(const std::vector<double>& x_ri);

// sigma_n^2 = 10^(-snr_db / 10) under unit signal power
double snr_to_noise_var(double snr_db);

// One fading draw for one sentence transmission (block fading).
ChannelState sample_channel(Kind kind, std::size_t length, double rician_r, Rng& rng);

// y = h .* x + n,  n ~ CN(0, sigma_n2 I)
std::vector<double> transmit(const ChannelSymbols& x, const ChannelState& h, double sigma_n2,
                             Rng& rng);

// h_hat = h + e,  e ~ CN(0, sigma_e2 I); sigma_e2 == 0 reproduces perfect CSI
ChannelState estimate_csi(const ChannelState& h, double sigma_e2, Rng& rng);

// x_hat_i = conj(h_hat_i) y_i / |h_hat_i|^2; throws std::domain_error naming
// the element index if some |h_hat_i| is exactly zero.
std::vector<double> detect(const std::vector<double>& y_ri, const ChannelState& h_hat);

// The equalized link as an affine map of the transmitted signal:
//   detect(transmit(x, h, n), h_hat) == scale .* x + offset   (complex, per element)
// with h, n, e treated as constants of the draw. This is the form the training
// graph consumes, so gradients flow through the channel.
struct DetectedAffine {
    numerics::Tensor scale_ri;
    numerics::Tensor offset_ri;
};

DetectedAffine draw_detected_affine(Kind kind, std::size_t length, double rician_r,
                                    double sigma_n2, double sigma_e2, Rng& rng);

}  // namespace memsc::channel
