#include "memsc/channel/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "memsc/kernels/kernels.hpp"

namespace memsc::channel {

Kind kind_from_name(const std::string& name) {
    if (name == "awgn") return Kind::awgn;
    if (name == "rayleigh") return Kind::rayleigh;
    if (name == "rician") return Kind::rician;
    throw std::invalid_argument("unknown channel kind: " + name);
}

const char* kind_name(Kind kind) {
    switch (kind) {
        case Kind::awgn: return "awgn";
        case Kind::rayleigh: return "rayleigh";
        case Kind::rician: return "rician";
    }
    return "unknown";
}

double ChannelSymbols::mean_symbol_power() const {
    if (ri.empty()) return 0.0;
    return kernels::dot(ri.data(), ri.data(), ri.size()) / static_cast<double>(symbol_count());
}

NoiseSpec NoiseSpec::from_snr_db(double snr_db) {
    return NoiseSpec{snr_to_noise_var(snr_db), snr_db};
}

ChannelSymbols power_normalize(const std::vector<double>& x_ri) {
    if (x_ri.empty() || x_ri.size() % 2 != 0)
        throw std::invalid_argument("power_normalize: interleaved complex vector required");
    const double norm = std::sqrt(kernels::dot(x_ri.data(), x_ri.data(), x_ri.size()));
    if (norm < 1e-300) throw std::domain_error("power_normalize: all-zero input");
    const double len = static_cast<double>(x_ri.size() / 2);
    ChannelSymbols out;
    out.ri = x_ri;
    kernels::scal(std::sqrt(len) / norm, out.ri.data(), out.ri.size());
    return out;
}

double snr_to_noise_var(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

ChannelState sample_channel(Kind kind, std::size_t length, double rician_r, Rng& rng) {
    if (length < 1) throw std::invalid_argument("sample_channel: length must be >= 1");
    ChannelState h;
    h.kind = kind;
    h.rician_r = rician_r;
    h.ri.assign(2 * length, 0.0);
    switch (kind) {
        case Kind::awgn:
            for (std::size_t i = 0; i < length; ++i) h.ri[2 * i] = 1.0;
            break;
        case Kind::rayleigh: {
            const double comp = std::sqrt(0.5);  // CN(0, 1) per element
            for (double& x : h.ri) x = comp * rng.normal();
            break;
        }
        case Kind::rician: {
            if (rician_r < 0.0) throw std::invalid_argument("sample_channel: rician r must be >= 0");
            const double mean = std::sqrt(rician_r / (rician_r + 1.0));
            const double comp = std::sqrt(0.5 / (rician_r + 1.0));  // CN(mean, 1/(r+1))
            for (std::size_t i = 0; i < length; ++i) {
                h.ri[2 * i] = mean + comp * rng.normal();
                h.ri[2 * i + 1] = comp * rng.normal();
            }
            break;
        }
    }
    return h;
}

std::vector<double> transmit(const ChannelSymbols& x, const ChannelState& h, double sigma_n2,
                             Rng& rng) {
    if (x.ri.size() != h.ri.size())
        throw std::invalid_argument("transmit: signal/channel length mismatch");
    if (sigma_n2 < 0.0) throw std::invalid_argument("transmit: negative noise variance");
    const std::size_t pairs = x.symbol_count();
    std::vector<double> y(2 * pairs);
    const double comp = std::sqrt(sigma_n2 / 2.0);
    for (std::size_t k = 0; k < pairs; ++k) {
        const double xr = x.ri[2 * k], xi = x.ri[2 * k + 1];
        const double hr = h.ri[2 * k], hi = h.ri[2 * k + 1];
        y[2 * k] = hr * xr - hi * xi + comp * rng.normal();
        y[2 * k + 1] = hr * xi + hi * xr + comp * rng.normal();
    }
    return y;
}

ChannelState estimate_csi(const ChannelState& h, double sigma_e2, Rng& rng) {
    if (sigma_e2 < 0.0) throw std::invalid_argument("estimate_csi: negative error variance");
    ChannelState out = h;
    if (sigma_e2 == 0.0) return out;
    const double comp = std::sqrt(sigma_e2 / 2.0);
    for (double& x : out.ri) x += comp * rng.normal();
    return out;
}

std::vector<double> detect(const std::vector<double>& y_ri, const ChannelState& h_hat) {
    if (y_ri.size() != h_hat.ri.size())
        throw std::invalid_argument("detect: signal/channel length mismatch");
    const std::size_t pairs = y_ri.size() / 2;
    std::vector<double> x(2 * pairs);
    for (std::size_t k = 0; k < pairs; ++k) {
        const double hr = h_hat.ri[2 * k], hi = h_hat.ri[2 * k + 1];
        const double mag2 = hr * hr + hi * hi;
        if (mag2 == 0.0)
            throw std::domain_error("detect: zero estimated coefficient at element " +
                                    std::to_string(k));
        const double yr = y_ri[2 * k], yi = y_ri[2 * k + 1];
        x[2 * k] = (hr * yr + hi * yi) / mag2;
        x[2 * k + 1] = (hr * yi - hi * yr) / mag2;
    }
    return x;
}

DetectedAffine draw_detected_affine(Kind kind, std::size_t length, double rician_r,
                                    double sigma_n2, double sigma_e2, Rng& rng) {
    // Draw order is part of the reproducibility contract: h, then noise, then
    // the CSI error, all from the same per-slot stream.
    const ChannelState h = sample_channel(kind, length, rician_r, rng);
    std::vector<double> n(2 * length, 0.0);
    const double comp = std::sqrt(sigma_n2 / 2.0);
    if (sigma_n2 > 0.0)
        for (double& x : n) x = comp * rng.normal();
    const ChannelState h_hat = estimate_csi(h, sigma_e2, rng);

    DetectedAffine out;
    out.scale_ri = numerics::Tensor::zeros({2 * length});
    out.offset_ri = numerics::Tensor::zeros({2 * length});
    for (std::size_t k = 0; k < length; ++k) {
        const double hr = h.ri[2 * k], hi = h.ri[2 * k + 1];
        const double er = h_hat.ri[2 * k], ei = h_hat.ri[2 * k + 1];
        const double mag2 = er * er + ei * ei;
        if (mag2 == 0.0)
            throw std::domain_error("draw_detected_affine: zero estimated coefficient at element " +
                                    std::to_string(k));
        // conj(h_hat) * h / |h_hat|^2
        out.scale_ri.v[2 * k] = (er * hr + ei * hi) / mag2;
        out.scale_ri.v[2 * k + 1] = (er * hi - ei * hr) / mag2;
        // conj(h_hat) * n / |h_hat|^2
        out.offset_ri.v[2 * k] = (er * n[2 * k] + ei * n[2 * k + 1]) / mag2;
        out.offset_ri.v[2 * k + 1] = (er * n[2 * k + 1] - ei * n[2 * k]) / mag2;
    }
    return out;
}

}  // namespace memsc::channel
