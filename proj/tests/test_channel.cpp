#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "memsc/channel/channel.hpp"

using namespace memsc;
using namespace memsc::channel;

namespace {

std::vector<double> random_symbols(std::size_t length, Rng& rng) {
    std::vector<double> x(2 * length);
    for (double& v : x) v = rng.normal();
    return x;
}

}  // namespace

TEST_CASE("power normalization forced values and fixed point") {
    const ChannelSymbols out = power_normalize({3, 4, 0, 0});
    // sqrt(2) * [3+4i, 0] / 5
    CHECK(out.ri[0] == doctest::Approx(0.848528137).epsilon(1e-6));
    CHECK(out.ri[1] == doctest::Approx(1.131370850).epsilon(1e-6));
    CHECK(out.mean_symbol_power() == doctest::Approx(1.0).epsilon(1e-12));

    // already unit power: unchanged within 1e-12
    const ChannelSymbols again = power_normalize(out.ri);
    for (std::size_t i = 0; i < out.ri.size(); ++i)
        CHECK(again.ri[i] == doctest::Approx(out.ri[i]).epsilon(1e-12));

    CHECK_THROWS_AS(power_normalize({0, 0, 0, 0}), std::domain_error);
}

TEST_CASE("power normalization is scale invariant with unit mean power") {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        auto x = random_symbols(1 + rng.below(40), rng);
        const ChannelSymbols norm = power_normalize(x);
        CHECK(std::abs(norm.mean_symbol_power() - 1.0) <= 1e-9);
        auto scaled = x;
        const double c = rng.uniform(0.1, 25.0);
        for (double& v : scaled) v *= c;
        const ChannelSymbols norm2 = power_normalize(scaled);
        for (std::size_t i = 0; i < norm.ri.size(); ++i)
            CHECK(norm2.ri[i] == doctest::Approx(norm.ri[i]).epsilon(1e-11));
    }
}

TEST_CASE("snr to noise variance") {
    CHECK(snr_to_noise_var(0.0) == doctest::Approx(1.0));
    CHECK(snr_to_noise_var(10.0) == doctest::Approx(0.1));
    // frozen from the 10^0.6 oracle
    const long double oracle = powl(10.0L, 0.6L);
    CHECK(static_cast<double>(oracle) == doctest::Approx(3.9810717055).epsilon(1e-9));
    CHECK(snr_to_noise_var(-6.0) == doctest::Approx(3.9810717055).epsilon(1e-9));
}

TEST_CASE("awgn channel state is all ones") {
    Rng rng(9);
    const ChannelState h = sample_channel(Kind::awgn, 4, 0.0, rng);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(h.ri[2 * k] == 1.0);
        CHECK(h.ri[2 * k + 1] == 0.0);
    }
}

TEST_CASE("rician r=2 element mean and variance hit sqrt(2/3) and 1/3") {
    Rng rng(11);
    const std::size_t draws = 100000;
    const std::size_t length = 8;
    double sum_re = 0.0, sum_im = 0.0;
    std::vector<double> all;
    all.reserve(2 * draws * length);
    for (std::size_t d = 0; d < draws / length; ++d) {
        const ChannelState h = sample_channel(Kind::rician, length, 2.0, rng);
        for (std::size_t k = 0; k < length; ++k) {
            sum_re += h.ri[2 * k];
            sum_im += h.ri[2 * k + 1];
            all.push_back(h.ri[2 * k]);
            all.push_back(h.ri[2 * k + 1]);
        }
    }
    const double n = static_cast<double>(all.size() / 2);
    const double mean_re = sum_re / n;
    const double mean_im = sum_im / n;
    const double expect_mean = std::sqrt(2.0 / 3.0);
    CHECK(mean_re == doctest::Approx(expect_mean).epsilon(0.01));
    CHECK(std::abs(mean_im) <= 0.01);
    double var = 0.0;
    for (std::size_t i = 0; i < all.size(); i += 2) {
        const double dr = all[i] - mean_re;
        const double di = all[i + 1] - mean_im;
        var += dr * dr + di * di;
    }
    var /= n;
    CHECK(var == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("rayleigh element power is unit on average") {
    Rng rng(13);
    double acc = 0.0;
    const std::size_t draws = 12500, length = 8;
    for (std::size_t d = 0; d < draws; ++d) {
        const ChannelState h = sample_channel(Kind::rayleigh, length, 0.0, rng);
        for (std::size_t k = 0; k < length; ++k)
            acc += h.ri[2 * k] * h.ri[2 * k] + h.ri[2 * k + 1] * h.ri[2 * k + 1];
    }
    CHECK(acc / static_cast<double>(draws * length) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("transmit edge cases") {
    Rng rng(17);
    const ChannelSymbols x = power_normalize(random_symbols(6, rng));
    const ChannelState awgn = sample_channel(Kind::awgn, 6, 0.0, rng);
    const std::vector<double> y = transmit(x, awgn, 0.0, rng);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == x.ri[i]);

    // zero signal, unit noise: received power -> sigma_n^2
    ChannelSymbols zero;
    zero.ri.assign(12, 0.0);
    double acc = 0.0;
    const std::size_t draws = 20000;
    for (std::size_t d = 0; d < draws; ++d) {
        const std::vector<double> yn = transmit(zero, awgn, 1.0, rng);
        for (std::size_t k = 0; k < 6; ++k)
            acc += yn[2 * k] * yn[2 * k] + yn[2 * k + 1] * yn[2 * k + 1];
    }
    CHECK(acc / static_cast<double>(draws * 6) == doctest::Approx(1.0).epsilon(0.01));

    ChannelState doubled = awgn;
    for (std::size_t k = 0; k < 6; ++k) doubled.ri[2 * k] = 2.0;
    const std::vector<double> y2 = transmit(x, doubled, 0.0, rng);
    for (std::size_t i = 0; i < y2.size(); ++i) CHECK(y2[i] == doctest::Approx(2.0 * x.ri[i]));

    ChannelState short_h = awgn;
    short_h.ri.resize(4);
    CHECK_THROWS_AS(transmit(x, short_h, 0.0, rng), std::invalid_argument);
}

TEST_CASE("csi estimation error statistics") {
    Rng rng(19);
    const ChannelState h = sample_channel(Kind::rician, 10, 2.0, rng);
    const ChannelState exact = estimate_csi(h, 0.0, rng);
    for (std::size_t i = 0; i < h.ri.size(); ++i) CHECK(exact.ri[i] == h.ri[i]);

    double acc = 0.0;
    const std::size_t draws = 10000;
    for (std::size_t d = 0; d < draws; ++d) {
        const ChannelState noisy = estimate_csi(h, 0.05, rng);
        for (std::size_t i = 0; i < h.ri.size(); ++i) {
            const double e = noisy.ri[i] - h.ri[i];
            acc += e * e;
        }
    }
    CHECK(acc / static_cast<double>(draws * 10) == doctest::Approx(0.05).epsilon(0.02));
}

TEST_CASE("detection inverts the noiseless link for every channel kind") {
    Rng rng(23);
    for (Kind kind : {Kind::awgn, Kind::rayleigh, Kind::rician}) {
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t length = 1 + rng.below(16);
            const ChannelSymbols x = power_normalize(random_symbols(length, rng));
            const ChannelState h = sample_channel(kind, length, 2.0, rng);
            const std::vector<double> x_hat = detect(transmit(x, h, 0.0, rng), h);
            for (std::size_t i = 0; i < x.ri.size(); ++i)
                CHECK(std::abs(x_hat[i] - x.ri[i]) <= 1e-12 * std::max(1.0, std::abs(x.ri[i])));
        }
    }

    const ChannelState two{{2.0, 0.0}, Kind::awgn, 0.0};
    const std::vector<double> one = detect({2.0, 0.0}, two);
    CHECK(one[0] == doctest::Approx(1.0));

    ChannelState zero_coeff{{1.0, 0.0, 0.0, 0.0}, Kind::awgn, 0.0};
    try {
        detect({1, 1, 1, 1}, zero_coeff);
        FAIL("expected zero-coefficient error");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("element 1") != std::string::npos);
    }
}

TEST_CASE("equalized error power matches the analytic estimate at 18 dB rician") {
    Rng rng(29);
    const double sigma_n2 = snr_to_noise_var(18.0);
    const std::size_t length = 16, draws = 4000;

    // independent Monte-Carlo oracle for sigma_n^2 * E[1/|h|^2]
    Rng oracle_rng(31);
    double inv_h2 = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
        const ChannelState h = sample_channel(Kind::rician, length, 2.0, oracle_rng);
        for (std::size_t k = 0; k < length; ++k)
            inv_h2 += 1.0 / (h.ri[2 * k] * h.ri[2 * k] + h.ri[2 * k + 1] * h.ri[2 * k + 1]);
    }
    const double expect = sigma_n2 * inv_h2 / static_cast<double>(draws * length);

    double measured = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
        const ChannelSymbols x = power_normalize(random_symbols(length, rng));
        const ChannelState h = sample_channel(Kind::rician, length, 2.0, rng);
        const std::vector<double> x_hat = detect(transmit(x, h, sigma_n2, rng), h);
        for (std::size_t i = 0; i < x.ri.size(); ++i) {
            const double e = x_hat[i] - x.ri[i];
            measured += e * e;
        }
    }
    measured /= static_cast<double>(draws * length);
    CHECK(measured == doctest::Approx(expect).epsilon(0.05));
}

TEST_CASE("configured snr is reproduced within 0.1 dB over 1e6 symbols") {
    Rng rng(37);
    const double snr_db = 6.0;
    const double sigma_n2 = snr_to_noise_var(snr_db);
    const std::size_t length = 100, draws = 10000;  // 1e6 symbols
    double signal = 0.0, noise = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
        const ChannelSymbols x = power_normalize(random_symbols(length, rng));
        const ChannelState h = sample_channel(Kind::rayleigh, length, 0.0, rng);
        const std::vector<double> clean = transmit(x, h, 0.0, rng);
        const std::vector<double> noisy = transmit(x, h, sigma_n2, rng);
        for (std::size_t i = 0; i < clean.size(); ++i) {
            signal += clean[i] * clean[i];
            const double n = noisy[i] - clean[i];
            noise += n * n;
        }
    }
    const double measured_db = 10.0 * std::log10(signal / noise);
    CHECK(measured_db == doctest::Approx(snr_db).epsilon(0.1 / snr_db));
}

TEST_CASE("detected affine map equals the explicit transmit/detect path") {
    Rng rng(41);
    for (Kind kind : {Kind::awgn, Kind::rayleigh, Kind::rician}) {
        const std::size_t length = 12;
        const double sigma_n2 = 0.3, sigma_e2 = 0.02;
        // identical stream both ways
        Rng a = Rng::stream(99, 5, 2);
        const DetectedAffine affine =
            draw_detected_affine(kind, length, 2.0, sigma_n2, sigma_e2, a);

        Rng b = Rng::stream(99, 5, 2);
        const ChannelState h = sample_channel(kind, length, 2.0, b);
        std::vector<double> n(2 * length);
        for (double& v : n) v = std::sqrt(sigma_n2 / 2.0) * b.normal();
        const ChannelState h_hat = estimate_csi(h, sigma_e2, b);

        const ChannelSymbols x = power_normalize(random_symbols(length, rng));
        std::vector<double> y(2 * length);
        for (std::size_t k = 0; k < length; ++k) {
            y[2 * k] = h.ri[2 * k] * x.ri[2 * k] - h.ri[2 * k + 1] * x.ri[2 * k + 1] + n[2 * k];
            y[2 * k + 1] =
                h.ri[2 * k] * x.ri[2 * k + 1] + h.ri[2 * k + 1] * x.ri[2 * k] + n[2 * k + 1];
        }
        const std::vector<double> direct = detect(y, h_hat);
        for (std::size_t k = 0; k < length; ++k) {
            const double sr = affine.scale_ri.v[2 * k], si = affine.scale_ri.v[2 * k + 1];
            const double xr = x.ri[2 * k], xi = x.ri[2 * k + 1];
            const double ar = sr * xr - si * xi + affine.offset_ri.v[2 * k];
            const double ai = sr * xi + si * xr + affine.offset_ri.v[2 * k + 1];
            CHECK(ar == doctest::Approx(direct[2 * k]).epsilon(1e-10));
            CHECK(ai == doctest::Approx(direct[2 * k + 1]).epsilon(1e-10));
        }
    }
}
