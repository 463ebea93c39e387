#include "ugvnet/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ugvnet {

namespace {

// Largest code rate for which the phi0 term stays real: -ln(1 - 2/e)/2.
constexpr double kPhi0RateLimit = 0.6654466341020273;

// Rayleigh scale with E[beta^2] = 1, so instantaneous SNR averages to the
// configured mean SNR.
constexpr double kUnitPowerRayleighScale = 0.70710678118654752440;

}  // namespace

double LinkConfig::mean_snr_linear() const {
    return std::pow(10.0, snr_db / 10.0);
}

PerEval evaluate_per(double gamma, int block_length, double code_rate) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("evaluate_per: gamma must be positive and finite");
    }
    if (block_length < 1) {
        throw std::invalid_argument("evaluate_per: block length must be >= 1");
    }
    if (!(code_rate > 0.0)) {
        throw std::invalid_argument("evaluate_per: code rate must be positive");
    }

    const double L = static_cast<double>(block_length);
    const double R = code_rate;
    const double e_r = std::exp(R);
    const double arg = -(e_r + 1.0) / gamma;
    const double exp_arg = std::exp(arg);

    const double p0 = 1.0 - exp_arg;
    const double phi = -(e_r / (2.0 * gamma)) * exp_arg;

    double raw = p0 + (std::log(L) / L) * phi * std::log(R);

    PerEval out;
    const double sqrt_arg = 2.0 - std::numbers::e * (1.0 - std::exp(-2.0 * R));
    if (R < kPhi0RateLimit && sqrt_arg > 0.0) {
        const double phi0 = (e_r / gamma) * exp_arg *
                            (2.0 - arg + std::log(1.0 / std::sqrt(sqrt_arg)));
        raw += phi0 / L;
        out.phi0_included = true;
    }

    out.raw = raw;
    out.value = std::clamp(raw, 0.0, 1.0);
    out.clamped = (raw < 0.0 || raw > 1.0);
    return out;
}

double packet_error_probability(double gamma, int block_length, double code_rate) {
    return evaluate_per(gamma, block_length, code_rate).value;
}

FadingSample sample_fading(double sigma_scale, RngStream& rng) {
    FadingSample s;
    s.beta = rng.rayleigh(sigma_scale);
    s.phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return s;
}

int sample_delay(const LinkConfig& cfg, RngStream& rng) {
    if (cfg.max_delay_slots <= 0) return 0;
    return rng.uniform_int(0, cfg.max_delay_slots);
}

ChannelDraw transmit(const LinkConfig& cfg, RngStream& loss_rng, RngStream& delay_rng) {
    ChannelDraw draw;
    draw.delay_slots = sample_delay(cfg, delay_rng);

    double gamma = cfg.mean_snr_linear();
    if (cfg.per_mode == PerMode::kInstantaneousFading) {
        draw.fading = sample_fading(kUnitPowerRayleighScale, loss_rng);
        gamma *= draw.fading.beta * draw.fading.beta;
        gamma = std::max(gamma, 1e-300);
    }
    draw.loss_probability = packet_error_probability(gamma, cfg.block_length, cfg.code_rate);
    draw.lost = loss_rng.uniform01() < draw.loss_probability;
    return draw;
}

}  // namespace ugvnet
