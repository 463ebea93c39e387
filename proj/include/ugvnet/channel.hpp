#pragma once

#include "ugvnet/rng.hpp"

namespace ugvnet {

// How the per-transmission loss probability is obtained.
//   kAnalyticMeanSnr:      evaluate Pe at the configured mean SNR (table-exact).
//   kInstantaneousFading:  draw a Rayleigh fading gain per block and evaluate
//                          Pe at the instantaneous SNR, i.e. the expectation
//                          over fading is realized by Monte Carlo.
enum class PerMode { kAnalyticMeanSnr, kInstantaneousFading };

struct LinkConfig {
    double snr_db = 15.0;
    int max_delay_slots = 5;   // tau_max in sampling slots
    int block_length = 100;    // L, bits
    double code_rate = 1.0;    // R
    PerMode per_mode = PerMode::kAnalyticMeanSnr;

    double mean_snr_linear() const;
};

// Quasi-static Rayleigh fading realization for one block.
struct FadingSample {
    double beta = 1.0;  // amplitude gain >= 0
    double phi = 0.0;   // phase shift, [0, 2*pi); not used by the loss decision
};

struct ChannelDraw {
    bool lost = false;
    int delay_slots = 0;        // meaningful only when !lost
    FadingSample fading;        // identity in kAnalyticMeanSnr mode
    double loss_probability = 0.0;  // Pe used for this draw
};

struct PerEval {
    double raw = 0.0;          // before clamping to [0, 1]
    double value = 0.0;        // clamped
    bool phi0_included = false;
    bool clamped = false;      // raw fell outside [0, 1]
};

// Finite-blocklength packet error probability for one block of L bits at
// rate R over SNR gamma (linear):
//
//   Pe = P0 + (ln L / L) * phi * ln R + phi0 / L
//   P0   = 1 - exp(-(e^R + 1) / gamma)
//   phi  = -(e^R / (2 gamma)) * exp(-(e^R + 1) / gamma)
//   phi0 = (e^R / gamma) * exp(-(e^R + 1) / gamma)
//          * (2 + (e^R + 1) / gamma + ln(1 / sqrt(2 - e(1 - e^{-2R}))))
//
// NB: the exponent is -(e^R + 1)/gamma by definition of this model; do not
// "correct" it to -(e^R - 1)/gamma, which produces a different curve.
// The phi0 correction is only real-valued for R < -ln(1 - 2/e)/2 ~= 0.66545
// (the sqrt argument turns negative above that); outside that domain the
// term is omitted and phi0_included reports false.
PerEval evaluate_per(double gamma, int block_length, double code_rate);

// Clamped Pe value; throws std::invalid_argument for gamma <= 0, L < 1, R <= 0.
double packet_error_probability(double gamma, int block_length, double code_rate);

// beta ~ Rayleigh(sigma), phi ~ Uniform[0, 2*pi).
FadingSample sample_fading(double sigma_scale, RngStream& rng);

// Discrete uniform on {0, ..., max_delay_slots}.
int sample_delay(const LinkConfig& cfg, RngStream& rng);

// One slot's transmission: Bernoulli loss at the mode-dependent Pe plus a
// delay draw. The delay is drawn from its own stream every call, so the loss
// pattern never perturbs the delay sequence.
ChannelDraw transmit(const LinkConfig& cfg, RngStream& loss_rng, RngStream& delay_rng);

}  // namespace ugvnet
