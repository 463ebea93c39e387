#pragma once

#include "ugvnet/rng.hpp"

namespace ugvnet {

// Unicycle pose. Heading is kept unwrapped; wrap only when forming errors.
struct State {
    double x = 0.0;      // m
    double y = 0.0;      // m
    double theta = 0.0;  // rad
};

struct ControlInput {
    double v = 0.0;      // m/s
    double omega = 0.0;  // rad/s
};

struct ProcessNoiseParams {
    double sigma_v = 0.0;      // m/s
    double sigma_omega = 0.0;  // rad/s
};

// Range-bearing observation taken from a beacon at the origin.
struct Measurement {
    double r = 0.0;      // m, >= 0
    double alpha = 0.0;  // rad in (-pi, pi]
};

struct MeasurementNoiseParams {
    double sigma_r = 0.0;      // m
    double sigma_alpha = 0.0;  // rad
};

// One forward-Euler step of the unicycle kinematics.
// Throws std::invalid_argument on non-finite input or dt <= 0.
State step(const State& s, const ControlInput& u, double dt);

// Euler step under additive Gaussian input disturbance d_v, d_omega.
State step_disturbed(const State& s, const ControlInput& u, double dt,
                     const ProcessNoiseParams& p, RngStream& rng);

// Noiseless range-bearing model h(s). At the origin returns (0, 0).
Measurement measure(const State& s);

// h(s) plus independent Gaussian noise; range clamped at 0, bearing rewrapped.
Measurement measure_noisy(const State& s, const MeasurementNoiseParams& m, RngStream& rng);

}  // namespace ugvnet
