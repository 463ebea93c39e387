#include "ugvnet/vehicle.hpp"

#include <cmath>
#include <stdexcept>

#include "ugvnet/angles.hpp"

namespace ugvnet {

namespace {

bool finite(const State& s) {
    return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.theta);
}

bool finite(const ControlInput& u) {
    return std::isfinite(u.v) && std::isfinite(u.omega);
}

}  // namespace

State step(const State& s, const ControlInput& u, double dt) {
    if (!finite(s) || !finite(u)) {
        throw std::invalid_argument("vehicle::step: non-finite state or input");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("vehicle::step: dt must be positive and finite");
    }
    return State{
        s.x + dt * u.v * std::cos(s.theta),
        s.y + dt * u.v * std::sin(s.theta),
        s.theta + dt * u.omega,
    };
}

State step_disturbed(const State& s, const ControlInput& u, double dt,
                     const ProcessNoiseParams& p, RngStream& rng) {
    ControlInput disturbed = u;
    if (p.sigma_v > 0.0) disturbed.v += rng.normal(0.0, p.sigma_v);
    if (p.sigma_omega > 0.0) disturbed.omega += rng.normal(0.0, p.sigma_omega);
    return step(s, disturbed, dt);
}

Measurement measure(const State& s) {
    const double r = std::hypot(s.x, s.y);
    if (r == 0.0) {
        return Measurement{0.0, 0.0};  // bearing undefined at the beacon
    }
    return Measurement{r, std::atan2(s.y, s.x)};
}

Measurement measure_noisy(const State& s, const MeasurementNoiseParams& m, RngStream& rng) {
    Measurement z = measure(s);
    if (m.sigma_r > 0.0) z.r += rng.normal(0.0, m.sigma_r);
    if (m.sigma_alpha > 0.0) z.alpha += rng.normal(0.0, m.sigma_alpha);
    z.r = std::max(z.r, 0.0);
    z.alpha = wrap_angle(z.alpha);
    return z;
}

}  // namespace ugvnet
