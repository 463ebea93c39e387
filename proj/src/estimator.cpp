#include "ugvnet/estimator.hpp"

#include <cmath>

#include "ugvnet/angles.hpp"

namespace ugvnet {

namespace {

Eigen::Matrix3d symmetrize(const Eigen::Matrix3d& p) {
    return 0.5 * (p + p.transpose());
}

}  // namespace

DynamicsJacobians jacobians_dynamics(const State& s, const ControlInput& u, double dt) {
    const double c = std::cos(s.theta);
    const double sn = std::sin(s.theta);
    DynamicsJacobians j;
    j.a << 1.0, 0.0, -dt * u.v * sn,
           0.0, 1.0,  dt * u.v * c,
           0.0, 0.0,  1.0;
    j.b << dt * c, 0.0,
           dt * sn, 0.0,
           0.0, dt;
    return j;
}

std::optional<MeasurementJacobians> jacobians_measurement(const State& s) {
    const double r = std::hypot(s.x, s.y);
    if (r < kEkfRangeGuard) return std::nullopt;
    const double r2 = r * r;
    MeasurementJacobians j;
    j.c << s.x / r, s.y / r, 0.0,
           -s.y / r2, s.x / r2, 0.0;
    j.d = Eigen::Matrix2d::Identity();
    return j;
}

EkfBelief predict(const EkfBelief& b, const ControlInput& u, double dt, const EkfNoise& n) {
    const auto j = jacobians_dynamics(b.mean, u, dt);
    EkfBelief out;
    out.mean = step(b.mean, u, dt);
    out.cov = symmetrize(j.a * b.cov * j.a.transpose() + j.b * n.q_proc * j.b.transpose());
    return out;
}

EkfUpdateResult update(const EkfBelief& b, const Measurement& z, const EkfNoise& n) {
    const auto j = jacobians_measurement(b.mean);
    if (!j.has_value()) {
        return EkfUpdateResult{b, EkfUpdateStatus::kSkippedNearOrigin};
    }

    const Measurement predicted = measure(b.mean);
    Eigen::Vector2d innovation(z.r - predicted.r, wrap_angle(z.alpha - predicted.alpha));

    const Eigen::Matrix2d s_mat = j->c * b.cov * j->c.transpose() + n.r_meas;

    // 2x2 condition estimate via singular values.
    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(s_mat);
    const double smin = svd.singularValues()(1);
    const double smax = svd.singularValues()(0);
    if (!(smin > 0.0) || smax / smin > 1e12) {
        return EkfUpdateResult{b, EkfUpdateStatus::kSkippedIllConditioned};
    }

    const Eigen::Matrix<double, 3, 2> gain = b.cov * j->c.transpose() * s_mat.inverse();
    const Eigen::Vector3d correction = gain * innovation;

    EkfUpdateResult out;
    out.belief.mean = State{b.mean.x + correction(0), b.mean.y + correction(1),
                            b.mean.theta + correction(2)};
    out.belief.cov = symmetrize((Eigen::Matrix3d::Identity() - gain * j->c) * b.cov);
    out.status = EkfUpdateStatus::kUpdated;
    return out;
}

}  // namespace ugvnet
