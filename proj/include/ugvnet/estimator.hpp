#pragma once

#include <Eigen/Dense>
#include <optional>

#include "ugvnet/vehicle.hpp"

namespace ugvnet {

struct EkfBelief {
    State mean;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
};

// Noise covariances of the filter model. q_proc acts on the disturbed inputs
// (d_v, d_omega) and enters the covariance prediction through B, so it is
// 2x2, not a full state-noise matrix.
struct EkfNoise {
    Eigen::Matrix2d q_proc = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d r_meas = Eigen::Matrix2d::Zero();
};

struct DynamicsJacobians {
    Eigen::Matrix3d a;              // df/ds
    Eigen::Matrix<double, 3, 2> b;  // df/d(disturbance)
};

struct MeasurementJacobians {
    Eigen::Matrix<double, 2, 3> c;  // dh/ds
    Eigen::Matrix2d d;              // dh/d(noise) = identity
};

// Smallest range at which the measurement Jacobian is evaluated; below it the
// bearing row blows up (1/r^2) and the update is skipped instead.
inline constexpr double kEkfRangeGuard = 1e-6;

DynamicsJacobians jacobians_dynamics(const State& s, const ControlInput& u, double dt);

// nullopt when the state is within kEkfRangeGuard of the beacon.
std::optional<MeasurementJacobians> jacobians_measurement(const State& s);

EkfBelief predict(const EkfBelief& b, const ControlInput& u, double dt, const EkfNoise& n);

enum class EkfUpdateStatus { kUpdated, kSkippedNearOrigin, kSkippedIllConditioned };

struct EkfUpdateResult {
    EkfBelief belief;
    EkfUpdateStatus status = EkfUpdateStatus::kUpdated;
};

// Measurement update with the bearing innovation wrapped to (-pi, pi].
// Skips (returning the prior unchanged) near the origin or when the
// innovation covariance is numerically singular.
EkfUpdateResult update(const EkfBelief& b, const Measurement& z, const EkfNoise& n);

}  // namespace ugvnet
