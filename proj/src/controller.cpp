#include "ugvnet/controller.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ugvnet/angles.hpp"

namespace ugvnet {

namespace {

constexpr double kPi = std::numbers::pi;

double clamp_abs(double x, double bound) {
    return std::clamp(x, -bound, bound);
}

}  // namespace

Eigen::Vector2d obstacle_position(const Obstacle& o, int slot, double dt) {
    if (o.kind == ObstacleKind::kStatic || o.speed == 0.0) {
        return {o.x, o.y};
    }
    const double travel = o.speed * slot * dt;
    return {o.x + travel * std::cos(o.heading), o.y + travel * std::sin(o.heading)};
}

std::vector<std::vector<Eigen::Vector2d>> predict_obstacles(const std::vector<Obstacle>& obstacles,
                                                            int k, int horizon, double dt) {
    std::vector<std::vector<Eigen::Vector2d>> paths(obstacles.size());
    for (std::size_t j = 0; j < obstacles.size(); ++j) {
        paths[j].resize(static_cast<std::size_t>(horizon) + 1);
        for (int i = 0; i <= horizon; ++i) {
            paths[j][static_cast<std::size_t>(i)] = obstacle_position(obstacles[j], k + i, dt);
        }
    }
    return paths;
}

RefPoint ReferenceTrajectory::at(int k, double dt) const {
    RefPoint rp;
    if (kind == Kind::kPoint) {
        rp.s_ref = goal;
        rp.u_ref = ControlInput{0.0, 0.0};
        return rp;
    }

    const double rate = 2.0 * kPi * traversals / t_sim;  // d(phase)/dt
    const double phase = rate * k * dt;

    if (kind == Kind::kCircle) {
        rp.s_ref.x = amplitude * std::cos(phase);
        rp.s_ref.y = amplitude * std::sin(phase);
        rp.s_ref.theta = phase + kPi / 2.0;  // tangent, already continuous
        rp.u_ref.v = amplitude * rate;
        rp.u_ref.omega = rate;
        return rp;
    }

    // Eight curve: x = A sin(p), y = A sin(p) cos(p).
    const double sp = std::sin(phase);
    const double cp = std::cos(phase);
    const double c2p = std::cos(2.0 * phase);
    const double s2p = std::sin(2.0 * phase);
    rp.s_ref.x = amplitude * sp;
    rp.s_ref.y = amplitude * sp * cp;

    // Tangent direction (cos p, cos 2p). atan2 branch-jumps twice per lap,
    // at phase 3*pi/4 and 5*pi/4, with zero net winding; subtracting one turn
    // between those two points makes the heading continuous and periodic.
    const double pm = phase - 2.0 * kPi * std::floor(phase / (2.0 * kPi));
    double heading = std::atan2(c2p, cp);
    if (pm >= 0.75 * kPi && pm < 1.25 * kPi) heading -= 2.0 * kPi;
    rp.s_ref.theta = heading;

    const double norm2 = cp * cp + c2p * c2p;
    rp.u_ref.v = amplitude * rate * std::sqrt(norm2);
    // d/dt atan2(c2p, cp) = rate * (-2 s2p cp + c2p sp) / (cp^2 + c2p^2)
    rp.u_ref.omega = rate * (-2.0 * s2p * cp + c2p * sp) / norm2;
    return rp;
}

std::vector<RefPoint> reference_window(const ReferenceTrajectory& traj, int k, int horizon,
                                       double dt, double current_heading) {
    std::vector<RefPoint> window(static_cast<std::size_t>(horizon) + 1);
    for (int i = 0; i <= horizon; ++i) {
        window[static_cast<std::size_t>(i)] = traj.at(k + i, dt);
    }
    const double turns =
        std::round((current_heading - window[0].s_ref.theta) / (2.0 * kPi));
    if (turns != 0.0) {
        for (auto& rp : window) rp.s_ref.theta += 2.0 * kPi * turns;
    }
    return window;
}

ControlInput PidController::step(const State& estimate, const RefPoint& ref, double dt) {
    const double dx = ref.s_ref.x - estimate.x;
    const double dy = ref.s_ref.y - estimate.y;
    const double dist = std::hypot(dx, dy);

    const double desired_heading = dist > 1e-9 ? std::atan2(dy, dx) : ref.s_ref.theta;
    const double e_omega = wrap_angle(desired_heading - estimate.theta);
    // Signed along-track distance; driving backward when the target is behind.
    const double e_v = dist * std::cos(e_omega);

    double dv = 0.0, domega = 0.0;
    if (!first_) {
        dv = (e_v - prev_ev_) / dt;
        domega = wrap_angle(e_omega - prev_eomega_) / dt;
    }
    int_v_ = clamp_abs(int_v_ + e_v * dt, 1.0);
    int_omega_ = clamp_abs(int_omega_ + e_omega * dt, 1.0);
    prev_ev_ = e_v;
    prev_eomega_ = e_omega;
    first_ = false;

    ControlInput u;
    u.v = clamp_abs(gains_.kp_v * e_v + gains_.ki_v * int_v_ + gains_.kd_v * dv, v_max_);
    u.omega = clamp_abs(gains_.kp_omega * e_omega + gains_.ki_omega * int_omega_ +
                            gains_.kd_omega * domega,
                        omega_max_);
    return u;
}

void PidController::reset() {
    int_v_ = int_omega_ = prev_ev_ = prev_eomega_ = 0.0;
    first_ = true;
}

ControlInput LqrController::step(const State& estimate, const RefPoint& ref, double dt) {
    // Linearize about the reference; hold a floor under v_ref so the
    // linearization stays controllable near standstill.
    double v_lin = ref.u_ref.v;
    if (std::abs(v_lin) < 0.05) v_lin = v_lin < 0.0 ? -0.05 : 0.05;

    const double c = std::cos(ref.s_ref.theta);
    const double sn = std::sin(ref.s_ref.theta);
    Eigen::Matrix3d a;
    a << 1.0, 0.0, -dt * v_lin * sn,
         0.0, 1.0,  dt * v_lin * c,
         0.0, 0.0,  1.0;
    Eigen::Matrix<double, 3, 2> b;
    b << dt * c, 0.0,
         dt * sn, 0.0,
         0.0, dt;

    Eigen::Matrix3d p = p_warm_;
    bool converged = false;
    for (int it = 0; it < 10000; ++it) {
        const Eigen::Matrix2d inner = weights_.r + b.transpose() * p * b;
        const Eigen::Matrix<double, 2, 3> k_gain = inner.ldlt().solve(b.transpose() * p * a);
        const Eigen::Matrix3d p_next =
            weights_.q + a.transpose() * p * (a - b * k_gain);
        const double delta = (p_next - p).cwiseAbs().maxCoeff();
        p = 0.5 * (p_next + p_next.transpose());
        if (!p.allFinite()) break;
        if (delta < 1e-9) {
            converged = true;
            break;
        }
    }

    if (converged) {
        const Eigen::Matrix2d inner = weights_.r + b.transpose() * p * b;
        gain_ = inner.ldlt().solve(b.transpose() * p * a);
        p_warm_ = p;
        have_gain_ = true;
        last_diverged_ = false;
    } else {
        // Keep the previous stabilizing gain and flag the event.
        last_diverged_ = true;
        p_warm_ = Eigen::Matrix3d::Identity();
        if (!have_gain_) return ControlInput{0.0, 0.0};
    }

    Eigen::Vector3d err(estimate.x - ref.s_ref.x, estimate.y - ref.s_ref.y,
                        wrap_angle(estimate.theta - ref.s_ref.theta));
    const Eigen::Vector2d u_delta = gain_ * err;
    ControlInput u;
    u.v = clamp_abs(ref.u_ref.v - u_delta(0), v_max_);
    u.omega = clamp_abs(ref.u_ref.omega - u_delta(1), omega_max_);
    return u;
}

MpcSolution solve_mpc(const State& initial, const std::vector<RefPoint>& refs,
                      const std::vector<std::vector<Eigen::Vector2d>>& obstacle_paths,
                      const std::vector<double>& obstacle_radii, const MpcConfig& cfg,
                      const MpcSolution* warm) {
    MpcSolver solver(cfg);
    return solver.solve(initial, refs, obstacle_paths, obstacle_radii, warm);
}

}  // namespace ugvnet
