#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ugvnet/vehicle.hpp"

namespace ugvnet {

struct SolverConfig {
    int max_outer_iterations = 12;
    int max_inner_iterations = 40;
    double kkt_tolerance = 1e-6;
    double penalty_initial = 10.0;
    double penalty_growth = 10.0;
    double penalty_max = 1e8;
    // Obstacle inequalities beyond this violation (squared-distance units) are
    // treated as softened rather than driving the penalty up forever.
    double obstacle_slack = 1e-6;
    bool warm_start = true;
    int threads = 0;  // 0 = library default (parallel::num_threads)
};

struct MpcConfig {
    int horizon = 100;
    double dt = 0.01;
    Eigen::Matrix3d weight_q = Eigen::Vector3d(5.0, 5.0, 0.5).asDiagonal();
    Eigen::Matrix2d weight_r = Eigen::Vector2d(0.5, 0.05).asDiagonal();
    double v_max = 1.0;
    double omega_max = 2.443460952792061;  // 140 deg/s
    double robot_radius = 0.34;
    double safety_margin = 0.54;  // inflation used in the avoidance constraint
    SolverConfig solver;
};

enum class ObstacleKind { kStatic, kMoving };

struct Obstacle {
    ObstacleKind kind = ObstacleKind::kStatic;
    double x = 0.0, y = 0.0;  // position at slot 0
    double radius = 0.1;
    double heading = 0.0;  // moving only
    double speed = 0.0;    // moving only, m/s
};

// Constant-velocity position at a given slot.
Eigen::Vector2d obstacle_position(const Obstacle& o, int slot, double dt);

// Per-obstacle positions over slots k..k+horizon (horizon+1 entries each).
std::vector<std::vector<Eigen::Vector2d>> predict_obstacles(const std::vector<Obstacle>& obstacles,
                                                            int k, int horizon, double dt);

struct RefPoint {
    State s_ref;
    ControlInput u_ref;
};

// Reference generators for the three tasks. Curves are parameterized by
// phase = 2*pi * traversals * k * dt / t_sim, i.e. `traversals` laps over the
// run; headings are produced unwrapped (continuous in k).
struct ReferenceTrajectory {
    enum class Kind { kPoint, kCircle, kEight };

    Kind kind = Kind::kPoint;
    State goal;               // point task
    double amplitude = 5.0;   // m, curve tasks
    double t_sim = 50.0;      // s
    double traversals = 1.0;

    RefPoint at(int k, double dt) const;
};

// Window of horizon+1 reference points for slots k..k+horizon. Headings are
// shifted by a whole number of turns so the window starts within pi of
// `current_heading` (the plant heading is unwrapped; the cost must not see
// spurious 2*pi jumps).
std::vector<RefPoint> reference_window(const ReferenceTrajectory& traj, int k, int horizon,
                                       double dt, double current_heading);

struct MpcSolution {
    std::vector<State> states;           // horizon + 1
    std::vector<ControlInput> controls;  // horizon + 1
    double cost = 0.0;                   // tracking objective at the solution
    int iterations = 0;                  // total inner iterations
    double kkt_residual = 0.0;
    double constraint_violation_max = 0.0;  // meters past an inflated radius
    bool converged = false;
    bool softened = false;  // some obstacle constraint could not be met
};

// Direct multiple-shooting tracking MPC: states and controls are decision
// variables, shooting dynamics are equality constraints handled by an
// augmented-Lagrangian outer loop, the inner step is damped Gauss-Newton with
// box projection on the inputs, and circular obstacles enter as inequality
// multipliers on squared distance.
class MpcSolver {
public:
    explicit MpcSolver(MpcConfig cfg);

    // refs must have horizon+1 entries; obstacle_paths is indexed
    // [obstacle][step] with horizon+1 steps; radii are the physical obstacle
    // radii (inflation by cfg.safety_margin happens inside).
    MpcSolution solve(const State& initial, const std::vector<RefPoint>& refs,
                      const std::vector<std::vector<Eigen::Vector2d>>& obstacle_paths,
                      const std::vector<double>& obstacle_radii,
                      const MpcSolution* warm = nullptr);

    const MpcConfig& config() const { return cfg_; }

private:
    MpcConfig cfg_;
};

MpcSolution solve_mpc(const State& initial, const std::vector<RefPoint>& refs,
                      const std::vector<std::vector<Eigen::Vector2d>>& obstacle_paths,
                      const std::vector<double>& obstacle_radii, const MpcConfig& cfg,
                      const MpcSolution* warm = nullptr);

struct PidGains {
    double kp_v = 1.2, ki_v = 0.0, kd_v = 0.05;
    double kp_omega = 2.8, ki_omega = 0.0, kd_omega = 0.05;
};

// Distance/heading PID toward the current reference point; no obstacle
// handling by design.
class PidController {
public:
    PidController(PidGains gains, double v_max, double omega_max)
        : gains_(gains), v_max_(v_max), omega_max_(omega_max) {}

    ControlInput step(const State& estimate, const RefPoint& ref, double dt);
    void reset();

private:
    PidGains gains_;
    double v_max_, omega_max_;
    double int_v_ = 0.0, int_omega_ = 0.0;
    double prev_ev_ = 0.0, prev_eomega_ = 0.0;
    bool first_ = true;
};

struct LqrWeights {
    Eigen::Matrix3d q = Eigen::Vector3d(10.0, 10.0, 1.0).asDiagonal();
    Eigen::Matrix2d r = Eigen::Vector2d(1.0, 0.2).asDiagonal();
};

// Reference-tracking LQR about the current reference point: discrete Riccati
// iteration on the error dynamics, u = u_ref - K (s - s_ref), saturated.
// No obstacle handling by design.
class LqrController {
public:
    LqrController(LqrWeights weights, double v_max, double omega_max)
        : weights_(weights), v_max_(v_max), omega_max_(omega_max) {}

    ControlInput step(const State& estimate, const RefPoint& ref, double dt);

    bool last_riccati_diverged() const { return last_diverged_; }

private:
    LqrWeights weights_;
    double v_max_, omega_max_;
    Eigen::Matrix3d p_warm_ = Eigen::Matrix3d::Identity();
    Eigen::Matrix<double, 2, 3> gain_ = Eigen::Matrix<double, 2, 3>::Zero();
    bool have_gain_ = false;
    bool last_diverged_ = false;
};

}  // namespace ugvnet
