#include "ugvnet/sim.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ugvnet/angles.hpp"
#include "ugvnet/estimator.hpp"
#include "ugvnet/rng.hpp"

namespace ugvnet {

namespace {

ReferenceTrajectory make_trajectory(const ScenarioConfig& sc) {
    ReferenceTrajectory traj;
    traj.kind = sc.task;
    traj.goal = sc.goal_state;
    traj.amplitude = sc.amplitude;
    traj.t_sim = sc.t_sim;
    traj.traversals = sc.traversals;
    return traj;
}

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw std::invalid_argument(field + ": " + what);
}

void validate_link(const LinkConfig& link, const std::string& field) {
    require(std::isfinite(link.snr_db), field + ".snr_db", "must be finite");
    require(link.max_delay_slots >= 0, field + ".max_delay_slots", "must be >= 0");
    require(link.block_length >= 1, field + ".block_length", "must be >= 1");
    require(link.code_rate > 0.0, field + ".code_rate", "must be > 0");
}

double min_clearance_at(const ScenarioConfig& sc, const State& s, int k) {
    if (sc.obstacles.empty()) return std::numeric_limits<double>::infinity();
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& o : sc.obstacles) {
        const Eigen::Vector2d pos = obstacle_position(o, k, sc.dt);
        const double dist = std::hypot(s.x - pos(0), s.y - pos(1));
        worst = std::min(worst, dist - o.radius - sc.robot_radius);
    }
    return worst;
}

ControlSequence hold_sequence(int anchor, const ControlInput& u, const State& from, int horizon,
                              double dt) {
    ControlSequence seq;
    seq.anchor_slot = anchor;
    seq.controls.assign(static_cast<std::size_t>(horizon) + 1, u);
    seq.states.resize(static_cast<std::size_t>(horizon) + 1);
    seq.states[0] = from;
    for (int i = 0; i < horizon; ++i) {
        seq.states[static_cast<std::size_t>(i) + 1] =
            step(seq.states[static_cast<std::size_t>(i)], u, dt);
    }
    return seq;
}

}  // namespace

int num_slots(const ScenarioConfig& sc) {
    return static_cast<int>(std::llround(sc.t_sim / sc.dt));
}

void validate(const ScenarioConfig& sc) {
    require(sc.dt > 0.0 && std::isfinite(sc.dt), "scenario.dt_s", "must be > 0");
    require(sc.t_sim > 0.0 && std::isfinite(sc.t_sim), "scenario.t_sim_s", "must be > 0");
    const double slots = sc.t_sim / sc.dt;
    require(std::abs(slots - std::llround(slots)) < 1e-6 && std::llround(slots) >= 1,
            "scenario.t_sim_s", "must be an integral number of slots");
    require(sc.process_noise.sigma_v >= 0.0, "scenario.process_noise.sigma_v", "must be >= 0");
    require(sc.process_noise.sigma_omega >= 0.0, "scenario.process_noise.sigma_omega",
            "must be >= 0");
    require(sc.measurement_noise.sigma_r >= 0.0, "scenario.measurement_noise.sigma_r",
            "must be >= 0");
    require(sc.measurement_noise.sigma_alpha >= 0.0, "scenario.measurement_noise.sigma_alpha",
            "must be >= 0");
    validate_link(sc.sc_link, "scenario.sc_link");
    validate_link(sc.ca_link, "scenario.ca_link");
    require(sc.robot_radius > 0.0, "scenario.robot_radius_m", "must be > 0");
    for (std::size_t j = 0; j < sc.obstacles.size(); ++j) {
        const std::string field = "scenario.obstacles[" + std::to_string(j) + "]";
        require(sc.obstacles[j].radius > 0.0, field + ".radius", "must be > 0");
        require(sc.obstacles[j].speed >= 0.0, field + ".speed", "must be >= 0");
    }
    require(sc.mpc.horizon >= 1, "scenario.mpc.horizon", "must be >= 1");
    require(sc.mpc.v_max > 0.0, "scenario.mpc.v_max", "must be > 0");
    require(sc.mpc.omega_max > 0.0, "scenario.mpc.omega_max", "must be > 0");
    require(sc.mpc.safety_margin >= sc.robot_radius, "scenario.mpc.safety_margin_m",
            "must be >= the robot radius");
    require(sc.mpc.solver.kkt_tolerance > 0.0, "scenario.mpc.solver.kkt_tolerance",
            "must be > 0");
    require(sc.baseline_hold_horizon >= 1, "scenario.baseline_hold_horizon", "must be >= 1");
    require(sc.processing_delay_slots >= 0, "scenario.processing_delay_slots", "must be >= 0");
    if (sc.task == ReferenceTrajectory::Kind::kCircle ||
        sc.task == ReferenceTrajectory::Kind::kEight) {
        require(sc.amplitude > 0.0, "scenario.amplitude_m", "must be > 0");
        require(sc.traversals > 0.0, "scenario.traversals", "must be > 0");
    }
}

RunResult run(const ScenarioConfig& sc) {
    validate(sc);

    const int slots = num_slots(sc);
    const double dt = sc.dt;
    RngStreams streams = make_rng_streams(sc.seed);
    const ReferenceTrajectory traj = make_trajectory(sc);

    MpcConfig mpc_cfg = sc.mpc;
    mpc_cfg.dt = dt;
    mpc_cfg.robot_radius = sc.robot_radius;

    const int controller_horizon = sc.controller == ControllerKind::kMpc
                                       ? mpc_cfg.horizon
                                       : sc.baseline_hold_horizon;
    const int buffer_capacity = sc.sc_link.max_delay_slots + sc.ca_link.max_delay_slots +
                                controller_horizon + sc.processing_delay_slots + 8;

    std::vector<std::vector<Packet<Measurement>>> sc_inflight(
        static_cast<std::size_t>(slots) + sc.sc_link.max_delay_slots + 2);
    std::vector<std::vector<Packet<ControlSequence>>> ca_inflight(
        static_cast<std::size_t>(slots) + sc.ca_link.max_delay_slots +
        sc.processing_delay_slots + 2);

    SmartReceiver<Measurement> sc_rx;
    HistoryBuffer sc_buffer(buffer_capacity);
    Actuator actuator(buffer_capacity);

    EkfNoise noise;
    noise.q_proc = Eigen::Vector2d(sc.process_noise.sigma_v * sc.process_noise.sigma_v,
                                   sc.process_noise.sigma_omega * sc.process_noise.sigma_omega)
                       .asDiagonal();
    noise.r_meas =
        Eigen::Vector2d(sc.measurement_noise.sigma_r * sc.measurement_noise.sigma_r,
                        sc.measurement_noise.sigma_alpha * sc.measurement_noise.sigma_alpha)
            .asDiagonal();
    EkfBelief belief;
    belief.mean = sc.initial_state;
    belief.cov = sc.ekf.initial_cov_diag.asDiagonal();

    std::vector<State> est_history(static_cast<std::size_t>(slots));

    MpcSolver solver(mpc_cfg);
    MpcSolution warm;
    bool have_warm = false;
    PidController pid(sc.pid, mpc_cfg.v_max, mpc_cfg.omega_max);
    LqrController lqr(sc.lqr, mpc_cfg.v_max, mpc_cfg.omega_max);

    std::vector<double> radii(sc.obstacles.size());
    for (std::size_t j = 0; j < sc.obstacles.size(); ++j) radii[j] = sc.obstacles[j].radius;

    State s = sc.initial_state;
    ControlInput u_emit_prev{0.0, 0.0};
    ControlInput u_applied_prev{0.0, 0.0};
    std::uint64_t seq_counter = 0;

    RunResult result;
    result.trace.reserve(static_cast<std::size_t>(slots));

    for (int k = 0; k < slots; ++k) {
        TraceRow row;
        row.k = k;
        row.t = k * dt;
        row.x = s.x;
        row.y = s.y;
        row.theta = s.theta;
        const RefPoint ref = traj.at(k, dt);
        row.ref_x = ref.s_ref.x;
        row.ref_y = ref.s_ref.y;
        row.ref_theta = ref.s_ref.theta;

        // Sensor sample and sensor-to-controller transmission.
        const Measurement z_raw = measure_noisy(s, sc.measurement_noise, streams.measurement);
        row.z_r = z_raw.r;
        row.z_alpha = z_raw.alpha;
        const ChannelDraw sc_draw = transmit(sc.sc_link, streams.sc_loss, streams.sc_delay);
        row.sc_lost = sc_draw.lost;
        row.sc_delay = sc_draw.lost ? -1 : sc_draw.delay_slots;
        if (!sc_draw.lost) {
            sc_inflight[static_cast<std::size_t>(k + sc_draw.delay_slots)].push_back(
                Packet<Measurement>{z_raw, k, seq_counter++});
        }

        // Smart receiver and compensation.
        const auto rx_res = sc_rx.step(sc_inflight[static_cast<std::size_t>(k)], k);
        row.tau_sc = rx_res.tau;
        std::optional<Measurement> z_comp;
        if (sc_rx.held().has_value()) {
            const int tau = rx_res.tau;
            if (tau == 0) {
                z_comp = sc_rx.held()->payload;
            } else if (k - tau >= 0) {
                z_comp = compensate_measurement(sc_rx.held()->payload, tau, sc_buffer,
                                                est_history[static_cast<std::size_t>(k - tau)],
                                                k, dt);
            }
        }

        // EKF predict with the commanded-input estimate, then update.
        if (k > 0) {
            const ControlInput u_hat = sc.ekf.input_source == EkfInputSource::kControllerEmission
                                           ? u_emit_prev
                                           : u_applied_prev;
            belief = predict(belief, u_hat, dt, noise);
        }
        row.zc_r = std::numeric_limits<double>::quiet_NaN();
        row.zc_alpha = std::numeric_limits<double>::quiet_NaN();
        row.ekf_updated = false;
        if (z_comp.has_value()) {
            row.zc_r = z_comp->r;
            row.zc_alpha = z_comp->alpha;
            const auto up = update(belief, *z_comp, noise);
            belief = up.belief;
            row.ekf_updated = up.status == EkfUpdateStatus::kUpdated;
        }
        est_history[static_cast<std::size_t>(k)] = belief.mean;
        row.est_x = belief.mean.x;
        row.est_y = belief.mean.y;
        row.est_theta = belief.mean.theta;

        // Controller.
        ControlSequence seq;
        double solve_ms = 0.0;
        if (sc.controller == ControllerKind::kMpc) {
            const auto refs =
                reference_window(traj, k, mpc_cfg.horizon, dt, belief.mean.theta);
            const auto obs_paths = predict_obstacles(sc.obstacles, k, mpc_cfg.horizon, dt);
            const auto t0 = std::chrono::steady_clock::now();
            const MpcSolution sol =
                solver.solve(belief.mean, refs, obs_paths, radii, have_warm ? &warm : nullptr);
            const auto t1 = std::chrono::steady_clock::now();
            solve_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            warm = sol;
            have_warm = true;
            row.solver_iterations = sol.iterations;
            row.solver_kkt = sol.kkt_residual;
            row.solver_cost = sol.cost;
            seq.anchor_slot = k;
            seq.states = sol.states;
            seq.controls = sol.controls;
        } else {
            const RefPoint ref_now = traj.at(k, dt);
            const auto t0 = std::chrono::steady_clock::now();
            const ControlInput u = sc.controller == ControllerKind::kPid
                                       ? pid.step(belief.mean, ref_now, dt)
                                       : lqr.step(belief.mean, ref_now, dt);
            const auto t1 = std::chrono::steady_clock::now();
            solve_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            seq = hold_sequence(k, u, belief.mean, sc.baseline_hold_horizon, dt);
        }
        row.solve_time_ms = solve_ms;
        sc_buffer.store(seq);
        u_emit_prev = seq.controls[0];

        // Controller-to-actuator transmission.
        const ChannelDraw ca_draw = transmit(sc.ca_link, streams.ca_loss, streams.ca_delay);
        row.ca_lost = ca_draw.lost;
        row.ca_delay = ca_draw.lost ? -1 : ca_draw.delay_slots;
        if (!ca_draw.lost) {
            int processing = sc.processing_delay_slots;
            if (sc.processing_delay_measured) {
                processing += static_cast<int>(std::ceil(solve_ms / (dt * 1000.0)));
            }
            const std::size_t arrival =
                static_cast<std::size_t>(k + processing + ca_draw.delay_slots);
            if (arrival >= ca_inflight.size()) ca_inflight.resize(arrival + 1);
            ca_inflight[arrival].push_back(Packet<ControlSequence>{seq, k, seq_counter++});
        }

        // Actuator.
        const ActuatorOutput act = actuator.step(ca_inflight[static_cast<std::size_t>(k)], k);
        row.tau_ca = act.tau_ca;
        row.starved = act.starved;
        row.v_cmd = act.u.v;
        row.omega_cmd = act.u.omega;
        u_applied_prev = act.u;

        row.min_clearance = min_clearance_at(sc, s, k);
        result.trace.push_back(row);

        // Plant and environment advance.
        s = step_disturbed(s, act.u, dt, sc.process_noise, streams.process);
    }

    result.metrics = compute_metrics(result.trace, sc);
    double sum_ms = 0.0, max_ms = 0.0;
    for (const auto& r : result.trace) {
        sum_ms += r.solve_time_ms;
        max_ms = std::max(max_ms, r.solve_time_ms);
    }
    result.metrics.solver_time_ms_mean = result.trace.empty() ? 0.0 : sum_ms / result.trace.size();
    result.metrics.solver_time_ms_max = max_ms;
    return result;
}

Metrics compute_metrics(const std::vector<TraceRow>& trace, const ScenarioConfig& sc) {
    if (trace.empty()) throw std::invalid_argument("compute_metrics: empty trace");
    (void)sc;

    Metrics m;
    double sum_pos = 0.0, sum_heading = 0.0;
    for (const auto& r : trace) {
        sum_pos += std::hypot(r.x - r.ref_x, r.y - r.ref_y);
        sum_heading += std::abs(wrap_angle(r.theta - r.ref_theta));
        if (r.min_clearance < 0.0) ++m.collision_count;
        if (r.starved) ++m.starvation_events;
        if (!r.ekf_updated) ++m.ekf_updates_skipped;
    }
    const double n = static_cast<double>(trace.size());
    m.avg_euclidean_error_cm = 100.0 * sum_pos / n;
    m.avg_step_heading_error_deg = rad_to_deg(sum_heading / n);

    const std::size_t window = std::max<std::size_t>(trace.size() / 10, 1);
    double ss_pos = 0.0, ss_heading = 0.0;
    for (std::size_t i = trace.size() - window; i < trace.size(); ++i) {
        ss_pos += std::hypot(trace[i].x - trace[i].ref_x, trace[i].y - trace[i].ref_y);
        ss_heading += std::abs(wrap_angle(trace[i].theta - trace[i].ref_theta));
    }
    m.steady_state_position_error_cm = 100.0 * ss_pos / static_cast<double>(window);
    m.steady_state_heading_error_deg = rad_to_deg(ss_heading / static_cast<double>(window));
    return m;
}

}  // namespace ugvnet
