#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ugvnet/channel.hpp"
#include "ugvnet/controller.hpp"
#include "ugvnet/link.hpp"
#include "ugvnet/vehicle.hpp"

namespace ugvnet {

enum class ControllerKind { kMpc, kPid, kLqr };

enum class EkfInputSource {
    kControllerEmission,  // the controller's own last emitted head control
    kActuatorApplied,     // the input actually applied (needs an uplink)
};

struct EkfSettings {
    Eigen::Vector3d initial_cov_diag = Eigen::Vector3d(1e-4, 1e-4, 1e-4);
    EkfInputSource input_source = EkfInputSource::kControllerEmission;
};

struct ScenarioConfig {
    std::string name = "scenario";
    ReferenceTrajectory::Kind task = ReferenceTrajectory::Kind::kPoint;
    double t_sim = 20.0;  // s
    double dt = 0.01;     // s
    State initial_state;
    State goal_state{1.5, 1.5, 0.0};  // point task
    double amplitude = 5.0;           // curve tasks
    double traversals = 1.0;

    ProcessNoiseParams process_noise{0.005, 0.0349};
    MeasurementNoiseParams measurement_noise{0.1, 0.0349};

    LinkConfig sc_link{15.0, 5, 100, 1.0, PerMode::kAnalyticMeanSnr};
    LinkConfig ca_link{20.0, 1, 100, 1.0, PerMode::kAnalyticMeanSnr};

    double robot_radius = 0.34;
    std::vector<Obstacle> obstacles;

    ControllerKind controller = ControllerKind::kMpc;
    MpcConfig mpc;
    PidGains pid;
    LqrWeights lqr;
    // Baselines emit a short constant-hold sequence so the packetized actuator
    // degrades to zero-order hold under delay/loss.
    int baseline_hold_horizon = 10;

    int processing_delay_slots = 0;
    // When true, the realized solve wall-clock is rounded up to slots and used
    // as the processing delay instead (not reproducible run to run).
    bool processing_delay_measured = false;

    EkfSettings ekf;
    std::uint64_t seed = 1;
};

int num_slots(const ScenarioConfig& sc);

// Throws std::invalid_argument naming the offending field.
void validate(const ScenarioConfig& sc);

struct TraceRow {
    int k = 0;
    double t = 0.0;
    double x = 0.0, y = 0.0, theta = 0.0;
    double ref_x = 0.0, ref_y = 0.0, ref_theta = 0.0;
    double z_r = 0.0, z_alpha = 0.0;    // raw sensor output this slot
    double zc_r = 0.0, zc_alpha = 0.0;  // compensated measurement (NaN if none)
    double est_x = 0.0, est_y = 0.0, est_theta = 0.0;
    double v_cmd = 0.0, omega_cmd = 0.0;  // applied input
    int tau_sc = 0, tau_ca = 0;
    bool sc_lost = false, ca_lost = false;
    int sc_delay = -1, ca_delay = -1;  // realized delay of this slot's send, -1 if lost
    int solver_iterations = 0;
    double solver_kkt = 0.0;
    double solver_cost = 0.0;
    double min_clearance = 0.0;  // surface-to-surface, +inf without obstacles
    bool starved = false;
    bool ekf_updated = false;
    double solve_time_ms = 0.0;  // timing only; never serialized to trace.csv
};

struct Metrics {
    double avg_euclidean_error_cm = 0.0;
    double avg_step_heading_error_deg = 0.0;
    double steady_state_position_error_cm = 0.0;  // mean over the final 10% of slots
    double steady_state_heading_error_deg = 0.0;
    int collision_count = 0;  // slots with negative physical clearance
    int starvation_events = 0;
    int ekf_updates_skipped = 0;
    // Timing block; not recomputable from a serialized trace.
    double solver_time_ms_mean = 0.0;
    double solver_time_ms_max = 0.0;
};

struct RunResult {
    Metrics metrics;
    std::vector<TraceRow> trace;
};

// Execute the full closed loop for one scenario. Deterministic for a fixed
// seed (unless processing_delay_measured is set).
RunResult run(const ScenarioConfig& sc);

// Deterministic metrics recomputed from a trace; timing fields are left zero.
Metrics compute_metrics(const std::vector<TraceRow>& trace, const ScenarioConfig& sc);

}  // namespace ugvnet
