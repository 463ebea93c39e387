#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ugvnet/controller.hpp"
#include "ugvnet/parallel.hpp"

namespace ugvnet {

namespace {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

Vec3 dynamics(const Vec3& s, const Vec2& u, double dt) {
    return Vec3(s(0) + dt * u(0) * std::cos(s(2)),
                s(1) + dt * u(0) * std::sin(s(2)),
                s(2) + dt * u(1));
}

// Decision layout: block i = (u_i, s_{i+1}) for i = 0..N-1; s_0 is data and
// u_N only appears in the (decoupled) terminal input cost, so it is set by
// clamping u_ref_N. The Gauss-Newton normal matrix is block tridiagonal with
// 5x5 blocks; one shooting constraint couples neighbouring blocks only.
struct Workspace {
    std::vector<Vec3> s;       // N+1 states, s[0] fixed
    std::vector<Vec2> u;       // N+1 inputs
    std::vector<Vec3> lambda;  // N dynamics multipliers
    std::vector<double> nu;    // n_obs * N obstacle multipliers (step 1..N)

    std::vector<Mat3> a;       // per-step dynamics jacobians
    std::vector<Mat32> b;
    std::vector<Vec3> c;       // shooting defects
    std::vector<Vec3> c_hat;   // defects shifted by lambda/mu

    std::vector<Mat5> diag;    // H block diagonal
    std::vector<Mat5> upper;   // H super-diagonal (N-1 used)
    std::vector<Vec5> rhs;     // -J^T r
    std::vector<Vec5> delta;

    std::vector<Mat5> chol;    // block-Thomas factor storage
    std::vector<Vec5> fwd;

    std::vector<double> merit_terms;  // per-block, summed serially
};

struct Problem {
    int n = 0;
    double dt = 0.0;
    Vec3 s0;
    std::vector<Vec3> s_ref;
    std::vector<Vec2> u_ref;
    const std::vector<std::vector<Vec2>>* obs_paths = nullptr;
    std::vector<double> r2_inflated;  // squared inflated radii
    Eigen::Matrix3d wq;
    Eigen::Matrix2d wr;
    double v_max = 0.0, omega_max = 0.0;
};

double clamp_abs(double x, double bound) {
    return std::clamp(x, -bound, bound);
}

Vec2 clamp_input(const Vec2& u, const Problem& p) {
    return Vec2(clamp_abs(u(0), p.v_max), clamp_abs(u(1), p.omega_max));
}

// Augmented-Lagrangian merit (up to terms constant in the decision variables).
double merit(const Problem& p, Workspace& w, double mu, bool use_par, int nthreads) {
    const int n = p.n;
    const double half_mu = 0.5 * mu;
    const std::size_t n_obs = p.r2_inflated.size();

#pragma omp parallel for schedule(static) if (use_par) num_threads(nthreads)
    for (int i = 0; i < n; ++i) {
        const Vec3 se = w.s[i + 1] - p.s_ref[i + 1];
        const Vec2 ue = w.u[i] - p.u_ref[i];
        double t = se.dot(p.wq * se) + ue.dot(p.wr * ue);

        const Vec3 defect =
            w.s[i + 1] - dynamics(w.s[i], w.u[i], p.dt) + w.lambda[i] / mu;
        t += half_mu * defect.squaredNorm();

        for (std::size_t j = 0; j < n_obs; ++j) {
            const Vec2 d = w.s[i + 1].head<2>() - (*p.obs_paths)[j][i + 1];
            const double g = p.r2_inflated[j] - d.squaredNorm();
            const double q = g + w.nu[j * n + i] / mu;
            if (q > 0.0) t += half_mu * q * q;
        }
        w.merit_terms[i] = t;
    }

    double total = 0.0;
    for (int i = 0; i < n; ++i) total += w.merit_terms[i];  // fixed-order sum
    return total;
}

// Linearize everything at the current iterate and build H, rhs.
void assemble(const Problem& p, Workspace& w, double mu, double damping, bool use_par,
              int nthreads) {
    const int n = p.n;
    const double half_mu = 0.5 * mu;
    const std::size_t n_obs = p.r2_inflated.size();

#pragma omp parallel for schedule(static) if (use_par) num_threads(nthreads)
    for (int i = 0; i < n; ++i) {
        const Vec3& si = w.s[i];
        const Vec2& ui = w.u[i];
        const double cth = std::cos(si(2));
        const double sth = std::sin(si(2));
        Mat3 a = Mat3::Identity();
        a(0, 2) = -p.dt * ui(0) * sth;
        a(1, 2) = p.dt * ui(0) * cth;
        Mat32 b = Mat32::Zero();
        b(0, 0) = p.dt * cth;
        b(1, 0) = p.dt * sth;
        b(2, 1) = p.dt;
        w.a[i] = a;
        w.b[i] = b;
        w.c[i] = w.s[i + 1] - dynamics(si, ui, p.dt);
        w.c_hat[i] = w.c[i] + w.lambda[i] / mu;
    }

#pragma omp parallel for schedule(static) if (use_par) num_threads(nthreads)
    for (int i = 0; i < n; ++i) {
        Mat5 d = Mat5::Zero();
        Vec5 r = Vec5::Zero();

        // tracking cost
        d.topLeftCorner<2, 2>() = p.wr;
        d.bottomRightCorner<3, 3>() = p.wq;
        r.head<2>() = -(p.wr * (w.u[i] - p.u_ref[i]));
        r.tail<3>() = -(p.wq * (w.s[i + 1] - p.s_ref[i + 1]));

        // defect c_i through (u_i, s_{i+1})
        const Mat32& b = w.b[i];
        d.topLeftCorner<2, 2>() += half_mu * b.transpose() * b;
        d.topRightCorner<2, 3>() -= half_mu * b.transpose();
        d.bottomLeftCorner<3, 2>() -= half_mu * b;
        d.bottomRightCorner<3, 3>() += half_mu * Mat3::Identity();
        r.head<2>() += half_mu * b.transpose() * w.c_hat[i];
        r.tail<3>() -= half_mu * w.c_hat[i];

        // defect c_{i+1} enters through s_{i+1}
        if (i + 1 < n) {
            const Mat3& an = w.a[i + 1];
            d.bottomRightCorner<3, 3>() += half_mu * an.transpose() * an;
            r.tail<3>() += half_mu * an.transpose() * w.c_hat[i + 1];

            Mat5 up = Mat5::Zero();
            up.bottomLeftCorner<3, 2>() = half_mu * an.transpose() * w.b[i + 1];
            up.bottomRightCorner<3, 3>() = -half_mu * an.transpose();
            w.upper[i] = up;
        }

        // active obstacle terms at step i+1
        for (std::size_t j = 0; j < n_obs; ++j) {
            const Vec2 diff = w.s[i + 1].head<2>() - (*p.obs_paths)[j][i + 1];
            const double g = p.r2_inflated[j] - diff.squaredNorm();
            const double q = g + w.nu[j * n + i] / mu;
            if (q > 0.0) {
                const Vec2 grad = -2.0 * diff;
                d.block<2, 2>(2, 2) += half_mu * grad * grad.transpose();
                r.segment<2>(2) -= half_mu * q * grad;
            }
        }

        d.diagonal().array() += damping;
        w.diag[i] = d;
        w.rhs[i] = r;
    }
}

// Block-Thomas solve of the tridiagonal normal equations.
bool solve_block_tridiagonal(const Problem& p, Workspace& w) {
    const int n = p.n;
    Mat5 m = w.diag[0];
    Eigen::LLT<Mat5> llt(m);
    if (llt.info() != Eigen::Success) return false;
    w.chol[0] = llt.matrixL();
    w.fwd[0] = w.rhs[0];

    for (int i = 1; i < n; ++i) {
        const Mat5 lprev = w.chol[i - 1];
        const auto lview = lprev.triangularView<Eigen::Lower>();
        // G = U_{i-1}^T M_{i-1}^{-1} via two triangular solves
        Mat5 tmp = lview.solve(w.upper[i - 1]);             // L^{-1} U
        Mat5 g_t = lview.transpose().solve(tmp);            // M^{-1} U
        w.diag[i] -= g_t.transpose() * w.upper[i - 1];      // D - U^T M^{-1} U
        w.rhs[i] -= g_t.transpose() * w.fwd[i - 1];

        Eigen::LLT<Mat5> llt_i(w.diag[i]);
        if (llt_i.info() != Eigen::Success) return false;
        w.chol[i] = llt_i.matrixL();
        w.fwd[i] = w.rhs[i];
    }

    for (int i = n - 1; i >= 0; --i) {
        Vec5 rhs = w.fwd[i];
        if (i + 1 < n) rhs -= w.upper[i] * w.delta[i + 1];
        const auto lview = w.chol[i].triangularView<Eigen::Lower>();
        w.delta[i] = lview.transpose().solve(lview.solve(rhs));
    }
    return true;
}

// Infinity norm of the gradient projected onto the feasible box.
double projected_gradient_norm(const Problem& p, const Workspace& w) {
    double worst = 0.0;
    for (int i = 0; i < p.n; ++i) {
        const Vec5 grad = -2.0 * w.rhs[i];  // rhs = -J^T r, grad = 2 J^T r
        for (int c = 0; c < 5; ++c) {
            double g = grad(c);
            if (c < 2) {
                const double bound = c == 0 ? p.v_max : p.omega_max;
                const double x = w.u[i](c);
                if (x <= -bound && g > 0.0) g = 0.0;
                if (x >= bound && g < 0.0) g = 0.0;
            }
            worst = std::max(worst, std::abs(g));
        }
    }
    return worst;
}

double max_defect(const Problem& p, const Workspace& w) {
    double worst = 0.0;
    for (int i = 0; i < p.n; ++i) {
        worst = std::max(worst,
                         (w.s[i + 1] - dynamics(w.s[i], w.u[i], p.dt)).cwiseAbs().maxCoeff());
    }
    return worst;
}

// Worst obstacle violation in meters past an inflated radius.
double max_violation_m(const Problem& p, const Workspace& w) {
    double worst = 0.0;
    const std::size_t n_obs = p.r2_inflated.size();
    for (int i = 1; i <= p.n; ++i) {
        for (std::size_t j = 0; j < n_obs; ++j) {
            const double dist = (w.s[i].head<2>() - (*p.obs_paths)[j][i]).norm();
            worst = std::max(worst, std::sqrt(p.r2_inflated[j]) - dist);
        }
    }
    return std::max(worst, 0.0);
}

double tracking_cost(const Problem& p, const Workspace& w) {
    double total = 0.0;
    const Vec3 se0 = w.s[0] - p.s_ref[0];
    total += se0.dot(p.wq * se0);
    for (int i = 0; i < p.n; ++i) {
        const Vec3 se = w.s[i + 1] - p.s_ref[i + 1];
        const Vec2 ue = w.u[i] - p.u_ref[i];
        total += se.dot(p.wq * se) + ue.dot(p.wr * ue);
    }
    const Vec2 uen = w.u[p.n] - p.u_ref[p.n];
    total += uen.dot(p.wr * uen);
    return total;
}

}  // namespace

MpcSolver::MpcSolver(MpcConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.horizon < 1) throw std::invalid_argument("MpcSolver: horizon must be >= 1");
    if (!(cfg_.v_max > 0.0) || !(cfg_.omega_max > 0.0)) {
        throw std::invalid_argument("MpcSolver: input bounds must be positive");
    }
}

MpcSolution MpcSolver::solve(const State& initial, const std::vector<RefPoint>& refs,
                             const std::vector<std::vector<Eigen::Vector2d>>& obstacle_paths,
                             const std::vector<double>& obstacle_radii,
                             const MpcSolution* warm) {
    const int n = cfg_.horizon;
    if (static_cast<int>(refs.size()) != n + 1) {
        throw std::invalid_argument("MpcSolver: refs must have horizon+1 entries");
    }
    if (obstacle_paths.size() != obstacle_radii.size()) {
        throw std::invalid_argument("MpcSolver: obstacle paths/radii size mismatch");
    }
    for (const auto& path : obstacle_paths) {
        if (static_cast<int>(path.size()) != n + 1) {
            throw std::invalid_argument("MpcSolver: obstacle path must have horizon+1 entries");
        }
    }
    if (!std::isfinite(initial.x) || !std::isfinite(initial.y) || !std::isfinite(initial.theta)) {
        throw std::invalid_argument("MpcSolver: non-finite initial state");
    }

    Problem p;
    p.n = n;
    p.dt = cfg_.dt;
    p.s0 = Vec3(initial.x, initial.y, initial.theta);
    p.s_ref.resize(n + 1);
    p.u_ref.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        p.s_ref[i] = Vec3(refs[i].s_ref.x, refs[i].s_ref.y, refs[i].s_ref.theta);
        p.u_ref[i] = Vec2(refs[i].u_ref.v, refs[i].u_ref.omega);
    }
    p.obs_paths = &obstacle_paths;
    p.r2_inflated.resize(obstacle_radii.size());
    for (std::size_t j = 0; j < obstacle_radii.size(); ++j) {
        const double r = cfg_.safety_margin + obstacle_radii[j];
        p.r2_inflated[j] = r * r;
    }
    p.wq = cfg_.weight_q;
    p.wr = cfg_.weight_r;
    p.v_max = cfg_.v_max;
    p.omega_max = cfg_.omega_max;

    const int threads =
        cfg_.solver.threads > 0 ? cfg_.solver.threads : parallel::num_threads();
    const bool use_par = threads > 1 && n >= 48;

    Workspace w;
    w.s.resize(n + 1);
    w.u.resize(n + 1);
    w.lambda.assign(n, Vec3::Zero());
    w.nu.assign(obstacle_radii.size() * static_cast<std::size_t>(n), 0.0);
    w.a.resize(n);
    w.b.resize(n);
    w.c.resize(n);
    w.c_hat.resize(n);
    w.diag.resize(n);
    w.upper.resize(std::max(n - 1, 0));
    w.rhs.resize(n);
    w.delta.resize(n);
    w.chol.resize(n);
    w.fwd.resize(n);
    w.merit_terms.resize(n);

    // Initial iterate: shifted previous solution, else reference-control rollout.
    w.s[0] = p.s0;
    const bool have_warm = cfg_.solver.warm_start && warm != nullptr &&
                           static_cast<int>(warm->controls.size()) == n + 1;
    if (have_warm) {
        for (int i = 0; i <= n; ++i) {
            const std::size_t src = static_cast<std::size_t>(std::min(i + 1, n));
            w.u[i] = clamp_input(
                Vec2(warm->controls[src].v, warm->controls[src].omega), p);
        }
        for (int i = 1; i <= n; ++i) {
            const std::size_t src = static_cast<std::size_t>(std::min(i + 1, n));
            w.s[i] = Vec3(warm->states[src].x, warm->states[src].y, warm->states[src].theta);
        }
        w.s[n] = dynamics(w.s[n - 1], w.u[n - 1], p.dt);
    } else {
        for (int i = 0; i <= n; ++i) w.u[i] = clamp_input(p.u_ref[i], p);
        for (int i = 0; i < n; ++i) w.s[i + 1] = dynamics(w.s[i], w.u[i], p.dt);
    }

    double mu = cfg_.solver.penalty_initial;
    double damping = 1e-8;
    int total_inner = 0;
    bool converged = false;
    double pg = 0.0;

    double prev_infeas = std::numeric_limits<double>::infinity();

    for (int outer = 0; outer < cfg_.solver.max_outer_iterations; ++outer) {
        const double inner_tol =
            std::max(cfg_.solver.kkt_tolerance, 1e-2 * std::pow(0.2, outer));

        for (int it = 0; it < cfg_.solver.max_inner_iterations; ++it) {
            assemble(p, w, mu, damping, use_par, threads);
            pg = projected_gradient_norm(p, w);
            if (pg <= inner_tol) break;

            if (!solve_block_tridiagonal(p, w)) {
                damping = std::max(damping * 100.0, 1e-6);
                continue;
            }
            ++total_inner;

            const double phi0 = merit(p, w, mu, use_par, threads);
            if (!std::isfinite(phi0)) {
                throw std::runtime_error("MpcSolver: non-finite cost");
            }

            const std::vector<Vec3> s_save = w.s;
            const std::vector<Vec2> u_save = w.u;
            bool accepted = false;
            double alpha = 1.0;
            for (int ls = 0; ls < 9; ++ls) {
                for (int i = 0; i < n; ++i) {
                    w.u[i] = clamp_input(u_save[i] + alpha * w.delta[i].head<2>(), p);
                    w.s[i + 1] = s_save[i + 1] + alpha * w.delta[i].tail<3>();
                }
                const double phi1 = merit(p, w, mu, use_par, threads);
                if (phi1 < phi0 - 1e-14 * std::abs(phi0)) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (accepted) {
                if (alpha == 1.0) damping = std::max(damping * 0.25, 1e-10);
            } else {
                w.s = s_save;
                w.u = u_save;
                damping *= 10.0;
                if (damping > 1e12) break;
            }
        }

        // Refresh defects and the gradient at the accepted iterate.
        assemble(p, w, mu, 0.0, use_par, threads);
        pg = projected_gradient_norm(p, w);
        const double defect = max_defect(p, w);
        const double viol = max_violation_m(p, w);
        const double tol = cfg_.solver.kkt_tolerance;
        if (defect <= tol && viol <= tol && pg <= tol) {
            converged = true;
            break;
        }

        // First-order multiplier updates.
        for (int i = 0; i < n; ++i) w.lambda[i] += mu * w.c[i];
        for (int i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p.r2_inflated.size(); ++j) {
                const Vec2 diff = w.s[i + 1].head<2>() - (*p.obs_paths)[j][i + 1];
                const double g = p.r2_inflated[j] - diff.squaredNorm();
                w.nu[j * n + i] = std::max(0.0, w.nu[j * n + i] + mu * g);
            }
        }
        const double infeas = std::max(defect, viol);
        if (infeas > 0.25 * prev_infeas) {
            mu = std::min(mu * cfg_.solver.penalty_growth, cfg_.solver.penalty_max);
        }
        prev_infeas = infeas;
    }

    w.u[n] = clamp_input(p.u_ref[n], p);

    MpcSolution sol;
    sol.states.resize(n + 1);
    sol.controls.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        sol.states[i] = State{w.s[i](0), w.s[i](1), w.s[i](2)};
        sol.controls[i] = ControlInput{w.u[i](0), w.u[i](1)};
    }
    sol.cost = tracking_cost(p, w);
    if (!std::isfinite(sol.cost)) {
        throw std::runtime_error("MpcSolver: non-finite cost");
    }
    sol.iterations = total_inner;
    const double defect = max_defect(p, w);
    const double viol = max_violation_m(p, w);
    sol.kkt_residual = std::max({pg, defect, viol});
    sol.constraint_violation_max = viol;
    sol.converged = converged;
    sol.softened = viol > 10.0 * cfg_.solver.kkt_tolerance;
    return sol;
}

}  // namespace ugvnet
