#pragma once

#include "homog/errors.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <string>
#include <vector>

namespace homog {

/// Knobs for the damped-Newton residual solver and the delta-continuation
/// wrapper around it.
struct SolverConfig {
    double tol = 1e-10;           ///< absolute residual tolerance (l2)
    int max_iterations = 80;
    double backtrack_factor = 0.5;
    double min_step = 1e-6;
    double decrease_margin = 1e-4; ///< accept when |R_new| <= (1 - margin*s)|R|
    int picard_after = 3;          ///< consecutive rejected steps before fallback
    double lin_tol = 1e-12;        ///< direct-solve residual sanity bound

    // Regularization schedule for the degenerate flux: delta_start down to
    // delta_floor by delta_factor. Collapses to a single stage at p = 2.
    double delta_start = 1e-2;
    double delta_floor = 1e-8;
    double delta_factor = 10.0;

    std::vector<double> delta_schedule(double p) const;
    /// Target regularization of the final stage (0 at p = 2).
    double delta_floor_for(double p) const { return p == 2.0 ? 0.0 : delta_floor; }
};

struct SolveStats {
    int iterations = 0;
    double final_residual = 0.0;
    int damping_events = 0;
    int continuation_stages = 0;
    int picard_steps = 0;
    int delta_bumps = 0;
    bool converged = false;
    /// max |R_new|/|R_old| over accepted Newton steps (monotonicity witness)
    double max_accepted_ratio = 0.0;
};

/// Raised when a solve that must succeed fails; carries the stats snapshot.
class SolveError : public Error {
public:
    SolveError(const std::string& what, SolveStats stats) : Error(what), stats(stats) {}
    SolveStats stats;
};

/// A finite-dimensional residual system R(U) = 0 with Jacobian. When the
/// residual has the quasilinear structure R(U) = K(U) U - b, `picard_split`
/// supplies (K, b) and enables the frozen-coefficient fallback iteration.
struct ResidualSystem {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
    std::function<Eigen::SparseMatrix<double>(const Eigen::VectorXd&)> jacobian;
    std::function<void(const Eigen::VectorXd&, Eigen::SparseMatrix<double>&, Eigen::VectorXd&)>
        picard_split; // optional
};

/// Damped Newton on |R|_2 with backtracking; after `picard_after` consecutive
/// rejected steps one Picard step is taken (when available). Returns the
/// best iterate found; `stats.converged` reports whether |R| <= tol.
SolveStats solve_residual(const ResidualSystem& system, Eigen::VectorXd& u,
                          const SolverConfig& config);

/// Runs solve_residual over the delta schedule, warm-starting each stage
/// from the previous one. `make_system(delta)` builds the stage system.
SolveStats solve_with_continuation(
    const std::function<ResidualSystem(double delta)>& make_system, double p,
    Eigen::VectorXd& u, const SolverConfig& config);

/// Componentwise central finite differences against the assembled Jacobian.
/// Returns max_ij |J_ij - Jfd_ij| / max(max|J|, max|Jfd|, 1e-30); the step
/// for column j is h * (1 + |U_j|).
double check_jacobian(const ResidualSystem& system, const Eigen::VectorXd& u, double h);

} // namespace homog
