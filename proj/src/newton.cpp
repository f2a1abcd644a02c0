#include "homog/newton.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <limits>

namespace homog {

std::vector<double> SolverConfig::delta_schedule(double p) const {
    if (p == 2.0) return {0.0}; // flux is linear, regularization is a no-op
    std::vector<double> schedule;
    double d = delta_start;
    while (d > delta_floor * (1.0 + 1e-12)) {
        schedule.push_back(d);
        d /= delta_factor;
    }
    schedule.push_back(delta_floor);
    return schedule;
}

namespace {

bool factorize(Eigen::SparseLU<Eigen::SparseMatrix<double>>& lu,
               const Eigen::SparseMatrix<double>& m) {
    lu.compute(m);
    return lu.info() == Eigen::Success;
}

} // namespace

SolveStats solve_residual(const ResidualSystem& system, Eigen::VectorXd& u,
                          const SolverConfig& config) {
    SolveStats stats;
    Eigen::VectorXd r = system.residual(u);
    double rnorm = r.norm();
    stats.final_residual = rnorm;
    if (rnorm <= config.tol) {
        stats.converged = true;
        return stats;
    }

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    int consecutive_rejects = 0;

    for (int it = 0; it < config.max_iterations; ++it) {
        bool stepped = false;

        Eigen::SparseMatrix<double> jac = system.jacobian(u);
        jac.makeCompressed();
        if (factorize(lu, jac)) {
            Eigen::VectorXd dir = lu.solve(-r);
            double s = 1.0;
            while (s >= config.min_step) {
                Eigen::VectorXd u_try = u + s * dir;
                Eigen::VectorXd r_try = system.residual(u_try);
                double rt = r_try.norm();
                if (rt <= (1.0 - config.decrease_margin * s) * rnorm) {
                    if (s < 1.0) ++stats.damping_events;
                    stats.max_accepted_ratio = std::max(stats.max_accepted_ratio, rt / rnorm);
                    u.swap(u_try);
                    r.swap(r_try);
                    rnorm = rt;
                    stepped = true;
                    consecutive_rejects = 0;
                    break;
                }
                s *= config.backtrack_factor;
            }
        }

        if (!stepped) {
            ++stats.damping_events;
            ++consecutive_rejects;
            if (consecutive_rejects >= config.picard_after && system.picard_split) {
                // Frozen-coefficient iterate; not required to be monotone in |R|.
                Eigen::SparseMatrix<double> K;
                Eigen::VectorXd b;
                system.picard_split(u, K, b);
                K.makeCompressed();
                if (factorize(lu, K)) {
                    u = lu.solve(b);
                    r = system.residual(u);
                    rnorm = r.norm();
                    ++stats.picard_steps;
                    consecutive_rejects = 0;
                    stepped = true;
                }
            }
        }

        ++stats.iterations;
        stats.final_residual = rnorm;
        if (rnorm <= config.tol) {
            stats.converged = true;
            return stats;
        }
        if (!stepped && consecutive_rejects >= config.picard_after) {
            // Nothing left to try; report the best iterate.
            return stats;
        }
    }
    return stats;
}

SolveStats solve_with_continuation(
    const std::function<ResidualSystem(double delta)>& make_system, double p,
    Eigen::VectorXd& u, const SolverConfig& config) {
    SolveStats total;
    auto schedule = config.delta_schedule(p);
    for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
        ResidualSystem system = make_system(schedule[stage]);
        SolveStats s = solve_residual(system, u, config);
        total.iterations += s.iterations;
        total.damping_events += s.damping_events;
        total.picard_steps += s.picard_steps;
        total.final_residual = s.final_residual;
        total.converged = s.converged;
        total.max_accepted_ratio = std::max(total.max_accepted_ratio, s.max_accepted_ratio);
        ++total.continuation_stages;
        if (!s.converged && stage + 1 < schedule.size()) {
            // A failed intermediate stage still seeds the next one; only the
            // final stage decides success.
            continue;
        }
    }
    return total;
}

double check_jacobian(const ResidualSystem& system, const Eigen::VectorXd& u, double h) {
    Eigen::SparseMatrix<double> jac = system.jacobian(u);
    Eigen::MatrixXd dense = Eigen::MatrixXd(jac);
    Eigen::MatrixXd fd(dense.rows(), dense.cols());
    Eigen::VectorXd up = u, um = u;
    for (Eigen::Index j = 0; j < u.size(); ++j) {
        double hj = h * (1.0 + std::abs(u[j]));
        up[j] = u[j] + hj;
        um[j] = u[j] - hj;
        fd.col(j) = (system.residual(up) - system.residual(um)) / (2.0 * hj);
        up[j] = u[j];
        um[j] = u[j];
    }
    double scale = std::max({dense.cwiseAbs().maxCoeff(), fd.cwiseAbs().maxCoeff(), 1e-30});
    return (dense - fd).cwiseAbs().maxCoeff() / scale;
}

} // namespace homog
