#include "homog/effective_model.hpp"

#include "homog/errors.hpp"
#include "homog/flux.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <limits>

namespace homog {

namespace {

// Quadrature of integrals over Y against corrector gradients; all correctors
// share one grid.
template <class F>
void for_cell_gauss(const CellGrid& grid, int subcells, const F& body) {
    const auto& g = GaussRule::get(4);
    const double h = grid.h();
    const double w = h / subcells;
    for (int e = 0; e < grid.num_elements(); ++e) {
        auto origin = grid.element_origin(e);
        if (grid.dim() == 1) {
            for (int s = 0; s < subcells; ++s)
                for (std::size_t q = 0; q < g.points.size(); ++q) {
                    double local = (s + g.points[q]) / subcells;
                    body(e, std::array<double, 2>{local, 0.0},
                         std::array<double, 2>{origin[0] + local * h, 0.0}, w * g.weights[q]);
                }
        } else {
            for (int sj = 0; sj < subcells; ++sj)
                for (int si = 0; si < subcells; ++si)
                    for (std::size_t qj = 0; qj < g.points.size(); ++qj)
                        for (std::size_t qi = 0; qi < g.points.size(); ++qi) {
                            double ls = (si + g.points[qi]) / subcells;
                            double lt = (sj + g.points[qj]) / subcells;
                            body(e, std::array<double, 2>{ls, lt},
                                 std::array<double, 2>{origin[0] + ls * h, origin[1] + lt * h},
                                 (w * g.weights[qi]) * (w * g.weights[qj]));
                        }
        }
    }
}

std::array<double, 2> grad_at(const CellFunction& f, int element,
                              const std::array<double, 2>& local) {
    // Elementwise gradient from local coordinates (avoids re-locating).
    const CellGrid& grid = f.grid();
    std::array<int, 4> nodes;
    grid.element_nodes(element, nodes);
    double h = grid.h();
    const auto& v = f.nodal();
    if (grid.dim() == 1) return {(v[nodes[1]] - v[nodes[0]]) / h, 0.0};
    double s = local[0], t = local[1];
    double gs = -(1 - t) * v[nodes[0]] + (1 - t) * v[nodes[1]] + t * v[nodes[2]] - t * v[nodes[3]];
    double gt = -(1 - s) * v[nodes[0]] - s * v[nodes[1]] + s * v[nodes[2]] + (1 - s) * v[nodes[3]];
    return {gs / h, gt / h};
}

double value_at(const CellFunction& f, int element, const std::array<double, 2>& local) {
    const CellGrid& grid = f.grid();
    std::array<int, 4> nodes;
    grid.element_nodes(element, nodes);
    const auto& v = f.nodal();
    if (grid.dim() == 1) return (1 - local[0]) * v[nodes[0]] + local[0] * v[nodes[1]];
    double s = local[0], t = local[1];
    return (1 - s) * (1 - t) * v[nodes[0]] + s * (1 - t) * v[nodes[1]] + s * t * v[nodes[2]]
           + (1 - s) * t * v[nodes[3]];
}

template <class CoeffFn>
LinearEffectiveModel build_effective_impl(const LinearCorrectors& correctors, const CoeffFn& A,
                                          int coeff_breakpoints, const PotentialField& V) {
    const CellGrid& grid = correctors.zeta.grid();
    const int d = grid.dim();
    int bp = std::max(coeff_breakpoints, V.base().breakpoint_cells());
    int subcells = 1;
    if (bp > 0) subcells = std::max(1, (bp + grid.elements_per_axis() - 1) / grid.elements_per_axis());

    LinearEffectiveModel model;
    model.dim = d;

    for_cell_gauss(grid, subcells, [&](int e, std::array<double, 2> local,
                                       std::array<double, 2> y, double w) {
        auto Ay = A(y);
        double Vy = V.sample(y);
        auto dzeta = grad_at(correctors.zeta, e, local);
        double zeta = value_at(correctors.zeta, e, local);
        model.sbar += w * Vy * zeta;
        for (int j = 0; j < d; ++j) {
            auto dchi = grad_at(correctors.chi[static_cast<std::size_t>(j)], e, local);
            double chij = value_at(correctors.chi[static_cast<std::size_t>(j)], e, local);
            // column j of abar: int A (e_j + D chi_j)
            std::array<double, 2> col{Ay[0] * ((j == 0) + dchi[0]) + Ay[1] * ((j == 1) + dchi[1]),
                                      Ay[2] * ((j == 0) + dchi[0])
                                          + Ay[3] * ((j == 1) + dchi[1])};
            for (int i = 0; i < d; ++i)
                model.abar[static_cast<std::size_t>(2 * i + j)] += w * col[static_cast<std::size_t>(i)];
            model.bbar[static_cast<std::size_t>(j)] += w * Vy * chij;
        }
        std::array<double, 2> cz{Ay[0] * dzeta[0] + Ay[1] * dzeta[1],
                                 Ay[2] * dzeta[0] + Ay[3] * dzeta[1]};
        for (int i = 0; i < d; ++i) model.cbar[static_cast<std::size_t>(i)] += w * cz[static_cast<std::size_t>(i)];
    });
    return model;
}

} // namespace

double LinearEffectiveModel::abar_min_eigenvalue() const {
    if (dim == 1) return abar[0];
    // symmetric part
    double a = abar[0], b = 0.5 * (abar[1] + abar[2]), d = abar[3];
    double tr = a + d;
    double det = a * d - b * b;
    return 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
}

LinearEffectiveModel build_linear_effective(const LinearCorrectors& correctors,
                                            const PeriodicField& a, const PotentialField& V) {
    return build_effective_impl(
        correctors,
        [&](std::array<double, 2> y) -> std::array<double, 4> {
            double v = a.sample(y);
            return {v, 0.0, 0.0, v};
        },
        a.breakpoint_cells(), V);
}

LinearEffectiveModel build_linear_effective(const LinearCorrectors& correctors,
                                            const MatrixPeriodicField& a,
                                            const PotentialField& V) {
    return build_effective_impl(
        correctors, [&](std::array<double, 2> y) { return a.sample(y); }, a.breakpoint_cells(),
        V);
}

std::pair<MacroFunction, double> solve_macro_linear(const LinearEffectiveModel& model,
                                                    const SpatialFn& f,
                                                    std::shared_ptr<const MacroGrid> grid,
                                                    Ansatz ansatz) {
    if (model.dim != grid->dim()) throw ValidationError("solve_macro_linear: dimension mismatch");
    if (!(model.abar_min_eigenvalue() > 0.0))
        throw ValidationError("solve_macro_linear: effective diffusion is not positive definite");

    const bool split = ansatz == Ansatz::split;
    const int d = grid->dim();
    const auto& g = GaussRule::get(4);
    const double h0 = grid->h(0);
    const double h1 = d == 2 ? grid->h(1) : 1.0;
    const auto& dof = grid->interior_dof_map();
    const int ndof = grid->num_interior_nodes();

    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ndof);

    std::array<double, 4> N;
    std::array<std::array<double, 2>, 4> dN;
    std::array<int, 4> nodes;
    auto assemble_at = [&](int e, std::array<double, 2> local, std::array<double, 2> x,
                           double w) {
        grid->element_nodes(e, nodes);
        int count;
        if (d == 1) {
            count = 2;
            N = {1 - local[0], local[0], 0, 0};
            dN[0] = {-1 / h0, 0};
            dN[1] = {1 / h0, 0};
        } else {
            count = 4;
            double s = local[0], t = local[1];
            N = {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
            dN[0] = {-(1 - t) / h0, -(1 - s) / h1};
            dN[1] = {(1 - t) / h0, -s / h1};
            dN[2] = {t / h0, s / h1};
            dN[3] = {-t / h0, (1 - s) / h1};
        }
        double fx = f(x);
        for (int i = 0; i < count; ++i) {
            int di = dof[nodes[i]];
            if (di < 0) continue;
            rhs[di] += w * fx * N[i];
            for (int j = 0; j < count; ++j) {
                int dj = dof[nodes[j]];
                if (dj < 0) continue;
                // (abar dN_j).dN_i
                double adj0 = model.abar[0] * dN[j][0] + model.abar[1] * dN[j][1];
                double adj1 = model.abar[2] * dN[j][0] + model.abar[3] * dN[j][1];
                double val = adj0 * dN[i][0] + adj1 * dN[i][1];
                // (bbar.dN_j) N_i
                val += (model.bbar[0] * dN[j][0] + model.bbar[1] * dN[j][1]) * N[i];
                if (split) {
                    // (cbar N_j).dN_i + sbar N_j N_i
                    val += (model.cbar[0] * dN[i][0] + model.cbar[1] * dN[i][1]) * N[j];
                    val += model.sbar * N[j] * N[i];
                }
                trips.emplace_back(di, dj, w * val);
            }
        }
    };

    for (int e = 0; e < grid->num_elements(); ++e) {
        auto origin = grid->element_origin(e);
        if (d == 1) {
            for (std::size_t q = 0; q < g.points.size(); ++q)
                assemble_at(e, {g.points[q], 0}, {origin[0] + g.points[q] * h0, 0},
                            h0 * g.weights[q]);
        } else {
            for (std::size_t qj = 0; qj < g.points.size(); ++qj)
                for (std::size_t qi = 0; qi < g.points.size(); ++qi)
                    assemble_at(e, {g.points[qi], g.points[qj]},
                                {origin[0] + g.points[qi] * h0, origin[1] + g.points[qj] * h1},
                                h0 * h1 * g.weights[qi] * g.weights[qj]);
        }
    }

    Eigen::SparseMatrix<double> K(ndof, ndof);
    K.setFromTriplets(trips.begin(), trips.end());
    K.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success)
        throw SolveError("solve_macro_linear: factorization failed", SolveStats{});
    Eigen::VectorXd u = lu.solve(rhs);
    double residual = (K * u - rhs).lpNorm<Eigen::Infinity>();
    return {MacroFunction::from_interior(std::move(grid), u), residual};
}

namespace {

struct MacroBasis {
    std::array<int, 4> nodes;
    std::array<double, 4> N;
    std::array<std::array<double, 2>, 4> dN;
    int count;
};

void macro_basis_at(const MacroGrid& grid, int element, const std::array<double, 2>& local,
                    MacroBasis& mb) {
    grid.element_nodes(element, mb.nodes);
    double h0 = grid.h(0);
    double h1 = grid.dim() == 2 ? grid.h(1) : 1.0;
    if (grid.dim() == 1) {
        mb.count = 2;
        mb.N = {1 - local[0], local[0], 0, 0};
        mb.dN[0] = {-1 / h0, 0};
        mb.dN[1] = {1 / h0, 0};
    } else {
        mb.count = 4;
        double s = local[0], t = local[1];
        mb.N = {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
        mb.dN[0] = {-(1 - t) / h0, -(1 - s) / h1};
        mb.dN[1] = {(1 - t) / h0, -s / h1};
        mb.dN[2] = {t / h0, s / h1};
        mb.dN[3] = {-t / h0, (1 - s) / h1};
    }
}

void macro_state(const MacroBasis& mb, const std::vector<int>& dof, const Eigen::VectorXd& u,
                 double& theta, std::array<double, 2>& xi) {
    theta = 0;
    xi = {0, 0};
    for (int k = 0; k < mb.count; ++k) {
        int dk = dof[mb.nodes[k]];
        if (dk < 0) continue;
        theta += u[dk] * mb.N[k];
        xi[0] += u[dk] * mb.dN[k][0];
        xi[1] += u[dk] * mb.dN[k][1];
    }
}

} // namespace

std::pair<TwoScalePair, SolveStats> solve_macro_nonlinear(const NonlinearEffectiveEvaluator& ev,
                                                          const SpatialFn& f,
                                                          std::shared_ptr<const MacroGrid> grid,
                                                          const MacroNonlinearOptions& opts) {
    const CellAssembler& cells = ev.assembler();
    if (cells.grid().dim() != grid->dim())
        throw ValidationError("solve_macro_nonlinear: dimension mismatch");
    const int d = grid->dim();
    const double p = ev.p();
    PowerNonlinearity pot{p};
    const auto& dof = grid->interior_dof_map();
    const int ndof = grid->num_interior_nodes();
    const auto& g = GaussRule::get(opts.gauss_points);

    // Macro quadrature points (plain Gauss; the cell data is not oscillatory
    // in x).
    struct QP {
        int element;
        std::array<double, 2> local;
        std::array<double, 2> x;
        double weight;
        double f;
    };
    std::vector<QP> qps;
    const double h0 = grid->h(0);
    const double h1 = d == 2 ? grid->h(1) : 1.0;
    for (int e = 0; e < grid->num_elements(); ++e) {
        auto origin = grid->element_origin(e);
        if (d == 1) {
            for (std::size_t q = 0; q < g.points.size(); ++q) {
                std::array<double, 2> x{origin[0] + g.points[q] * h0, 0};
                qps.push_back({e, {g.points[q], 0}, x, h0 * g.weights[q], f(x)});
            }
        } else {
            for (std::size_t qj = 0; qj < g.points.size(); ++qj)
                for (std::size_t qi = 0; qi < g.points.size(); ++qi) {
                    std::array<double, 2> x{origin[0] + g.points[qi] * h0,
                                            origin[1] + g.points[qj] * h1};
                    qps.push_back({e,
                                   {g.points[qi], g.points[qj]},
                                   x,
                                   h0 * h1 * g.weights[qi] * g.weights[qj],
                                   f(x)});
                }
        }
    }
    const auto nq = qps.size();

    Eigen::VectorXd u = Eigen::VectorXd::Zero(ndof);
    std::vector<CellSolution> sols;
    sols.reserve(nq);
    const double delta_floor = SolverConfig{}.delta_floor_for(p);

    MacroBasis mb;
    auto refresh_cells = [&](const Eigen::VectorXd& uu) {
        for (std::size_t gq = 0; gq < nq; ++gq) {
            macro_basis_at(*grid, qps[gq].element, qps[gq].local, mb);
            double theta;
            std::array<double, 2> xi;
            macro_state(mb, dof, uu, theta, xi);
            const CellFunction* warm =
                (ev.quantize_step() == 0.0 && sols.size() == nq) ? &sols[gq].chi : nullptr;
            CellSolution s = ev(theta, xi, warm);
            if (sols.size() == nq)
                sols[gq] = std::move(s);
            else
                sols.push_back(std::move(s));
        }
    };

    auto assemble_residual = [&](const Eigen::VectorXd& uu) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(ndof);
        for (std::size_t gq = 0; gq < nq; ++gq) {
            macro_basis_at(*grid, qps[gq].element, qps[gq].local, mb);
            double theta;
            std::array<double, 2> xi;
            macro_state(mb, dof, uu, theta, xi);
            const auto& s = sols[gq];
            double vF = s.v * pot.dF(theta);
            for (int i = 0; i < mb.count; ++i) {
                int di = dof[mb.nodes[i]];
                if (di < 0) continue;
                r[di] += qps[gq].weight
                         * (s.q[0] * mb.dN[i][0] + s.q[1] * mb.dN[i][1] + vF * mb.N[i]
                            - qps[gq].f * mb.N[i]);
            }
        }
        return r;
    };

    SolveStats stats;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    double rnorm = std::numeric_limits<double>::infinity();

    // Bootstrap from the zero state: for p > 2 the frozen weight degenerates
    // (~ delta^{p-2}) at zero gradient, so seed with the a-mean Poisson
    // solve to land on the right solution scale.
    if (p > 2.0 && u.isZero(0.0)) {
        double w0 = cells.coefficient_mean();
        std::vector<Eigen::Triplet<double>> trips;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ndof);
        for (std::size_t gq = 0; gq < nq; ++gq) {
            macro_basis_at(*grid, qps[gq].element, qps[gq].local, mb);
            for (int i = 0; i < mb.count; ++i) {
                int di = dof[mb.nodes[i]];
                if (di < 0) continue;
                rhs[di] += qps[gq].weight * qps[gq].f * mb.N[i];
                for (int j = 0; j < mb.count; ++j) {
                    int dj = dof[mb.nodes[j]];
                    if (dj < 0) continue;
                    trips.emplace_back(di, dj,
                                       qps[gq].weight * w0
                                           * (mb.dN[j][0] * mb.dN[i][0]
                                              + mb.dN[j][1] * mb.dN[i][1]));
                }
            }
        }
        Eigen::SparseMatrix<double> K0(ndof, ndof);
        K0.setFromTriplets(trips.begin(), trips.end());
        K0.makeCompressed();
        lu.compute(K0);
        if (lu.info() == Eigen::Success) u = lu.solve(rhs);
    }

    // Phase 1: relaxed Picard on frozen cell weights.
    for (int it = 0; it < opts.max_picard; ++it) {
        refresh_cells(u);
        Eigen::VectorXd r = assemble_residual(u);
        rnorm = r.lpNorm<Eigen::Infinity>();
        stats.final_residual = rnorm;
        if (rnorm <= opts.tol) {
            stats.converged = true;
            break;
        }
        if (opts.newton && rnorm <= opts.newton_switch) break;

        std::vector<Eigen::Triplet<double>> trips;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ndof);
        for (std::size_t gq = 0; gq < nq; ++gq) {
            macro_basis_at(*grid, qps[gq].element, qps[gq].local, mb);
            double theta;
            std::array<double, 2> xi;
            macro_state(mb, dof, u, theta, xi);
            const auto& s = sols[gq];
            double wscal = cells.weight_average(xi, s.chi.nodal(), delta_floor);
            std::array<double, 2> offset{s.q[0] - wscal * xi[0], s.q[1] - wscal * xi[1]};
            double vF = s.v * pot.dF(theta);
            for (int i = 0; i < mb.count; ++i) {
                int di = dof[mb.nodes[i]];
                if (di < 0) continue;
                rhs[di] += qps[gq].weight
                           * (qps[gq].f * mb.N[i] - offset[0] * mb.dN[i][0]
                              - offset[1] * mb.dN[i][1] - vF * mb.N[i]);
                for (int j = 0; j < mb.count; ++j) {
                    int dj = dof[mb.nodes[j]];
                    if (dj < 0) continue;
                    trips.emplace_back(di, dj,
                                       qps[gq].weight * wscal
                                           * (mb.dN[j][0] * mb.dN[i][0]
                                              + mb.dN[j][1] * mb.dN[i][1]));
                }
            }
        }
        Eigen::SparseMatrix<double> K(ndof, ndof);
        K.setFromTriplets(trips.begin(), trips.end());
        K.makeCompressed();
        lu.compute(K);
        if (lu.info() != Eigen::Success)
            throw SolveError("solve_macro_nonlinear: Picard matrix is singular", stats);
        Eigen::VectorXd u_tilde = lu.solve(rhs);
        u += opts.relax * (u_tilde - u);
        ++stats.iterations;
        ++stats.picard_steps;
    }

    // Phase 2: Newton with finite-difference flux derivatives.
    if (!stats.converged && opts.newton) {
        for (int it = 0; it < opts.max_newton; ++it) {
            refresh_cells(u);
            Eigen::VectorXd r = assemble_residual(u);
            rnorm = r.lpNorm<Eigen::Infinity>();
            stats.final_residual = rnorm;
            if (rnorm <= opts.tol) {
                stats.converged = true;
                break;
            }

            std::vector<Eigen::Triplet<double>> trips;
            for (std::size_t gq = 0; gq < nq; ++gq) {
                macro_basis_at(*grid, qps[gq].element, qps[gq].local, mb);
                double theta;
                std::array<double, 2> xi;
                macro_state(mb, dof, u, theta, xi);
                const auto& s = sols[gq];

                // dq/dtheta, dv/dtheta; steps stay above the memo quantum so
                // quantized evaluators still see distinct states
                double fd_floor = 2.0 * ev.quantize_step();
                double ht = std::max(opts.fd_step * (1.0 + std::abs(theta)), fd_floor);
                CellSolution sp = ev(theta + ht, xi, &s.chi);
                CellSolution sm = ev(theta - ht, xi, &s.chi);
                std::array<double, 2> dq_dth{(sp.q[0] - sm.q[0]) / (2 * ht),
                                             (sp.q[1] - sm.q[1]) / (2 * ht)};
                double dv_dth = (sp.v - sm.v) / (2 * ht);

                // dq/dxi, dv/dxi per direction
                std::array<std::array<double, 2>, 2> dq_dxi{};
                std::array<double, 2> dv_dxi{0, 0};
                for (int k = 0; k < d; ++k) {
                    double hx = std::max(opts.fd_step * (1.0 + std::abs(xi[k])), fd_floor);
                    auto xp = xi, xm = xi;
                    xp[k] += hx;
                    xm[k] -= hx;
                    CellSolution cp = ev(theta, xp, &s.chi);
                    CellSolution cm = ev(theta, xm, &s.chi);
                    dq_dxi[k] = {(cp.q[0] - cm.q[0]) / (2 * hx), (cp.q[1] - cm.q[1]) / (2 * hx)};
                    dv_dxi[k] = (cp.v - cm.v) / (2 * hx);
                }

                double dF = pot.dF(theta);
                double ddF = pot.ddF(theta);
                for (int i = 0; i < mb.count; ++i) {
                    int di = dof[mb.nodes[i]];
                    if (di < 0) continue;
                    for (int j = 0; j < mb.count; ++j) {
                        int dj = dof[mb.nodes[j]];
                        if (dj < 0) continue;
                        double val = 0;
                        for (int k = 0; k < d; ++k) {
                            double dqk = dq_dxi[k][0] * mb.dN[i][0] + dq_dxi[k][1] * mb.dN[i][1];
                            val += dqk * mb.dN[j][k];
                        }
                        val += (dq_dth[0] * mb.dN[i][0] + dq_dth[1] * mb.dN[i][1]) * mb.N[j];
                        double coup = dF * (dv_dxi[0] * mb.dN[j][0] + dv_dxi[1] * mb.dN[j][1])
                                      + dF * dv_dth * mb.N[j] + s.v * ddF * mb.N[j];
                        val += coup * mb.N[i];
                        trips.emplace_back(di, dj, qps[gq].weight * val);
                    }
                }
            }
            Eigen::SparseMatrix<double> J(ndof, ndof);
            J.setFromTriplets(trips.begin(), trips.end());
            J.makeCompressed();
            lu.compute(J);
            if (lu.info() != Eigen::Success)
                throw SolveError("solve_macro_nonlinear: Newton matrix is singular", stats);
            Eigen::VectorXd dir = lu.solve(-r);

            // Backtrack on the true residual (cells re-solved per trial).
            double r0 = r.norm();
            double step = 1.0;
            bool accepted = false;
            Eigen::VectorXd u_try;
            while (step >= 1e-4) {
                u_try = u + step * dir;
                refresh_cells(u_try);
                double rt = assemble_residual(u_try).norm();
                if (rt < r0) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
                ++stats.damping_events;
            }
            ++stats.iterations;
            if (!accepted)
                throw SolveError("solve_macro_nonlinear: Newton stagnated", stats);
            u = u_try;
        }
    }

    if (!stats.converged)
        throw SolveError("solve_macro_nonlinear: did not reach tolerance (residual "
                             + std::to_string(rnorm) + ")",
                         stats);

    // Final state snapshot for the pair.
    refresh_cells(u);
    TwoScalePair pair{MacroFunction::from_interior(grid, u), {}, opts.gauss_points};
    pair.cells.reserve(nq);
    for (std::size_t gq = 0; gq < nq; ++gq) {
        macro_basis_at(*grid, qps[gq].element, qps[gq].local, mb);
        double theta;
        std::array<double, 2> xi;
        macro_state(mb, dof, u, theta, xi);
        pair.cells.push_back(MacroQuadCell{qps[gq].element, qps[gq].local, qps[gq].x,
                                           qps[gq].weight, theta, xi, sols[gq].chi, sols[gq].q,
                                           sols[gq].v});
    }
    return {std::move(pair), stats};
}

std::pair<double, double> residual_two_scale(const TwoScalePair& pair,
                                             const NonlinearEffectiveEvaluator& ev,
                                             const SpatialFn& f, double delta) {
    const CellAssembler& cells = ev.assembler();
    const MacroGrid& grid = pair.u.grid();
    PowerNonlinearity pot{ev.p()};
    const auto& dof = grid.interior_dof_map();
    Eigen::VectorXd r = Eigen::VectorXd::Zero(grid.num_interior_nodes());
    double r_local = 0.0;

    MacroBasis mb;
    for (const MacroQuadCell& qc : pair.cells) {
        macro_basis_at(grid, qc.element, qc.local, mb);
        // q, v recomputed from the stored corrector; no cached values reused.
        std::array<double, 2> q = cells.flux_average(qc.xi, qc.chi.nodal(), delta);
        double v = cells.coupling(qc.chi.nodal());
        double vF = v * pot.dF(qc.theta);
        double fx = f(qc.x);
        for (int i = 0; i < mb.count; ++i) {
            int di = dof[mb.nodes[i]];
            if (di < 0) continue;
            r[di] += qc.weight
                     * (q[0] * mb.dN[i][0] + q[1] * mb.dN[i][1] + vF * mb.N[i] - fx * mb.N[i]);
        }
        Eigen::VectorXd rc = cells.residual(qc.theta, qc.xi, qc.chi.nodal(), delta);
        r_local = std::max(r_local, rc.lpNorm<Eigen::Infinity>());
    }
    return {r.lpNorm<Eigen::Infinity>(), r_local};
}

} // namespace homog
