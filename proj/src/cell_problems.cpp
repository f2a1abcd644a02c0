#include "homog/cell_problems.hpp"

#include "homog/errors.hpp"
#include "homog/flux.hpp"
#include "cell_assembly.hpp"

#include <cmath>

namespace homog {

namespace {

LinearCorrectors solve_correctors_impl(const detail::MatrixCoeff& coeff, int breakpoints,
                                       const PotentialField& V,
                                       std::shared_ptr<const CellGrid> grid) {
    if (!V.mean_ok())
        throw ValidationError("solve_linear_correctors: V fails the zero-mean check (residual "
                              + std::to_string(V.mean_residual()) + ")");
    int subcells = detail::alignment_subcells(
        *grid, std::max(breakpoints, V.base().breakpoint_cells()));
    auto K = detail::cell_stiffness(*grid, coeff, 4, subcells);
    auto weights = detail::cell_mass_weights(*grid);
    const int d = grid->dim();

    double worst = 0.0;
    // chi_j: (a D chi_j, D psi) = -(a e_j, D psi)
    std::array<CellFunction, 2> chi{CellFunction::zero(grid), CellFunction::zero(grid)};
    const auto& g = GaussRule::get(4);
    for (int j = 0; j < d; ++j) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(grid->num_nodes());
        const double h = grid->h();
        const double w = h / subcells;
        std::array<int, 4> nodes;
        for (int e = 0; e < grid->num_elements(); ++e) {
            grid->element_nodes(e, nodes);
            auto origin = grid->element_origin(e);
            if (d == 1) {
                for (int s = 0; s < subcells; ++s)
                    for (std::size_t q = 0; q < g.points.size(); ++q) {
                        double y0 = origin[0] + (s + g.points[q]) * w;
                        double a00 = coeff({y0, 0.0})[0];
                        double wq = w * g.weights[q];
                        rhs[nodes[0]] -= wq * a00 * (-1.0 / h);
                        rhs[nodes[1]] -= wq * a00 * (1.0 / h);
                    }
            } else {
                for (int sj = 0; sj < subcells; ++sj)
                    for (int si = 0; si < subcells; ++si)
                        for (std::size_t qj = 0; qj < g.points.size(); ++qj)
                            for (std::size_t qi = 0; qi < g.points.size(); ++qi) {
                                double ls = (si + g.points[qi]) / subcells;
                                double lt = (sj + g.points[qj]) / subcells;
                                auto A = coeff({origin[0] + ls * h, origin[1] + lt * h});
                                double wq = (w * g.weights[qi]) * (w * g.weights[qj]);
                                // column j of A
                                double Aj0 = A[0 + j];
                                double Aj1 = A[2 + j];
                                std::array<double, 4> dNds{-(1 - lt), (1 - lt), lt, -lt};
                                std::array<double, 4> dNdt{-(1 - ls), -ls, ls, (1 - ls)};
                                for (int i = 0; i < 4; ++i)
                                    rhs[nodes[i]] -= wq
                                                     * (Aj0 * dNds[i] / h + Aj1 * dNdt[i] / h);
                            }
            }
        }
        double res = 0.0;
        Eigen::VectorXd sol = detail::solve_zero_mean(K, rhs, weights, res);
        worst = std::max(worst, res);
        chi[static_cast<std::size_t>(j)] = CellFunction(grid, std::move(sol)).minus_mean();
    }

    // zeta: (a D zeta, D psi) = -(V, psi)
    Eigen::VectorXd rhs_zeta = -detail::cell_load(
        *grid, [&](std::array<double, 2> y) { return V.sample(y); }, 4, subcells);
    double res_zeta = 0.0;
    Eigen::VectorXd zeta = detail::solve_zero_mean(K, rhs_zeta, weights, res_zeta);
    worst = std::max(worst, res_zeta);

    return LinearCorrectors{std::move(chi), CellFunction(grid, std::move(zeta)).minus_mean(),
                            worst};
}

} // namespace

LinearCorrectors solve_linear_correctors(const PeriodicField& a, const PotentialField& V,
                                         std::shared_ptr<const CellGrid> grid) {
    if (a.dim() != grid->dim() || V.dim() != grid->dim())
        throw ValidationError("solve_linear_correctors: dimension mismatch");
    auto coeff = detail::scalar_coeff([&a](std::array<double, 2> y) { return a.sample(y); });
    return solve_correctors_impl(coeff, a.breakpoint_cells(), V, std::move(grid));
}

LinearCorrectors solve_linear_correctors(const MatrixPeriodicField& a, const PotentialField& V,
                                         std::shared_ptr<const CellGrid> grid) {
    if (grid->dim() != 2 || V.dim() != 2)
        throw ValidationError("matrix-coefficient correctors are a d = 2 path");
    auto coeff = [&a](std::array<double, 2> y) { return a.sample(y); };
    return solve_correctors_impl(coeff, a.breakpoint_cells(), V, std::move(grid));
}

CellAssembler::CellAssembler(PeriodicField a, PotentialField V, double p,
                             std::shared_ptr<const CellGrid> grid, int gauss_points)
    : a_(std::move(a)), V_(std::move(V)), p_(p), grid_(std::move(grid)) {
    if (a_.dim() != grid_->dim() || V_.dim() != grid_->dim())
        throw ValidationError("CellAssembler: dimension mismatch");
    if (!(p_ >= 2.0)) throw ValidationError("CellAssembler: p must be >= 2");

    int subcells = detail::alignment_subcells(
        *grid_, std::max(a_.breakpoint_cells(), V_.base().breakpoint_cells()));
    const auto& g = GaussRule::get(gauss_points);
    const double h = grid_->h();
    const int d = grid_->dim();
    const double w = h / subcells;

    for (int e = 0; e < grid_->num_elements(); ++e) {
        auto origin = grid_->element_origin(e);
        if (d == 1) {
            for (int s = 0; s < subcells; ++s)
                for (std::size_t q = 0; q < g.points.size(); ++q) {
                    double local = (s + g.points[q]) / subcells;
                    std::array<double, 2> y{origin[0] + local * h, 0.0};
                    qpoints_.push_back(
                        {e, {local, 0.0}, w * g.weights[q], a_.sample(y), V_.sample(y)});
                }
        } else {
            for (int sj = 0; sj < subcells; ++sj)
                for (int si = 0; si < subcells; ++si)
                    for (std::size_t qj = 0; qj < g.points.size(); ++qj)
                        for (std::size_t qi = 0; qi < g.points.size(); ++qi) {
                            double ls = (si + g.points[qi]) / subcells;
                            double lt = (sj + g.points[qj]) / subcells;
                            std::array<double, 2> y{origin[0] + ls * h, origin[1] + lt * h};
                            qpoints_.push_back({e,
                                                {ls, lt},
                                                (w * g.weights[qi]) * (w * g.weights[qj]),
                                                a_.sample(y),
                                                V_.sample(y)});
                        }
        }
    }

    v_load_ = detail::cell_load(
        *grid_, [this](std::array<double, 2> y) { return V_.sample(y); }, gauss_points, subcells);
    mass_weights_ = detail::cell_mass_weights(*grid_);
}

namespace {

struct CellBasis {
    std::array<int, 4> nodes;
    std::array<double, 4> N;
    std::array<std::array<double, 2>, 4> dN;
    int count;
};

inline void cell_basis_at(const CellGrid& grid, int element, const std::array<double, 2>& local,
                          CellBasis& cb) {
    grid.element_nodes(element, cb.nodes);
    double h = grid.h();
    if (grid.dim() == 1) {
        cb.count = 2;
        cb.N = {1.0 - local[0], local[0], 0.0, 0.0};
        cb.dN[0] = {-1.0 / h, 0.0};
        cb.dN[1] = {1.0 / h, 0.0};
    } else {
        cb.count = 4;
        double s = local[0], t = local[1];
        cb.N = {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
        cb.dN[0] = {-(1 - t) / h, -(1 - s) / h};
        cb.dN[1] = {(1 - t) / h, -s / h};
        cb.dN[2] = {t / h, s / h};
        cb.dN[3] = {-t / h, (1 - s) / h};
    }
}

inline std::array<double, 2> chi_gradient(const CellBasis& cb, const Eigen::VectorXd& chi) {
    std::array<double, 2> g{0.0, 0.0};
    for (int k = 0; k < cb.count; ++k) {
        g[0] += chi[cb.nodes[k]] * cb.dN[k][0];
        g[1] += chi[cb.nodes[k]] * cb.dN[k][1];
    }
    return g;
}

} // namespace

Eigen::VectorXd CellAssembler::residual(double theta, const std::array<double, 2>& xi,
                                        const Eigen::VectorXd& chi, double delta) const {
    RegularizedFlux flux{p_, delta};
    PowerNonlinearity pot{p_};
    double Ftheta = pot.F(theta);
    Eigen::VectorXd r = Ftheta * v_load_;
    CellBasis cb;
    for (const QPoint& qp : qpoints_) {
        cell_basis_at(*grid_, qp.element, qp.local, cb);
        auto dchi = chi_gradient(cb, chi);
        std::array<double, 2> eta{xi[0] + dchi[0], xi[1] + dchi[1]};
        double w = flux.weight(eta[0] * eta[0] + eta[1] * eta[1]);
        std::array<double, 2> sigma{qp.a * w * eta[0], qp.a * w * eta[1]};
        for (int k = 0; k < cb.count; ++k)
            r[cb.nodes[k]] += qp.weight * (sigma[0] * cb.dN[k][0] + sigma[1] * cb.dN[k][1]);
    }
    return r;
}

Eigen::SparseMatrix<double> CellAssembler::jacobian(const std::array<double, 2>& xi,
                                                    const Eigen::VectorXd& chi,
                                                    double delta) const {
    RegularizedFlux flux{p_, delta};
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(qpoints_.size() * 16);
    CellBasis cb;
    for (const QPoint& qp : qpoints_) {
        cell_basis_at(*grid_, qp.element, qp.local, cb);
        auto dchi = chi_gradient(cb, chi);
        std::array<double, 2> eta{xi[0] + dchi[0], xi[1] + dchi[1]};
        std::array<double, 4> D = grid_->dim() == 1
                                      ? std::array<double, 4>{flux.dflux1(eta[0]), 0, 0, 0}
                                      : flux.dflux2(eta);
        for (int i = 0; i < cb.count; ++i)
            for (int j = 0; j < cb.count; ++j) {
                double fj0 = D[0] * cb.dN[j][0] + D[1] * cb.dN[j][1];
                double fj1 = D[2] * cb.dN[j][0] + D[3] * cb.dN[j][1];
                trips.emplace_back(cb.nodes[i], cb.nodes[j],
                                   qp.weight * qp.a
                                       * (fj0 * cb.dN[i][0] + fj1 * cb.dN[i][1]));
            }
    }
    Eigen::SparseMatrix<double> J(grid_->num_nodes(), grid_->num_nodes());
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
}

void CellAssembler::picard_split(double theta, const std::array<double, 2>& xi,
                                 const Eigen::VectorXd& chi, double delta,
                                 Eigen::SparseMatrix<double>& K, Eigen::VectorXd& b) const {
    RegularizedFlux flux{p_, delta};
    PowerNonlinearity pot{p_};
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(qpoints_.size() * 16);
    b = -pot.F(theta) * v_load_;
    CellBasis cb;
    for (const QPoint& qp : qpoints_) {
        cell_basis_at(*grid_, qp.element, qp.local, cb);
        auto dchi = chi_gradient(cb, chi);
        std::array<double, 2> eta{xi[0] + dchi[0], xi[1] + dchi[1]};
        double w = qp.a * flux.weight(eta[0] * eta[0] + eta[1] * eta[1]);
        for (int i = 0; i < cb.count; ++i) {
            // frozen-weight xi term moves to the right-hand side
            b[cb.nodes[i]] -= qp.weight * w * (xi[0] * cb.dN[i][0] + xi[1] * cb.dN[i][1]);
            for (int j = 0; j < cb.count; ++j)
                trips.emplace_back(cb.nodes[i], cb.nodes[j],
                                   qp.weight * w
                                       * (cb.dN[j][0] * cb.dN[i][0]
                                          + cb.dN[j][1] * cb.dN[i][1]));
        }
    }
    K.resize(grid_->num_nodes(), grid_->num_nodes());
    K.setFromTriplets(trips.begin(), trips.end());
}

std::array<double, 2> CellAssembler::flux_average(const std::array<double, 2>& xi,
                                                  const Eigen::VectorXd& chi,
                                                  double delta) const {
    RegularizedFlux flux{p_, delta};
    std::array<double, 2> q{0.0, 0.0};
    CellBasis cb;
    for (const QPoint& qp : qpoints_) {
        cell_basis_at(*grid_, qp.element, qp.local, cb);
        auto dchi = chi_gradient(cb, chi);
        std::array<double, 2> eta{xi[0] + dchi[0], xi[1] + dchi[1]};
        double w = qp.a * flux.weight(eta[0] * eta[0] + eta[1] * eta[1]);
        q[0] += qp.weight * w * eta[0];
        q[1] += qp.weight * w * eta[1];
    }
    return q;
}

double CellAssembler::weight_average(const std::array<double, 2>& xi, const Eigen::VectorXd& chi,
                                     double delta) const {
    RegularizedFlux flux{p_, delta};
    double w = 0.0;
    CellBasis cb;
    for (const QPoint& qp : qpoints_) {
        cell_basis_at(*grid_, qp.element, qp.local, cb);
        auto dchi = chi_gradient(cb, chi);
        std::array<double, 2> eta{xi[0] + dchi[0], xi[1] + dchi[1]};
        w += qp.weight * qp.a * flux.weight(eta[0] * eta[0] + eta[1] * eta[1]);
    }
    return w;
}

double CellAssembler::coefficient_mean() const {
    double total = 0.0;
    for (const QPoint& qp : qpoints_) total += qp.weight * qp.a;
    return total;
}

double CellAssembler::coupling(const Eigen::VectorXd& chi) const { return v_load_.dot(chi); }

CellSolution solve_nonlinear_cell(const CellAssembler& assembler, double theta,
                                  const std::array<double, 2>& xi, const SolverConfig& config,
                                  const CellFunction* init) {
    PowerNonlinearity pot{assembler.p()};
    // Fredholm gate: the discrete mean of V F(theta) must vanish.
    double gate = std::abs(pot.F(theta) * assembler.V().mean_residual());
    if (gate > assembler.V().mean_tol())
        throw ValidationError("solve_nonlinear_cell: mean of V F(theta) = "
                              + std::to_string(gate) + " violates the solvability condition");

    const int nn = assembler.grid().num_nodes();
    const Eigen::VectorXd& w = assembler.mass_weights();

    // Augmented unknown [chi; lambda] enforcing the zero mean.
    auto augment = [&](double delta) {
        ResidualSystem sys;
        sys.residual = [&, delta](const Eigen::VectorXd& u) {
            Eigen::VectorXd chi = u.head(nn);
            double lambda = u[nn];
            Eigen::VectorXd r(nn + 1);
            r.head(nn) = assembler.residual(theta, xi, chi, delta) + lambda * w;
            r[nn] = w.dot(chi);
            return r;
        };
        sys.jacobian = [&, delta](const Eigen::VectorXd& u) {
            Eigen::SparseMatrix<double> J = assembler.jacobian(xi, u.head(nn), delta);
            std::vector<Eigen::Triplet<double>> trips;
            trips.reserve(static_cast<std::size_t>(J.nonZeros()) + 2 * nn);
            for (int k = 0; k < J.outerSize(); ++k)
                for (Eigen::SparseMatrix<double>::InnerIterator it(J, k); it; ++it)
                    trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                                       it.value());
            for (int i = 0; i < nn; ++i) {
                trips.emplace_back(i, nn, w[i]);
                trips.emplace_back(nn, i, w[i]);
            }
            Eigen::SparseMatrix<double> A(nn + 1, nn + 1);
            A.setFromTriplets(trips.begin(), trips.end());
            return A;
        };
        sys.picard_split = [&, delta](const Eigen::VectorXd& u, Eigen::SparseMatrix<double>& K,
                                      Eigen::VectorXd& b) {
            Eigen::SparseMatrix<double> Kc;
            Eigen::VectorXd bc;
            assembler.picard_split(theta, xi, u.head(nn), delta, Kc, bc);
            std::vector<Eigen::Triplet<double>> trips;
            trips.reserve(static_cast<std::size_t>(Kc.nonZeros()) + 2 * nn);
            for (int k = 0; k < Kc.outerSize(); ++k)
                for (Eigen::SparseMatrix<double>::InnerIterator it(Kc, k); it; ++it)
                    trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                                       it.value());
            for (int i = 0; i < nn; ++i) {
                trips.emplace_back(i, nn, w[i]);
                trips.emplace_back(nn, i, w[i]);
            }
            K.resize(nn + 1, nn + 1);
            K.setFromTriplets(trips.begin(), trips.end());
            b.resize(nn + 1);
            b.head(nn) = bc;
            b[nn] = 0.0;
        };
        return sys;
    };

    Eigen::VectorXd u = Eigen::VectorXd::Zero(nn + 1);
    if (init != nullptr) {
        if (init->grid().num_nodes() != nn)
            throw ValidationError("solve_nonlinear_cell: init grid mismatch");
        u.head(nn) = init->nodal();
        u.head(nn).array() -= init->mean();
    }

    SolveStats stats;
    if (init != nullptr) {
        // Warm path: solve directly at the target delta; fall back to the
        // full schedule when that fails.
        auto sys = augment(config.delta_floor_for(assembler.p()));
        stats = solve_residual(sys, u, config);
    }
    if (!stats.converged) {
        if (init != nullptr) u.setZero();
        stats = solve_with_continuation(augment, assembler.p(), u, config);
    }
    if (!stats.converged)
        throw SolveError("nonlinear cell solve failed (theta=" + std::to_string(theta)
                             + ", xi=" + std::to_string(xi[0]) + ")",
                         stats);

    Eigen::VectorXd chi = u.head(nn);
    chi.array() -= chi.sum() / nn; // exact zero mean
    std::array<double, 2> q = assembler.flux_average(xi, chi, 0.0);
    double v = assembler.coupling(chi);
    double residual = assembler.residual(theta, xi, chi, config.delta_floor_for(assembler.p()))
                          .lpNorm<Eigen::Infinity>();
    return CellSolution{theta, xi, CellFunction(assembler.grid_ptr(), std::move(chi)), q, v,
                        residual, stats};
}

UniquenessCheck uniqueness_check(const CellAssembler& assembler, double theta,
                                 const std::array<double, 2>& xi, const CellFunction& init1,
                                 const CellFunction& init2, const SolverConfig& config) {
    CellSolution s1 = solve_nonlinear_cell(assembler, theta, xi, config, &init1);
    CellSolution s2 = solve_nonlinear_cell(assembler, theta, xi, config, &init2);
    Eigen::VectorXd diff = s1.chi.nodal() - s2.chi.nodal();
    CellFunction d(assembler.grid_ptr(), diff);
    UniquenessCheck out;
    out.gradient_discrepancy = w1p_seminorm(d, assembler.p());
    out.value_discrepancy = lp_norm(d, assembler.p());
    out.stats1 = s1.stats;
    out.stats2 = s2.stats;
    return out;
}

CellEvaluator::CellEvaluator(PeriodicField a, PotentialField V, double p,
                             std::shared_ptr<const CellGrid> grid, SolverConfig config,
                             double quantize_step)
    : assembler_(std::move(a), std::move(V), p, std::move(grid)), config_(config),
      quantize_step_(quantize_step) {}

CellSolution CellEvaluator::operator()(double theta, const std::array<double, 2>& xi,
                                       const CellFunction* warm) const {
    if (quantize_step_ <= 0.0) return solve_nonlinear_cell(assembler_, theta, xi, config_, warm);

    auto q = [this](double v) {
        return static_cast<long long>(std::llround(v / quantize_step_));
    };
    std::array<long long, 3> key{q(theta), q(xi[0]), q(xi[1])};
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;

    // Solve at the quantized point from the zero init so the entry is a pure
    // function of the key.
    double qtheta = key[0] * quantize_step_;
    std::array<double, 2> qxi{key[1] * quantize_step_, key[2] * quantize_step_};
    CellSolution sol = solve_nonlinear_cell(assembler_, qtheta, qxi, config_, nullptr);
    return memo_.emplace(key, std::move(sol)).first->second;
}

} // namespace homog
