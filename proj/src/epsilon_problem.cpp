#include "homog/epsilon_problem.hpp"

#include "homog/errors.hpp"
#include "homog/flux.hpp"

#include <cmath>
#include <sstream>

namespace homog {

namespace {

struct LocalBasis {
    std::array<int, 4> nodes;
    std::array<double, 4> N;
    std::array<std::array<double, 2>, 4> dN;
    int count = 0;
};

// Per-assembly evaluation context: grid geometry, the delta-regularized flux
// and the potential nonlinearity.
struct AsmCtx {
    const MacroGrid& grid;
    int dim;
    double h0, h1, inv_eps;
    RegularizedFlux flux;
    PowerNonlinearity pot;
    LocalBasis lb;

    AsmCtx(const EpsilonProblem& prob, double delta)
        : grid(*prob.grid), dim(grid.dim()), h0(grid.h(0)),
          h1(dim == 2 ? grid.h(1) : 1.0), inv_eps(1.0 / prob.eps),
          flux{prob.p, delta}, pot{prob.p} {
        lb.count = grid.nodes_per_element();
    }

    void basis_at(int element, const std::array<double, 2>& local) {
        grid.element_nodes(element, lb.nodes);
        if (dim == 1) {
            lb.N = {1.0 - local[0], local[0], 0.0, 0.0};
            lb.dN[0] = {-1.0 / h0, 0.0};
            lb.dN[1] = {1.0 / h0, 0.0};
        } else {
            double s = local[0], t = local[1];
            lb.N = {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
            lb.dN[0] = {-(1 - t) / h0, -(1 - s) / h1};
            lb.dN[1] = {(1 - t) / h0, -s / h1};
            lb.dN[2] = {t / h0, s / h1};
            lb.dN[3] = {-t / h0, (1 - s) / h1};
        }
    }

    void state(const std::vector<int>& dof_of_node, const Eigen::VectorXd& u, double& uval,
               std::array<double, 2>& du) const {
        uval = 0.0;
        du = {0.0, 0.0};
        for (int k = 0; k < lb.count; ++k) {
            int dof = dof_of_node[lb.nodes[k]];
            if (dof < 0) continue;
            double c = u[dof];
            uval += c * lb.N[k];
            du[0] += c * lb.dN[k][0];
            du[1] += c * lb.dN[k][1];
        }
    }
};

} // namespace

EpsilonProblem::EpsilonProblem(PeriodicField a_in, PotentialField V_in, SpatialFn f_in,
                               std::string f_description_in, double p_in, double eps_in,
                               std::shared_ptr<const MacroGrid> grid_in,
                               OscillatoryRuleOptions quadrature_in)
    : a(std::move(a_in)), V(std::move(V_in)), f(std::move(f_in)),
      f_description(std::move(f_description_in)), p(p_in), eps(eps_in),
      grid(std::move(grid_in)), quadrature(quadrature_in) {
    if (!(p >= 2.0)) throw ValidationError("EpsilonProblem: p must be >= 2");
    if (!eps_is_admissible(eps))
        throw ValidationError("EpsilonProblem: eps must be the reciprocal of an integer, got "
                              + std::to_string(eps));
    int periods = eps_periods(eps);
    if (grid->elements_per_axis() % periods != 0) {
        std::ostringstream os;
        os << "EpsilonProblem: grid with n = " << grid->elements_per_axis()
           << " does not resolve eps = 1/" << periods << " (n must be a multiple of 1/eps)";
        throw ValidationError(os.str());
    }
    if (a.dim() != grid->dim() || V.dim() != grid->dim())
        throw ValidationError("EpsilonProblem: field/grid dimension mismatch");
    auto report = validate_hypotheses(a, V);
    if (!report.pass)
        throw ValidationError("EpsilonProblem: hypothesis validation failed: " + report.detail);
    if (a.breakpoint_cells() > quadrature.align_cells)
        quadrature.align_cells = a.breakpoint_cells();
    if (V.base().breakpoint_cells() > quadrature.align_cells)
        quadrature.align_cells = V.base().breakpoint_cells();
}

EpsilonAssembler::EpsilonAssembler(const EpsilonProblem& prob, PotentialAssembly form,
                                   const CorrectorPotential* corrector)
    : prob_(&prob), form_(form) {
    if (form_ == PotentialAssembly::integrated_by_parts && corrector == nullptr)
        throw Error("EpsilonAssembler: integrated-by-parts form needs the corrector potential");

    const auto& grid = *prob.grid;
    dof_of_node_ = grid.interior_dof_map();
    ndof_ = grid.num_interior_nodes();

    const auto& g = GaussRule::get(prob.quadrature.gauss_points);
    const double h0 = grid.h(0);
    const double h1 = grid.dim() == 2 ? grid.h(1) : 1.0;
    const double eps = prob.eps;
    int q0 = oscillatory_subcells(h0, eps, prob.quadrature);
    int q1 = grid.dim() == 2 ? oscillatory_subcells(h1, eps, prob.quadrature) : 1;

    auto push = [&](int elem, std::array<double, 2> local, double weight,
                    std::array<double, 2> x) {
        QPoint qp;
        qp.element = elem;
        qp.local = local;
        qp.weight = weight;
        auto y = wrap_unit({x[0] / eps, grid.dim() == 2 ? x[1] / eps : 0.0}, grid.dim());
        qp.a = prob.a.sample(y);
        qp.V = prob.V.sample(y);
        if (corrector != nullptr) {
            qp.G[0] = corrector->g(0).value(y);
            qp.G[1] = grid.dim() == 2 ? corrector->g(1).value(y) : 0.0;
        } else {
            qp.G = {0.0, 0.0};
        }
        qp.f = prob.f(x);
        qpoints_.push_back(qp);
    };

    for (int e = 0; e < grid.num_elements(); ++e) {
        auto origin = grid.element_origin(e);
        if (grid.dim() == 1) {
            double w = h0 / q0;
            for (int s = 0; s < q0; ++s)
                for (std::size_t k = 0; k < g.points.size(); ++k) {
                    double local = (s + g.points[k]) / q0;
                    push(e, {local, 0.0}, w * g.weights[k], {origin[0] + local * h0, 0.0});
                }
        } else {
            double w0 = h0 / q0, w1 = h1 / q1;
            for (int sj = 0; sj < q1; ++sj)
                for (int si = 0; si < q0; ++si)
                    for (std::size_t kj = 0; kj < g.points.size(); ++kj)
                        for (std::size_t ki = 0; ki < g.points.size(); ++ki) {
                            double ls = (si + g.points[ki]) / q0;
                            double lt = (sj + g.points[kj]) / q1;
                            push(e, {ls, lt}, (w0 * g.weights[ki]) * (w1 * g.weights[kj]),
                                 {origin[0] + ls * h0, origin[1] + lt * h1});
                        }
        }
    }
}

int EpsilonAssembler::num_dofs() const { return ndof_; }

Eigen::VectorXd EpsilonAssembler::residual(const Eigen::VectorXd& u, double delta) const {
    AsmCtx ctx(*prob_, delta);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(ndof_);
    for (const QPoint& qp : qpoints_) {
        ctx.basis_at(qp.element, qp.local);
        double uval;
        std::array<double, 2> du;
        ctx.state(dof_of_node_, u, uval, du);

        double w = ctx.flux.weight(du[0] * du[0] + du[1] * du[1]);
        std::array<double, 2> sigma{qp.a * w * du[0], qp.a * w * du[1]};
        double Fu = ctx.pot.F(uval);
        double dFu = form_ == PotentialAssembly::standard ? 0.0 : ctx.pot.dF(uval);

        for (int k = 0; k < ctx.lb.count; ++k) {
            int dof = dof_of_node_[ctx.lb.nodes[k]];
            if (dof < 0) continue;
            double val = sigma[0] * ctx.lb.dN[k][0] + sigma[1] * ctx.lb.dN[k][1]
                         - qp.f * ctx.lb.N[k];
            if (form_ == PotentialAssembly::standard) {
                val += ctx.inv_eps * qp.V * Fu * ctx.lb.N[k];
            } else {
                double gdu = qp.G[0] * du[0] + qp.G[1] * du[1];
                double gdN = qp.G[0] * ctx.lb.dN[k][0] + qp.G[1] * ctx.lb.dN[k][1];
                val -= dFu * gdu * ctx.lb.N[k] + Fu * gdN;
            }
            r[dof] += qp.weight * val;
        }
    }
    return r;
}

Eigen::VectorXd EpsilonAssembler::principal_residual(const Eigen::VectorXd& u,
                                                     double delta) const {
    AsmCtx ctx(*prob_, delta);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(ndof_);
    for (const QPoint& qp : qpoints_) {
        ctx.basis_at(qp.element, qp.local);
        double uval;
        std::array<double, 2> du;
        ctx.state(dof_of_node_, u, uval, du);
        double w = ctx.flux.weight(du[0] * du[0] + du[1] * du[1]);
        for (int k = 0; k < ctx.lb.count; ++k) {
            int dof = dof_of_node_[ctx.lb.nodes[k]];
            if (dof < 0) continue;
            r[dof] += qp.weight * qp.a * w
                      * (du[0] * ctx.lb.dN[k][0] + du[1] * ctx.lb.dN[k][1]);
        }
    }
    return r;
}

Eigen::SparseMatrix<double> EpsilonAssembler::jacobian(const Eigen::VectorXd& u,
                                                       double delta) const {
    AsmCtx ctx(*prob_, delta);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(qpoints_.size() * 16);
    for (const QPoint& qp : qpoints_) {
        ctx.basis_at(qp.element, qp.local);
        double uval;
        std::array<double, 2> du;
        ctx.state(dof_of_node_, u, uval, du);

        std::array<double, 4> D = ctx.dim == 1
                                      ? std::array<double, 4>{ctx.flux.dflux1(du[0]), 0, 0, 0}
                                      : ctx.flux.dflux2(du);
        double dFu = ctx.pot.dF(uval);
        double ddFu = ctx.pot.ddF(uval);

        for (int i = 0; i < ctx.lb.count; ++i) {
            int di = dof_of_node_[ctx.lb.nodes[i]];
            if (di < 0) continue;
            for (int j = 0; j < ctx.lb.count; ++j) {
                int dj = dof_of_node_[ctx.lb.nodes[j]];
                if (dj < 0) continue;
                double val;
                if (ctx.dim == 1) {
                    val = qp.a * D[0] * ctx.lb.dN[j][0] * ctx.lb.dN[i][0];
                } else {
                    double fj0 = D[0] * ctx.lb.dN[j][0] + D[1] * ctx.lb.dN[j][1];
                    double fj1 = D[2] * ctx.lb.dN[j][0] + D[3] * ctx.lb.dN[j][1];
                    val = qp.a * (fj0 * ctx.lb.dN[i][0] + fj1 * ctx.lb.dN[i][1]);
                }
                if (form_ == PotentialAssembly::standard) {
                    val += ctx.inv_eps * qp.V * dFu * ctx.lb.N[j] * ctx.lb.N[i];
                } else {
                    double gdu = qp.G[0] * du[0] + qp.G[1] * du[1];
                    double gdNj = qp.G[0] * ctx.lb.dN[j][0] + qp.G[1] * ctx.lb.dN[j][1];
                    double gdNi = qp.G[0] * ctx.lb.dN[i][0] + qp.G[1] * ctx.lb.dN[i][1];
                    val -= ddFu * ctx.lb.N[j] * gdu * ctx.lb.N[i] + dFu * gdNj * ctx.lb.N[i]
                           + dFu * ctx.lb.N[j] * gdNi;
                }
                trips.emplace_back(di, dj, qp.weight * val);
            }
        }
    }
    Eigen::SparseMatrix<double> J(ndof_, ndof_);
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
}

void EpsilonAssembler::picard_split(const Eigen::VectorXd& u, double delta,
                                    Eigen::SparseMatrix<double>& K, Eigen::VectorXd& b) const {
    if (!has_picard()) throw Error("picard_split: only available for the standard assembly");
    AsmCtx ctx(*prob_, delta);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(qpoints_.size() * 16);
    b = Eigen::VectorXd::Zero(ndof_);
    for (const QPoint& qp : qpoints_) {
        ctx.basis_at(qp.element, qp.local);
        double uval;
        std::array<double, 2> du;
        ctx.state(dof_of_node_, u, uval, du);

        // Frozen weights: flux a w(|Du|^2), potential V |u|^{p-2}; the
        // residual is exactly K(U) U - b with these.
        double wflux = qp.a * ctx.flux.weight(du[0] * du[0] + du[1] * du[1]);
        double wpot = ctx.inv_eps * qp.V
                      * (prob_->p == 2.0 ? 1.0 : std::pow(std::abs(uval), prob_->p - 2.0));

        for (int i = 0; i < ctx.lb.count; ++i) {
            int di = dof_of_node_[ctx.lb.nodes[i]];
            if (di < 0) continue;
            b[di] += qp.weight * qp.f * ctx.lb.N[i];
            for (int j = 0; j < ctx.lb.count; ++j) {
                int dj = dof_of_node_[ctx.lb.nodes[j]];
                if (dj < 0) continue;
                double val = wflux
                                 * (ctx.lb.dN[j][0] * ctx.lb.dN[i][0]
                                    + ctx.lb.dN[j][1] * ctx.lb.dN[i][1])
                             + wpot * ctx.lb.N[j] * ctx.lb.N[i];
                trips.emplace_back(di, dj, qp.weight * val);
            }
        }
    }
    K.resize(ndof_, ndof_);
    K.setFromTriplets(trips.begin(), trips.end());
}

ResidualSystem EpsilonAssembler::system(double delta) const {
    ResidualSystem sys;
    sys.residual = [this, delta](const Eigen::VectorXd& u) { return residual(u, delta); };
    sys.jacobian = [this, delta](const Eigen::VectorXd& u) { return jacobian(u, delta); };
    if (has_picard())
        sys.picard_split = [this, delta](const Eigen::VectorXd& u,
                                         Eigen::SparseMatrix<double>& K, Eigen::VectorXd& b) {
            picard_split(u, delta, K, b);
        };
    return sys;
}

namespace {

std::pair<MacroFunction, SolveStats> run_solve(const EpsilonProblem& prob,
                                               const EpsilonAssembler& assembler,
                                               const SolverConfig& config) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(assembler.num_dofs());
    SolveStats stats = solve_with_continuation(
        [&](double delta) { return assembler.system(delta); }, prob.p, u, config);
    if (!stats.converged)
        throw SolveError("eps-problem solve failed to converge (final residual "
                             + std::to_string(stats.final_residual) + ")",
                         stats);
    return {MacroFunction::from_interior(prob.grid, u), stats};
}

} // namespace

std::pair<MacroFunction, SolveStats> solve_epsilon(const EpsilonProblem& prob,
                                                   const SolverConfig& config) {
    EpsilonAssembler assembler(prob, PotentialAssembly::standard);
    return run_solve(prob, assembler, config);
}

std::pair<MacroFunction, SolveStats> solve_epsilon_ibp(const EpsilonProblem& prob,
                                                       const CorrectorPotential& corrector,
                                                       const SolverConfig& config) {
    EpsilonAssembler assembler(prob, PotentialAssembly::integrated_by_parts, &corrector);
    return run_solve(prob, assembler, config);
}

EpsilonProblem EpsilonTemplate::instantiate(double eps) const {
    if (!eps_is_admissible(eps))
        throw ValidationError("EpsilonTemplate: inadmissible eps " + std::to_string(eps));
    int n = cells_per_period * eps_periods(eps);
    auto grid = std::make_shared<MacroGrid>(dim, n);
    return EpsilonProblem(a, V, f, f_description, p, eps, std::move(grid), quadrature);
}

AprioriScan apriori_scan(const EpsilonTemplate& tmpl, const std::vector<double>& eps_list,
                         const SolverConfig& config, double growth_factor) {
    AprioriScan scan;
    scan.growth_factor = growth_factor;
    for (double eps : eps_list) {
        AprioriRow row;
        row.eps = eps;
        try {
            EpsilonProblem prob = tmpl.instantiate(eps);
            auto [u, stats] = solve_epsilon(prob, config);
            row.lp_norm = lp_norm(u, tmpl.p);
            row.w1p_seminorm = w1p_seminorm(u, tmpl.p);
            row.w1p_norm = std::pow(std::pow(row.lp_norm, tmpl.p)
                                        + std::pow(row.w1p_seminorm, tmpl.p),
                                    1.0 / tmpl.p);
            row.iterations = stats.iterations;
            row.residual = stats.final_residual;
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
            row.ok = false;
        }
        scan.rows.push_back(std::move(row));
    }
    for (std::size_t k = 0; k + 1 < scan.rows.size(); ++k) {
        if (!scan.rows[k].ok || !scan.rows[k + 1].ok) continue;
        if (scan.rows[k + 1].w1p_norm > growth_factor * scan.rows[k].w1p_norm)
            scan.growth_flagged = true;
    }
    return scan;
}

} // namespace homog
