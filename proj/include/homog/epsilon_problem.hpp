#pragma once

#include "homog/corrector.hpp"
#include "homog/field.hpp"
#include "homog/function.hpp"
#include "homog/newton.hpp"
#include "homog/quadrature.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace homog {

using SpatialFn = std::function<double(std::array<double, 2>)>;

/// Oscillating problem
///   -div(a(x/eps) |Du|^{p-2} Du) + (1/eps) V(x/eps) |u|^{p-2} u = f,
///   u = 0 on the boundary,
/// posed on an eps-resolving macro grid. Construction validates (H1)-(H3),
/// requires eps = 1/k, and requires the element count to be a multiple of k
/// so element boundaries align with periods.
struct EpsilonProblem {
    PeriodicField a;
    PotentialField V;
    SpatialFn f;
    std::string f_description;
    double p = 2.0;
    double eps = 1.0;
    std::shared_ptr<const MacroGrid> grid;
    OscillatoryRuleOptions quadrature{};

    EpsilonProblem(PeriodicField a, PotentialField V, SpatialFn f, std::string f_description,
                   double p, double eps, std::shared_ptr<const MacroGrid> grid,
                   OscillatoryRuleOptions quadrature = {});
};

/// Which discrete form carries the potential term: the plain weak form, or
/// the eps-uniform identity obtained by parts from the corrector potential,
///   (1/eps) int V(x/eps) F(u) v = -int G(x/eps).(F'(u) Du v + F(u) Dv).
enum class PotentialAssembly { standard, integrated_by_parts };

/// Assembles residual/Jacobian of the discrete weak form over interior dofs.
/// Coefficient traces are sampled once per quadrature point and cached, so
/// repeated assembly during Newton only re-evaluates the solution-dependent
/// factors.
class EpsilonAssembler {
public:
    EpsilonAssembler(const EpsilonProblem& prob, PotentialAssembly form,
                     const CorrectorPotential* corrector = nullptr);

    int num_dofs() const;

    Eigen::VectorXd residual(const Eigen::VectorXd& u, double delta) const;
    Eigen::SparseMatrix<double> jacobian(const Eigen::VectorXd& u, double delta) const;
    /// Frozen-coefficient split R(U) = K(U) U - b (standard form only).
    bool has_picard() const { return form_ == PotentialAssembly::standard; }
    void picard_split(const Eigen::VectorXd& u, double delta, Eigen::SparseMatrix<double>& K,
                      Eigen::VectorXd& b) const;

    /// Principal (monotone) part <T1 u, v_i>: the a-weighted p-flux alone.
    Eigen::VectorXd principal_residual(const Eigen::VectorXd& u, double delta) const;

    ResidualSystem system(double delta) const;

    const EpsilonProblem& problem() const { return *prob_; }

private:
    struct QPoint {
        int element;
        std::array<double, 2> local; // reference coordinates in [0,1]^d
        double weight;
        double a;                   // a(x/eps)
        double V;                   // V(x/eps)
        std::array<double, 2> G;    // G(x/eps), ibp form only
        double f;
    };

    const EpsilonProblem* prob_;
    PotentialAssembly form_;
    std::vector<QPoint> qpoints_;
    std::vector<int> dof_of_node_;
    int ndof_ = 0;
};

/// Solves the eps-problem from the zero initial guess with delta
/// continuation. Throws SolveError when the final stage fails to converge.
std::pair<MacroFunction, SolveStats> solve_epsilon(const EpsilonProblem& prob,
                                                   const SolverConfig& config = {});

/// Same contract through the integrated-by-parts assembly; `corrector` must
/// be built from the same V.
std::pair<MacroFunction, SolveStats> solve_epsilon_ibp(const EpsilonProblem& prob,
                                                       const CorrectorPotential& corrector,
                                                       const SolverConfig& config = {});

/// Problem family for eps sweeps: everything but eps and the grid, which are
/// derived per sweep entry (n = cells_per_period / eps).
struct EpsilonTemplate {
    PeriodicField a;
    PotentialField V;
    SpatialFn f;
    std::string f_description;
    double p = 2.0;
    int dim = 1;
    int cells_per_period = 32;
    OscillatoryRuleOptions quadrature{};

    EpsilonProblem instantiate(double eps) const;
};

struct AprioriRow {
    double eps = 0.0;
    double lp_norm = 0.0;
    double w1p_seminorm = 0.0;
    double w1p_norm = 0.0;
    int iterations = 0;
    double residual = 0.0;
    bool ok = false;
    std::string error;
};

struct AprioriScan {
    std::vector<AprioriRow> rows;
    double growth_factor = 1.1;
    bool growth_flagged = false; ///< some norm grew by more than the factor
};

/// Runs the Lemma-4.1 boundedness scan over the eps list. Individual solve
/// failures are recorded per row and the scan continues.
AprioriScan apriori_scan(const EpsilonTemplate& tmpl, const std::vector<double>& eps_list,
                         const SolverConfig& config = {}, double growth_factor = 1.1);

} // namespace homog
