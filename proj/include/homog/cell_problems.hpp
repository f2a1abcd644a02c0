#pragma once

#include "homog/field.hpp"
#include "homog/function.hpp"
#include "homog/newton.hpp"

#include <array>
#include <map>
#include <memory>
#include <optional>

namespace homog {

/// Linear (p = 2) cell correctors: chi_j solves -div(a(D chi_j + e_j)) = 0,
/// zeta solves -div(a D zeta) = -V; all Y-periodic with zero mean.
struct LinearCorrectors {
    std::array<CellFunction, 2> chi;
    CellFunction zeta;
    double residual = 0.0; ///< max algebraic residual over the d+1 solves
};

LinearCorrectors solve_linear_correctors(const PeriodicField& a, const PotentialField& V,
                                         std::shared_ptr<const CellGrid> grid);
LinearCorrectors solve_linear_correctors(const MatrixPeriodicField& a, const PotentialField& V,
                                         std::shared_ptr<const CellGrid> grid);

/// Parameter-dependent nonlinear cell solution at macro state (theta, xi):
/// chi solves -div_y(a |xi + D chi|^{p-2} (xi + D chi)) = -V F(theta) over
/// the zero-mean periodic space; q and v are the induced effective flux and
/// potential coupling.
struct CellSolution {
    double theta = 0.0;
    std::array<double, 2> xi{0.0, 0.0};
    CellFunction chi;
    std::array<double, 2> q{0.0, 0.0}; ///< int_Y A(y, xi + D chi) dy
    double v = 0.0;                    ///< int_Y V chi dy
    double residual = 0.0;             ///< l_inf of the unconstrained residual
    SolveStats stats;
};

/// Residual/Jacobian assembly of the nonlinear cell equation over the nodal
/// basis (the zero-mean constraint is appended by the solver). Coefficient
/// samples are cached per quadrature point.
class CellAssembler {
public:
    CellAssembler(PeriodicField a, PotentialField V, double p,
                  std::shared_ptr<const CellGrid> grid, int gauss_points = 4);

    const CellGrid& grid() const { return *grid_; }
    std::shared_ptr<const CellGrid> grid_ptr() const { return grid_; }
    double p() const { return p_; }
    const PeriodicField& a() const { return a_; }
    const PotentialField& V() const { return V_; }

    Eigen::VectorXd residual(double theta, const std::array<double, 2>& xi,
                             const Eigen::VectorXd& chi, double delta) const;
    Eigen::SparseMatrix<double> jacobian(const std::array<double, 2>& xi,
                                         const Eigen::VectorXd& chi, double delta) const;
    void picard_split(double theta, const std::array<double, 2>& xi, const Eigen::VectorXd& chi,
                      double delta, Eigen::SparseMatrix<double>& K, Eigen::VectorXd& b) const;

    /// int_Y a w(|xi + D chi|^2) (xi + D chi) dy, the effective flux.
    std::array<double, 2> flux_average(const std::array<double, 2>& xi,
                                       const Eigen::VectorXd& chi, double delta) const;
    /// int_Y a w(|xi + D chi|^2) dy, the frozen scalar weight for macro Picard.
    double weight_average(const std::array<double, 2>& xi, const Eigen::VectorXd& chi,
                          double delta) const;
    /// int_Y a dy.
    double coefficient_mean() const;
    /// int_Y V chi dy.
    double coupling(const Eigen::VectorXd& chi) const;

    const Eigen::VectorXd& mass_weights() const { return mass_weights_; }

private:
    PeriodicField a_;
    PotentialField V_;
    double p_;
    std::shared_ptr<const CellGrid> grid_;

    struct QPoint {
        int element;
        std::array<double, 2> local;
        double weight;
        double a;
        double V;
    };
    std::vector<QPoint> qpoints_;
    Eigen::VectorXd v_load_; ///< int_Y V psi_i
    Eigen::VectorXd mass_weights_;
};

/// Solves the nonlinear cell problem with delta continuation from the zero
/// (or given) initial guess. The Fredholm gate rejects data whose discrete
/// mean of V F(theta) exceeds V's mean tolerance. Throws SolveError on
/// non-convergence and ValidationError on gate failures.
CellSolution solve_nonlinear_cell(const CellAssembler& assembler, double theta,
                                  const std::array<double, 2>& xi, const SolverConfig& config,
                                  const CellFunction* init = nullptr);

struct UniquenessCheck {
    double gradient_discrepancy = 0.0; ///< |D chi_1 - D chi_2|_{L^p(Y)}
    double value_discrepancy = 0.0;    ///< |chi_1 - chi_2|_{L^p(Y)}
    SolveStats stats1, stats2;
};

/// Solves twice from two distinct starts and reports the Lp discrepancies
/// of the solutions and their gradients (both should vanish: the monotone
/// flux makes the cell solution unique).
UniquenessCheck uniqueness_check(const CellAssembler& assembler, double theta,
                                 const std::array<double, 2>& xi, const CellFunction& init1,
                                 const CellFunction& init2, const SolverConfig& config);

/// On-demand cell-solution evaluator with an optional memo table keyed by
/// quantized (theta, xi). Memoized entries are always solved from the zero
/// init at the quantized key, so the table is a pure function of the key;
/// with quantize_step == 0 the memo is bypassed and callers may pass a warm
/// start instead.
class CellEvaluator {
public:
    CellEvaluator(PeriodicField a, PotentialField V, double p,
                  std::shared_ptr<const CellGrid> grid, SolverConfig config,
                  double quantize_step = 0.0);

    const CellAssembler& assembler() const { return assembler_; }
    double p() const { return assembler_.p(); }
    int dim() const { return assembler_.grid().dim(); }
    double quantize_step() const { return quantize_step_; }

    /// Memoized evaluation (quantize_step > 0) or a direct solve.
    CellSolution operator()(double theta, const std::array<double, 2>& xi,
                            const CellFunction* warm = nullptr) const;

    std::size_t memo_size() const { return memo_.size(); }

private:
    CellAssembler assembler_;
    SolverConfig config_;
    double quantize_step_;
    mutable std::map<std::array<long long, 3>, CellSolution> memo_;
};

} // namespace homog
