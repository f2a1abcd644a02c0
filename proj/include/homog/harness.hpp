#pragma once

#include "homog/effective_model.hpp"

#include <limits>
#include <map>
#include <string>
#include <vector>

namespace homog {

/// Sweep description for the convergence studies. All studies are d = 1; the
/// eps list must be strictly decreasing reciprocals of integers.
struct StudySpec {
    PeriodicField a = PeriodicField::constant(1, 1.0);
    PotentialField V{PeriodicField::constant(1, 0.0)};
    SpatialFn f = [](std::array<double, 2>) { return 1.0; };
    std::string f_description = "const(1)";
    double p = 2.0;

    std::vector<double> eps_list{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    int cells_per_period = 32; ///< eps-solve grids use n = cells_per_period / eps
    int cell_m = 256;          ///< cell grid for correctors at p = 2

    // Reference solution settings: the homogenized reference lives on a grid
    // `ref_refinement` times finer than the finest eps grid.
    int ref_refinement = 4;
    int ref_cell_m = 512; ///< cell grid for the reference evaluator (p > 2)
    int limit_elements = 256; ///< smooth x-quadrature grid for limit integrals

    // Test-function presets (expressions in x1 / y1).
    std::string phi1 = "x1*(1-x1)";
    std::string phi2 = "sin(2*pi*y1)";
    std::vector<std::string> psi{"sin(2*pi*y1)"};
    double centring_tol = 1e-10;

    // Pass thresholds: gaps must decrease monotonically (when required) and
    // finish at no more than alpha times the first row; final_gap, when
    // finite, additionally bounds the last row.
    double alpha = 0.5;
    bool require_monotone = true;
    double final_gap = std::numeric_limits<double>::infinity();
    double quad_stability_frac = 0.01;
    double ratio_bound = 0.0; ///< 0 = auto (5x the first row's modulus ratio)

    int subcells_per_period = 16;
    SolverConfig solver;
    MacroNonlinearOptions macro;
    double quantize = 0.0; ///< memo quantization for the reference evaluator
};

struct ReportRow {
    double eps = 0.0;
    double value = 0.0;
    double limit = 0.0;
    double gap = 0.0;
    double quad_stability = 0.0;
    bool pass = false;
    std::string note;
};

struct ReportSeries {
    std::string name;
    std::vector<ReportRow> rows;
    bool decreasing = false;
    double last_over_first = 0.0;
    bool pass = false;
};

struct SolveRecord {
    std::string label;
    SolveStats stats;
    bool ok = true;
    std::string error;
};

struct ConvergenceReport {
    std::string study;
    std::vector<ReportSeries> series;
    std::vector<SolveRecord> solves;
    std::map<std::string, std::string> metadata;
    bool pass = false;

    const ReportSeries* find(const std::string& name) const;
};

/// Theorem 7.1 sweep: e(eps) = |u_eps - u|_{L^p} plus, per psi preset, the
/// gradient two-scale pairing gap against int (Du + D_y u1) psi.
ConvergenceReport study_theorem71(const StudySpec& spec);

/// Scaled pairing (5.2): int (u_eps/eps) phi1 phi2(x/eps) against
/// int int u1 phi1 phi2. Non-centred phi2 is rejected before any solve.
ConvergenceReport study_scaled_pairing(const StudySpec& spec);

/// Lemma 6.1 functional: int (F(u_eps)/eps) phi1 phi2(x/eps) against
/// int int F'(u) u1 phi1 phi2, plus the continuity-modulus ratio series of
/// F' (Holder for 2 < p < 3, Lipschitz for p >= 3). Requires p > 2.
ConvergenceReport study_lemma61(const StudySpec& spec);

} // namespace homog
