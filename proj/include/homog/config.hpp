#pragma once

#include "homog/harness.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace homog {

/// Parsed and validated run configuration. Flat INI sections with typed
/// values; unknown keys are hard errors so typos never pass silently.
/// `--set section.key=value` overrides apply before validation.
struct RunConfig {
    // [fields]
    std::string a_text = "const(1)";
    std::string v_text = "const(0)";
    double mean_tol = 1e-12;
    std::string a_matrix_csv;
    int a_matrix_m = 0;

    // [problem]
    int d = 1;
    double p = 2.0;
    std::string f_text = "const(1)";
    std::string form = "standard"; ///< eps assembly: standard | ibp

    // [grids]
    int n = 64;
    int m = 256;
    double eps = 0.125;
    std::vector<double> eps_list{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    int cells_per_period = 32;
    int corrector_m = 2048;

    // [solver]
    SolverConfig solver;
    MacroNonlinearOptions macro;
    double quantize = 0.0;

    // [study]
    std::vector<std::string> studies{"theorem71"};
    std::string phi1 = "x1*(1-x1)";
    std::string phi2 = "sin(2*pi*y1)";
    std::vector<std::string> psi{"sin(2*pi*y1)"};
    double alpha = 0.5;
    bool require_monotone = true;
    double final_gap = std::numeric_limits<double>::infinity();
    double quad_stability_frac = 0.01;
    double ratio_bound = 0.0;
    int subcells_per_period = 16;
    int ref_refinement = 4;
    int ref_cell_m = 512;
    int limit_elements = 256;
    double centring_tol = 1e-10;
    std::string ansatz = "split";
    std::vector<double> thetas{1.0};
    std::vector<double> xis{1.0};
    double growth_factor = 1.1;

    // [output]
    std::string out_dir = "out";
    std::vector<std::string> formats{"csv", "json"};

    /// Parses the INI file, applies overrides ("section.key=value"), and
    /// validates. Throws ConfigError with line/field anchors.
    static RunConfig load(const std::string& path, const std::vector<std::string>& overrides = {});
    /// Parses from an already-read string (tests); `origin` names the source.
    static RunConfig parse(const std::string& text, const std::string& origin,
                           const std::vector<std::string>& overrides = {});

    /// Full resolved snapshot, defaults included, in fixed field order.
    nlohmann::ordered_json resolved() const;

    PeriodicField make_a() const;
    PotentialField make_v() const;
    SpatialFn make_f() const;
    StudySpec study_spec() const;
};

/// Parses a coefficient-field value: const(c), trig(A,B,k), prod_trig(A,B,k),
/// piecewise(v1,...), csv:path, or a custom expression in y1/y2.
PeriodicField parse_field(const std::string& text, int dim);

} // namespace homog
