// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Tolerances are fixed here, not tuned at run time.

#include "homog/config.hpp"
#include "homog/corrector.hpp"
#include "homog/report_io.hpp"

#include "support/oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace homog;

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Check {
    int id;
    std::string title;
    std::function<Outcome()> run;
};

// ---- shared presets ------------------------------------------------------

PeriodicField trig_a() { return PeriodicField::trig(1, 2.0, 1.0, 1); }
PotentialField trig_V() { return PotentialField(PeriodicField::trig(1, 0.0, 1.0, 1)); }
SpatialFn unit_f() {
    return [](std::array<double, 2>) { return 1.0; };
}

StudySpec criterion3_spec() {
    StudySpec spec;
    spec.a = trig_a();
    spec.V = trig_V();
    spec.f = unit_f();
    spec.f_description = "const(1)";
    spec.p = 3.0;
    spec.eps_list = {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    spec.cells_per_period = 32;
    spec.ref_refinement = 4;
    spec.ref_cell_m = 512;
    spec.limit_elements = 256;
    spec.alpha = 0.5;
    spec.require_monotone = true;
    return spec;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---- criteria ------------------------------------------------------------

// Effective coefficient exactness: abar = sqrt(3) at 1e-6 relative on a
// 2048-node cell grid, in under a second.
Outcome criterion1() {
    auto t0 = std::chrono::steady_clock::now();
    auto grid = std::make_shared<CellGrid>(1, 2048);
    auto a = trig_a();
    PotentialField V(PeriodicField::constant(1, 0.0));
    auto corr = solve_linear_correctors(a, V, grid);
    auto model = build_linear_effective(corr, a, V);
    double rel = std::abs(model.abar[0] - std::sqrt(3.0)) / std::sqrt(3.0);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Outcome out;
    out.pass = rel <= 1e-6 && secs < 1.0;
    out.detail = "abar = " + fmt(model.abar[0]) + ", rel err " + fmt(rel) + ", " + fmt(secs)
                 + " s";
    return out;
}

// Theorem 7.1 sweep at p = 2, V = 0: |u_eps - u|_{L^2} strictly decreasing
// with e(1/64) <= 0.25 e(1/8).
Outcome criterion2() {
    StudySpec spec = criterion3_spec();
    spec.p = 2.0;
    spec.V = PotentialField(PeriodicField::constant(1, 0.0));
    spec.cell_m = 2048;
    spec.alpha = 0.25;
    auto report = study_theorem71(spec);
    const auto* err = report.find("error");
    Outcome out;
    if (err == nullptr || err->rows.size() != 4) {
        out.detail = "missing error series";
        return out;
    }
    bool strict = true;
    for (std::size_t k = 1; k < err->rows.size(); ++k)
        strict = strict && err->rows[k].gap < err->rows[k - 1].gap;
    double ratio = err->rows.back().gap / err->rows.front().gap;
    out.pass = strict && ratio <= 0.25;
    out.detail = "e = [" + fmt(err->rows[0].gap) + ", " + fmt(err->rows[1].gap) + ", "
                 + fmt(err->rows[2].gap) + ", " + fmt(err->rows[3].gap) + "], ratio "
                 + fmt(ratio);
    return out;
}

// Theorem 7.1 sweep at p = 3 with the potential: decreasing with
// final/first <= 0.5.
Outcome criterion3() {
    auto report = study_theorem71(criterion3_spec());
    const auto* err = report.find("error");
    Outcome out;
    if (err == nullptr || err->rows.size() != 4) {
        out.detail = "missing error series";
        return out;
    }
    bool monotone = true;
    for (std::size_t k = 1; k < err->rows.size(); ++k)
        monotone = monotone && err->rows[k].gap <= err->rows[k - 1].gap;
    double ratio = err->rows.back().gap / err->rows.front().gap;
    out.pass = monotone && ratio <= 0.5;
    out.detail = "e = [" + fmt(err->rows[0].gap) + ", " + fmt(err->rows[1].gap) + ", "
                 + fmt(err->rows[2].gap) + ", " + fmt(err->rows[3].gap) + "], ratio "
                 + fmt(ratio);
    return out;
}

// Lemma 4.1 boundedness on the criterion-3 preset.
Outcome criterion4() {
    EpsilonTemplate tmpl{trig_a(), trig_V(), unit_f(), "const(1)", 3.0, 1, 32};
    auto scan = apriori_scan(tmpl, {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64});
    Outcome out;
    double first_two = 0.0, worst = 0.0;
    bool ok = true;
    for (std::size_t k = 0; k < scan.rows.size(); ++k) {
        if (!scan.rows[k].ok) {
            out.detail = "row failed: " + scan.rows[k].error;
            return out;
        }
        if (k < 2) first_two = std::max(first_two, scan.rows[k].w1p_norm);
        worst = std::max(worst, scan.rows[k].w1p_norm);
    }
    ok = worst <= 1.1 * first_two;
    out.pass = ok;
    out.detail = "max |u|_{W^{1,3}} = " + fmt(worst) + " vs 1.1 x " + fmt(first_two);
    return out;
}

// Lemma 6.1 functional: decreasing gap, oracle-fixed final threshold, and
// the quadrature-stability self check.
Outcome criterion5() {
    StudySpec spec = criterion3_spec();
    // Pre-registered from the oracle run of this preset (gap(1/64) was
    // observed at 2.0e-5 with first-to-last ratio ~8); fixed here.
    spec.final_gap = 4.0e-5;
    auto report = study_lemma61(spec);
    const auto* fn = report.find("functional");
    Outcome out;
    if (fn == nullptr || fn->rows.size() != 4) {
        out.detail = "missing functional series";
        return out;
    }
    bool monotone = true, stable = true;
    for (std::size_t k = 0; k < fn->rows.size(); ++k) {
        if (k > 0) monotone = monotone && fn->rows[k].gap <= fn->rows[k - 1].gap;
        stable = stable
                 && fn->rows[k].quad_stability
                        <= 0.01 * std::max(std::abs(fn->rows[k].gap), 1e-14);
    }
    double final_gap = fn->rows.back().gap;
    out.pass = monotone && stable && final_gap <= spec.final_gap;
    out.detail = "gaps = [" + fmt(fn->rows[0].gap) + ", " + fmt(fn->rows[1].gap) + ", "
                 + fmt(fn->rows[2].gap) + ", " + fmt(fn->rows[3].gap) + "], final <= "
                 + fmt(spec.final_gap) + (stable ? ", quad stable" : ", quad UNSTABLE");
    return out;
}

// Scaled pairing (5.2): decreasing gap; non-centred phi2 hard-rejected.
Outcome criterion6() {
    StudySpec spec = criterion3_spec();
    spec.p = 2.0;
    spec.cell_m = 1024;
    auto report = study_scaled_pairing(spec);
    Outcome out;
    const auto& rows = report.series.at(0).rows;
    if (rows.size() != 4) {
        out.detail = "missing rows";
        return out;
    }
    bool monotone = true;
    for (std::size_t k = 1; k < rows.size(); ++k)
        monotone = monotone && rows[k].gap <= rows[k - 1].gap;

    bool rejected = false;
    StudySpec bad = spec;
    bad.phi2 = "1 + sin(2*pi*y1)";
    try {
        study_scaled_pairing(bad);
    } catch (const CentringError&) {
        rejected = true;
    }
    out.pass = monotone && rows.back().gap <= 0.5 * rows.front().gap && rejected;
    out.detail = "gaps = [" + fmt(rows[0].gap) + ", " + fmt(rows[1].gap) + ", "
                 + fmt(rows[2].gap) + ", " + fmt(rows[3].gap) + "], non-centred "
                 + (rejected ? "rejected" : "NOT rejected");
    return out;
}

// Cell uniqueness at (p, theta, xi) = (3, 1, 1): distinct inits agree to
// 1e-8 in the L^3 gradient norm.
Outcome criterion7() {
    CellAssembler assembler(trig_a(), trig_V(), 3.0, std::make_shared<CellGrid>(1, 1024));
    auto zero = CellFunction::zero(assembler.grid_ptr());
    auto smooth = CellFunction::interpolate(
        assembler.grid_ptr(),
        [](std::array<double, 2> y) {
            return 0.1 * std::sin(kTwoPi * y[0]) + 0.05 * std::cos(2.0 * kTwoPi * y[0]);
        },
        true);
    SolverConfig cfg;
    cfg.tol = 1e-11; // above the assembly rounding floor at m = 1024
    auto check = uniqueness_check(assembler, 1.0, {1.0, 0.0}, zero, smooth, cfg);
    Outcome out;
    out.pass = check.stats1.converged && check.stats2.converged
               && check.gradient_discrepancy <= 1e-8;
    out.detail = "|D chi1 - D chi2|_{L^3} = " + fmt(check.gradient_discrepancy)
                 + ", |chi1 - chi2|_{L^3} = " + fmt(check.value_discrepancy);
    return out;
}

// FEM cell solution against the constant-flux + root-find oracle at 1e-6
// relative on nine (theta, xi) pairs spanning signs and magnitudes.
Outcome criterion8() {
    auto a_fn = [](double y) { return 2.0 + std::sin(kTwoPi * y); };
    auto v_fn = [](double y) { return std::sin(kTwoPi * y); };
    CellAssembler assembler(trig_a(), trig_V(), 3.0, std::make_shared<CellGrid>(1, 4096));
    SolverConfig cfg;
    cfg.tol = 3e-11;
    const std::array<std::array<double, 2>, 9> pairs{{{1.0, 1.0},
                                                      {1.0, -1.0},
                                                      {-1.0, 0.5},
                                                      {0.5, -1.0},
                                                      {2.0, 2.0},
                                                      {-2.0, -0.5},
                                                      {1.5, 0.25},
                                                      {-1.5, -2.0},
                                                      {0.7, 3.0}}};
    double worst_q = 0.0, worst_v = 0.0;
    for (const auto& tp : pairs) {
        auto fem = solve_nonlinear_cell(assembler, tp[0], {tp[1], 0.0}, cfg);
        auto oracle = oracles::cell_flux_oracle(a_fn, v_fn, 3.0, tp[0], tp[1]);
        worst_q = std::max(worst_q, std::abs(fem.q[0] - oracle.q) / std::abs(oracle.q));
        worst_v = std::max(worst_v, std::abs(fem.v - oracle.v) / std::abs(oracle.v));
    }
    Outcome out;
    out.pass = worst_q <= 1e-6 && worst_v <= 1e-6;
    out.detail = "9 pairs, worst rel err: q " + fmt(worst_q) + ", v " + fmt(worst_v);
    return out;
}

// Assembly equivalence of the weak form and the integrated-by-parts form
// on the criterion-3 preset at eps = 1/8 and 1/16.
Outcome criterion9() {
    auto corrector = solve_corrector_potential(trig_V(), std::make_shared<CellGrid>(1, 4096));
    Outcome out;
    out.pass = true;
    for (double eps : {1.0 / 8, 1.0 / 16}) {
        int n = 32 * eps_periods(eps);
        EpsilonProblem prob(trig_a(), trig_V(), unit_f(), "const(1)", 3.0, eps,
                            std::make_shared<MacroGrid>(1, n));
        auto [u_std, s1] = solve_epsilon(prob);
        auto [u_ibp, s2] = solve_epsilon_ibp(prob, corrector);
        double diff = lp_distance(u_std, u_ibp, 2.0);
        out.pass = out.pass && diff <= 1e-5;
        out.detail += (out.detail.empty() ? "" : "; ") + std::string("eps=") + fmt(eps)
                      + ": |diff|_{L^2} = " + fmt(diff);
    }
    return out;
}

// Assembled Jacobians against central finite differences at random states,
// p in {2, 2.5, 3}, delta at the schedule floor.
Outcome criterion10() {
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> mag(0.5, 1.5);
    std::uniform_int_distribution<int> sign(0, 1);
    double worst = 0.0;
    const double delta = SolverConfig{}.delta_floor;
    for (double p : {2.0, 2.5, 3.0}) {
        EpsilonProblem prob(trig_a(), trig_V(), unit_f(), "const(1)", p, 1.0 / 8,
                            std::make_shared<MacroGrid>(1, 32));
        EpsilonAssembler standard(prob, PotentialAssembly::standard);
        for (int state = 0; state < 10; ++state) {
            Eigen::VectorXd u(standard.num_dofs());
            double s = sign(rng) ? 1.0 : -1.0;
            for (int i = 0; i < u.size(); ++i) u[i] = s * mag(rng);
            worst = std::max(worst, check_jacobian(standard.system(delta), u, 1e-6));
        }
    }
    Outcome out;
    out.pass = worst <= 1e-5;
    out.detail = "max relative discrepancy " + fmt(worst) + " over 30 states";
    return out;
}

// Coupled-system residuals and the monolithic oracle at (n, m) = (16, 64).
Outcome criterion11() {
    auto cell_grid = std::make_shared<CellGrid>(1, 64);
    SolverConfig cell_cfg;
    cell_cfg.tol = 1e-12;
    CellEvaluator ev(trig_a(), trig_V(), 3.0, cell_grid, cell_cfg);
    auto grid = std::make_shared<MacroGrid>(1, 16);
    MacroNonlinearOptions opts;
    opts.tol = 1e-10;
    auto [pair, stats] = solve_macro_nonlinear(ev, unit_f(), grid, opts);
    auto [rg, rl] = residual_two_scale(pair, ev, unit_f(), cell_cfg.delta_floor);

    oracles::MonolithicOptions mono_opts;
    mono_opts.macro_n = 16;
    mono_opts.cell_m = 64;
    auto mono = oracles::solve_monolithic_coupled(trig_a(), trig_V(), 3.0, unit_f(), mono_opts);
    double diff = lp_distance(pair.u, mono.u, 3.0);

    Outcome out;
    out.pass = rg <= 1e-8 && rl <= 1e-8 && mono.converged && diff <= 1e-6;
    out.detail = "residuals: global " + fmt(rg) + ", local " + fmt(rl)
                 + "; |u - u_mono|_{L^3} = " + fmt(diff);
    return out;
}

// Consistency at p = 2: the nonlinear pipeline reproduces the linear
// effective coefficient and macro solution at 1e-6 relative.
Outcome criterion12() {
    const int m = 1024;
    auto cell_grid = std::make_shared<CellGrid>(1, m);
    auto a = trig_a();
    auto V = trig_V();
    auto corr = solve_linear_correctors(a, V, cell_grid);
    auto model = build_linear_effective(corr, a, V);

    SolverConfig cfg;
    cfg.tol = 1e-11;
    CellEvaluator ev(a, V, 2.0, cell_grid, cfg);
    double abar_nl = ev(0.0, {1.0, 0.0}).q[0];
    double rel_abar = std::abs(abar_nl - model.abar[0]) / model.abar[0];

    auto grid = std::make_shared<MacroGrid>(1, 128);
    auto [u_lin, res] = solve_macro_linear(model, unit_f(), grid, Ansatz::split);
    MacroNonlinearOptions opts;
    opts.tol = 1e-11;
    auto [pair, stats] = solve_macro_nonlinear(ev, unit_f(), grid, opts);
    double rel_u = lp_distance(pair.u, u_lin, 2.0) / lp_norm(u_lin, 2.0);

    Outcome out;
    out.pass = rel_abar <= 1e-6 && rel_u <= 1e-6;
    out.detail = "abar rel " + fmt(rel_abar) + ", macro solution rel " + fmt(rel_u);
    return out;
}

} // namespace

int main() {
    std::vector<Check> checks = {
        {1, "effective coefficient exactness (1D, p = 2)", criterion1},
        {2, "Theorem 7.1 sweep (1D, p = 2, V = 0)", criterion2},
        {3, "Theorem 7.1 sweep (1D, p = 3, potential on)", criterion3},
        {4, "a priori boundedness over the eps list", criterion4},
        {5, "Lemma 6.1 functional convergence", criterion5},
        {6, "scaled two-scale pairing (5.2)", criterion6},
        {7, "nonlinear cell uniqueness", criterion7},
        {8, "1D nonlinear cell oracle", criterion8},
        {9, "assembly equivalence (weak form vs by parts)", criterion9},
        {10, "Jacobian correctness against finite differences", criterion10},
        {11, "coupled-system residual and monolithic oracle", criterion11},
        {12, "consistency of the nonlinear pipeline at p = 2", criterion12},
    };

    int failures = 0;
    for (const auto& check : checks) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = check.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %2d: %s (%s) [%.1f s]\n", out.pass ? "PASS" : "FAIL",
                    check.id, check.title.c_str(), out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
