#include "homog/harness.hpp"

#include "homog/errors.hpp"
#include "homog/expression.hpp"
#include "homog/flux.hpp"

#include <cmath>
#include <memory>
#include <sstream>

namespace homog {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void check_eps_list(const std::vector<double>& eps_list) {
    if (eps_list.empty()) throw ValidationError("study: empty eps list");
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        if (!eps_is_admissible(eps_list[k]))
            throw ValidationError("study: inadmissible eps " + std::to_string(eps_list[k]));
        if (k > 0 && !(eps_list[k] < eps_list[k - 1]))
            throw ValidationError("study: eps list must be strictly decreasing");
    }
}

// Gauss quadrature of int_Y g dy on the unit cell (d = 1).
double cell_quadrature(const std::function<double(std::array<double, 2>)>& g) {
    const auto& gr = GaussRule::get(4);
    const int cells = 512;
    double total = 0.0;
    for (int e = 0; e < cells; ++e)
        for (std::size_t q = 0; q < gr.points.size(); ++q)
            total += gr.weights[q] / cells * g({(e + gr.points[q]) / cells, 0.0});
    return total;
}

double phi2_mean(const Expression& phi2) {
    return cell_quadrature([&](std::array<double, 2> y) { return phi2.eval(nullptr, y.data()); });
}

// Reference data: the homogenized macro solution plus enough per-point cell
// information to evaluate u1(x, .) integrals against cell test factors.
struct Reference {
    MacroFunction u;
    // p = 2 route
    std::shared_ptr<LinearCorrectors> correctors;
    std::shared_ptr<LinearEffectiveModel> model;
    // p > 2 route
    std::shared_ptr<CellEvaluator> evaluator;
    std::vector<SolveRecord> records;
};

Reference build_reference(const StudySpec& spec) {
    double eps_min = spec.eps_list.back();
    int n_max = spec.cells_per_period * eps_periods(eps_min);
    int n_ref = spec.ref_refinement * n_max;
    auto ref_grid = std::make_shared<MacroGrid>(1, n_ref);

    if (spec.p == 2.0) {
        auto cell_grid = std::make_shared<CellGrid>(1, spec.cell_m);
        auto correctors =
            std::make_shared<LinearCorrectors>(solve_linear_correctors(spec.a, spec.V, cell_grid));
        auto model = std::make_shared<LinearEffectiveModel>(
            build_linear_effective(*correctors, spec.a, spec.V));
        auto [u, res] = solve_macro_linear(*model, spec.f, ref_grid, Ansatz::split);
        SolveRecord rec{"reference_macro_linear", SolveStats{}, true, ""};
        rec.stats.final_residual = res;
        rec.stats.converged = true;
        return Reference{std::move(u), correctors, model, nullptr, {rec}};
    }

    auto cell_grid = std::make_shared<CellGrid>(1, spec.ref_cell_m);
    auto evaluator = std::make_shared<CellEvaluator>(spec.a, spec.V, spec.p, cell_grid,
                                                     spec.solver, spec.quantize);
    auto [pair, stats] = solve_macro_nonlinear(*evaluator, spec.f, ref_grid, spec.macro);
    SolveRecord rec{"reference_macro_nonlinear", stats, true, ""};
    return Reference{std::move(pair.u), nullptr, nullptr, evaluator, {rec}};
}

// Limit-integral sampler: x-quadrature points of a smooth grid carrying the
// reference state and (for p > 2) the cell solution at that state.
struct LimitSampler {
    struct Point {
        double x;
        double w;
        double u;
        double du;
    };
    std::vector<Point> points;
    std::vector<CellFunction> chis; // p > 2 only, one per point
    const Reference* ref;

    // int_Y u1(x_j, y) g(y) dy
    double u1_integral(std::size_t j, const std::function<double(std::array<double, 2>)>& g) const {
        if (ref->evaluator) return cell_integral_against(chis[j], g);
        const auto& c = *ref->correctors;
        return points[j].du * cell_integral_against(c.chi[0], g)
               + points[j].u * cell_integral_against(c.zeta, g);
    }

    // int_Y d_y u1(x_j, y) g(y) dy
    double du1_integral(std::size_t j,
                        const std::function<double(std::array<double, 2>)>& g) const {
        if (ref->evaluator) return cell_gradient_integral_against(chis[j], g, 0);
        const auto& c = *ref->correctors;
        return points[j].du * cell_gradient_integral_against(c.chi[0], g, 0)
               + points[j].u * cell_gradient_integral_against(c.zeta, g, 0);
    }
};

LimitSampler build_limit_sampler(const StudySpec& spec, const Reference& ref) {
    LimitSampler sampler;
    sampler.ref = &ref;
    const auto& g = GaussRule::get(4);
    double h = 1.0 / spec.limit_elements;
    sampler.chis.reserve(static_cast<std::size_t>(spec.limit_elements) * g.points.size());
    const CellFunction* warm = nullptr;
    for (int e = 0; e < spec.limit_elements; ++e)
        for (std::size_t q = 0; q < g.points.size(); ++q) {
            double x = (e + g.points[q]) * h;
            double u = ref.u.value({x, 0.0});
            double du = ref.u.gradient({x, 0.0})[0];
            sampler.points.push_back({x, h * g.weights[q], u, du});
            if (ref.evaluator) {
                CellSolution sol = (*ref.evaluator)(u, {du, 0.0}, warm);
                sampler.chis.push_back(sol.chi);
                warm = &sampler.chis.back();
            }
        }
    return sampler;
}

void finalize_series(ReportSeries& series, const StudySpec& spec, bool oscillatory) {
    if (series.rows.empty()) {
        series.pass = false;
        return;
    }
    series.decreasing = true;
    bool stability_ok = true;
    double prev = 0.0;
    for (std::size_t k = 0; k < series.rows.size(); ++k) {
        auto& row = series.rows[k];
        bool row_monotone = k == 0 || row.gap <= prev;
        if (k > 0 && row.gap > prev) series.decreasing = false;
        bool row_stable = true;
        if (oscillatory) {
            double scale = std::max(std::abs(row.gap), 1e-14);
            row_stable = row.quad_stability <= spec.quad_stability_frac * scale;
        }
        if (!row_stable) stability_ok = false;
        row.pass = row_monotone && row_stable;
        prev = row.gap;
    }
    double first = series.rows.front().gap;
    double last = series.rows.back().gap;
    series.last_over_first = first > 0 ? last / first : 0.0;
    series.pass = stability_ok && (!spec.require_monotone || series.decreasing)
                  && (first == 0.0 || last <= spec.alpha * first)
                  && (last <= spec.final_gap);
}

void note_solve(ConvergenceReport& report, const std::string& label, const SolveStats& stats) {
    report.solves.push_back({label, stats, true, ""});
}

void common_metadata(ConvergenceReport& report, const StudySpec& spec) {
    report.metadata["a"] = spec.a.description();
    report.metadata["V"] = spec.V.base().description();
    report.metadata["f"] = spec.f_description;
    report.metadata["p"] = fmt(spec.p);
    report.metadata["cells_per_period"] = std::to_string(spec.cells_per_period);
    report.metadata["ref_refinement"] = std::to_string(spec.ref_refinement);
    report.metadata["ref_cell_m"] = std::to_string(spec.ref_cell_m);
    report.metadata["cell_m"] = std::to_string(spec.cell_m);
    report.metadata["limit_elements"] = std::to_string(spec.limit_elements);
    report.metadata["subcells_per_period"] = std::to_string(spec.subcells_per_period);
    report.metadata["phi1"] = spec.phi1;
    report.metadata["phi2"] = spec.phi2;
    report.metadata["alpha"] = fmt(spec.alpha);
    report.metadata["solver_tol"] = fmt(spec.solver.tol);
    report.metadata["delta_floor"] = fmt(spec.solver.delta_floor);
    std::ostringstream eps;
    for (std::size_t k = 0; k < spec.eps_list.size(); ++k)
        eps << (k ? "," : "") << fmt(spec.eps_list[k]);
    report.metadata["eps_list"] = eps.str();
}

} // namespace

const ReportSeries* ConvergenceReport::find(const std::string& name) const {
    for (const auto& s : series)
        if (s.name == name) return &s;
    return nullptr;
}

ConvergenceReport study_theorem71(const StudySpec& spec) {
    check_eps_list(spec.eps_list);
    Expression phi1 = Expression::parse(spec.phi1, Expression::kMacro);
    std::vector<Expression> psis;
    for (const auto& text : spec.psi) psis.push_back(Expression::parse(text, Expression::kCell));

    ConvergenceReport report;
    report.study = "theorem71";
    common_metadata(report, spec);

    Reference ref = build_reference(spec);
    for (const auto& rec : ref.records) report.solves.push_back(rec);
    LimitSampler sampler = build_limit_sampler(spec, ref);

    // Pairing limits: int phi1(x) [ Du(x) <psi> + int D_y u1 psi dy ] dx.
    std::vector<double> psi_limits(psis.size(), 0.0);
    for (std::size_t s = 0; s < psis.size(); ++s) {
        auto psi_y = [&](std::array<double, 2> y) { return psis[s].eval(nullptr, y.data()); };
        double psi_mean = cell_quadrature(psi_y);
        double total = 0.0;
        for (std::size_t j = 0; j < sampler.points.size(); ++j) {
            const auto& pt = sampler.points[j];
            double w1 = phi1.eval(std::array<double, 2>{pt.x, 0.0}.data(), nullptr);
            total += pt.w * w1 * (pt.du * psi_mean + sampler.du1_integral(j, psi_y));
        }
        psi_limits[s] = total;
    }

    ReportSeries err_series;
    err_series.name = "error";
    std::vector<ReportSeries> pairing(psis.size());
    for (std::size_t s = 0; s < psis.size(); ++s) pairing[s].name = "pairing_psi" + std::to_string(s);

    OscillatoryRuleOptions quad;
    quad.subcells_per_period = spec.subcells_per_period;

    for (double eps : spec.eps_list) {
        EpsilonTemplate tmpl{spec.a, spec.V, spec.f, spec.f_description,
                             spec.p, 1,      spec.cells_per_period};
        EpsilonProblem prob = tmpl.instantiate(eps);
        auto [u_eps, stats] = solve_epsilon(prob, spec.solver);
        note_solve(report, "eps=" + fmt(eps), stats);

        double e = lp_distance(u_eps, ref.u, spec.p);
        err_series.rows.push_back({eps, e, 0.0, e, 0.0, false, ""});

        for (std::size_t s = 0; s < psis.size(); ++s) {
            auto integrand = [&](std::array<double, 2> x, std::array<double, 2> y) {
                return u_eps.gradient(x)[0] * phi1.eval(x.data(), nullptr)
                       * psis[s].eval(nullptr, y.data());
            };
            auto val = integrate_oscillatory(integrand, eps, *prob.grid, quad);
            pairing[s].rows.push_back({eps, val.value, psi_limits[s],
                                       std::abs(val.value - psi_limits[s]), val.error_estimate,
                                       false, ""});
        }
    }

    finalize_series(err_series, spec, false);
    report.series.push_back(std::move(err_series));
    for (auto& s : pairing) {
        finalize_series(s, spec, true);
        report.series.push_back(std::move(s));
    }
    report.pass = true;
    for (const auto& s : report.series) report.pass = report.pass && s.pass;
    return report;
}

namespace {

Expression parse_centred_phi2(const StudySpec& spec) {
    Expression phi2 = Expression::parse(spec.phi2, Expression::kCell);
    double mean = phi2_mean(phi2);
    if (std::abs(mean) > spec.centring_tol)
        throw CentringError("phi2 = " + spec.phi2 + " violates the centring condition: mean "
                            + fmt(mean) + " exceeds tol " + fmt(spec.centring_tol));
    return phi2;
}

} // namespace

ConvergenceReport study_scaled_pairing(const StudySpec& spec) {
    check_eps_list(spec.eps_list);
    Expression phi1 = Expression::parse(spec.phi1, Expression::kMacro);
    Expression phi2 = parse_centred_phi2(spec);

    ConvergenceReport report;
    report.study = "scaled_pairing";
    common_metadata(report, spec);

    Reference ref = build_reference(spec);
    for (const auto& rec : ref.records) report.solves.push_back(rec);
    LimitSampler sampler = build_limit_sampler(spec, ref);

    auto phi2_y = [&](std::array<double, 2> y) { return phi2.eval(nullptr, y.data()); };
    double limit = 0.0;
    for (std::size_t j = 0; j < sampler.points.size(); ++j) {
        const auto& pt = sampler.points[j];
        limit += pt.w * phi1.eval(std::array<double, 2>{pt.x, 0.0}.data(), nullptr)
                 * sampler.u1_integral(j, phi2_y);
    }

    ReportSeries series;
    series.name = "scaled_pairing";
    OscillatoryRuleOptions quad;
    quad.subcells_per_period = spec.subcells_per_period;

    for (double eps : spec.eps_list) {
        EpsilonTemplate tmpl{spec.a, spec.V, spec.f, spec.f_description,
                             spec.p, 1,      spec.cells_per_period};
        EpsilonProblem prob = tmpl.instantiate(eps);
        auto [u_eps, stats] = solve_epsilon(prob, spec.solver);
        note_solve(report, "eps=" + fmt(eps), stats);

        auto integrand = [&](std::array<double, 2> x, std::array<double, 2> y) {
            return u_eps.value(x) / eps * phi1.eval(x.data(), nullptr)
                   * phi2.eval(nullptr, y.data());
        };
        auto val = integrate_oscillatory(integrand, eps, *prob.grid, quad);
        series.rows.push_back({eps, val.value, limit, std::abs(val.value - limit),
                               val.error_estimate, false, ""});
    }

    finalize_series(series, spec, true);
    report.series.push_back(std::move(series));
    report.pass = report.series.front().pass;
    return report;
}

ConvergenceReport study_lemma61(const StudySpec& spec) {
    check_eps_list(spec.eps_list);
    if (!(spec.p > 2.0))
        throw ValidationError("study_lemma61: requires 2 < p (the p = 2 case is linear)");
    Expression phi1 = Expression::parse(spec.phi1, Expression::kMacro);
    Expression phi2 = parse_centred_phi2(spec);

    ConvergenceReport report;
    report.study = "lemma61";
    common_metadata(report, spec);

    Reference ref = build_reference(spec);
    for (const auto& rec : ref.records) report.solves.push_back(rec);
    LimitSampler sampler = build_limit_sampler(spec, ref);

    PowerNonlinearity pot{spec.p};
    auto phi2_y = [&](std::array<double, 2> y) { return phi2.eval(nullptr, y.data()); };

    // L = int F'(u) phi1 (int u1 phi2 dy) dx
    double limit = 0.0;
    for (std::size_t j = 0; j < sampler.points.size(); ++j) {
        const auto& pt = sampler.points[j];
        limit += pt.w * pot.dF(pt.u) * phi1.eval(std::array<double, 2>{pt.x, 0.0}.data(), nullptr)
                 * sampler.u1_integral(j, phi2_y);
    }

    ReportSeries series;
    series.name = "functional";
    ReportSeries moduli;
    moduli.name = "modulus_ratio";
    OscillatoryRuleOptions quad;
    quad.subcells_per_period = spec.subcells_per_period;

    const double q = spec.p / (spec.p - 1.0);
    const double hold_exp = spec.p < 3.0 ? spec.p - 2.0 : 1.0;

    for (double eps : spec.eps_list) {
        EpsilonTemplate tmpl{spec.a, spec.V, spec.f, spec.f_description,
                             spec.p, 1,      spec.cells_per_period};
        EpsilonProblem prob = tmpl.instantiate(eps);
        auto [u_eps, stats] = solve_epsilon(prob, spec.solver);
        note_solve(report, "eps=" + fmt(eps), stats);

        auto integrand = [&](std::array<double, 2> x, std::array<double, 2> y) {
            return pot.F(u_eps.value(x)) / eps * phi1.eval(x.data(), nullptr)
                   * phi2.eval(nullptr, y.data());
        };
        auto val = integrate_oscillatory(integrand, eps, *prob.grid, quad);
        series.rows.push_back({eps, val.value, limit, std::abs(val.value - limit),
                               val.error_estimate, false, ""});

        // Continuity moduli of F': |F'(u) - F'(u_eps)|_{L^q} against
        // |u - u_eps|_{L^p}^{p-2} (2 < p < 3) or ^1 (p >= 3).
        const auto& grid = u_eps.grid();
        const auto& gr = GaussRule::get(4);
        double num = 0.0;
        for (int e = 0; e < grid.num_elements(); ++e) {
            double x0 = grid.element_origin(e)[0];
            for (std::size_t k = 0; k < gr.points.size(); ++k) {
                double x = x0 + gr.points[k] * grid.h(0);
                double diff = pot.dF(ref.u.value({x, 0.0})) - pot.dF(u_eps.value({x, 0.0}));
                num += grid.h(0) * gr.weights[k] * std::pow(std::abs(diff), q);
            }
        }
        double modulus = std::pow(num, 1.0 / q);
        double denom = std::pow(lp_distance(u_eps, ref.u, spec.p), hold_exp);
        double ratio = denom > 0 ? modulus / denom : 0.0;
        moduli.rows.push_back({eps, modulus, 0.0, ratio, 0.0, false,
                               "ratio = modulus / |u-u_eps|^" + fmt(hold_exp)});
    }

    finalize_series(series, spec, true);

    // Boundedness, not decrease, is the contract for the modulus ratios.
    double bound = spec.ratio_bound;
    if (bound <= 0.0 && !moduli.rows.empty()) bound = 5.0 * std::max(moduli.rows.front().gap, 1e-12);
    moduli.decreasing = false;
    moduli.pass = true;
    for (auto& row : moduli.rows) {
        row.pass = row.gap <= bound;
        moduli.pass = moduli.pass && row.pass;
    }
    if (!moduli.rows.empty())
        moduli.last_over_first =
            moduli.rows.front().gap > 0 ? moduli.rows.back().gap / moduli.rows.front().gap : 0.0;

    report.series.push_back(std::move(series));
    report.series.push_back(std::move(moduli));
    report.pass = true;
    for (const auto& s : report.series) report.pass = report.pass && s.pass;
    return report;
}

} // namespace homog
