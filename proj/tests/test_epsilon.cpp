#include "homog/corrector.hpp"
#include "homog/epsilon_problem.hpp"
#include "homog/errors.hpp"

#include "doctest.h"

#include <cmath>

using namespace homog;

namespace {

EpsilonProblem criterion_problem(double p, double eps, int cells_per_period) {
    auto a = PeriodicField::trig(1, 2.0, 1.0, 1);
    PotentialField V(PeriodicField::trig(1, 0.0, 1.0, 1));
    int n = cells_per_period * eps_periods(eps);
    return EpsilonProblem(a, V, [](std::array<double, 2>) { return 1.0; }, "const(1)", p, eps,
                          std::make_shared<MacroGrid>(1, n));
}

} // namespace

TEST_CASE("solve_epsilon: zero load gives the zero solution") {
    auto a = PeriodicField::trig(1, 2.0, 1.0, 1);
    PotentialField V(PeriodicField::trig(1, 0.0, 1.0, 1));
    EpsilonProblem prob(a, V, [](std::array<double, 2>) { return 0.0; }, "const(0)", 3.0,
                        1.0 / 8, std::make_shared<MacroGrid>(1, 64));
    auto [u, stats] = solve_epsilon(prob);
    CHECK(stats.converged);
    CHECK(u.nodal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solve_epsilon: Poisson closed form at p = 2") {
    auto a = PeriodicField::constant(1, 1.0);
    PotentialField V(PeriodicField::constant(1, 0.0));
    int n = 64;
    EpsilonProblem prob(a, V, [](std::array<double, 2>) { return 1.0; }, "const(1)", 2.0,
                        1.0 / 8, std::make_shared<MacroGrid>(1, n));
    auto [u, stats] = solve_epsilon(prob);
    CHECK(stats.converged);
    CHECK(u.value({0.5, 0.0}) == doctest::Approx(0.125).epsilon(1e-10));
    // boundary nodes are exactly zero
    CHECK(u.nodal()[0] == 0.0);
    CHECK(u.nodal()[n] == 0.0);
}

TEST_CASE("solve_epsilon: scaling sanity, doubling f doubles u at p = 2") {
    auto a = PeriodicField::trig(1, 2.0, 1.0, 1);
    PotentialField V(PeriodicField::trig(1, 0.0, 1.0, 1));
    auto grid = std::make_shared<MacroGrid>(1, 64);
    EpsilonProblem p1(a, V, [](std::array<double, 2>) { return 1.0; }, "const(1)", 2.0, 1.0 / 8,
                      grid);
    EpsilonProblem p2(a, V, [](std::array<double, 2>) { return 2.0; }, "const(2)", 2.0, 1.0 / 8,
                      grid);
    auto [u1, s1] = solve_epsilon(p1);
    auto [u2, s2] = solve_epsilon(p2);
    CHECK((u2.nodal() - 2.0 * u1.nodal()).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("admissibility gates: eps and grid resolution") {
    auto a = PeriodicField::constant(1, 1.0);
    PotentialField V(PeriodicField::constant(1, 0.0));
    auto f = [](std::array<double, 2>) { return 1.0; };
    CHECK_THROWS_AS(EpsilonProblem(a, V, f, "const(1)", 2.0, 0.3,
                                   std::make_shared<MacroGrid>(1, 30)),
                    ValidationError);
    // n = 20 is not a multiple of 1/eps = 8
    CHECK_THROWS_AS(EpsilonProblem(a, V, f, "const(1)", 2.0, 1.0 / 8,
                                   std::make_shared<MacroGrid>(1, 20)),
                    ValidationError);
    CHECK_THROWS_AS(EpsilonProblem(a, V, f, "const(1)", 1.5, 1.0 / 8,
                                   std::make_shared<MacroGrid>(1, 16)),
                    ValidationError);
}

TEST_CASE("assembly equivalence: potential terms agree at fixed u") {
    // The (2.2)-form and the integrated-by-parts form produce the same
    // residual vector up to the corrector-grid consistency error, which
    // scales like (1/eps) m^{-2}; refining the corrector shrinks it.
    for (double p : {2.0, 3.0}) {
        EpsilonProblem prob = criterion_problem(p, 1.0 / 8, 16);
        EpsilonAssembler std_asm(prob, PotentialAssembly::standard);
        // a smooth sign-definite state (a zero crossing inside an element
        // would put an |u|-kink under the quadrature and cap the agreement)
        const auto& nodes = prob.grid->interior_nodes();
        Eigen::VectorXd u(std_asm.num_dofs());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            double x = prob.grid->node_coords(nodes[i])[0];
            u[static_cast<Eigen::Index>(i)] = 0.3 + 0.1 * std::sin(6.28318530717958648 * x);
        }
        Eigen::VectorXd r_std = std_asm.residual(u, 1e-8);

        double prev = 1e9;
        for (int m : {512, 2048}) {
            auto corrector = solve_corrector_potential(prob.V, std::make_shared<CellGrid>(1, m));
            EpsilonAssembler ibp_asm(prob, PotentialAssembly::integrated_by_parts, &corrector);
            double diff = (r_std - ibp_asm.residual(u, 1e-8)).lpNorm<Eigen::Infinity>();
            CHECK(diff <= prev / 8.0); // expected factor 16 per 4x refinement
            prev = diff;
        }
        CHECK(prev <= 1e-5);
    }
}

TEST_CASE("assembly equivalence: V = 0 makes both paths identical") {
    auto a = PeriodicField::trig(1, 2.0, 1.0, 1);
    PotentialField V0(PeriodicField::constant(1, 0.0));
    EpsilonProblem prob(a, V0, [](std::array<double, 2>) { return 1.0; }, "const(1)", 3.0,
                        1.0 / 8, std::make_shared<MacroGrid>(1, 64));
    auto corrector = solve_corrector_potential(V0, std::make_shared<CellGrid>(1, 64));
    EpsilonAssembler std_asm(prob, PotentialAssembly::standard);
    EpsilonAssembler ibp_asm(prob, PotentialAssembly::integrated_by_parts, &corrector);
    Eigen::VectorXd u = Eigen::VectorXd::Constant(std_asm.num_dofs(), 0.1);
    CHECK((std_asm.residual(u, 1e-6) - ibp_asm.residual(u, 1e-6)).lpNorm<Eigen::Infinity>()
          <= 1e-14);
}

TEST_CASE("solve_epsilon vs solve_epsilon_ibp cross-validation") {
    for (double p : {2.0, 3.0}) {
        EpsilonProblem prob = criterion_problem(p, 1.0 / 8, 32);
        auto corrector = solve_corrector_potential(prob.V, std::make_shared<CellGrid>(1, 4096));
        auto [u_std, s1] = solve_epsilon(prob);
        auto [u_ibp, s2] = solve_epsilon_ibp(prob, corrector);
        CHECK(s1.converged);
        CHECK(s2.converged);
        CHECK(lp_distance(u_std, u_ibp, 2.0) <= 1e-5);
    }
}

TEST_CASE("apriori_scan: boundedness on the criterion preset") {
    EpsilonTemplate tmpl{PeriodicField::trig(1, 2.0, 1.0, 1),
                         PotentialField(PeriodicField::trig(1, 0.0, 1.0, 1)),
                         [](std::array<double, 2>) { return 1.0; },
                         "const(1)",
                         2.0,
                         1,
                         16};
    auto scan = apriori_scan(tmpl, {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64});
    REQUIRE(scan.rows.size() == 4);
    for (const auto& row : scan.rows) CHECK(row.ok);
    CHECK_FALSE(scan.growth_flagged);
    double first_two = std::max(scan.rows[0].w1p_norm, scan.rows[1].w1p_norm);
    for (const auto& row : scan.rows) CHECK(row.w1p_norm <= 1.1 * first_two);
}

TEST_CASE("apriori_scan: V = 0 norms are eps-independent up to discretization") {
    EpsilonTemplate tmpl{PeriodicField::trig(1, 2.0, 1.0, 1),
                         PotentialField(PeriodicField::constant(1, 0.0)),
                         [](std::array<double, 2>) { return 1.0; },
                         "const(1)",
                         2.0,
                         1,
                         16};
    auto scan = apriori_scan(tmpl, {1.0 / 4, 1.0 / 8, 1.0 / 16});
    double lo = 1e30, hi = 0.0;
    for (const auto& row : scan.rows) {
        REQUIRE(row.ok);
        lo = std::min(lo, row.w1p_norm);
        hi = std::max(hi, row.w1p_norm);
    }
    CHECK(hi / lo <= 1.02);
}

TEST_CASE("apriori_scan: zero load gives zero norms") {
    EpsilonTemplate tmpl{PeriodicField::trig(1, 2.0, 1.0, 1),
                         PotentialField(PeriodicField::trig(1, 0.0, 1.0, 1)),
                         [](std::array<double, 2>) { return 0.0; },
                         "const(0)",
                         3.0,
                         1,
                         16};
    auto scan = apriori_scan(tmpl, {1.0 / 4, 1.0 / 8});
    for (const auto& row : scan.rows) {
        REQUIRE(row.ok);
        CHECK(row.w1p_norm == 0.0);
    }
}

TEST_CASE("apriori_scan records failures per row and continues") {
    EpsilonTemplate tmpl{PeriodicField::trig(1, 2.0, 1.0, 1),
                         PotentialField(PeriodicField::trig(1, 0.0, 1.0, 1)),
                         [](std::array<double, 2>) { return 1.0; },
                         "const(1)",
                         2.0,
                         1,
                         16};
    auto scan = apriori_scan(tmpl, {1.0 / 8, 0.3, 1.0 / 16});
    REQUIRE(scan.rows.size() == 3);
    CHECK(scan.rows[0].ok);
    CHECK_FALSE(scan.rows[1].ok);
    CHECK(!scan.rows[1].error.empty());
    CHECK(scan.rows[2].ok);
}
