#include "homog/cell_problems.hpp"
#include "homog/errors.hpp"

#include "support/oracles.hpp"

#include "doctest.h"

#include <cmath>

using namespace homog;

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kPi = 3.14159265358979323846;

double trig_a(double y) { return 2.0 + std::sin(kTwoPi * y); }
double trig_v(double y) { return std::sin(kTwoPi * y); }

CellAssembler criterion_assembler(double p, int m) {
    return CellAssembler(PeriodicField::trig(1, 2.0, 1.0, 1),
                         PotentialField(PeriodicField::trig(1, 0.0, 1.0, 1)), p,
                         std::make_shared<CellGrid>(1, m));
}

} // namespace

TEST_CASE("linear correctors: constant coefficient gives zero correctors") {
    auto grid = std::make_shared<CellGrid>(1, 64);
    auto corr = solve_linear_correctors(PeriodicField::constant(1, 1.0),
                                        PotentialField(PeriodicField::constant(1, 0.0)), grid);
    CHECK(corr.chi[0].nodal().cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(corr.zeta.nodal().cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("linear correctors: chi' = abar/a - 1 for the trig coefficient") {
    const int m = 512;
    auto grid = std::make_shared<CellGrid>(1, m);
    auto corr = solve_linear_correctors(PeriodicField::trig(1, 2.0, 1.0, 1),
                                        PotentialField(PeriodicField::constant(1, 0.0)), grid);
    const double abar = std::sqrt(3.0);
    // elementwise gradients against the closed form at element midpoints
    for (int e = 0; e < m; e += 37) {
        double mid = (e + 0.5) / m;
        double expected = abar / trig_a(mid) - 1.0;
        CHECK(corr.chi[0].gradient({mid, 0.0})[0] == doctest::Approx(expected).epsilon(5e-4));
    }
    CHECK(std::abs(corr.chi[0].mean()) <= 1e-12);
}

TEST_CASE("linear correctors: zeta coincides with the corrector potential for a = 1") {
    const int m = 256;
    auto grid = std::make_shared<CellGrid>(1, m);
    auto corr = solve_linear_correctors(PeriodicField::constant(1, 1.0),
                                        PotentialField(PeriodicField::trig(1, 0.0, 1.0, 1)),
                                        grid);
    for (double y : {0.1, 0.37, 0.71}) {
        double expected = -std::sin(kTwoPi * y) / (4.0 * kPi * kPi);
        CHECK(corr.zeta.value1(y) == doctest::Approx(expected).epsilon(5e-4));
    }
}

TEST_CASE("cell flux oracle reproduces independently computed references") {
    // Frozen values from a high-precision computation of the constant-flux
    // identity (root-find on c, then q = F(theta)<W> + c).
    struct Ref {
        double theta, xi, p, q, v;
    };
    const Ref refs[] = {
        {1.0, 1.0, 3.0, 1.7998163907810438, -0.003426670990860746},
        {0.0, 1.0, 3.0, 1.7981024073469526, 0.0},
        {-1.0, 0.5, 3.0, 0.45644826213844895, 0.0068798928876316251},
        {1.0, 1.0, 2.5, 1.7769286440640105, -0.0045640382817849739},
        {0.5, -1.0, 3.0, -1.7982094680418706, -0.000856465349231313},
    };
    for (const auto& r : refs) {
        auto oracle = oracles::cell_flux_oracle(trig_a, trig_v, r.p, r.theta, r.xi);
        CHECK(oracle.q == doctest::Approx(r.q).epsilon(1e-9));
        CHECK(oracle.v == doctest::Approx(r.v).epsilon(1e-7));
    }
}

TEST_CASE("nonlinear cell: V = 0 with constant coefficient is solved by chi = 0") {
    CellAssembler assembler(PeriodicField::constant(1, 1.0),
                            PotentialField(PeriodicField::constant(1, 0.0)), 3.0,
                            std::make_shared<CellGrid>(1, 64));
    auto sol = solve_nonlinear_cell(assembler, 0.7, {1.5, 0.0}, SolverConfig{});
    CHECK(sol.chi.nodal().cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(sol.q[0] == doctest::Approx(std::pow(1.5, 2.0) * 1.0).epsilon(1e-8)); // |xi|^{p-2} xi
    CHECK(std::abs(sol.v) <= 1e-12);
}

TEST_CASE("nonlinear cell: theta = 0 removes the potential forcing") {
    auto assembler = criterion_assembler(3.0, 128);
    auto with_theta0 = solve_nonlinear_cell(assembler, 0.0, {1.0, 0.0}, SolverConfig{});
    CellAssembler no_v(PeriodicField::trig(1, 2.0, 1.0, 1),
                       PotentialField(PeriodicField::constant(1, 0.0)), 3.0,
                       std::make_shared<CellGrid>(1, 128));
    auto without_v = solve_nonlinear_cell(no_v, 1.0, {1.0, 0.0}, SolverConfig{});
    CHECK((with_theta0.chi.nodal() - without_v.chi.nodal()).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(with_theta0.q[0] == doctest::Approx(without_v.q[0]).epsilon(1e-10));
}

TEST_CASE("nonlinear cell matches the constant-flux oracle") {
    auto assembler = criterion_assembler(3.0, 2048);
    SolverConfig cfg;
    cfg.tol = 1e-11; // assembly rounding floors the l2 residual near 3e-12 at this m
    auto fem = solve_nonlinear_cell(assembler, 1.0, {1.0, 0.0}, cfg);
    auto oracle = oracles::cell_flux_oracle(trig_a, trig_v, 3.0, 1.0, 1.0);
    CHECK(std::abs(fem.q[0] - oracle.q) / std::abs(oracle.q) <= 1e-6);
    CHECK(std::abs(fem.v - oracle.v) / std::abs(oracle.v) <= 1e-4);
    CHECK(std::abs(fem.chi.mean()) <= 1e-12);
    CHECK(fem.residual <= 1e-10);
}

TEST_CASE("flux consistency: stored q equals a fresh quadrature of the stored chi") {
    auto assembler = criterion_assembler(3.0, 128);
    auto sol = solve_nonlinear_cell(assembler, 1.0, {0.5, 0.0}, SolverConfig{});
    auto fresh = assembler.flux_average(sol.xi, sol.chi.nodal(), 0.0);
    CHECK(fresh[0] == doctest::Approx(sol.q[0]).epsilon(1e-14));
    CHECK(assembler.coupling(sol.chi.nodal()) == doctest::Approx(sol.v).epsilon(1e-14));
}

TEST_CASE("effective flux is odd in xi when V = 0 and nondecreasing in xi") {
    CellAssembler assembler(PeriodicField::trig(1, 2.0, 1.0, 1),
                            PotentialField(PeriodicField::constant(1, 0.0)), 3.0,
                            std::make_shared<CellGrid>(1, 128));
    SolverConfig cfg;
    auto q_at = [&](double xi) {
        return solve_nonlinear_cell(assembler, 0.0, {xi, 0.0}, cfg).q[0];
    };
    CHECK(q_at(-0.8) == doctest::Approx(-q_at(0.8)).epsilon(1e-8));

    auto crit = criterion_assembler(3.0, 128);
    double prev = -1e30;
    for (double xi : {-2.0, -1.0, -0.25, 0.0, 0.25, 1.0, 2.0}) {
        double q = solve_nonlinear_cell(crit, 1.0, {xi, 0.0}, cfg).q[0];
        CHECK(q >= prev - 1e-10);
        prev = q;
    }
}

TEST_CASE("uniqueness: distinct inits land on the same gradient") {
    auto assembler = criterion_assembler(3.0, 512);
    auto grid = assembler.grid_ptr();
    auto zero = CellFunction::zero(grid);
    auto smooth = CellFunction::interpolate(
        grid,
        [](std::array<double, 2> y) {
            return 0.1 * std::sin(kTwoPi * y[0]) + 0.05 * std::cos(2.0 * kTwoPi * y[0]);
        },
        true);
    SolverConfig cfg;
    cfg.tol = 1e-11;
    auto check = uniqueness_check(assembler, 1.0, {1.0, 0.0}, zero, smooth, cfg);
    CHECK(check.stats1.converged);
    CHECK(check.stats2.converged);
    CHECK(check.gradient_discrepancy <= 1e-8);
    CHECK(check.value_discrepancy <= 1e-8);

    // V = 0, xi = 0: both runs return exactly chi = 0
    CellAssembler trivial(PeriodicField::constant(1, 2.0),
                          PotentialField(PeriodicField::constant(1, 0.0)), 3.0,
                          std::make_shared<CellGrid>(1, 64));
    auto triv = uniqueness_check(trivial, 0.0, {0.0, 0.0}, CellFunction::zero(trivial.grid_ptr()),
                                 CellFunction::zero(trivial.grid_ptr()), cfg);
    CHECK(triv.gradient_discrepancy <= 1e-13);
}

TEST_CASE("p = 2 cross-validation: nonlinear path reproduces the linear corrector") {
    const int m = 256;
    auto grid = std::make_shared<CellGrid>(1, m);
    auto a = PeriodicField::trig(1, 2.0, 1.0, 1);
    PotentialField V(PeriodicField::trig(1, 0.0, 1.0, 1));
    auto linear = solve_linear_correctors(a, V, grid);
    CellAssembler assembler(a, V, 2.0, grid);
    // theta = 0, xi = e1 isolates chi_1; theta = 1, xi = 0 isolates zeta.
    auto chi1 = solve_nonlinear_cell(assembler, 0.0, {1.0, 0.0}, SolverConfig{});
    CHECK((chi1.chi.nodal() - linear.chi[0].nodal()).cwiseAbs().maxCoeff() <= 1e-9);
    auto zeta = solve_nonlinear_cell(assembler, 1.0, {0.0, 0.0}, SolverConfig{});
    CHECK((zeta.chi.nodal() - linear.zeta.nodal()).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("solvability gate rejects non-centred V F(theta)") {
    PotentialField offset(PeriodicField::expression(1, "cos(2*pi*y1) + 0.1"));
    CellAssembler assembler(PeriodicField::constant(1, 1.0), offset, 3.0,
                            std::make_shared<CellGrid>(1, 64));
    CHECK_THROWS_AS(solve_nonlinear_cell(assembler, 1.0, {1.0, 0.0}, SolverConfig{}),
                    ValidationError);
    // theta = 0 kills the forcing, so the gate admits it
    CHECK_NOTHROW(solve_nonlinear_cell(assembler, 0.0, {1.0, 0.0}, SolverConfig{}));
}

TEST_CASE("memo table: quantized keys are reused, bypass solves directly") {
    auto grid = std::make_shared<CellGrid>(1, 64);
    CellEvaluator memo(PeriodicField::trig(1, 2.0, 1.0, 1),
                       PotentialField(PeriodicField::trig(1, 0.0, 1.0, 1)), 3.0, grid,
                       SolverConfig{}, 1e-3);
    auto s1 = memo(1.0, {1.0, 0.0});
    auto s2 = memo(1.0 + 2e-4, {1.0 - 2e-4, 0.0}); // same quantized key
    CHECK(memo.memo_size() == 1);
    CHECK(s1.q[0] == s2.q[0]);

    CellEvaluator direct(PeriodicField::trig(1, 2.0, 1.0, 1),
                         PotentialField(PeriodicField::trig(1, 0.0, 1.0, 1)), 3.0, grid,
                         SolverConfig{}, 0.0);
    auto d1 = direct(1.0, {1.0, 0.0});
    auto d2 = direct(1.0 + 2e-4, {1.0 - 2e-4, 0.0});
    CHECK(direct.memo_size() == 0);
    CHECK(d1.q[0] != d2.q[0]);
}
