#include "homog/field.hpp"
#include "homog/errors.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace homog;

namespace {
constexpr double kTwoPi = 6.28318530717958647692;
}

TEST_CASE("expression presets evaluate exactly") {
    auto a = PeriodicField::trig(1, 2.0, 1.0, 1);
    CHECK(a.sample1(0.25) == doctest::Approx(3.0).epsilon(1e-15));
    // periodic wrap: sample at 1.25 sees the same phase as 0.25
    CHECK(a.sample1(1.25) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(a.sample1(-0.75) == doctest::Approx(3.0).epsilon(1e-15));

    auto pw = PeriodicField::piecewise(1, {1.0, 5.0});
    CHECK(pw.sample1(0.2) == 1.0);
    CHECK(pw.sample1(0.7) == 5.0);
    CHECK(pw.sample1(1.2) == 1.0);

    auto e = PeriodicField::expression(2, "2 + sin(2*pi*y1)*sin(2*pi*y2)");
    CHECK(e.sample({0.25, 0.25}) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("wrapping agrees exactly for integer shifts at dyadic points") {
    auto f = PeriodicField::expression(1, "1 + sin(2*pi*y1) + cos(2*pi*2*y1)");
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> numer(0, (1 << 20) - 1);
    std::uniform_int_distribution<int> shift(-3, 4);
    for (int t = 0; t < 200; ++t) {
        double y = numer(rng) / double(1 << 20);
        int k = shift(rng);
        CHECK(f.sample1(y) == f.sample1(y + k));
    }
}

TEST_CASE("nodal field interpolates to within the interpolation error bound") {
    const int m = 256;
    std::vector<double> samples(m);
    for (int i = 0; i < m; ++i) samples[i] = 2.0 + std::sin(kTwoPi * i / m);
    auto nodal = PeriodicField::nodal(1, m, samples);
    auto exact = PeriodicField::trig(1, 2.0, 1.0, 1);
    // P1 interpolation error <= h^2/8 * max|f''| = h^2/8 * 4 pi^2
    double bound = (1.0 / (m * m)) / 8.0 * kTwoPi * kTwoPi;
    for (int i = 0; i < m; ++i) {
        double mid = (i + 0.5) / m;
        CHECK(std::abs(nodal.sample1(mid) - exact.sample1(mid)) <= bound * 1.01);
    }
    // exact at the nodes themselves
    CHECK(nodal.sample1(3.0 / m) == doctest::Approx(samples[3]).epsilon(1e-15));
}

TEST_CASE("validate_hypotheses: passing preset") {
    auto a = PeriodicField::trig(1, 2.0, 1.0, 1);
    PotentialField V(PeriodicField::trig(1, 0.0, 1.0, 1));
    auto report = validate_hypotheses(a, V);
    CHECK(report.pass);
    CHECK(report.h1_pass);
    CHECK(report.h3_pass);
    CHECK(report.periodicity_ok);
    CHECK(report.min_a == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(report.max_abs_a == doctest::Approx(3.0).epsilon(1e-4));
    CHECK(std::abs(report.mean_residual) <= 1e-13);
}

TEST_CASE("validate_hypotheses: offset potential fails (H3) with its residual") {
    auto a = PeriodicField::constant(1, 1.0);
    PotentialField V(PeriodicField::expression(1, "cos(2*pi*y1) + 0.1"));
    CHECK(V.mean_residual() == doctest::Approx(0.1).epsilon(1e-10));
    auto report = validate_hypotheses(a, V);
    CHECK_FALSE(report.pass);
    CHECK_FALSE(report.h3_pass);
    CHECK(report.h1_pass);
}

TEST_CASE("validate_hypotheses: sign-changing a fails (H1)") {
    auto a = PeriodicField::trig(1, 0.0, 1.0, 1); // sin crosses zero
    PotentialField V(PeriodicField::trig(1, 0.0, 1.0, 1));
    auto report = validate_hypotheses(a, V);
    CHECK_FALSE(report.pass);
    CHECK_FALSE(report.h1_pass);
    CHECK(report.min_a < 0.0);
}

TEST_CASE("validate_hypotheses rejects dimension mismatch and empty grids") {
    auto a1 = PeriodicField::constant(1, 1.0);
    PotentialField V2(PeriodicField::constant(2, 0.0));
    CHECK_THROWS_AS(validate_hypotheses(a1, V2), ValidationError);
    PotentialField V1(PeriodicField::constant(1, 0.0));
    CHECK_THROWS_AS(validate_hypotheses(a1, V1, 0), ValidationError);
}

TEST_CASE("matrix field: SPD gate and piecewise sampling") {
    std::vector<std::array<double, 4>> cells{{2, 0, 0, 3}, {4, 1, 1, 4},
                                             {2, 0, 0, 2}, {5, 0, 0, 1}};
    MatrixPeriodicField A(2, cells);
    CHECK(A.min_eigenvalue() > 0);
    auto c = A.sample({0.3, 0.8}); // cell (0,1) -> index 2
    CHECK(c[0] == 2);
    CHECK(c[3] == 2);
    // indefinite cell rejected
    std::vector<std::array<double, 4>> bad{{1, 2, 2, 1}, {1, 0, 0, 1}, {1, 0, 0, 1}, {1, 0, 0, 1}};
    CHECK_THROWS_AS(MatrixPeriodicField(2, bad), Error);
}
