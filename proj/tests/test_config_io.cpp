#include "homog/config.hpp"
#include "homog/errors.hpp"
#include "homog/report_io.hpp"

#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace homog;

namespace {

const char* kMinimalConfig = R"ini(
[fields]
a = trig(2,1,1)
V = trig(0,1,1)

[problem]
d = 1
p = 3

[grids]
eps_list = 1/8, 1/16
m = 128

[output]
dir = out_test
)ini";

} // namespace

TEST_CASE("config: minimal file parses with defaults filled in") {
    auto cfg = RunConfig::parse(kMinimalConfig, "test.ini");
    CHECK(cfg.p == 3.0);
    CHECK(cfg.d == 1);
    CHECK(cfg.m == 128);
    REQUIRE(cfg.eps_list.size() == 2);
    CHECK(cfg.eps_list[0] == doctest::Approx(0.125));
    CHECK(cfg.eps_list[1] == doctest::Approx(0.0625));
    CHECK(cfg.solver.tol == 1e-10);      // default
    CHECK(cfg.out_dir == "out_test");
    auto a = cfg.make_a();
    CHECK(a.sample1(0.25) == doctest::Approx(3.0));
    auto V = cfg.make_v();
    CHECK(std::abs(V.mean_residual()) <= 1e-12);
}

TEST_CASE("config: unknown keys and sections are hard errors with line anchors") {
    std::string bad = "[fields]\na = const(1)\ntypo_key = 3\n";
    try {
        RunConfig::parse(bad, "bad.ini");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("typo_key") != std::string::npos);
    }
    CHECK_THROWS_AS(RunConfig::parse("[nosuch]\nx = 1\n", "bad.ini"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("[fields]\nnoequals\n", "bad.ini"), ConfigError);
}

TEST_CASE("config: overrides apply before validation and reach the snapshot") {
    auto cfg = RunConfig::parse(kMinimalConfig, "test.ini",
                                {"problem.p=2.5", "solver.tol=1e-12", "grids.n=128"});
    CHECK(cfg.p == 2.5);
    CHECK(cfg.solver.tol == 1e-12);
    CHECK(cfg.n == 128);
    auto j = cfg.resolved();
    CHECK(j["problem"]["p"].get<double>() == 2.5);
    CHECK(j["solver"]["tol"].get<double>() == 1e-12);
    CHECK_THROWS_AS(RunConfig::parse(kMinimalConfig, "t.ini", {"problem.p=1.2"}), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse(kMinimalConfig, "t.ini", {"badoverride"}), ConfigError);
}

TEST_CASE("config: field value forms") {
    CHECK(parse_field("const(2.5)", 1).sample1(0.9) == 2.5);
    CHECK(parse_field("piecewise(1,2,3)", 1).sample1(0.5) == 2.0);
    CHECK(parse_field("prod_trig(0,1,1)", 2).sample({0.25, 0.25}) == doctest::Approx(1.0));
    CHECK(parse_field("2 + sin(2*pi*y1)", 1).sample1(0.25) == doctest::Approx(3.0));
    CHECK_THROWS_AS(parse_field("trig(1,2)", 1), ConfigError);
    CHECK_THROWS_AS(parse_field("nonsense(", 1), ConfigError);

    // nodal CSV round trip, m inferred from the row count
    auto path = std::filesystem::temp_directory_path() / "homog_test_field.csv";
    {
        std::ofstream out(path);
        for (int i = 0; i < 8; ++i) out << (i % 2 ? 2.0 : 4.0) << "\n";
    }
    auto f = parse_field("csv:" + path.string(), 1);
    CHECK(f.sample1(0.0) == 4.0);
    CHECK(f.breakpoint_cells() == 8);
    std::filesystem::remove(path);
}

TEST_CASE("expression grammar: errors carry offsets, variables are gated") {
    CHECK_THROWS_AS(Expression::parse("2 +", Expression::kCell), ConfigError);
    CHECK_THROWS_AS(Expression::parse("sin 3", Expression::kCell), ConfigError);
    CHECK_THROWS_AS(Expression::parse("x1", Expression::kCell), ConfigError);
    CHECK_THROWS_AS(Expression::parse("q1 + 2", Expression::kBoth), ConfigError);
    auto e = Expression::parse("x1*(1-x1) + sin(2*pi*y1)/2", Expression::kBoth);
    double x[2] = {0.5, 0.0};
    double y[2] = {0.25, 0.0};
    CHECK(e.eval(x, y) == doctest::Approx(0.25 + 0.5));
}

TEST_CASE("format_double: 17 significant digits round-trip exactly") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-1e3, 1e3);
    for (int t = 0; t < 200; ++t) {
        double v = dist(rng) * std::pow(10.0, int(rng() % 13) - 6);
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("series csv: stable columns and bytes") {
    ReportSeries s;
    s.name = "demo";
    s.rows.push_back({0.125, 1.0 / 3.0, 0.0, 1.0 / 3.0, 1e-10, true, ""});
    s.rows.push_back({0.0625, 0.1234567890123456789, 0.0, 0.1, 0.0, false, ""});
    std::string csv = series_csv(s);
    CHECK(csv.rfind("eps,value,limit,gap,quad_stability,pass\n", 0) == 0);
    CHECK(csv == series_csv(s));
    CHECK(csv.find("0.33333333333333331") != std::string::npos);
    // empty report -> header only
    ReportSeries empty;
    CHECK(series_csv(empty) == "eps,value,limit,gap,quad_stability,pass\n");
}

TEST_CASE("scan csv carries the documented columns") {
    AprioriScan scan;
    scan.rows.push_back({0.125, 1.5, 2.5, 3.0122, 7, 1e-11, true, ""});
    std::string csv = scan_csv(scan);
    CHECK(csv.rfind("eps,Lp_norm,W1p_seminorm,iterations,residual\n", 0) == 0);
    CHECK(csv.find("1.5") != std::string::npos);
}

TEST_CASE("write_file_atomic creates directories and replaces content") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "homog_io_test" / "nested";
    auto path = dir / "file.txt";
    fs::remove_all(fs::temp_directory_path() / "homog_io_test");
    write_file_atomic(path.string(), "one");
    write_file_atomic(path.string(), "two");
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == "two");
    CHECK(!fs::exists(path.string() + ".tmp"));
    fs::remove_all(fs::temp_directory_path() / "homog_io_test");
}

TEST_CASE("fnv1a fingerprint is stable") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("homog") != fnv1a_hex("homeg"));
}
