#include "homog/field.hpp"

#include "homog/errors.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace homog {

namespace {
constexpr double kTwoPi = 6.28318530717958647692;
}

PeriodicField PeriodicField::constant(int dim, double c) {
    PeriodicField f;
    f.kind_ = Kind::constant;
    f.dim_ = dim;
    f.A_ = c;
    f.description_ = "const(" + std::to_string(c) + ")";
    return f;
}

PeriodicField PeriodicField::trig(int dim, double A, double B, int k) {
    PeriodicField f;
    f.kind_ = Kind::trig;
    f.dim_ = dim;
    f.A_ = A;
    f.B_ = B;
    f.k_ = k;
    f.description_ =
        "trig(" + std::to_string(A) + "," + std::to_string(B) + "," + std::to_string(k) + ")";
    return f;
}

PeriodicField PeriodicField::prod_trig(int dim, double A, double B, int k) {
    PeriodicField f;
    f.kind_ = Kind::prod_trig;
    f.dim_ = dim;
    f.A_ = A;
    f.B_ = B;
    f.k_ = k;
    f.description_ =
        "prod_trig(" + std::to_string(A) + "," + std::to_string(B) + "," + std::to_string(k) + ")";
    return f;
}

PeriodicField PeriodicField::piecewise(int dim, std::vector<double> values) {
    if (values.empty()) throw Error("piecewise field: need at least one value");
    PeriodicField f;
    f.kind_ = Kind::piecewise;
    f.dim_ = dim;
    f.values_ = std::move(values);
    f.smoothness_ = Smoothness::piecewise_constant;
    f.description_ = "piecewise(" + std::to_string(f.values_.size()) + " values)";
    return f;
}

PeriodicField PeriodicField::expression(int dim, const std::string& text) {
    PeriodicField f;
    f.kind_ = Kind::expression;
    f.dim_ = dim;
    f.expr_ = Expression::parse(text, Expression::kCell);
    f.description_ = text;
    return f;
}

PeriodicField PeriodicField::nodal(int dim, int m, std::vector<double> values) {
    std::size_t expected = dim == 1 ? static_cast<std::size_t>(m)
                                    : static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
    if (m < 2) throw Error("nodal field: m must be >= 2");
    if (values.size() != expected)
        throw Error("nodal field: expected " + std::to_string(expected) + " values, got "
                    + std::to_string(values.size()));
    for (double v : values)
        if (!std::isfinite(v)) throw Error("nodal field: non-finite sample");
    PeriodicField f;
    f.kind_ = Kind::nodal;
    f.dim_ = dim;
    f.m_ = m;
    f.values_ = std::move(values);
    f.smoothness_ = Smoothness::piecewise_linear;
    f.description_ = "nodal(m=" + std::to_string(m) + ")";
    return f;
}

PeriodicField PeriodicField::from_csv(int dim, int m, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open nodal field CSV: " + path);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            values.push_back(std::stod(line));
        } catch (const std::exception&) {
            throw IoError("bad value '" + line + "' in " + path);
        }
    }
    auto f = nodal(dim, m, std::move(values));
    f.description_ = "csv:" + path;
    return f;
}

double PeriodicField::sample(const std::array<double, 2>& y_in) const {
    const auto y = wrap_unit(y_in, dim_);
    switch (kind_) {
    case Kind::constant: return A_;
    case Kind::trig: return A_ + B_ * std::sin(kTwoPi * k_ * y[0]);
    case Kind::prod_trig: {
        double s = B_;
        for (int a = 0; a < dim_; ++a) s *= std::sin(kTwoPi * k_ * y[a]);
        return A_ + s;
    }
    case Kind::piecewise: {
        auto nseg = static_cast<int>(values_.size());
        int i = std::min(static_cast<int>(y[0] * nseg), nseg - 1);
        return values_[static_cast<std::size_t>(i)];
    }
    case Kind::expression: return expr_.eval_cell(y);
    case Kind::nodal: {
        // Multilinear interpolation with periodic wrap.
        double t0 = y[0] * m_;
        int i = std::min(static_cast<int>(t0), m_ - 1);
        double s = t0 - i;
        auto wrap = [this](int k) { return ((k % m_) + m_) % m_; };
        if (dim_ == 1) {
            double v0 = values_[static_cast<std::size_t>(wrap(i))];
            double v1 = values_[static_cast<std::size_t>(wrap(i + 1))];
            return v0 + s * (v1 - v0);
        }
        double t1 = y[1] * m_;
        int j = std::min(static_cast<int>(t1), m_ - 1);
        double t = t1 - j;
        auto at = [&](int ii, int jj) {
            return values_[static_cast<std::size_t>(wrap(jj)) * m_ + wrap(ii)];
        };
        double v00 = at(i, j), v10 = at(i + 1, j), v01 = at(i, j + 1), v11 = at(i + 1, j + 1);
        return (1 - s) * (1 - t) * v00 + s * (1 - t) * v10 + (1 - s) * t * v01 + s * t * v11;
    }
    }
    return 0.0;
}

double PeriodicField::mean(int sample_elements) const {
    // Align with the field's own breakpoints so piecewise data is integrated
    // exactly.
    int cells = sample_elements;
    int bp = breakpoint_cells();
    if (bp > 0) cells = bp * std::max(1, (sample_elements + bp - 1) / bp);
    const auto& g = GaussRule::get(4);
    double h = 1.0 / cells;
    double total = 0.0;
    if (dim_ == 1) {
        for (int e = 0; e < cells; ++e)
            for (std::size_t q = 0; q < g.points.size(); ++q)
                total += h * g.weights[q] * sample({(e + g.points[q]) * h, 0.0});
        return total;
    }
    for (int ej = 0; ej < cells; ++ej)
        for (int ei = 0; ei < cells; ++ei)
            for (std::size_t qj = 0; qj < g.points.size(); ++qj)
                for (std::size_t qi = 0; qi < g.points.size(); ++qi)
                    total += h * h * g.weights[qi] * g.weights[qj]
                             * sample({(ei + g.points[qi]) * h, (ej + g.points[qj]) * h});
    return total;
}

void PeriodicField::scan_range(int sample_elements, double& min_value, double& max_abs) const {
    min_value = std::numeric_limits<double>::infinity();
    max_abs = 0.0;
    int cells = sample_elements;
    int bp = breakpoint_cells();
    if (bp > 0) cells = bp * std::max(1, (sample_elements + bp - 1) / bp);
    const auto& g = GaussRule::get(4);
    double h = 1.0 / cells;
    auto visit = [&](double v) {
        min_value = std::min(min_value, v);
        max_abs = std::max(max_abs, std::abs(v));
    };
    if (dim_ == 1) {
        for (int e = 0; e < cells; ++e)
            for (double q : g.points) visit(sample({(e + q) * h, 0.0}));
        // Node values matter for piecewise-linear data.
        for (int e = 0; e <= cells; ++e) visit(sample({e * h, 0.0}));
        return;
    }
    for (int ej = 0; ej <= cells; ++ej)
        for (int ei = 0; ei <= cells; ++ei) visit(sample({ei * h, ej * h}));
    for (int ej = 0; ej < cells; ++ej)
        for (int ei = 0; ei < cells; ++ei)
            for (double qj : g.points)
                for (double qi : g.points) visit(sample({(ei + qi) * h, (ej + qj) * h}));
}

int PeriodicField::breakpoint_cells() const {
    if (kind_ == Kind::piecewise) return static_cast<int>(values_.size());
    if (kind_ == Kind::nodal) return m_;
    return 0;
}

MatrixPeriodicField::MatrixPeriodicField(int m, std::vector<std::array<double, 4>> cells)
    : m_(m), cells_(std::move(cells)) {
    if (m_ < 1) throw Error("matrix field: m must be >= 1");
    if (cells_.size() != static_cast<std::size_t>(m_) * static_cast<std::size_t>(m_))
        throw Error("matrix field: expected " + std::to_string(m_ * m_) + " cells");
    for (const auto& c : cells_) {
        if (std::abs(c[1] - c[2]) > 1e-12 * (std::abs(c[1]) + std::abs(c[2]) + 1.0))
            throw Error("matrix field: cell entries must be symmetric");
    }
    if (!(min_eigenvalue() > 0.0))
        throw Error("matrix field: cells must be positive definite (H1)");
}

MatrixPeriodicField MatrixPeriodicField::from_csv(int m, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open matrix field CSV: " + path);
    std::vector<std::array<double, 4>> cells;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::array<double, 4> c{};
        std::istringstream ls(line);
        std::string tok;
        for (int k = 0; k < 4; ++k) {
            if (!std::getline(ls, tok, ',')) throw IoError("matrix field: short row in " + path);
            c[static_cast<std::size_t>(k)] = std::stod(tok);
        }
        cells.push_back(c);
    }
    return MatrixPeriodicField(m, std::move(cells));
}

std::array<double, 4> MatrixPeriodicField::sample(const std::array<double, 2>& y_in) const {
    auto y = wrap_unit(y_in, 2);
    int i = std::min(static_cast<int>(y[0] * m_), m_ - 1);
    int j = std::min(static_cast<int>(y[1] * m_), m_ - 1);
    return cells_[static_cast<std::size_t>(j) * m_ + i];
}

double MatrixPeriodicField::min_eigenvalue() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& c : cells_) {
        double tr = c[0] + c[3];
        double det = c[0] * c[3] - c[1] * c[2];
        double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
        lo = std::min(lo, 0.5 * tr - disc);
    }
    return lo;
}

PotentialField::PotentialField(PeriodicField base, double mean_tol, int sample_elements)
    : base_(std::move(base)), mean_tol_(mean_tol) {
    mean_residual_ = base_.mean(sample_elements);
}

ValidationReport validate_hypotheses(const PeriodicField& a, const PotentialField& V,
                                     int sample_elements) {
    if (a.dim() != V.dim()) throw ValidationError("validate_hypotheses: dimension mismatch");
    if (sample_elements < 1) throw ValidationError("validate_hypotheses: empty sample grid");

    ValidationReport r;
    a.scan_range(sample_elements, r.min_a, r.max_abs_a);
    r.mean_residual = V.mean_residual();

    // (H2) holds by construction (arguments are wrapped); spot-check anyway.
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<int> shift(-2, 3);
    std::uniform_int_distribution<int> pos(0, (1 << 20) - 1);
    r.periodicity_ok = true;
    for (int trial = 0; trial < 32; ++trial) {
        std::array<double, 2> y{pos(rng) / double(1 << 20), pos(rng) / double(1 << 20)};
        std::array<double, 2> ys{y[0] + shift(rng), y[1] + shift(rng)};
        if (a.sample(y) != a.sample(ys) || V.sample(y) != V.sample(ys)) {
            r.periodicity_ok = false;
            break;
        }
    }

    r.h1_pass = r.min_a > 0.0;
    r.h3_pass = V.mean_ok();
    r.pass = r.h1_pass && r.h3_pass && r.periodicity_ok;

    std::ostringstream os;
    os << "H1 " << (r.h1_pass ? "pass" : "FAIL") << " (min a = " << r.min_a << ", max |a| = "
       << r.max_abs_a << "); H2 " << (r.periodicity_ok ? "pass" : "FAIL") << "; H3 "
       << (r.h3_pass ? "pass" : "FAIL") << " (mean residual = " << r.mean_residual
       << ", tol = " << V.mean_tol() << ")";
    r.detail = os.str();
    return r;
}

} // namespace homog
