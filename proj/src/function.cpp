#include "homog/function.hpp"

#include "homog/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace homog {

namespace {

// Q1 shape functions and derivatives on the reference square [0,1]^2,
// nodes ordered counterclockwise from the lower-left corner.
inline void q1_shape(double s, double t, std::array<double, 4>& N) {
    N = {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
}
inline void q1_grad(double s, double t, std::array<double, 4>& dNds,
                    std::array<double, 4>& dNdt) {
    dNds = {-(1 - t), (1 - t), t, -t};
    dNdt = {-(1 - s), -s, s, (1 - s)};
}

template <class Grid>
double eval_value(const Grid& grid, const Eigen::VectorXd& nodal, int elem,
                  const std::array<double, 2>& local) {
    std::array<int, 4> nodes;
    grid.element_nodes(elem, nodes);
    if (grid.dim() == 1) {
        double s = local[0];
        return (1 - s) * nodal[nodes[0]] + s * nodal[nodes[1]];
    }
    std::array<double, 4> N;
    q1_shape(local[0], local[1], N);
    double v = 0;
    for (int k = 0; k < 4; ++k) v += N[k] * nodal[nodes[k]];
    return v;
}

template <class Grid>
std::array<double, 2> eval_gradient(const Grid& grid, const Eigen::VectorXd& nodal, int elem,
                                    const std::array<double, 2>& local, double h0, double h1) {
    std::array<int, 4> nodes;
    grid.element_nodes(elem, nodes);
    if (grid.dim() == 1) {
        return {(nodal[nodes[1]] - nodal[nodes[0]]) / h0, 0.0};
    }
    std::array<double, 4> dNds, dNdt;
    q1_grad(local[0], local[1], dNds, dNdt);
    double gs = 0, gt = 0;
    for (int k = 0; k < 4; ++k) {
        gs += dNds[k] * nodal[nodes[k]];
        gt += dNdt[k] * nodal[nodes[k]];
    }
    return {gs / h0, gt / h1};
}

template <class F>
double quad_over_elements(int dim, int nelems, double h0, double h1, int gauss_points,
                          const F& integrand_at) {
    const auto& g = GaussRule::get(gauss_points);
    double total = 0.0;
    if (dim == 1) {
        for (int e = 0; e < nelems; ++e)
            for (std::size_t q = 0; q < g.points.size(); ++q)
                total += h0 * g.weights[q] * integrand_at(e, {g.points[q], 0.0});
        return total;
    }
    for (int e = 0; e < nelems; ++e)
        for (std::size_t qj = 0; qj < g.points.size(); ++qj)
            for (std::size_t qi = 0; qi < g.points.size(); ++qi)
                total += h0 * h1 * g.weights[qi] * g.weights[qj]
                         * integrand_at(e, {g.points[qi], g.points[qj]});
    return total;
}

} // namespace

MacroFunction::MacroFunction(std::shared_ptr<const MacroGrid> grid, Eigen::VectorXd nodal,
                             bool zero_dirichlet)
    : grid_(std::move(grid)), nodal_(std::move(nodal)), zero_dirichlet_(zero_dirichlet) {
    if (nodal_.size() != grid_->num_nodes())
        throw Error("MacroFunction: nodal size mismatch");
    if (zero_dirichlet_) {
        for (int node = 0; node < grid_->num_nodes(); ++node)
            if (grid_->is_boundary_node(node)) nodal_[node] = 0.0;
    }
}

MacroFunction MacroFunction::interpolate(std::shared_ptr<const MacroGrid> grid,
                                         const std::function<double(std::array<double, 2>)>& f,
                                         bool zero_dirichlet) {
    Eigen::VectorXd v(grid->num_nodes());
    for (int node = 0; node < grid->num_nodes(); ++node) {
        double val = f(grid->node_coords(node));
        if (!std::isfinite(val)) throw Error("interpolate: non-finite value at a node");
        v[node] = val;
    }
    return MacroFunction(std::move(grid), std::move(v), zero_dirichlet);
}

MacroFunction MacroFunction::zero(std::shared_ptr<const MacroGrid> grid, bool zero_dirichlet) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(grid->num_nodes());
    return MacroFunction(std::move(grid), std::move(v), zero_dirichlet);
}

double MacroFunction::value(const std::array<double, 2>& x) const {
    std::array<double, 2> local;
    int elem = grid_->locate(x, local);
    return eval_value(*grid_, nodal_, elem, local);
}

std::array<double, 2> MacroFunction::gradient(const std::array<double, 2>& x) const {
    std::array<double, 2> local;
    int elem = grid_->locate(x, local);
    return eval_gradient(*grid_, nodal_, elem, local, grid_->h(0),
                         grid_->dim() == 2 ? grid_->h(1) : 1.0);
}

Eigen::VectorXd MacroFunction::interior() const {
    const auto& nodes = grid_->interior_nodes();
    Eigen::VectorXd v(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) v[static_cast<Eigen::Index>(i)] = nodal_[nodes[i]];
    return v;
}

MacroFunction MacroFunction::from_interior(std::shared_ptr<const MacroGrid> grid,
                                           const Eigen::VectorXd& interior) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(grid->num_nodes());
    const auto& nodes = grid->interior_nodes();
    if (interior.size() != static_cast<Eigen::Index>(nodes.size()))
        throw Error("from_interior: dof size mismatch");
    for (std::size_t i = 0; i < nodes.size(); ++i) v[nodes[i]] = interior[static_cast<Eigen::Index>(i)];
    return MacroFunction(std::move(grid), std::move(v), true);
}

void MacroFunction::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    char buf[160];
    out << (grid_->dim() == 1 ? "x1,value\n" : "x1,x2,value\n");
    for (int node = 0; node < grid_->num_nodes(); ++node) {
        auto c = grid_->node_coords(node);
        if (grid_->dim() == 1)
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c[0], nodal_[node]);
        else
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", c[0], c[1], nodal_[node]);
        out << buf;
    }
}

CellFunction::CellFunction(std::shared_ptr<const CellGrid> grid, Eigen::VectorXd nodal)
    : grid_(std::move(grid)), nodal_(std::move(nodal)) {
    if (nodal_.size() != grid_->num_nodes()) throw Error("CellFunction: nodal size mismatch");
}

CellFunction CellFunction::interpolate(std::shared_ptr<const CellGrid> grid,
                                       const std::function<double(std::array<double, 2>)>& f,
                                       bool zero_mean) {
    Eigen::VectorXd v(grid->num_nodes());
    for (int node = 0; node < grid->num_nodes(); ++node) {
        double val = f(grid->node_coords(node));
        if (!std::isfinite(val)) throw Error("interpolate: non-finite value at a node");
        v[node] = val;
    }
    CellFunction g(std::move(grid), std::move(v));
    return zero_mean ? g.minus_mean() : g;
}

CellFunction CellFunction::zero(std::shared_ptr<const CellGrid> grid) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(grid->num_nodes());
    return CellFunction(std::move(grid), std::move(v));
}

double CellFunction::value(const std::array<double, 2>& y) const {
    std::array<double, 2> local;
    int elem = grid_->locate(y, local);
    return eval_value(*grid_, nodal_, elem, local);
}

std::array<double, 2> CellFunction::gradient(const std::array<double, 2>& y) const {
    std::array<double, 2> local;
    int elem = grid_->locate(y, local);
    return eval_gradient(*grid_, nodal_, elem, local, grid_->h(), grid_->h());
}

double CellFunction::mean() const {
    // Uniform periodic P1/Q1: every node carries weight h^d.
    return nodal_.sum() / grid_->num_nodes();
}

CellFunction CellFunction::minus_mean() const {
    Eigen::VectorXd v = nodal_.array() - mean();
    return CellFunction(grid_, std::move(v));
}

std::array<CellFunction, 2> CellFunction::nodal_gradient() const {
    const int m = grid_->elements_per_axis();
    const double inv2h = 0.5 * m;
    Eigen::VectorXd gx(grid_->num_nodes());
    Eigen::VectorXd gy = Eigen::VectorXd::Zero(grid_->num_nodes());
    if (grid_->dim() == 1) {
        for (int i = 0; i < m; ++i)
            gx[i] = (nodal_[grid_->node_index(i + 1)] - nodal_[grid_->node_index(i - 1)]) * inv2h;
    } else {
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < m; ++i) {
                int node = grid_->node_index(i, j);
                gx[node] = (nodal_[grid_->node_index(i + 1, j)]
                            - nodal_[grid_->node_index(i - 1, j)])
                           * inv2h;
                gy[node] = (nodal_[grid_->node_index(i, j + 1)]
                            - nodal_[grid_->node_index(i, j - 1)])
                           * inv2h;
            }
    }
    return {CellFunction(grid_, std::move(gx)), CellFunction(grid_, std::move(gy))};
}

void CellFunction::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    char buf[160];
    out << (grid_->dim() == 1 ? "y1,value\n" : "y1,y2,value\n");
    for (int node = 0; node < grid_->num_nodes(); ++node) {
        auto c = grid_->node_coords(node);
        if (grid_->dim() == 1)
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c[0], nodal_[node]);
        else
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", c[0], c[1], nodal_[node]);
        out << buf;
    }
}

namespace {

void check_p(double p) {
    if (!(p >= 1.0)) throw Error("lp_norm: p must be >= 1");
}

} // namespace

double lp_norm(const MacroFunction& g, double p, int gauss_points) {
    check_p(p);
    const auto& grid = g.grid();
    double h1 = grid.dim() == 2 ? grid.h(1) : 1.0;
    double total = quad_over_elements(
        grid.dim(), grid.num_elements(), grid.h(0), h1, gauss_points,
        [&](int e, std::array<double, 2> local) {
            return std::pow(std::abs(eval_value(grid, g.nodal(), e, local)), p);
        });
    return std::pow(total, 1.0 / p);
}

double lp_norm(const CellFunction& g, double p, int gauss_points) {
    check_p(p);
    const auto& grid = g.grid();
    double total = quad_over_elements(
        grid.dim(), grid.num_elements(), grid.h(), grid.h(), gauss_points,
        [&](int e, std::array<double, 2> local) {
            return std::pow(std::abs(eval_value(grid, g.nodal(), e, local)), p);
        });
    return std::pow(total, 1.0 / p);
}

double w1p_seminorm(const MacroFunction& g, double p, int gauss_points) {
    check_p(p);
    const auto& grid = g.grid();
    double h1 = grid.dim() == 2 ? grid.h(1) : 1.0;
    double total = quad_over_elements(
        grid.dim(), grid.num_elements(), grid.h(0), h1, gauss_points,
        [&](int e, std::array<double, 2> local) {
            auto dg = eval_gradient(grid, g.nodal(), e, local, grid.h(0), h1);
            double mag = grid.dim() == 1 ? std::abs(dg[0]) : std::hypot(dg[0], dg[1]);
            return std::pow(mag, p);
        });
    return std::pow(total, 1.0 / p);
}

double w1p_seminorm(const CellFunction& g, double p, int gauss_points) {
    check_p(p);
    const auto& grid = g.grid();
    double total = quad_over_elements(
        grid.dim(), grid.num_elements(), grid.h(), grid.h(), gauss_points,
        [&](int e, std::array<double, 2> local) {
            auto dg = eval_gradient(grid, g.nodal(), e, local, grid.h(), grid.h());
            double mag = grid.dim() == 1 ? std::abs(dg[0]) : std::hypot(dg[0], dg[1]);
            return std::pow(mag, p);
        });
    return std::pow(total, 1.0 / p);
}

double cell_integral_against(const CellFunction& f,
                             const std::function<double(std::array<double, 2>)>& g,
                             int gauss_points) {
    const auto& grid = f.grid();
    return quad_over_elements(grid.dim(), grid.num_elements(), grid.h(), grid.h(), gauss_points,
                              [&](int e, std::array<double, 2> local) {
                                  auto origin = grid.element_origin(e);
                                  std::array<double, 2> y{origin[0] + local[0] * grid.h(),
                                                          origin[1] + local[1] * grid.h()};
                                  return eval_value(grid, f.nodal(), e, local) * g(y);
                              });
}

double cell_gradient_integral_against(const CellFunction& f,
                                      const std::function<double(std::array<double, 2>)>& g,
                                      int axis, int gauss_points) {
    const auto& grid = f.grid();
    return quad_over_elements(
        grid.dim(), grid.num_elements(), grid.h(), grid.h(), gauss_points,
        [&](int e, std::array<double, 2> local) {
            auto origin = grid.element_origin(e);
            std::array<double, 2> y{origin[0] + local[0] * grid.h(),
                                    origin[1] + local[1] * grid.h()};
            auto df = eval_gradient(grid, f.nodal(), e, local, grid.h(), grid.h());
            return df[static_cast<std::size_t>(axis)] * g(y);
        });
}

double lp_distance(const MacroFunction& g1, const MacroFunction& g2, double p, int gauss_points) {
    check_p(p);
    const MacroFunction& fine =
        g1.grid().elements_per_axis() >= g2.grid().elements_per_axis() ? g1 : g2;
    const MacroFunction& other = (&fine == &g1) ? g2 : g1;
    const auto& grid = fine.grid();
    double h1 = grid.dim() == 2 ? grid.h(1) : 1.0;
    double total = quad_over_elements(
        grid.dim(), grid.num_elements(), grid.h(0), h1, gauss_points,
        [&](int e, std::array<double, 2> local) {
            auto origin = grid.element_origin(e);
            std::array<double, 2> x{origin[0] + local[0] * grid.h(0),
                                    grid.dim() == 2 ? origin[1] + local[1] * h1 : 0.0};
            double diff = eval_value(grid, fine.nodal(), e, local) - other.value(x);
            return std::pow(std::abs(diff), p);
        });
    return std::pow(total, 1.0 / p);
}

} // namespace homog
