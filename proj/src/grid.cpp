#include "homog/grid.hpp"

#include "homog/errors.hpp"

#include <algorithm>
#include <cmath>

namespace homog {

const GaussRule& GaussRule::get(int npoints) {
    // Tabulated on [-1,1], mapped to [0,1] once.
    static const auto make = [](std::vector<double> p, std::vector<double> w) {
        GaussRule r;
        for (std::size_t i = 0; i < p.size(); ++i) {
            r.points.push_back(0.5 * (p[i] + 1.0));
            r.weights.push_back(0.5 * w[i]);
        }
        return r;
    };
    static const GaussRule rules[5] = {
        make({0.0}, {2.0}),
        make({-0.5773502691896257, 0.5773502691896257}, {1.0, 1.0}),
        make({-0.7745966692414834, 0.0, 0.7745966692414834},
             {0.5555555555555556, 0.8888888888888888, 0.5555555555555556}),
        make({-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526},
             {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538}),
        make({-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
              0.9061798459386640},
             {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
              0.2369268850561891}),
    };
    if (npoints < 1 || npoints > 5) throw Error("GaussRule: npoints must be in 1..5");
    return rules[npoints - 1];
}

MacroGrid::MacroGrid(int dim, int elements_per_axis, Box domain)
    : dim_(dim), n_(elements_per_axis), domain_(domain) {
    if (dim_ != 1 && dim_ != 2) throw Error("MacroGrid: dimension must be 1 or 2");
    if (n_ < 2) throw Error("MacroGrid: need at least 2 elements per axis");
    for (int a = 0; a < dim_; ++a)
        if (!(domain_.extent(a) > 0)) throw Error("MacroGrid: empty domain interval");

    interior_dof_.assign(num_nodes(), -1);
    for (int node = 0; node < num_nodes(); ++node) {
        if (!is_boundary_node(node)) {
            interior_dof_[node] = static_cast<int>(interior_nodes_.size());
            interior_nodes_.push_back(node);
        }
    }
}

int MacroGrid::num_nodes() const {
    int per_axis = n_ + 1;
    return dim_ == 1 ? per_axis : per_axis * per_axis;
}

int MacroGrid::num_elements() const { return dim_ == 1 ? n_ : n_ * n_; }

void MacroGrid::element_nodes(int element, std::array<int, 4>& nodes) const {
    if (dim_ == 1) {
        nodes = {element, element + 1, -1, -1};
        return;
    }
    int i = element % n_;
    int j = element / n_;
    int stride = n_ + 1;
    nodes = {j * stride + i, j * stride + i + 1, (j + 1) * stride + i + 1, (j + 1) * stride + i};
}

std::array<double, 2> MacroGrid::element_origin(int element) const {
    if (dim_ == 1) return {domain_.lo[0] + element * h(0), 0.0};
    int i = element % n_;
    int j = element / n_;
    return {domain_.lo[0] + i * h(0), domain_.lo[1] + j * h(1)};
}

std::array<double, 2> MacroGrid::node_coords(int node) const {
    if (dim_ == 1) return {domain_.lo[0] + node * h(0), 0.0};
    int stride = n_ + 1;
    int i = node % stride;
    int j = node / stride;
    return {domain_.lo[0] + i * h(0), domain_.lo[1] + j * h(1)};
}

bool MacroGrid::is_boundary_node(int node) const {
    if (dim_ == 1) return node == 0 || node == n_;
    int stride = n_ + 1;
    int i = node % stride;
    int j = node / stride;
    return i == 0 || i == n_ || j == 0 || j == n_;
}

int MacroGrid::num_interior_nodes() const { return static_cast<int>(interior_nodes_.size()); }

int MacroGrid::locate(const std::array<double, 2>& x, std::array<double, 2>& local) const {
    std::array<int, 2> idx{0, 0};
    for (int a = 0; a < dim_; ++a) {
        double t = (x[a] - domain_.lo[a]) / h(a);
        int i = static_cast<int>(std::floor(t));
        i = std::clamp(i, 0, n_ - 1);
        idx[a] = i;
        local[a] = std::clamp(t - i, 0.0, 1.0);
    }
    return dim_ == 1 ? idx[0] : idx[1] * n_ + idx[0];
}

CellGrid::CellGrid(int dim, int elements_per_axis) : dim_(dim), m_(elements_per_axis) {
    if (dim_ != 1 && dim_ != 2) throw Error("CellGrid: dimension must be 1 or 2");
    if (m_ < 2) throw Error("CellGrid: need at least 2 elements per axis");
}

int CellGrid::num_nodes() const { return dim_ == 1 ? m_ : m_ * m_; }

int CellGrid::node_index(int i, int j) const {
    i = ((i % m_) + m_) % m_;
    j = ((j % m_) + m_) % m_;
    return dim_ == 1 ? i : j * m_ + i;
}

void CellGrid::element_nodes(int element, std::array<int, 4>& nodes) const {
    if (dim_ == 1) {
        nodes = {element, node_index(element + 1), -1, -1};
        return;
    }
    int i = element % m_;
    int j = element / m_;
    nodes = {node_index(i, j), node_index(i + 1, j), node_index(i + 1, j + 1),
             node_index(i, j + 1)};
}

std::array<double, 2> CellGrid::element_origin(int element) const {
    if (dim_ == 1) return {element * h(), 0.0};
    int i = element % m_;
    int j = element / m_;
    return {i * h(), j * h()};
}

std::array<double, 2> CellGrid::node_coords(int node) const {
    if (dim_ == 1) return {node * h(), 0.0};
    int i = node % m_;
    int j = node / m_;
    return {i * h(), j * h()};
}

int CellGrid::locate(const std::array<double, 2>& y, std::array<double, 2>& local) const {
    auto w = wrap_unit(y, dim_);
    std::array<int, 2> idx{0, 0};
    for (int a = 0; a < dim_; ++a) {
        double t = w[a] * m_;
        int i = static_cast<int>(std::floor(t));
        i = std::clamp(i, 0, m_ - 1);
        idx[a] = i;
        local[a] = std::clamp(t - i, 0.0, 1.0);
    }
    return dim_ == 1 ? idx[0] : idx[1] * m_ + idx[0];
}

std::array<double, 2> wrap_unit(const std::array<double, 2>& y, int dim) {
    std::array<double, 2> w{0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
        w[a] = y[a] - std::floor(y[a]);
        if (w[a] >= 1.0) w[a] = 0.0; // floor(-tiny) edge
    }
    return w;
}

} // namespace homog
