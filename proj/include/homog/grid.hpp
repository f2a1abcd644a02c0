#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace homog {

/// Axis-aligned box, product of intervals; only the first `dim` axes are used.
struct Box {
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};

    static Box unit(int dim) {
        Box b;
        (void)dim;
        return b;
    }
    double extent(int axis) const { return hi[axis] - lo[axis]; }
};

/// Gauss-Legendre rule on [0,1]. `npoints` in 1..5; default degree of
/// exactness 2*npoints-1.
struct GaussRule {
    std::vector<double> points;
    std::vector<double> weights;

    static const GaussRule& get(int npoints);
};

/// Uniform grid on a box domain with affine (d=1) or bilinear tensor (d=2)
/// elements. Nodes are numbered lexicographically, x1 fastest.
class MacroGrid {
public:
    MacroGrid(int dim, int elements_per_axis, Box domain = Box{});

    int dim() const { return dim_; }
    int elements_per_axis() const { return n_; }
    const Box& domain() const { return domain_; }
    double h(int axis) const { return domain_.extent(axis) / n_; }

    int num_nodes() const;
    int num_elements() const;
    int nodes_per_element() const { return dim_ == 1 ? 2 : 4; }

    /// Corner node indices of an element (counterclockwise for d=2).
    void element_nodes(int element, std::array<int, 4>& nodes) const;
    /// Lower-left corner coordinates of an element.
    std::array<double, 2> element_origin(int element) const;
    std::array<double, 2> node_coords(int node) const;
    bool is_boundary_node(int node) const;

    /// Interior (non-Dirichlet) degrees of freedom.
    int num_interior_nodes() const;
    /// Maps node index -> interior dof index, or -1 on the boundary.
    const std::vector<int>& interior_dof_map() const { return interior_dof_; }
    const std::vector<int>& interior_nodes() const { return interior_nodes_; }

    /// Element containing x (clamped to the domain), plus local coordinates
    /// in [0,1]^d.
    int locate(const std::array<double, 2>& x, std::array<double, 2>& local) const;

private:
    int dim_;
    int n_;
    Box domain_;
    std::vector<int> interior_dof_;
    std::vector<int> interior_nodes_;
};

/// Uniform periodic grid on the unit cell Y = (0,1)^d. Opposite faces are
/// identified, so there are m^d distinct nodes.
class CellGrid {
public:
    CellGrid(int dim, int elements_per_axis);

    int dim() const { return dim_; }
    int elements_per_axis() const { return m_; }
    double h() const { return 1.0 / m_; }

    int num_nodes() const;
    int num_elements() const { return num_nodes(); }
    int nodes_per_element() const { return dim_ == 1 ? 2 : 4; }

    /// Corner node indices with periodic wrap.
    void element_nodes(int element, std::array<int, 4>& nodes) const;
    std::array<double, 2> element_origin(int element) const;
    std::array<double, 2> node_coords(int node) const;

    int node_index(int i, int j = 0) const;

    int locate(const std::array<double, 2>& y, std::array<double, 2>& local) const;

private:
    int dim_;
    int m_;
};

/// Wraps a point into the half-open unit cell [0,1)^d.
std::array<double, 2> wrap_unit(const std::array<double, 2>& y, int dim);

} // namespace homog
