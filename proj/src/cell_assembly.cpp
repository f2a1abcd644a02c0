#include "cell_assembly.hpp"

#include "homog/errors.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <vector>

namespace homog::detail {

MatrixCoeff scalar_coeff(std::function<double(std::array<double, 2>)> a) {
    return [a = std::move(a)](std::array<double, 2> y) -> std::array<double, 4> {
        double v = a(y);
        return {v, 0.0, 0.0, v};
    };
}

MatrixCoeff identity_coeff() {
    return [](std::array<double, 2>) -> std::array<double, 4> { return {1.0, 0.0, 0.0, 1.0}; };
}

int alignment_subcells(const CellGrid& grid, int breakpoints) {
    if (breakpoints <= 0) return 1;
    int m = grid.elements_per_axis();
    if (breakpoints % m == 0) return breakpoints / m;
    if (m % breakpoints == 0) return 1; // element boundaries already align
    return (breakpoints + m - 1) / m;  // best effort
}

namespace {

inline void q1_grad(double s, double t, std::array<double, 4>& dNds,
                    std::array<double, 4>& dNdt) {
    dNds = {-(1 - t), (1 - t), t, -t};
    dNdt = {-(1 - s), -s, s, (1 - s)};
}

inline void q1_shape(double s, double t, std::array<double, 4>& N) {
    N = {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
}

} // namespace

Eigen::SparseMatrix<double> cell_stiffness(const CellGrid& grid, const MatrixCoeff& a,
                                           int gauss_points, int subcells) {
    const auto& g = GaussRule::get(gauss_points);
    const double h = grid.h();
    const int nn = grid.num_nodes();
    std::vector<Eigen::Triplet<double>> trips;
    std::array<int, 4> nodes;

    if (grid.dim() == 1) {
        trips.reserve(static_cast<std::size_t>(grid.num_elements()) * 4);
        const double w = h / subcells;
        for (int e = 0; e < grid.num_elements(); ++e) {
            grid.element_nodes(e, nodes);
            double y0 = grid.element_origin(e)[0];
            double acc = 0.0;
            for (int s = 0; s < subcells; ++s)
                for (std::size_t q = 0; q < g.points.size(); ++q)
                    acc += w * g.weights[q] * a({y0 + (s + g.points[q]) * w, 0.0})[0];
            double k = acc / (h * h); // per-element D psi = +-1/h
            trips.emplace_back(nodes[0], nodes[0], k);
            trips.emplace_back(nodes[1], nodes[1], k);
            trips.emplace_back(nodes[0], nodes[1], -k);
            trips.emplace_back(nodes[1], nodes[0], -k);
        }
    } else {
        trips.reserve(static_cast<std::size_t>(grid.num_elements()) * 16);
        const double w = h / subcells;
        std::array<double, 4> dNds, dNdt;
        for (int e = 0; e < grid.num_elements(); ++e) {
            grid.element_nodes(e, nodes);
            auto origin = grid.element_origin(e);
            double ke[4][4] = {};
            for (int sj = 0; sj < subcells; ++sj)
                for (int si = 0; si < subcells; ++si)
                    for (std::size_t qj = 0; qj < g.points.size(); ++qj)
                        for (std::size_t qi = 0; qi < g.points.size(); ++qi) {
                            double ls = (si + g.points[qi]) / subcells;
                            double lt = (sj + g.points[qj]) / subcells;
                            std::array<double, 2> y{origin[0] + ls * h, origin[1] + lt * h};
                            auto A = a(y);
                            q1_grad(ls, lt, dNds, dNdt);
                            double wq = (w * g.weights[qi]) * (w * g.weights[qj]);
                            for (int i = 0; i < 4; ++i) {
                                double gi0 = dNds[i] / h, gi1 = dNdt[i] / h;
                                for (int j = 0; j < 4; ++j) {
                                    double gj0 = dNds[j] / h, gj1 = dNdt[j] / h;
                                    ke[i][j] += wq
                                                * (gi0 * (A[0] * gj0 + A[1] * gj1)
                                                   + gi1 * (A[2] * gj0 + A[3] * gj1));
                                }
                            }
                        }
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) trips.emplace_back(nodes[i], nodes[j], ke[i][j]);
        }
    }

    Eigen::SparseMatrix<double> K(nn, nn);
    K.setFromTriplets(trips.begin(), trips.end());
    return K;
}

Eigen::VectorXd cell_load(const CellGrid& grid, const std::function<double(std::array<double, 2>)>& f,
                          int gauss_points, int subcells) {
    const auto& g = GaussRule::get(gauss_points);
    const double h = grid.h();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(grid.num_nodes());
    std::array<int, 4> nodes;

    if (grid.dim() == 1) {
        const double w = h / subcells;
        for (int e = 0; e < grid.num_elements(); ++e) {
            grid.element_nodes(e, nodes);
            double y0 = grid.element_origin(e)[0];
            for (int s = 0; s < subcells; ++s)
                for (std::size_t q = 0; q < g.points.size(); ++q) {
                    double local = (s + g.points[q]) / subcells;
                    double fv = f({y0 + local * h, 0.0});
                    double wq = w * g.weights[q];
                    rhs[nodes[0]] += wq * fv * (1 - local);
                    rhs[nodes[1]] += wq * fv * local;
                }
        }
        return rhs;
    }

    const double w = h / subcells;
    std::array<double, 4> N;
    for (int e = 0; e < grid.num_elements(); ++e) {
        grid.element_nodes(e, nodes);
        auto origin = grid.element_origin(e);
        for (int sj = 0; sj < subcells; ++sj)
            for (int si = 0; si < subcells; ++si)
                for (std::size_t qj = 0; qj < g.points.size(); ++qj)
                    for (std::size_t qi = 0; qi < g.points.size(); ++qi) {
                        double ls = (si + g.points[qi]) / subcells;
                        double lt = (sj + g.points[qj]) / subcells;
                        double fv = f({origin[0] + ls * h, origin[1] + lt * h});
                        double wq = (w * g.weights[qi]) * (w * g.weights[qj]);
                        q1_shape(ls, lt, N);
                        for (int i = 0; i < 4; ++i) rhs[nodes[i]] += wq * fv * N[i];
                    }
    }
    return rhs;
}

Eigen::VectorXd cell_mass_weights(const CellGrid& grid) {
    double w = std::pow(grid.h(), grid.dim());
    return Eigen::VectorXd::Constant(grid.num_nodes(), w);
}

Eigen::VectorXd solve_zero_mean(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& rhs,
                                const Eigen::VectorXd& weights, double& residual) {
    const auto n = static_cast<int>(K.rows());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(K.nonZeros()) + 2 * n);
    for (int k = 0; k < K.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int i = 0; i < n; ++i) {
        trips.emplace_back(i, n, weights[i]);
        trips.emplace_back(n, i, weights[i]);
    }
    Eigen::SparseMatrix<double> aug(n + 1, n + 1);
    aug.setFromTriplets(trips.begin(), trips.end());
    aug.makeCompressed();

    Eigen::VectorXd b(n + 1);
    b.head(n) = rhs;
    b[n] = 0.0;

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(aug);
    if (lu.info() != Eigen::Success)
        throw Error("zero-mean cell solve: factorization failed (singular system)");
    Eigen::VectorXd sol = lu.solve(b);

    double lambda = sol[n];
    Eigen::VectorXd u = sol.head(n);
    residual = (K * u + lambda * weights - rhs).lpNorm<Eigen::Infinity>();
    return u;
}

} // namespace homog::detail
