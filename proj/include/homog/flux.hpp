#pragma once

#include <array>
#include <cmath>

namespace homog {

/// Regularized p-flux weight: flux(xi) = a * (|xi|^2 + delta^2)^((p-2)/2) * xi.
/// At delta = 0 this is exactly A(y, xi) = a |xi|^{p-2} xi; the weight stays
/// monotone in xi for every delta >= 0 and p >= 2. The scalar coefficient a
/// is applied by the caller.
struct RegularizedFlux {
    double p = 2.0;
    double delta = 0.0;

    /// (|xi|^2 + delta^2)^((p-2)/2)
    double weight(double xi_sq) const {
        if (p == 2.0) return 1.0;
        return std::pow(xi_sq + delta * delta, 0.5 * (p - 2.0));
    }

    /// d(weight)/d(xi_sq)
    double dweight(double xi_sq) const {
        if (p == 2.0) return 0.0;
        return 0.5 * (p - 2.0) * std::pow(xi_sq + delta * delta, 0.5 * (p - 4.0));
    }

    double flux1(double xi) const { return weight(xi * xi) * xi; }

    /// d(flux1)/d(xi) = (xi^2+d^2)^((p-4)/2) * ((p-1) xi^2 + d^2) > 0.
    double dflux1(double xi) const { return weight(xi * xi) + 2.0 * xi * xi * dweight(xi * xi); }

    std::array<double, 2> flux2(const std::array<double, 2>& xi) const {
        double w = weight(xi[0] * xi[0] + xi[1] * xi[1]);
        return {w * xi[0], w * xi[1]};
    }

    /// 2x2 derivative w I + 2 w' xi xi^T, symmetric positive definite.
    std::array<double, 4> dflux2(const std::array<double, 2>& xi) const {
        double s = xi[0] * xi[0] + xi[1] * xi[1];
        double w = weight(s);
        double dw = 2.0 * dweight(s);
        return {w + dw * xi[0] * xi[0], dw * xi[0] * xi[1], dw * xi[0] * xi[1],
                w + dw * xi[1] * xi[1]};
    }
};

/// The potential nonlinearity F(u) = |u|^{p-2} u and its derivatives.
/// F'(u) = (p-1)|u|^{p-2}; F''(u) = (p-1)(p-2)|u|^{p-4} u (taken as 0 at
/// u = 0 and for p = 2).
struct PowerNonlinearity {
    double p = 2.0;

    double F(double u) const {
        if (p == 2.0) return u;
        return std::pow(std::abs(u), p - 2.0) * u;
    }

    double dF(double u) const {
        if (p == 2.0) return 1.0;
        return (p - 1.0) * std::pow(std::abs(u), p - 2.0);
    }

    double ddF(double u) const {
        if (p == 2.0 || u == 0.0) return 0.0;
        return (p - 1.0) * (p - 2.0) * std::pow(std::abs(u), p - 4.0) * u;
    }

    /// Inverse of t -> |t|^{p-2} t.
    double inverse(double s) const {
        if (p == 2.0) return s;
        return std::copysign(std::pow(std::abs(s), 1.0 / (p - 1.0)), s);
    }
};

} // namespace homog
