#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "quasi/error.hpp"

namespace quasi {

struct CgParams {
    std::size_t max_iters = 100;
    double tolerance = 1e-6;  ///< on ||b - A x|| / ||b||
};

struct CgResult {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Conjugate gradients for a symmetric positive (semi)definite operator given only as a callable
/// `apply(const Vector&) -> Vector`. `x` holds the warm start on entry and the solution on exit.
/// Vector needs pixels() returning a contiguous span and a free dot().
template <class Vector, class Operator>
CgResult conjugate_gradient(const Operator& apply, const Vector& rhs, Vector& x, const CgParams& params) {
    auto check = [](double v, std::size_t it, const char* what) {
        if (!std::isfinite(v))
            throw Error(ErrorKind::NumericFailure,
                        std::string("CG produced non-finite ") + what + " at iteration " + std::to_string(it));
    };

    const double rhs_norm = std::sqrt(dot(rhs, rhs));
    check(rhs_norm, 0, "right-hand side");
    if (rhs_norm == 0.0) {
        for (double& v : x.pixels()) v = 0.0;
        return {0, 0.0, true};
    }

    Vector r = apply(x);
    {
        auto rp = r.pixels();
        auto bp = rhs.pixels();
        for (std::size_t i = 0; i < rp.size(); ++i) rp[i] = bp[i] - rp[i];
    }
    double rr = dot(r, r);
    check(rr, 0, "residual");

    CgResult result;
    result.relative_residual = std::sqrt(rr) / rhs_norm;
    if (result.relative_residual <= params.tolerance) {
        result.converged = true;
        return result;
    }

    Vector p = r;
    for (std::size_t it = 1; it <= params.max_iters; ++it) {
        const Vector ap = apply(p);
        const double pap = dot(p, ap);
        check(pap, it, "curvature");
        if (pap <= 0.0) break;  // direction in the null space; nothing left to reduce
        const double step = rr / pap;

        auto xp = x.pixels();
        auto rp = r.pixels();
        auto pp = p.pixels();
        auto app = ap.pixels();
        for (std::size_t i = 0; i < xp.size(); ++i) {
            xp[i] += step * pp[i];
            rp[i] -= step * app[i];
        }
        const double rr_next = dot(r, r);
        check(rr_next, it, "residual");

        result.iterations = it;
        result.relative_residual = std::sqrt(rr_next) / rhs_norm;
        if (result.relative_residual <= params.tolerance) {
            result.converged = true;
            break;
        }
        const double beta = rr_next / rr;
        for (std::size_t i = 0; i < pp.size(); ++i) pp[i] = rp[i] + beta * pp[i];
        rr = rr_next;
    }
    return result;
}

}  // namespace quasi
