#pragma once

#include <cmath>

#include "quasi/error.hpp"

namespace quasi {

struct HuberParams {
    double delta = 0.05;

    void validate() const {
        detail::require(delta > 0.0 && std::isfinite(delta), ErrorKind::Config,
                        "Huber delta must be positive");
    }
};

/// r^2/2 inside [-delta, delta], delta*|r| - delta^2/2 outside.
inline double huber_value(double r, HuberParams p) {
    const double a = std::abs(r);
    return a <= p.delta ? 0.5 * r * r : p.delta * a - 0.5 * p.delta * p.delta;
}

inline double huber_derivative(double r, HuberParams p) {
    if (std::abs(r) <= p.delta) return r;
    return r > 0.0 ? p.delta : -p.delta;
}

/// IRLS weight rho'(r) / r for r = f_prev - g, with the limit value 1 at r = 0.
inline double irls_weight(double f_prev, double g, HuberParams p) {
    const double a = std::abs(f_prev - g);
    return a <= p.delta ? 1.0 : p.delta / a;
}

}  // namespace quasi
