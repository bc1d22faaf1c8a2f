#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "quasi/cg.hpp"
#include "quasi/diff_ops.hpp"
#include "quasi/huber.hpp"
#include "quasi/image.hpp"
#include "quasi/quantile.hpp"

namespace quasi {

/// Per-frame regularization coefficients; the solver multiplies them by K when k_scaling is set.
struct BaseWeights {
    double mu = 0.075;
    double lambda = 5.0;
    double alpha = 100.0;
    double beta = 1.5;
};

struct SolverConfig {
    double mu = 0.075;     ///< TV weight
    double lambda = 5.0;   ///< QuaSI weight
    double alpha = 100.0;  ///< penalty on u = (I - Q) f
    double beta = 1.5;     ///< penalty on v = grad f
    std::size_t t_outer = 20;
    std::size_t t_inner = 2;
    CgParams cg;
    HuberParams huber;
    QuantileConfig quantile;
    bool k_scaling = true;

    void validate() const {
        using detail::require;
        for (double w : {mu, lambda, alpha, beta})
            require(w >= 0.0 && std::isfinite(w), ErrorKind::Config, "solver weights must be finite and >= 0");
        require(lambda == 0.0 || alpha > 0.0, ErrorKind::Config, "alpha must be > 0 when lambda > 0");
        require(mu == 0.0 || beta > 0.0, ErrorKind::Config, "beta must be > 0 when mu > 0");
        require(t_outer >= 1 && t_inner >= 1, ErrorKind::Config, "iteration counts must be >= 1");
        require(cg.max_iters >= 1, ErrorKind::Config, "cg_max_iters must be >= 1");
        require(cg.tolerance > 0.0, ErrorKind::Config, "cg_tolerance must be > 0");
        huber.validate();
        quantile.validate();
    }
};

/// Applies the K factor (or not) to a set of base weights.
inline SolverConfig make_config(std::size_t k, const BaseWeights& base, bool k_scaling = true) {
    detail::require(k >= 1, ErrorKind::Config, "K must be >= 1");
    const double s = k_scaling ? static_cast<double>(k) : 1.0;
    SolverConfig cfg;
    cfg.mu = base.mu * s;
    cfg.lambda = base.lambda * s;
    cfg.alpha = base.alpha * s;
    cfg.beta = base.beta * s;
    cfg.k_scaling = k_scaling;
    return cfg;
}

/// mu = 0.075 K, lambda = 5 K, alpha = 100 K, beta = 1.5 K, 20 x 2 iterations, 3x3 median.
inline SolverConfig default_config(std::size_t k) { return make_config(k, BaseWeights{}); }

// A prior whose weight is zero is switched off entirely: no Q assembly, no auxiliary or
// Bregman variables, no penalty term in the f-system.
inline bool quasi_active(const SolverConfig& cfg) { return cfg.lambda > 0.0; }
inline bool tv_active(const SolverConfig& cfg) { return cfg.mu > 0.0; }

struct SolverState {
    Image2D f;
    Image2D u;
    GradientField v;
    Image2D b_u;
    GradientField b_v;
    QuantileLinearization q;
    std::size_t outer_iter = 0;
    std::size_t inner_iter = 0;
    /// energy of the initial estimate followed by one entry per inner iteration
    std::vector<double> energy_trace;
    std::vector<std::size_t> cg_iterations;
};

inline void require_log_stack(const BScanStack& stack) {
    detail::require(stack.domain() == Domain::Log, ErrorKind::InvalidInput, "solver expects a log-domain stack");
}

/// Sum over frames of Huber(f - g_k) + mu TV(f) + lambda ||f - quantile_filter(f)||_1.
inline double energy(const Image2D& f, const BScanStack& stack, const SolverConfig& cfg) {
    require_log_stack(stack);
    double data = 0.0;
    for (const auto& g : stack.frames()) {
        require_same_shape(f, g, "energy");
        for (std::size_t i = 0; i < f.size(); ++i) data += huber_value(f[i] - g[i], cfg.huber);
    }
    double total = data;
    if (cfg.mu != 0.0) total += cfg.mu * tv_value(f);
    if (cfg.lambda != 0.0) total += cfg.lambda * quasi_prior_value(f, cfg.quantile);
    return total;
}

/// u = v = b_u = b_v = 0, f = mean of the frames.
inline SolverState initial_state(const BScanStack& stack) {
    require_log_stack(stack);
    SolverState s;
    s.f = frame_mean(stack);
    s.u = Image2D(stack.width(), stack.height(), 0.0);
    s.b_u = s.u;
    s.v = GradientField(stack.width(), stack.height());
    s.b_v = s.v;
    return s;
}

/// Matrix-free normal-equation operator of the f-update:
///   A = 2 sum_k W_k + alpha (I - Q)^T (I - Q) + beta grad^T grad
class FUpdateSystem {
public:
    FUpdateSystem(Image2D weight_sum, const QuantileLinearization* q, double alpha, double beta)
        : weight_sum_(std::move(weight_sum)), q_(q), alpha_(alpha), beta_(beta) {}

    Image2D operator()(const Image2D& x) const {
        Image2D out(x.width(), x.height());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = 2.0 * weight_sum_[i] * x[i];
        if (q_ != nullptr) {
            const Image2D t = apply_i_minus_q_transpose(*q_, apply_i_minus_q(*q_, x));
            for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha_ * t[i];
        }
        if (beta_ != 0.0) {
            const Image2D t = gradient_normal(x);
            for (std::size_t i = 0; i < x.size(); ++i) out[i] += beta_ * t[i];
        }
        return out;
    }

    const Image2D& weight_sum() const noexcept { return weight_sum_; }

private:
    Image2D weight_sum_;
    const QuantileLinearization* q_;
    double alpha_;
    double beta_;
};

struct FUpdateProblem {
    FUpdateSystem system;
    Image2D rhs;
};

/// Builds the IRLS-weighted system from the current state. Weights use state.f as f^t.
inline FUpdateProblem build_f_update(const SolverState& state, const BScanStack& stack, const SolverConfig& cfg) {
    require_log_stack(stack);
    const Image2D& f = state.f;
    Image2D weight_sum(f.width(), f.height(), 0.0);
    Image2D rhs(f.width(), f.height(), 0.0);
    for (const auto& g : stack.frames()) {
        require_same_shape(f, g, "f-update");
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double w = irls_weight(f[i], g[i], cfg.huber);
            weight_sum[i] += w;
            rhs[i] += 2.0 * w * g[i];
        }
    }

    const QuantileLinearization* q = nullptr;
    if (quasi_active(cfg)) {
        q = &state.q;
        const Image2D t = apply_i_minus_q_transpose(state.q, state.u - state.b_u);
        for (std::size_t i = 0; i < f.size(); ++i) rhs[i] += cfg.alpha * t[i];
    }
    double beta = 0.0;
    if (tv_active(cfg)) {
        beta = cfg.beta;
        const Image2D t = gradient_adjoint(state.v - state.b_v);
        for (std::size_t i = 0; i < f.size(); ++i) rhs[i] += cfg.beta * t[i];
    }
    return {FUpdateSystem(std::move(weight_sum), q, cfg.alpha, beta), std::move(rhs)};
}

/// One IRLS step: solves the weighted quadratic surrogate by CG, warm-started from state.f.
inline Image2D solve_f_update(const SolverState& state, const BScanStack& stack, const SolverConfig& cfg,
                              CgResult* stats = nullptr) {
    const FUpdateProblem problem = build_f_update(state, stack, cfg);
    Image2D f = state.f;
    const CgResult res = conjugate_gradient(problem.system, problem.rhs, f, cfg.cg);
    if (stats != nullptr) *stats = res;
    return f;
}

/// Soft thresholding, the proximal map of gamma |.|.
inline double shrink(double z, double gamma) {
    const double m = std::abs(z) - gamma;
    if (m <= 0.0) return 0.0;
    return z < 0.0 ? -m : m;
}

inline Image2D update_u(const SolverState& s, const SolverConfig& cfg) {
    Image2D u = apply_i_minus_q(s.q, s.f);
    require_same_shape(u, s.b_u, "u-update");
    const double gamma = cfg.lambda / cfg.alpha;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = shrink(u[i] + s.b_u[i], gamma);
    return u;
}

inline GradientField update_v(const SolverState& s, const SolverConfig& cfg) {
    GradientField v = gradient(s.f);
    require_same_shape(v.gx, s.b_v.gx, "v-update");
    const double gamma = cfg.mu / cfg.beta;
    for (std::size_t i = 0; i < v.gx.size(); ++i) {
        v.gx[i] = shrink(v.gx[i] + s.b_v.gx[i], gamma);
        v.gy[i] = shrink(v.gy[i] + s.b_v.gy[i], gamma);
    }
    return v;
}

/// Shrinkage of (I - Q) f + b_u at lambda/alpha and of grad f + b_v at mu/beta.
inline std::pair<Image2D, GradientField> update_auxiliaries(const SolverState& s, const SolverConfig& cfg) {
    return {update_u(s, cfg), update_v(s, cfg)};
}

inline Image2D update_b_u(const SolverState& s) {
    Image2D b = apply_i_minus_q(s.q, s.f);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = s.b_u[i] + (b[i] - s.u[i]);
    return b;
}

inline GradientField update_b_v(const SolverState& s) {
    GradientField b = gradient(s.f);
    for (std::size_t i = 0; i < b.gx.size(); ++i) {
        b.gx[i] = s.b_v.gx[i] + (b.gx[i] - s.v.gx[i]);
        b.gy[i] = s.b_v.gy[i] + (b.gy[i] - s.v.gy[i]);
    }
    return b;
}

/// b_u += (I - Q) f - u, b_v += grad f - v
inline std::pair<Image2D, GradientField> update_bregman(const SolverState& s) {
    return {update_b_u(s), update_b_v(s)};
}

struct DenoiseResult {
    Image2D f;
    SolverState state;
};

/// ADMM with T_outer re-linearizations of the quantile operator, each followed by T_inner rounds of
/// {IRLS/CG f-update, shrinkage, Bregman update}.
inline DenoiseResult denoise(const BScanStack& stack, const SolverConfig& cfg) {
    cfg.validate();
    SolverState s = initial_state(stack);
    const bool with_quasi = quasi_active(cfg);
    const bool with_tv = tv_active(cfg);

    s.energy_trace.reserve(1 + cfg.t_outer * cfg.t_inner);
    s.energy_trace.push_back(energy(s.f, stack, cfg));

    for (std::size_t outer = 0; outer < cfg.t_outer; ++outer) {
        s.outer_iter = outer + 1;
        if (with_quasi) s.q = assemble_linearization(s.f, cfg.quantile);
        for (std::size_t inner = 0; inner < cfg.t_inner; ++inner) {
            s.inner_iter = inner + 1;
            CgResult cg;
            try {
                s.f = solve_f_update(s, stack, cfg, &cg);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NumericFailure) throw;
                throw Error(ErrorKind::NumericFailure, std::string(e.what()) + " (outer " +
                                                           std::to_string(s.outer_iter) + ", inner " +
                                                           std::to_string(s.inner_iter) + ")");
            }
            s.cg_iterations.push_back(cg.iterations);
            if (with_quasi) s.u = update_u(s, cfg);
            if (with_tv) s.v = update_v(s, cfg);
            if (with_quasi) s.b_u = update_b_u(s);
            if (with_tv) s.b_v = update_b_v(s);
            s.energy_trace.push_back(energy(s.f, stack, cfg));
        }
    }
    Image2D f = s.f;
    return {std::move(f), std::move(s)};
}

}  // namespace quasi
