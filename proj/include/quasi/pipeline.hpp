#pragma once

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "quasi/admm.hpp"
#include "quasi/io.hpp"
#include "quasi/metrics.hpp"
#include "quasi/phantom.hpp"
#include "quasi/registration.hpp"

namespace quasi {

enum class RegistrationMode { None, CrossCorrelation };

/// Intensity scale used for MSR/CNR: the log-compressed display scale or the linear scale.
enum class RegionMetricDomain { Display, Linear };

/// Optional replacements for SolverConfig fields. Weights are per-frame base values and are
/// multiplied by K unless k_scaling is off.
struct SolverOverrides {
    std::optional<double> mu, lambda, alpha, beta;
    std::optional<std::size_t> t_outer, t_inner, cg_max_iters;
    std::optional<double> cg_tolerance;
    std::optional<std::size_t> window;
    std::optional<double> quantile_p;
    std::optional<double> huber_delta;
    bool k_scaling = true;
};

inline SolverConfig resolve_config(std::size_t k, const SolverOverrides& o) {
    BaseWeights base;
    if (o.mu) base.mu = *o.mu;
    if (o.lambda) base.lambda = *o.lambda;
    if (o.alpha) base.alpha = *o.alpha;
    if (o.beta) base.beta = *o.beta;
    SolverConfig cfg = make_config(k, base, o.k_scaling);
    if (o.t_outer) cfg.t_outer = *o.t_outer;
    if (o.t_inner) cfg.t_inner = *o.t_inner;
    if (o.cg_max_iters) cfg.cg.max_iters = *o.cg_max_iters;
    if (o.cg_tolerance) cfg.cg.tolerance = *o.cg_tolerance;
    if (o.window) cfg.quantile.window = *o.window;
    if (o.quantile_p) cfg.quantile.p = *o.quantile_p;
    if (o.huber_delta) cfg.huber.delta = *o.huber_delta;
    cfg.validate();
    return cfg;
}

struct PhantomParams {
    std::size_t width = 128;
    std::size_t height = 128;
    unsigned looks = 4;
    std::uint64_t seed = 0;
};

struct JobConfig {
    std::vector<std::string> inputs;
    std::string output;             ///< empty: do not write the denoised image
    std::size_t k = 0;              ///< frames to use; 0 means all inputs
    RegistrationMode registration = RegistrationMode::None;
    int search_radius = 16;
    SolverOverrides solver;
    double intensity_floor = kDefaultIntensityFloor;
    std::string reference;          ///< optional full-reference image for PSNR/SSIM
    std::string regions;            ///< optional region file for MSR/CNR
    RegionMetricDomain region_domain = RegionMetricDomain::Display;
    std::optional<PhantomParams> phantom;  ///< synthesize the input instead of reading files
};

using Report = nlohmann::json;

namespace detail {

inline nlohmann::json number_or_inf(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
}

inline void add_region_metrics(Report& report, const char* tag, const Image2D& linear, const RegionSet& regions,
                               RegionMetricDomain domain, double floor) {
    const Image2D img = domain == RegionMetricDomain::Display ? to_display(linear, floor) : linear;
    report[std::string("msr_") + tag] = number_or_inf(msr(img, regions));
    if (regions.background) report[std::string("cnr_") + tag] = number_or_inf(cnr(img, regions));
}

}  // namespace detail

/// load (or synthesize) -> register -> log -> denoise -> exp -> save, plus metrics.
/// The output file is written only after the solve succeeded.
inline Report run_job(const JobConfig& job) {
    const auto start = std::chrono::steady_clock::now();
    Report report;

    std::optional<Image2D> reference;
    std::vector<Image2D> frames;
    if (job.phantom) {
        const PhantomParams& pp = *job.phantom;
        const std::size_t k = job.k == 0 ? 1 : job.k;
        Phantom ph = generate_phantom(retina_phantom(pp.width, pp.height, pp.looks, pp.seed), k);
        reference = ph.clean;
        frames = ph.stack.frames();
        report["mode"] = "phantom";
        report["seed"] = pp.seed;
        report["looks"] = pp.looks;
    } else {
        detail::require(!job.inputs.empty(), ErrorKind::Config, "no input images given");
        const std::size_t k = job.k == 0 ? job.inputs.size() : job.k;
        detail::require(k <= job.inputs.size(), ErrorKind::Config,
                        "K = " + std::to_string(k) + " exceeds the " + std::to_string(job.inputs.size()) + " inputs");
        for (std::size_t i = 0; i < k; ++i) frames.push_back(load_image(job.inputs[i]));
        if (!job.reference.empty()) reference = load_image(job.reference);
        report["mode"] = "files";
    }
    std::optional<RegionSet> regions;
    if (!job.regions.empty()) regions = load_regions(job.regions);

    BScanStack stack(std::move(frames), Domain::Linear);
    const SolverConfig cfg = resolve_config(stack.count(), job.solver);

    if (job.registration == RegistrationMode::CrossCorrelation) {
        RegistrationResult reg = register_stack(stack, job.search_radius);
        nlohmann::json shifts = nlohmann::json::array();
        for (const auto& s : reg.shifts) shifts.push_back({s.dx, s.dy});
        report["shifts"] = shifts;
        stack = std::move(reg.stack);
    }

    const DenoiseResult result = denoise(to_log(stack, job.intensity_floor), cfg);
    const Image2D denoised = exp_image(result.f);
    const Image2D noisy_mean = frame_mean(stack);

    if (reference) {
        require_same_shape(*reference, denoised, "reference image");
        report["psnr_noisy"] = detail::number_or_inf(psnr(noisy_mean, *reference));
        report["psnr_denoised"] = detail::number_or_inf(psnr(denoised, *reference));
        if (denoised.width() >= kSsimWindow && denoised.height() >= kSsimWindow) {
            report["ssim_noisy"] = ssim(noisy_mean, *reference);
            report["ssim_denoised"] = ssim(denoised, *reference);
        }
    }
    if (regions) {
        detail::add_region_metrics(report, "noisy", noisy_mean, *regions, job.region_domain, job.intensity_floor);
        detail::add_region_metrics(report, "denoised", denoised, *regions, job.region_domain, job.intensity_floor);
    }

    if (!job.output.empty()) save_image(job.output, denoised);

    const auto& st = result.state;
    std::size_t cg_total = 0;
    for (auto n : st.cg_iterations) cg_total += n;
    report["status"] = "ok";
    report["k"] = stack.count();
    report["width"] = stack.width();
    report["height"] = stack.height();
    report["mu"] = cfg.mu;
    report["lambda"] = cfg.lambda;
    report["alpha"] = cfg.alpha;
    report["beta"] = cfg.beta;
    report["huber_delta"] = cfg.huber.delta;
    report["outer_iterations"] = st.outer_iter;
    report["inner_iterations"] = st.outer_iter * cfg.t_inner;
    report["cg_iterations_total"] = cg_total;
    report["energy_initial"] = st.energy_trace.front();
    report["energy_final"] = st.energy_trace.back();
    report["energy_trace"] = st.energy_trace;
    if (!job.output.empty()) report["output"] = job.output;
    report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

/// Runs `instances` phantom jobs with consecutive seeds on up to `jobs` worker threads.
/// Reports come back in seed order; worker exceptions are rethrown on the caller's thread.
inline std::vector<Report> run_phantom_batch(const JobConfig& base, std::size_t instances, std::size_t jobs) {
    detail::require(base.phantom.has_value(), ErrorKind::Config, "batch mode needs phantom parameters");
    std::vector<Report> reports(instances);
    std::vector<std::exception_ptr> errors(instances);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < instances; i = next++) {
            try {
                JobConfig job = base;
                job.output.clear();
                job.phantom->seed = base.phantom->seed + i;
                reports[i] = run_job(job);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const std::size_t n = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(instances, 1));
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return reports;
}

}  // namespace quasi
