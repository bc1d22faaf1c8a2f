// Acceptance suite: one line per criterion, nonzero exit if any criterion fails.
// Criterion 10 reads a real dataset from $QUASI_PIGEYE_DIR (gold.* plus frame_* files)
// and is skipped when the variable is unset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "quasi/quasi.hpp"

using namespace quasi;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Verdict {
    Outcome outcome;
    std::string detail;
};

Verdict pass(std::string d) { return {Outcome::Pass, std::move(d)}; }
Verdict fail(std::string d) { return {Outcome::Fail, std::move(d)}; }
Verdict skip(std::string d) { return {Outcome::Skip, std::move(d)}; }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

BScanStack log_stack(std::vector<Image2D> frames) { return {std::move(frames), Domain::Log}; }

// ---------------------------------------------------------------------------------------------

Verdict linearization_exactness() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1001);
    const QuantileConfig cfg;
    int mismatched = 0;
    for (int i = 0; i < 50; ++i) {
        // half the images have heavy ties
        const Image2D f = i % 2 ? oracle::random_image(32, 32, rng) : oracle::random_levels(32, 32, rng, 3);
        const Image2D filtered = quantile_filter(f, cfg);
        const Image2D gathered = apply_q(assemble_linearization(f, cfg), f);
        if (!(gathered == filtered) || !(filtered == oracle::brute_quantile(f, cfg.p, cfg.window))) ++mismatched;
    }
    const double secs = seconds_since(t0);
    const std::string d = fmt("50 images, %d mismatched, %.3f s", mismatched, secs);
    return mismatched == 0 && secs < 1.0 ? pass(d) : fail(d);
}

Verdict operator_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1002);
    const std::size_t w = 16, h = 16;
    const auto n = static_cast<Eigen::Index>(w * h);
    double worst_adj = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Image2D f = oracle::random_image(w, h, rng);
        const Image2D x = oracle::random_image(w, h, rng, -1, 1), y = oracle::random_image(w, h, rng, -1, 1);
        const QuantileLinearization q = assemble_linearization(f, QuantileConfig{});
        worst_adj = std::max(worst_adj, oracle::rel_diff(dot(apply_q(q, x), y), dot(x, apply_q_transpose(q, y))));
        worst_adj = std::max(worst_adj, oracle::rel_diff(dot(apply_i_minus_q(q, x), y),
                                                         dot(x, apply_i_minus_q_transpose(q, y))));
        const GradientField g(oracle::random_image(w, h, rng, -1, 1), oracle::random_image(w, h, rng, -1, 1));
        worst_adj = std::max(worst_adj, oracle::rel_diff(dot(gradient(x), g), dot(x, gradient_adjoint(g))));
    }

    double worst_sym = 0.0, min_eig = 1.0, worst_cg = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        SolverConfig cfg = default_config(static_cast<std::size_t>(trial + 1));
        cfg.cg = {5000, 1e-14};
        SolverState s;
        s.f = oracle::random_image(w, h, rng, -1, 1);
        s.u = oracle::random_image(w, h, rng, -0.2, 0.2);
        s.b_u = oracle::random_image(w, h, rng, -0.2, 0.2);
        s.v = GradientField(oracle::random_image(w, h, rng, -0.2, 0.2), oracle::random_image(w, h, rng, -0.2, 0.2));
        s.b_v = GradientField(oracle::random_image(w, h, rng, -0.2, 0.2), oracle::random_image(w, h, rng, -0.2, 0.2));
        s.q = assemble_linearization(s.f, cfg.quantile);
        std::vector<Image2D> frames;
        for (int k = 0; k <= trial; ++k) frames.push_back(s.f + oracle::random_image(w, h, rng, -0.3, 0.3));
        const BScanStack st = log_stack(frames);
        const FUpdateProblem p = build_f_update(s, st, cfg);

        // Column-by-column materialisation of the matrix-free operator.
        oracle::Dense a(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            Image2D e(w, h, 0.0);
            e[static_cast<std::size_t>(j)] = 1.0;
            a.col(j) = oracle::to_vec(p.system(e));
        }
        worst_sym = std::max(worst_sym, (a - a.transpose()).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff());
        const Eigen::SelfAdjointEigenSolver<oracle::Dense> eig(0.5 * (a + a.transpose()));
        min_eig = std::min(min_eig, eig.eigenvalues().minCoeff() / eig.eigenvalues().maxCoeff());

        const oracle::Vec direct = a.ldlt().solve(oracle::to_vec(p.rhs));
        const Image2D f = solve_f_update(s, st, cfg);
        worst_cg = std::max(worst_cg, (oracle::to_vec(f) - direct).norm() / direct.norm());
    }
    const double secs = seconds_since(t0);
    const std::string d = fmt("adjoint %.2e, asymmetry %.2e, min eig/max %.2e, CG vs dense %.2e, %.2f s", worst_adj,
                              worst_sym, min_eig, worst_cg, secs);
    const bool ok = worst_adj <= 1e-12 && worst_sym <= 1e-10 && min_eig >= -1e-10 && worst_cg <= 1e-8 && secs < 10.0;
    return ok ? pass(d) : fail(d);
}

Verdict scalar_prox() {
    std::mt19937_64 rng(1003);
    std::uniform_real_distribution<double> ut(-5, 5), ug(0.0, 3.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double t = ut(rng), gamma = ug(rng), alpha = 1.0, lambda = gamma * alpha;
        const auto obj = [&](double u) { return lambda * std::abs(u) + 0.5 * alpha * (u - t) * (u - t); };
        const double span = std::abs(t) + gamma + 1.0;
        const double ref = oracle::golden_section_min(obj, -span, span);
        worst = std::max(worst, std::abs(shrink(t, gamma) - ref));
    }
    const std::string d = fmt("1000 pairs, max |error| %.2e", worst);
    return worst <= 1e-6 ? pass(d) : fail(d);
}

Verdict degenerate_configs() {
    std::mt19937_64 rng(1004);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const Image2D base = oracle::random_image(40, 32, rng, -2, 0);
        std::vector<Image2D> frames;
        for (int k = 0; k < 4; ++k) frames.push_back(base + oracle::random_image(40, 32, rng, -0.02, 0.02));
        const BScanStack st = log_stack(frames);
        SolverConfig cfg = default_config(4);
        cfg.lambda = cfg.mu = 0.0;
        const Image2D mean = frame_mean(st);
        const Image2D f = denoise(st, cfg).f;
        for (std::size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(f[i] - mean[i]));
    }

    // lambda = 0: the quantile branch's own settings must not leak into the result
    const Phantom p = generate_phantom(retina_phantom(64, 64, 4, 7), 4);
    const BScanStack st = to_log(p.stack);
    SolverConfig tv_only = default_config(4);
    tv_only.lambda = 0.0;
    SolverConfig other = tv_only;
    other.alpha = 0.0;
    other.quantile.window = 7;
    other.quantile.p = 0.2;
    const bool identical = denoise(st, tv_only).f == denoise(st, other).f;

    const std::string d = fmt("mean deviation %.2e, lambda=0 runs %s", worst, identical ? "bit-identical" : "differ");
    return worst <= 1e-10 && identical ? pass(d) : fail(d);
}

// ---------------------------------------------------------------------------------------------

struct PhantomRun {
    double psnr_mean4 = 0, psnr_k4 = 0, psnr_k1 = 0, psnr_tv4 = 0;
    bool descent_k4 = false, descent_k1 = false;
};

struct Solved {
    double psnr;
    bool descent;
};

Solved solve_phantom(const Phantom& p, const SolverConfig& cfg) {
    const DenoiseResult r = denoise(to_log(p.stack), cfg);
    const auto& e = r.state.energy_trace;
    return {psnr(exp_image(r.f), p.clean), e.back() < e.front()};
}

constexpr int kPhantoms = 20;

std::vector<PhantomRun> phantom_suite(double& secs) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<PhantomRun> runs;
    for (int seed = 0; seed < kPhantoms; ++seed) {
        const PhantomSpec spec = retina_phantom(128, 128, 4, static_cast<std::uint64_t>(seed));
        const Phantom p4 = generate_phantom(spec, 4);
        const Phantom p1 = generate_phantom(spec, 1);
        PhantomRun r;
        r.psnr_mean4 = psnr(frame_mean(p4.stack), p4.clean);
        const Solved k4 = solve_phantom(p4, default_config(4));
        const Solved k1 = solve_phantom(p1, default_config(1));
        SolverConfig tv = default_config(4);
        tv.lambda = 0.0;
        r.psnr_k4 = k4.psnr;
        r.psnr_k1 = k1.psnr;
        r.psnr_tv4 = solve_phantom(p4, tv).psnr;
        r.descent_k4 = k4.descent;
        r.descent_k1 = k1.descent;
        runs.push_back(r);
    }
    secs = seconds_since(t0);
    return runs;
}

Verdict energy_descent(const std::vector<PhantomRun>& runs) {
    int bad = 0;
    for (const auto& r : runs) bad += !r.descent_k4 + !r.descent_k1;
    const std::string d = fmt("%d runs, %d without descent", 2 * kPhantoms, bad);
    return bad == 0 ? pass(d) : fail(d);
}

Verdict effectiveness(const std::vector<PhantomRun>& runs, double secs) {
    int gain_ok = 0, k_ok = 0, quasi_ok = 0;
    double min_gain = 1e9, mean_gain = 0, mean_vs_tv = 0, mean_k4_k1 = 0;
    for (const auto& r : runs) {
        const double gain = r.psnr_k4 - r.psnr_mean4;
        min_gain = std::min(min_gain, gain);
        mean_gain += gain / kPhantoms;
        mean_vs_tv += (r.psnr_k4 - r.psnr_tv4) / kPhantoms;
        mean_k4_k1 += (r.psnr_k4 - r.psnr_k1) / kPhantoms;
        gain_ok += gain >= 3.0;
        k_ok += r.psnr_k4 >= r.psnr_k1;
        quasi_ok += r.psnr_k4 >= r.psnr_tv4;
    }
    const bool ok = gain_ok == kPhantoms && k_ok == kPhantoms && quasi_ok >= 0.8 * kPhantoms && secs < 300.0;
    const std::string d = fmt("gain over mean min %.2f / avg %.2f dB (%d/%d >= 3), K4 >= K1 %d/%d (avg %+.2f dB), "
                              "QuaSI >= TV %d/%d (avg %+.2f dB), %.1f s",
                              min_gain, mean_gain, gain_ok, kPhantoms, k_ok, kPhantoms, mean_k4_k1, quasi_ok, kPhantoms, mean_vs_tv,
                              secs);
    return ok ? pass(d) : fail(d);
}

// ---------------------------------------------------------------------------------------------

Verdict parameter_fidelity() {
    int bad = 0;
    for (std::size_t k : {1u, 4u, 13u}) {
        const SolverConfig c = default_config(k);
        const double kk = static_cast<double>(k);
        bad += c.mu != 0.075 * kk || c.lambda != 5.0 * kk || c.alpha != 100.0 * kk || c.beta != 1.5 * kk;
        bad += c.t_outer != 20 || c.t_inner != 2 || c.quantile.window != 3 || c.quantile.p != 0.5;
    }
    const std::string d = fmt("K in {1, 4, 13}, %d mismatches", bad);
    return bad == 0 ? pass(d) : fail(d);
}

Verdict metrics_oracles() {
    auto row = [](std::vector<double> v) {
        const std::size_t n = v.size();
        return Image2D(n, 1, std::move(v));
    };
    double worst = 0.0;
    auto check = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
    check(psnr(Image2D(8, 8, 0.4), Image2D(8, 8, 0.3)), 20.0);
    check(msr(row({1, 1, 1, 3}), RegionSet{{{0, 0, 4, 1}}, std::nullopt}), 1.7320508075688772);
    check(cnr(row({1, 3, -1, 1}), RegionSet{{{0, 0, 2, 1}}, Region{2, 0, 2, 1}}), 2.0);
    check(cnr(row({2, 2, 4, 4, 0, 0, 1, 1}), RegionSet{{{0, 0, 4, 1}}, Region{4, 0, 4, 1}}), 2.5 / std::sqrt(0.625));
    check(cnr(row({1, 3, 3, 1}), RegionSet{{{0, 0, 2, 1}}, Region{2, 0, 2, 1}}), 0.0);
    const bool infinite = psnr(Image2D(4, 4, 0.2), Image2D(4, 4, 0.2)) == kInfinity;

    std::mt19937_64 rng(1008);
    double worst_ssim = 0.0;
    for (int i = 0; i < 10; ++i) {
        const Image2D a = oracle::random_image(32, 24, rng), b = oracle::random_image(32, 24, rng);
        worst_ssim = std::max({worst_ssim, std::abs(ssim(a, a) - 1.0), std::abs(ssim(a, b) - ssim(b, a))});
    }
    const std::string d = fmt("hand cases max |error| %.2e, SSIM identity/symmetry %.2e", worst, worst_ssim);
    return worst <= 1e-9 && worst_ssim <= 1e-12 && infinite ? pass(d) : fail(d);
}

Verdict registration_recovery() {
    std::mt19937_64 rng(1009);
    std::uniform_int_distribution<int> us(-8, 8);
    int wrong = 0;
    for (int i = 0; i < 20; ++i) {
        const Phantom p = generate_phantom(retina_phantom(128, 128, 4, static_cast<std::uint64_t>(100 + i)), 2);
        const Shift applied{us(rng), us(rng)};
        const BScanStack pair({shift_image(p.stack[0], applied), p.stack[1]}, Domain::Linear);
        const RegistrationResult r = register_stack(pair);
        wrong += !(r.shifts[0] == Shift{-applied.dx, -applied.dy});
    }
    const std::string d = fmt("20 pairs, %d wrong", wrong);
    return wrong == 0 ? pass(d) : fail(d);
}

Verdict dataset_reproduction() {
    namespace fs = std::filesystem;
    const char* dir = std::getenv("QUASI_PIGEYE_DIR");
    if (!dir || !fs::is_directory(dir)) return skip("QUASI_PIGEYE_DIR not set");
    std::string gold;
    std::vector<std::string> frames;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.ends_with(".dims")) continue;
        if (name.starts_with("gold.")) gold = e.path().string();
        if (name.starts_with("frame_")) frames.push_back(e.path().string());
    }
    std::sort(frames.begin(), frames.end());
    if (gold.empty() || frames.size() < 13) return fail(fmt("need gold.* and >= 13 frame_* files, found %zu", frames.size()));

    const Image2D reference = load_image(gold);
    std::vector<Image2D> loaded;
    for (std::size_t i = 0; i < 13; ++i) loaded.push_back(load_image(frames[i]));
    const BScanStack all13(loaded, Domain::Linear);
    const BScanStack first4 = all13.take(4);
    const double avg13 = psnr(frame_mean(all13), reference);
    const double quasi4 = psnr(exp_image(denoise(to_log(first4), default_config(4)).f), reference);
    const std::string d = fmt("K=4 QuaSI %.2f dB, K=13 average %.2f dB", quasi4, avg13);
    return quasi4 >= avg13 - 1.0 ? pass(d) : fail(d);
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Verdict()>& fn) {
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = fail(std::string("exception: ") + e.what());
        }
        const char* tag = v.outcome == Outcome::Pass ? "PASS" : v.outcome == Outcome::Skip ? "SKIP" : "FAIL";
        failures += v.outcome == Outcome::Fail;
        std::printf("[%s] %2d %-32s %s\n", tag, id, name, v.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "linearization exactness", linearization_exactness);
    report(2, "operator correctness", operator_correctness);
    report(3, "scalar prox oracle", scalar_prox);
    report(4, "degenerate-config algebra", degenerate_configs);

    double suite_secs = 0.0;
    std::vector<PhantomRun> runs;
    std::string suite_error;
    try {
        runs = phantom_suite(suite_secs);
    } catch (const std::exception& e) {
        suite_error = e.what();
    }
    auto suite = [&](auto fn) {
        return [&, fn]() -> Verdict { return suite_error.empty() ? fn() : fail("phantom suite: " + suite_error); };
    };
    report(5, "endpoint energy descent", suite([&] { return energy_descent(runs); }));
    report(6, "denoising effectiveness", suite([&] { return effectiveness(runs, suite_secs); }));
    report(7, "parameter fidelity", parameter_fidelity);
    report(8, "metrics oracles", metrics_oracles);
    report(9, "registration recovery", registration_recovery);
    report(10, "dataset reproduction", dataset_reproduction);

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
