// quasi: command-line front end for the speckle denoiser.
//
//   quasi denoise  frame0.pgm frame1.pgm ... -o out.pgm [--register] [solver flags]
//   quasi phantom  --k 4 --seed 7 [-o out.pgm] [--save-frames dir] [--instances N --jobs J]
//   quasi metrics  image.pgm [--reference ref.pgm] [--regions rois.txt]
//   quasi register frame0.pgm frame1.pgm ... --out-dir dir
//
// Exit codes: 0 success, 2 I/O, 3 configuration, 4 numeric failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "quasi/quasi.hpp"

namespace {

enum ExitCode { kOk = 0, kIo = 2, kConfig = 3, kNumeric = 4 };

int exit_code_for(quasi::ErrorKind kind) {
    using quasi::ErrorKind;
    switch (kind) {
        case ErrorKind::Io: return kIo;
        case ErrorKind::NumericFailure:
        case ErrorKind::NumericRange:
        case ErrorKind::Registration: return kNumeric;
        case ErrorKind::InvalidInput:
        case ErrorKind::DimensionMismatch:
        case ErrorKind::Config: return kConfig;
    }
    return kConfig;
}

void add_solver_flags(CLI::App* cmd, quasi::SolverOverrides& o) {
    cmd->add_option("--mu", o.mu, "TV weight per frame (x K)");
    cmd->add_option("--lambda", o.lambda, "QuaSI weight per frame (x K)");
    cmd->add_option("--alpha", o.alpha, "QuaSI penalty per frame (x K)");
    cmd->add_option("--beta", o.beta, "TV penalty per frame (x K)");
    cmd->add_option("--t-outer", o.t_outer, "outer iterations (quantile re-linearizations)");
    cmd->add_option("--t-inner", o.t_inner, "inner ADMM iterations per outer iteration");
    cmd->add_option("--cg-max-iters", o.cg_max_iters, "CG iteration cap per f-update");
    cmd->add_option("--cg-tolerance", o.cg_tolerance, "CG relative residual tolerance");
    cmd->add_option("--window", o.window, "quantile window side length (odd)");
    cmd->add_option("--quantile-p", o.quantile_p, "quantile p in [0, 1]; 0.5 is the median");
    cmd->add_option("--huber-delta", o.huber_delta, "Huber threshold in log-intensity units");
    cmd->add_flag("--no-k-scaling{false}", o.k_scaling, "do not multiply the weights by K");
}

void emit(const quasi::Report& report, const std::string& path) {
    const std::string text = report.dump(2) + "\n";
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw quasi::Error(quasi::ErrorKind::Io, "cannot write report " + path);
    out << text;
}

const std::map<std::string, quasi::RegionMetricDomain> kDomains{
    {"display", quasi::RegionMetricDomain::Display}, {"linear", quasi::RegionMetricDomain::Linear}};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatio-temporal speckle denoising with a quantile sparse image prior"};
    app.require_subcommand(1);

    quasi::JobConfig job;
    std::string report_path;
    bool do_register = false;
    std::size_t k = 0;

    auto* denoise = app.add_subcommand("denoise", "denoise a stack of registered frames");
    denoise->add_option("inputs", job.inputs, "input frames (PGM, PNG or raw float32)")->required();
    denoise->add_option("-o,--output", job.output, "denoised output image")->required();
    denoise->add_option("--k", k, "number of frames to use (default: all)");
    denoise->add_flag("--register", do_register, "align frames to the central one first");
    denoise->add_option("--search-radius", job.search_radius, "registration search radius in pixels");
    denoise->add_option("--reference", job.reference, "reference image for PSNR/SSIM");
    denoise->add_option("--regions", job.regions, "region file for MSR/CNR (`fg|bg x y w h` lines)");
    denoise->add_option("--region-domain", job.region_domain, "display|linear")
        ->transform(CLI::CheckedTransformer(kDomains, CLI::ignore_case));
    denoise->add_option("--floor", job.intensity_floor, "intensity floor before the log transform");
    denoise->add_option("--report", report_path, "write the JSON report here instead of stdout");
    add_solver_flags(denoise, job.solver);

    quasi::PhantomParams phantom;
    std::size_t phantom_k = 4;
    std::string frames_dir;
    std::size_t instances = 1, jobs = 1;
    auto* ph = app.add_subcommand("phantom", "denoise a synthetic layered speckle phantom");
    ph->add_option("--k", phantom_k, "number of speckle frames")->default_val(4);
    ph->add_option("--width", phantom.width)->default_val(128);
    ph->add_option("--height", phantom.height)->default_val(128);
    ph->add_option("--looks", phantom.looks, "speckle looks L")->default_val(4);
    ph->add_option("--seed", phantom.seed)->default_val(0);
    ph->add_option("-o,--output", job.output, "denoised output image");
    ph->add_option("--save-frames", frames_dir, "directory to receive clean.raw and frame_XX.raw");
    ph->add_option("--instances", instances, "number of phantoms with consecutive seeds")->default_val(1);
    ph->add_option("--jobs", jobs, "worker threads for --instances")->default_val(1);
    ph->add_option("--report", report_path, "write the JSON report here instead of stdout");
    add_solver_flags(ph, job.solver);

    std::string image_path;
    double peak = 1.0;
    auto* met = app.add_subcommand("metrics", "quality metrics of an image");
    met->add_option("image", image_path)->required();
    met->add_option("--reference", job.reference, "reference image for PSNR/SSIM");
    met->add_option("--regions", job.regions, "region file for MSR/CNR");
    met->add_option("--region-domain", job.region_domain, "display|linear")
        ->transform(CLI::CheckedTransformer(kDomains, CLI::ignore_case));
    met->add_option("--peak", peak, "PSNR/SSIM peak value")->default_val(1.0);

    std::string out_dir;
    auto* reg = app.add_subcommand("register", "align frames to the central one by integer translation");
    reg->add_option("inputs", job.inputs)->required();
    reg->add_option("--out-dir", out_dir, "directory for the aligned frames")->required();
    reg->add_option("--search-radius", job.search_radius)->default_val(16);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        job.k = *ph ? phantom_k : k;
        if (*denoise) {
            job.registration = do_register ? quasi::RegistrationMode::CrossCorrelation : quasi::RegistrationMode::None;
            emit(quasi::run_job(job), report_path);
        } else if (*ph) {
            job.phantom = phantom;
            if (!frames_dir.empty()) {
                std::filesystem::create_directories(frames_dir);
                const auto p = quasi::generate_phantom(
                    quasi::retina_phantom(phantom.width, phantom.height, phantom.looks, phantom.seed), phantom_k);
                quasi::save_image(frames_dir + "/clean.raw", p.clean);
                for (std::size_t i = 0; i < p.stack.count(); ++i) {
                    char name[32];
                    std::snprintf(name, sizeof name, "/frame_%02zu.raw", i);
                    quasi::save_image(frames_dir + name, p.stack[i]);
                }
            }
            if (instances > 1) {
                quasi::Report all = quasi::Report::array();
                for (auto& r : quasi::run_phantom_batch(job, instances, jobs)) all.push_back(std::move(r));
                emit(all, report_path);
            } else {
                emit(quasi::run_job(job), report_path);
            }
        } else if (*met) {
            const quasi::Image2D img = quasi::load_image(image_path);
            quasi::Report r;
            if (!job.reference.empty()) {
                const quasi::Image2D ref = quasi::load_image(job.reference);
                r["psnr"] = quasi::detail::number_or_inf(quasi::psnr(img, ref, peak));
                if (img.width() >= quasi::kSsimWindow && img.height() >= quasi::kSsimWindow)
                    r["ssim"] = quasi::ssim(img, ref, peak);
            }
            if (!job.regions.empty())
                quasi::detail::add_region_metrics(r, "image", img, quasi::load_regions(job.regions), job.region_domain,
                                                  job.intensity_floor);
            if (r.empty()) throw quasi::Error(quasi::ErrorKind::Config, "nothing to compute: give --reference or --regions");
            emit(r, "");
        } else if (*reg) {
            std::vector<quasi::Image2D> frames;
            for (const auto& p : job.inputs) frames.push_back(quasi::load_image(p));
            const auto result =
                quasi::register_stack(quasi::BScanStack(std::move(frames), quasi::Domain::Linear), job.search_radius);
            std::filesystem::create_directories(out_dir);
            quasi::Report r;
            r["reference_index"] = result.reference_index;
            r["shifts"] = quasi::Report::array();
            for (std::size_t i = 0; i < job.inputs.size(); ++i) {
                const auto name = std::filesystem::path(job.inputs[i]).filename().string();
                quasi::save_image((std::filesystem::path(out_dir) / name).string(), result.stack[i]);
                r["shifts"].push_back({result.shifts[i].dx, result.shifts[i].dy});
            }
            emit(r, "");
        }
    } catch (const quasi::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    }
    return kOk;
}
