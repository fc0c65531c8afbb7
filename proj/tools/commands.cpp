#include "commands.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <iostream>

#include "hsirecon/checkpoint.hpp"
#include "hsirecon/color.hpp"
#include "hsirecon/fourier.hpp"
#include "hsirecon/io.hpp"
#include "hsirecon/metrics.hpp"
#include "hsirecon/nst.hpp"
#include "hsirecon/ops.hpp"
#include "hsirecon/training.hpp"

namespace hsirecon::cli {

namespace {

using cassi::CodedAperture;
using cassi::HsiCube;

io::Dtype parse_dtype(const std::string& s)
{
    if (s == "f32") return io::Dtype::f32;
    if (s == "f64") return io::Dtype::f64;
    throw std::invalid_argument("dtype must be f32 or f64, got '" + s + "'");
}

const std::string& require(const std::string& value, const std::string& flag)
{
    if (value.empty()) throw std::invalid_argument(flag + " is required");
    return value;
}

CodedAperture load_mask(const std::string& path, int height, int width)
{
    CodedAperture mask(io::load_cube(path).values());
    if (mask.height() != height || mask.width() != width)
        throw ShapeError("mask " + mask.weights().shape_str() + " does not match a " + std::to_string(height) + "x" +
                         std::to_string(width) + " scene");
    return mask;
}

CodedAperture make_mask(const config::RunConfig& cfg, const std::string& path, int height, int width)
{
    if (!path.empty()) return load_mask(path, height, width);
    return CodedAperture::random_binary(height, width, cfg.seed + 1, cfg.mask_density);
}

/// B from W_s = W + s (B - 1).
int bands_from_widths(int width, int shifted_width, int step)
{
    const int extra = shifted_width - width;
    if (extra < 0 || extra % step) throw ShapeError("measurement width " + std::to_string(shifted_width) +
                                                    " is not a dispersed copy of mask width " + std::to_string(width));
    return extra / step + 1;
}

Tensor channel_of(const Tensor& t, int c)
{
    Tensor out({t.h(), t.w(), 1});
    for (int i = 0; i < t.h(); ++i)
        for (int j = 0; j < t.w(); ++j) out.at(i, j, 0) = t.at(i, j, c);
    return out;
}

}  // namespace

config::RunConfig CommonFlags::resolve(config::RunConfig base) const
{
    config::RunConfig cfg = config.empty() ? std::move(base) : config::load_config(config, std::move(base));
    if (seed) cfg.seed = *seed;
    if (exact_hqs) cfg.exact_hqs = true;
    if (stages) cfg.stages = *stages;
    if (cube_size) cfg.cube_size = *cube_size;
    return cfg;
}

int simulate(const CommonFlags& common, const SimulateArgs& args)
{
    const config::RunConfig cfg = common.resolve();
    const auto dtype = parse_dtype(common.dtype);
    require(common.out, "--out");

    const HsiCube scene = args.scene.empty() ? training::synthetic_scene(cfg.height, cfg.width, cfg.bands, cfg.seed)
                                             : io::load_cube(args.scene);
    const CodedAperture mask = make_mask(cfg, args.mask, scene.height(), scene.width());
    const auto phi = cassi::build_shifted_mask(mask, scene.bands(), {cfg.dispersion_step});
    const auto y = cassi::forward_project(scene, phi, cfg.noise_config());

    io::save_measurement(common.out, y, dtype);
    if (!args.save_scene.empty()) io::save_cube(args.save_scene, scene, dtype);
    if (!args.save_mask.empty()) io::save_cube(args.save_mask, HsiCube(mask.weights()), dtype);
    std::cout << "measurement " << y.height() << "x" << y.width() << " from a " << scene.height() << "x"
              << scene.width() << "x" << scene.bands() << " scene -> " << common.out << '\n';
    return ok;
}

int reconstruct(const CommonFlags& common, const ReconstructArgs& args)
{
    const auto y = io::load_measurement(require(args.measurement, "--measurement"));
    const CodedAperture mask(io::load_cube(require(args.mask, "--mask")).values());
    require(common.out, "--out");
    if (args.identity_prior == !args.checkpoint.empty())
        throw std::invalid_argument("give exactly one of --checkpoint and --identity-prior");

    std::optional<io::Checkpoint> ck;
    config::RunConfig cfg;
    if (!args.checkpoint.empty()) {
        ck = io::load_checkpoint(args.checkpoint);
        cfg = common.resolve(config::parse_config(ck->config));
    } else {
        cfg = common.resolve();
    }
    if (y.height() != mask.height()) throw ShapeError("measurement and mask heights differ");
    const int bands = bands_from_widths(mask.width(), y.width(), cfg.dispersion_step);
    if (args.bands && *args.bands != bands)
        throw ShapeError("--bands " + std::to_string(*args.bands) + " but the measurement holds " + std::to_string(bands));
    if (ck && cfg.bands != bands)
        throw ShapeError("checkpoint was trained on " + std::to_string(cfg.bands) + " bands, measurement holds " +
                         std::to_string(bands));

    const auto phi = cassi::build_shifted_mask(mask, bands, {cfg.dispersion_step});
    unfolding::UnfoldingModel model(cfg.unfolding(), bands, cfg.seed + 2,
                                    ck ? nn::Init::uniform_fan_in : nn::Init::zeros);
    if (ck) io::restore(model.params(), *ck);

    const HsiCube x = unfolding::run_stages(y, phi, model);
    io::save_cube(common.out, x, parse_dtype(common.dtype));
    std::cout << "reconstructed " << x.height() << "x" << x.width() << "x" << x.bands() << " with "
              << cfg.stages << " stage(s)" << (cfg.exact_hqs ? ", exact HQS" : "")
              << (ck ? "" : ", identity prior") << " -> " << common.out << '\n';
    return ok;
}

int train(const CommonFlags& common, const TrainArgs& args)
{
    config::RunConfig cfg = common.resolve();
    const auto dtype = parse_dtype(common.dtype);
    require(common.out, "--out");

    const HsiCube scene = args.scene.empty() ? training::synthetic_scene(cfg.height, cfg.width, cfg.bands, cfg.seed)
                                             : io::load_cube(args.scene);
    cfg.bands = scene.bands();
    const CodedAperture mask = make_mask(cfg, args.mask, scene.height(), scene.width());
    const auto phi = cassi::build_shifted_mask(mask, scene.bands(), {cfg.dispersion_step});
    const auto y = args.measurement.empty() ? cassi::forward_project(scene, phi, cfg.noise_config())
                                            : io::load_measurement(args.measurement);

    unfolding::UnfoldingModel model(cfg.unfolding(), scene.bands(), cfg.seed + 2);
    training::TrainOptions opts;
    opts.steps = cfg.train_steps;
    opts.base_rate = cfg.learning_rate;
    opts.loss = cfg.loss;
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = training::train_toy(model, scene, y, phi, opts);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    io::save_checkpoint(common.out, io::capture(model.params(), config::model_text(cfg), dtype));
    if (!args.loss_csv.empty()) {
        std::vector<io::LossRow> rows;
        for (const auto& r : result.curve) rows.push_back({r.step, r.rate, r.loss});
        io::write_text(args.loss_csv, io::loss_csv(rows));
    }

    const real base = metrics::psnr(scene.values(), cassi::initialize_estimate(y, phi).values());
    const real trained = metrics::psnr(scene.values(), unfolding::run_stages(y, phi, model).values());
    std::cout << "trained " << opts.steps << " steps in " << seconds << " s, loss " << result.initial_loss() << " -> "
              << result.final_loss() << " (" << 100.0 * result.final_loss() / result.initial_loss() << "%)\n"
              << "psnr z0 " << base << " dB, trained " << trained << " dB, margin " << trained - base << " dB\n"
              << "checkpoint -> " << common.out << '\n';
    return ok;
}

int gradcheck(const CommonFlags& common, const GradcheckArgs& args)
{
    config::RunConfig base;
    base.cube_size = 4;
    const config::RunConfig cfg = common.resolve(base);
    if (args.size.size() != 3) throw std::invalid_argument("--size takes H W B");

    const auto problem = training::toy_problem(args.size[0], args.size[1], args.size[2], cfg.seed, args.transmission,
                                               {cfg.dispersion_step});
    unfolding::UnfoldingModel model(cfg.unfolding(), args.size[2], cfg.seed + 2);
    const auto op = unfolding::SceneOperator::make(problem.y, problem.phi);
    nn::Rng rng(cfg.seed + 4);
    Tensor weights(problem.scene.values().shape());
    for (auto& v : weights.vec()) v = rng.uniform(-1.0, 1.0);

    optim::GradCheckOptions opts;
    opts.tolerance = args.tolerance;
    opts.samples_per_group = args.samples;
    opts.seed = cfg.seed;
    opts.corrupt_group = args.corrupt_grad;
    const auto report =
        optim::grad_check(model.params(), [&] { return ad::weighted_sum(model.forward(op), weights); }, opts);

    std::string text = "group,checked,max_rel_error,pass,problem\n";
    for (const auto& g : report.groups)
        text += g.name + ',' + std::to_string(g.checked) + ',' + io::format_real(g.max_rel_error) + ',' +
                (g.pass ? "1" : "0") + ',' + g.problem + '\n';
    if (!common.out.empty()) io::write_text(common.out, text);

    std::cout << report.groups.size() << " parameter groups, worst relative error " << report.worst() << '\n';
    if (const auto* f = report.first_failure()) {
        std::cout << "FAIL " << f->name << " relative error " << f->max_rel_error
                  << (f->problem.empty() ? "" : " (" + f->problem + ")") << '\n';
        return gradcheck_failed;
    }
    std::cout << "PASS at tolerance " << args.tolerance << '\n';
    return ok;
}

int eval(const CommonFlags& common, const EvalArgs& args)
{
    require(common.out, "--out");
    if (args.ref.empty() || args.ref.size() != args.est.size())
        throw std::invalid_argument("--ref and --est need the same, non-zero number of files");
    if (!args.scene_id.empty() && args.scene_id.size() != args.ref.size())
        throw std::invalid_argument("--scene-id count must match the number of pairs");

    const int n = static_cast<int>(args.ref.size());
    std::vector<io::MetricsRow> rows(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        try {
            const auto t0 = std::chrono::steady_clock::now();
            const HsiCube ref = io::load_cube(args.ref[i]);
            const HsiCube est = io::load_cube(args.est[i]);
            io::MetricsRow row;
            row.scene = args.scene_id.empty() ? std::filesystem::path(args.est[i]).stem().string() : args.scene_id[i];
            row.psnr = metrics::psnr(ref.values(), est.values());
            row.ssim = metrics::ssim(ref.values(), est.values());
            row.time_s = args.no_timing ? 0.0 : std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            rows[i] = row;
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    io::write_text(common.out, io::metrics_csv(rows));
    for (const auto& r : rows) std::cout << r.scene << ": psnr " << r.psnr << " dB, ssim " << r.ssim << '\n';
    if (!args.rgb.empty()) {
        const HsiCube est = io::load_cube(args.est.front());
        color::write_png(args.rgb, color::export_rgb(est, color::default_wavelengths(est.bands())));
    }
    return ok;
}

int viz_freq(const CommonFlags& common, const VizFreqArgs& args)
{
    const std::string prefix = require(common.out, "--out");
    const Tensor cube = io::load_cube(require(args.input, "--input")).values();
    if (args.channel < 0 || args.channel >= cube.c())
        throw std::invalid_argument("--channel " + std::to_string(args.channel) + " outside 0.." + std::to_string(cube.c() - 1));
    const Tensor map = channel_of(cube, args.channel);
    const auto parts = fourier::decompose(fourier::fft2(map));

    Tensor log_amp = parts.amplitude;
    for (auto& v : log_amp.vec()) v = std::log1p(v);
    const int cy = map.h() / 2, cx = map.w() / 2;

    Tensor zero_phase = Tensor::zeros_like(parts.phase);
    Tensor flat_amp = Tensor::zeros_like(parts.amplitude);
    real mean_amp = 0;
    for (real v : parts.amplitude.vec()) mean_amp += v;
    flat_amp.fill(mean_amp / static_cast<real>(parts.amplitude.size()));

    const Tensor amp_only = fourier::ifft2_real(fourier::compose_from_amplitude_phase(parts.amplitude, zero_phase));
    const Tensor phase_only = fourier::ifft2_real(fourier::compose_from_amplitude_phase(flat_amp, parts.phase));

    color::write_png(prefix + "_amplitude.png", color::grayscale(nst::spatial_shift(log_amp, cy, cx)));
    color::write_png(prefix + "_phase.png", color::grayscale(nst::spatial_shift(parts.phase, cy, cx)));
    color::write_png(prefix + "_amp_only.png", color::grayscale(amp_only));
    color::write_png(prefix + "_phase_only.png", color::grayscale(phase_only));
    std::cout << "wrote " << prefix << "_{amplitude,phase,amp_only,phase_only}.png\n";
    return ok;
}

}  // namespace hsirecon::cli
