#include <CLI11.hpp>

#include <functional>
#include <iostream>

#include "commands.hpp"
#include "hsirecon/checkpoint.hpp"
#include "hsirecon/fourier.hpp"
#include "hsirecon/training.hpp"

using namespace hsirecon;
using namespace hsirecon::cli;

namespace {

void add_common(CLI::App* sub, CommonFlags& f)
{
    sub->add_option("--config", f.config, "key = value run configuration file");
    sub->add_option("--seed", f.seed, "base seed (overrides the config)");
    sub->add_option("--out", f.out, "output path (prefix for viz-freq)");
    sub->add_flag("--exact-hqs", f.exact_hqs, "use the closed-form HQS data step");
    sub->add_option("--stages", f.stages, "number of unfolding stages K");
    sub->add_option("--cube-size", f.cube_size, "attention cube size L");
    sub->add_option("--dtype", f.dtype, "f32 or f64 for written arrays")->check(CLI::IsMember({"f32", "f64"}));
}

int guarded(const std::function<int()>& run)
{
    try {
        return run();
    } catch (const config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return bad_config;
    } catch (const io::IoError& e) {
        std::cerr << "file error: " << e.what() << '\n';
        return missing_file;
    } catch (const io::FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return bad_format;
    } catch (const ShapeError& e) {
        std::cerr << "shape error: " << e.what() << '\n';
        return shape_mismatch;
    } catch (const fourier::TransformError& e) {
        std::cerr << "transform error: " << e.what() << '\n';
        return transform_failure;
    } catch (const training::DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return diverged;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return bad_argument;
    } catch (const std::out_of_range& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return bad_argument;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return unexpected;
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Pixel-adaptive deep-unfolding reconstruction for coded-aperture spectral imaging"};
    app.require_subcommand(1);

    CommonFlags common;
    std::function<int()> action;

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "scene + mask -> coded measurement");
    add_common(s, common);
    s->add_option("--scene", sim.scene, "input cube (HSC); a synthetic scene when omitted");
    s->add_option("--mask", sim.mask, "coded aperture (HSC); seeded random binary when omitted");
    s->add_option("--save-scene", sim.save_scene, "also write the scene used");
    s->add_option("--save-mask", sim.save_mask, "also write the mask used");
    s->callback([&] { action = [&] { return simulate(common, sim); }; });

    ReconstructArgs rec;
    auto* r = app.add_subcommand("reconstruct", "measurement + mask + checkpoint -> cube");
    add_common(r, common);
    r->add_option("--measurement", rec.measurement, "coded measurement (HSC)")->required();
    r->add_option("--mask", rec.mask, "coded aperture (HSC)")->required();
    r->add_option("--checkpoint", rec.checkpoint, "trained parameters");
    r->add_flag("--identity-prior", rec.identity_prior, "zero-initialized denoisers instead of a checkpoint");
    r->add_option("--bands", rec.bands, "expected band count (checked against the measurement)");
    r->callback([&] { action = [&] { return reconstruct(common, rec); }; });

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "scene -> checkpoint + loss CSV");
    add_common(t, common);
    t->add_option("--scene", tr.scene, "training cube (HSC); a synthetic scene when omitted");
    t->add_option("--mask", tr.mask, "coded aperture (HSC)");
    t->add_option("--measurement", tr.measurement, "measurement (HSC); simulated from the scene when omitted");
    t->add_option("--loss-csv", tr.loss_csv, "loss curve output");
    t->callback([&] { action = [&] { return train(common, tr); }; });

    GradcheckArgs gc;
    auto* g = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients of the toy model");
    add_common(g, common);
    g->add_option("--size", gc.size, "scene H W B")->expected(3);
    g->add_option("--transmission", gc.transmission, "aperture transmission scale");
    g->add_option("--samples", gc.samples, "coordinates per parameter group");
    g->add_option("--tolerance", gc.tolerance, "maximum relative error");
    g->add_option("--corrupt-grad", gc.corrupt_grad, "perturb this group's analytic gradient (negative control)");
    g->callback([&] { action = [&] { return gradcheck(common, gc); }; });

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "reference/estimate pairs -> metrics CSV");
    add_common(e, common);
    e->add_option("--ref", ev.ref, "reference cubes")->required();
    e->add_option("--est", ev.est, "estimated cubes")->required();
    e->add_option("--scene-id", ev.scene_id, "row labels");
    e->add_flag("--no-timing", ev.no_timing, "write 0 for wall time");
    e->add_option("--rgb", ev.rgb, "PNG rendering of the first estimate");
    e->callback([&] { action = [&] { return eval(common, ev); }; });

    VizFreqArgs vz;
    auto* v = app.add_subcommand("viz-freq", "feature -> amplitude/phase PNGs");
    add_common(v, common);
    v->add_option("--input", vz.input, "feature map or cube (HSC)")->required();
    v->add_option("--channel", vz.channel, "channel to transform");
    v->callback([&] { action = [&] { return viz_freq(common, vz); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? ok : usage;
    }
    return guarded(action);
}
