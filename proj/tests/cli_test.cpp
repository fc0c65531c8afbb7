#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "hsirecon/cassi.hpp"
#include "hsirecon/io.hpp"

using namespace hsirecon;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("hsirecon_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        io::write_text(dir_ / "toy.cfg",
                       "height = 16\nwidth = 16\nbands = 4\nstages = 1\nchannels = 4\nlevels = 1\ncube_size = 4\n"
                       "train_steps = 3\nseed = 5\n");
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args) const
    {
        const std::string cmd = std::string(HSIRECON_CLI) + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    std::string out() const { return io::read_text(dir_ / "stdout.txt"); }
    std::string p(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrors)
{
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("reconstruct --mask m.hsc"), 2);
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run("simulate --dtype f16 --out " + p("y.hsc")), 2);
}

TEST_F(Cli, ConfigAndFileErrors)
{
    io::write_text(dir_ / "bad.cfg", "stages = 1\nwarp = 9\n");
    EXPECT_EQ(run("simulate --config " + p("bad.cfg") + " --out " + p("y.hsc")), 3);
    EXPECT_NE(out().find("warp"), std::string::npos);
    EXPECT_EQ(run("simulate --config " + p("absent.cfg") + " --out " + p("y.hsc")), 4);
    EXPECT_EQ(run("simulate --config " + p("toy.cfg") + " --scene " + p("absent.hsc") + " --out " + p("y.hsc")), 4);
    io::write_text(dir_ / "junk.hsc", "not an array");
    EXPECT_EQ(run("simulate --config " + p("toy.cfg") + " --scene " + p("junk.hsc") + " --out " + p("y.hsc")), 5);
    EXPECT_EQ(run("simulate --config " + p("toy.cfg")), 7);
}

TEST_F(Cli, IdentityPriorPipeline)
{
    ASSERT_EQ(run("simulate --config " + p("toy.cfg") + " --save-scene " + p("x.hsc") + " --save-mask " + p("m.hsc") +
                  " --out " + p("y.hsc")),
              0)
        << out();
    ASSERT_EQ(run("reconstruct --config " + p("toy.cfg") + " --measurement " + p("y.hsc") + " --mask " + p("m.hsc") +
                  " --identity-prior --exact-hqs --out " + p("r.hsc")),
              0)
        << out();

    const cassi::HsiCube scene = io::load_cube(p("x.hsc"));
    const cassi::Measurement y = io::load_measurement(p("y.hsc"));
    const cassi::CodedAperture mask(io::load_cube(p("m.hsc")).values());
    const auto phi = cassi::build_shifted_mask(mask, 4, {1});
    EXPECT_EQ(cassi::forward_project(scene, phi).values().vec(), y.values().vec());
    const cassi::HsiCube expected = cassi::exact_hqs_data_step(cassi::initialize_estimate(y, phi), y, phi, 1.0);
    EXPECT_LT(max_abs_diff(io::load_cube(p("r.hsc")).values(), expected.values()), 1e-12);

    ASSERT_EQ(run("eval --ref " + p("x.hsc") + " --est " + p("r.hsc") + " --scene-id toy --no-timing --out " + p("m.csv")), 0)
        << out();
    std::istringstream csv(io::read_text(p("m.csv")));
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    EXPECT_EQ(header, "scene,psnr,ssim,time_s");
    ASSERT_EQ(row.rfind("toy,", 0), 0u);
    const real psnr = std::stod(row.substr(4));
    EXPECT_TRUE(std::isfinite(psnr));
    EXPECT_GT(psnr, 0.0);
    EXPECT_EQ(row.substr(row.rfind(',') + 1), "0");
}

TEST_F(Cli, TrainedCheckpointPipeline)
{
    ASSERT_EQ(run("simulate --config " + p("toy.cfg") + " --save-scene " + p("x.hsc") + " --save-mask " + p("m.hsc") +
                  " --out " + p("y.hsc")),
              0);
    ASSERT_EQ(run("train --config " + p("toy.cfg") + " --scene " + p("x.hsc") + " --mask " + p("m.hsc") + " --loss-csv " +
                  p("loss.csv") + " --out " + p("model.ck")),
              0)
        << out();
    EXPECT_EQ(io::read_text(p("loss.csv")).rfind("step,rate,loss\n0,", 0), 0u);
    ASSERT_EQ(run("reconstruct --measurement " + p("y.hsc") + " --mask " + p("m.hsc") + " --checkpoint " + p("model.ck") +
                  " --out " + p("r.hsc")),
              0)
        << out();
    EXPECT_EQ(io::load_cube(p("r.hsc")).values().shape(), (std::vector<int>{16, 16, 4}));
    EXPECT_EQ(run("reconstruct --measurement " + p("y.hsc") + " --mask " + p("m.hsc") + " --checkpoint " + p("model.ck") +
                  " --bands 5 --out " + p("r.hsc")),
              6);
    io::save_cube(p("narrow.hsc"), cassi::HsiCube(Tensor({16, 12, 1}, 1.0)));
    EXPECT_EQ(run("reconstruct --measurement " + p("y.hsc") + " --mask " + p("narrow.hsc") + " --checkpoint " + p("model.ck") +
                  " --out " + p("r.hsc")),
              6);
    EXPECT_EQ(run("reconstruct --measurement " + p("y.hsc") + " --mask " + p("m.hsc") + " --out " + p("r.hsc")), 7);
    EXPECT_EQ(run("eval --ref " + p("x.hsc") + " --est " + p("y.hsc") + " --out " + p("m.csv")), 6);
}

TEST_F(Cli, GradcheckControls)
{
    EXPECT_EQ(run("gradcheck --size 4 4 2 --samples 1 --stages 1 --out " + p("gc.csv")), 0) << out();
    EXPECT_NE(out().find("PASS"), std::string::npos);
    EXPECT_EQ(io::read_text(p("gc.csv")).rfind("group,", 0), 0u);
    EXPECT_EQ(run("gradcheck --size 4 4 2 --samples 1 --stages 1 --corrupt-grad stage0.step.conv.b"), 10);
    EXPECT_NE(out().find("stage0.step.conv.b"), std::string::npos);
    EXPECT_EQ(run("gradcheck --size 4 4 2 --samples 1 --stages 1 --corrupt-grad nothing"), 7);
}

TEST_F(Cli, VizFreqWritesImages)
{
    ASSERT_EQ(run("simulate --config " + p("toy.cfg") + " --save-scene " + p("x.hsc") + " --out " + p("y.hsc")), 0);
    ASSERT_EQ(run("viz-freq --input " + p("x.hsc") + " --channel 2 --out " + p("viz")), 0) << out();
    for (const char* suffix : {"_amplitude.png", "_phase.png", "_amp_only.png", "_phase_only.png"})
        EXPECT_TRUE(fs::exists(p(std::string("viz") + suffix))) << suffix;
    EXPECT_EQ(run("viz-freq --input " + p("x.hsc") + " --channel 9 --out " + p("viz")), 7);
}
