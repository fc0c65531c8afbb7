#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>

#include "hsirecon/checkpoint.hpp"
#include "hsirecon/color.hpp"
#include "hsirecon/config.hpp"
#include "hsirecon/io.hpp"
#include "hsirecon/metrics.hpp"
#include "hsirecon/training.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace hsirecon;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir()
{
    const fs::path dir = fs::temp_directory_path() / ("hsirecon_harness_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    fs::create_directories(dir);
    return dir;
}

std::vector<real> float_exact(std::size_t n, std::mt19937_64& rng)
{
    std::vector<real> v(n);
    std::uniform_real_distribution<float> u(-4.0f, 4.0f);
    for (auto& x : v) x = u(rng);
    return v;
}

}  // namespace

TEST(Hsc, ByteLayout)
{
    io::HscFile f{{1, 2}, io::Dtype::f64, {1.0, -2.0}};
    const auto bytes = io::encode_hsc(f);
    ASSERT_EQ(bytes.size(), 4u + 4u + 8u + 16u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "HSC1");
    EXPECT_EQ(bytes[4], 2);
    EXPECT_EQ(bytes[5], 2);
    EXPECT_EQ(bytes[6], 0);
    EXPECT_EQ(bytes[7], 0);
    EXPECT_EQ((std::vector<std::uint8_t>(bytes.begin() + 8, bytes.begin() + 16)), (std::vector<std::uint8_t>{1, 0, 0, 0, 2, 0, 0, 0}));
    EXPECT_EQ((std::vector<std::uint8_t>(bytes.begin() + 16, bytes.begin() + 24)), (std::vector<std::uint8_t>{0, 0, 0, 0, 0, 0, 0xf0, 0x3f}));
    EXPECT_EQ(bytes[31], 0xc0);
}

TEST(Hsc, RoundTripIsBitExact)
{
    std::mt19937_64 rng(1);
    for (auto dtype : {io::Dtype::f32, io::Dtype::f64})
        for (auto dims : {std::vector<std::uint32_t>{5, 7, 3}, std::vector<std::uint32_t>{4, 9}}) {
            io::HscFile f{dims, dtype, {}};
            f.values = dtype == io::Dtype::f32 ? float_exact(f.element_count(), rng) : random_tensor({static_cast<int>(f.element_count())}, rng).vec();
            const io::HscFile g = io::decode_hsc(io::encode_hsc(f));
            EXPECT_EQ(g.dims, f.dims);
            EXPECT_EQ(g.dtype, f.dtype);
            ASSERT_EQ(g.values.size(), f.values.size());
            for (std::size_t i = 0; i < f.values.size(); ++i)
                EXPECT_EQ(std::bit_cast<std::uint64_t>(g.values[i]), std::bit_cast<std::uint64_t>(f.values[i]));
            EXPECT_EQ(io::encode_hsc(g), io::encode_hsc(f));
        }
}

TEST(Hsc, CubeAndMeasurementFiles)
{
    std::mt19937_64 rng(2);
    const fs::path dir = scratch_dir();
    const cassi::HsiCube cube(random_tensor({6, 5, 4}, rng));
    io::save_cube(dir / "cube.hsc", cube);
    EXPECT_EQ(io::load_cube(dir / "cube.hsc").values().vec(), cube.values().vec());
    const cassi::Measurement y(random_tensor({6, 8, 1}, rng));
    io::save_measurement(dir / "y.hsc", y);
    EXPECT_EQ(io::load_measurement(dir / "y.hsc").values().vec(), y.values().vec());
    EXPECT_THROW(io::load_measurement(dir / "cube.hsc"), ShapeError);
    EXPECT_THROW(io::load_cube(dir / "absent.hsc"), io::IoError);
    fs::remove_all(dir);
}

TEST(Hsc, RejectsMalformedInput)
{
    const auto good = io::encode_hsc({{2, 2}, io::Dtype::f64, {1, 2, 3, 4}});
    auto bad_magic = good;
    bad_magic[3] = '2';
    EXPECT_THROW(io::decode_hsc(bad_magic), io::FormatError);
    auto bad_dtype = good;
    bad_dtype[5] = 7;
    EXPECT_THROW(io::decode_hsc(bad_dtype), io::FormatError);
    EXPECT_THROW(io::decode_hsc(std::vector<std::uint8_t>(good.begin(), good.end() - 1)), io::FormatError);
    EXPECT_THROW(io::decode_hsc(std::vector<std::uint8_t>(good.begin(), good.begin() + 6)), io::FormatError);
    auto extra = good;
    extra.push_back(0);
    EXPECT_THROW(io::decode_hsc(extra), io::FormatError);
    EXPECT_THROW(io::encode_hsc({{2, 2}, io::Dtype::f64, {1, 2, 3}}), ShapeError);
}

TEST(Checkpoint, RoundTripAndRestore)
{
    unfolding::UnfoldingConfig cfg;
    cfg.stages = 1;
    cfg.channels = 4;
    cfg.cube_size = 4;
    unfolding::UnfoldingModel a(cfg, 3, 1), b(cfg, 3, 2);
    for (auto dtype : {io::Dtype::f64, io::Dtype::f32}) {
        const io::Checkpoint ck = io::capture(a.params(), "stages = 1\n", dtype);
        const auto bytes = io::encode_checkpoint(ck);
        const io::Checkpoint back = io::decode_checkpoint(bytes);
        EXPECT_EQ(back.config, "stages = 1\n");
        EXPECT_EQ(io::encode_checkpoint(back), bytes);
        io::restore(b.params(), back);
        for (std::size_t i = 0; i < a.params().entries().size(); ++i) {
            const auto& va = a.params().entries()[i].second.value().vec();
            const auto& vb = b.params().entries()[i].second.value().vec();
            for (std::size_t j = 0; j < va.size(); ++j)
                EXPECT_EQ(vb[j], dtype == io::Dtype::f64 ? va[j] : static_cast<real>(static_cast<float>(va[j])));
        }
    }
    auto truncated = io::encode_checkpoint(io::capture(a.params(), ""));
    truncated.pop_back();
    EXPECT_THROW(io::decode_checkpoint(truncated), io::FormatError);
}

TEST(Checkpoint, RestoreRejectsMismatch)
{
    ad::ParamStore store;
    store.add("w", Tensor({2, 3}));
    io::Checkpoint ck{io::Dtype::f64, "", {{"w", Tensor({3, 2})}}};
    EXPECT_THROW(io::restore(store, ck), ShapeError);
    ck.params = {{"v", Tensor({2, 3})}};
    EXPECT_THROW(io::restore(store, ck), io::FormatError);
    ck.params = {{"w", Tensor({2, 3})}, {"extra", Tensor({1})}};
    EXPECT_THROW(io::restore(store, ck), io::FormatError);
}

TEST(Config, ParsesKeysAndComments)
{
    const auto c = config::parse_config("# toy run\nstages = 1\n  cube_size=4  \n# small\nexact_hqs = true\nmu = 0.5\nnoise = gaussian\n"
                                        "noise_sigma = 0.01\nloss = charbonnier\nseed = 42\nscene = a b.hsc\n");
    EXPECT_EQ(c.stages, 1);
    EXPECT_EQ(c.cube_size, 4);
    EXPECT_TRUE(c.exact_hqs);
    EXPECT_EQ(c.mu, 0.5);
    EXPECT_EQ(c.noise, cassi::NoiseConfig::Kind::gaussian);
    EXPECT_EQ(c.loss, training::LossKind::charbonnier);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.scene, "a b.hsc");
    EXPECT_EQ(c.channels, 16);
    EXPECT_EQ(c.noise_config().seed, 45u);
    EXPECT_TRUE(c.unfolding().exact_hqs_mode);
}

TEST(Config, RejectsBadInput)
{
    EXPECT_THROW(config::parse_config("colour = red\n"), config::ConfigError);
    EXPECT_THROW(config::parse_config("stages = 1\nstages = 2\n"), config::ConfigError);
    EXPECT_THROW(config::parse_config("stages = two\n"), config::ConfigError);
    EXPECT_THROW(config::parse_config("stages\n"), config::ConfigError);
    EXPECT_THROW(config::parse_config("exact_hqs = maybe\n"), config::ConfigError);
    EXPECT_THROW(config::parse_config("mu = 1.0x\n"), config::ConfigError);
    try {
        config::parse_config("stages = 1\n\nbogus = 3\n");
        FAIL();
    } catch (const config::ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
    }
}

TEST(Config, TextRoundTrip)
{
    config::RunConfig c;
    c.stages = 1;
    c.learning_rate = 1.25e-3;
    c.noise = cassi::NoiseConfig::Kind::gaussian;
    c.noise_sigma = 0.02;
    c.output = "out/run";
    const std::string text = config::to_text(c);
    EXPECT_EQ(config::to_text(config::parse_config(text)), text);
    const std::string model = config::model_text(c);
    EXPECT_EQ(model.find("output"), std::string::npos);
    EXPECT_NE(model.find("stages = 1"), std::string::npos);
}

TEST(Csv, Format)
{
    EXPECT_EQ(io::loss_csv({{0, 0.5, 0.25}, {1, 0.125, 3.0}}), "step,rate,loss\n0,0.5,0.25\n1,0.125,3\n");
    EXPECT_EQ(io::metrics_csv({{"toy", 25.5, 0.75, 0.0}}), "scene,psnr,ssim,time_s\ntoy,25.5,0.75,0\n");
    EXPECT_EQ(std::stod(io::format_real(0.1 + 0.2)), 0.1 + 0.2);
    EXPECT_EQ(io::format_real(1e-300).find(','), std::string::npos);
}

TEST(Psnr, OffsetGivesTwentyDecibels)
{
    std::mt19937_64 rng(3);
    const Tensor x = random_tensor({16, 16, 4}, rng, 0, 1);
    Tensor y = x;
    for (auto& v : y.vec()) v += 0.1;
    EXPECT_NEAR(metrics::psnr(x, y), 20.0, 1e-6);
    EXPECT_EQ(metrics::psnr(x, x), metrics::kPsnrCap);
    EXPECT_NEAR(metrics::psnr(x, y, 2.0), 20.0 + 20 * std::log10(2.0), 1e-9);
}

TEST(Psnr, MatchesNaiveOracle)
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor x = random_tensor({12, 10, 3}, rng, 0, 1);
        Tensor y = x;
        std::normal_distribution<real> n(0.0, 0.01 + 0.01 * trial);
        for (auto& v : y.vec()) v += n(rng);
        EXPECT_NEAR(metrics::psnr(x, y), naive_psnr(x, y), 1e-9);
    }
}

TEST(Ssim, IdentityAndAnticorrelation)
{
    std::mt19937_64 rng(5);
    const Tensor x = random_tensor({16, 16, 3}, rng, 0, 1);
    EXPECT_EQ(metrics::ssim(x, x), 1.0);
    Tensor neg = x;
    for (auto& v : neg.vec()) v = 1.0 - v;
    EXPECT_LT(metrics::ssim(x, neg), 0.0);
    EXPECT_THROW(metrics::ssim(Tensor({8, 8, 1}), Tensor({8, 8, 1})), ShapeError);
}

TEST(Ssim, MatchesNaiveOracle)
{
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor x = random_tensor({14, 13, 2}, rng, 0, 1);
        Tensor y = x;
        std::normal_distribution<real> n(0.0, 0.02 * (trial + 1));
        for (auto& v : y.vec()) v += n(rng);
        EXPECT_NEAR(metrics::ssim(x, y), naive_ssim(x, y), 1e-8);
    }
}

TEST(Ssim, WindowIsNormalized)
{
    const auto g = metrics::gaussian_window(11, 1.5);
    real s = 0;
    for (real v : g) s += v;
    EXPECT_NEAR(s, 1.0, 1e-15);
    EXPECT_EQ(g[0], g[10]);
    EXPECT_GT(g[5], g[4]);
}

TEST(Rgb, ZeroCubeIsBlack)
{
    const cassi::HsiCube cube(Tensor({3, 4, 28}));
    const color::Image img = color::export_rgb(cube, color::default_wavelengths());
    EXPECT_EQ(img.width, 4);
    EXPECT_EQ(img.height, 3);
    for (auto b : img.bytes) EXPECT_EQ(b, 0);
}

TEST(Rgb, GreenLightLooksGreen)
{
    const auto wl = color::default_wavelengths();
    Tensor t({2, 2, 28});
    int nearest = 0;
    for (int b = 0; b < 28; ++b)
        if (std::abs(wl[b] - 550.0) < std::abs(wl[nearest] - 550.0)) nearest = b;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) t.at(i, j, nearest) = 1.0;
    const color::Image img = color::export_rgb(cassi::HsiCube(t), wl);
    EXPECT_GT(img.at(0, 0, 1), img.at(0, 0, 0));
    EXPECT_GT(img.at(0, 0, 1), img.at(0, 0, 2));
}

TEST(Rgb, GoldenImage)
{
    const cassi::HsiCube cube = training::synthetic_scene(16, 16, 28, 2024);
    const color::Image img = color::export_rgb(cube, color::default_wavelengths());
    EXPECT_EQ(color::fingerprint(img), 0xd5aa7764dfcdeceaull);
}

TEST(Rgb, RejectsWavelengthMismatch)
{
    EXPECT_THROW(color::export_rgb(cassi::HsiCube(Tensor({2, 2, 8})), color::default_wavelengths()), ShapeError);
}

TEST(Png, WritesSignature)
{
    std::mt19937_64 rng(7);
    const fs::path dir = scratch_dir();
    const color::Image gray = color::grayscale(random_tensor({5, 6, 2}, rng), 1);
    EXPECT_EQ(gray.channels, 1);
    EXPECT_EQ(*std::min_element(gray.bytes.begin(), gray.bytes.end()), 0);
    EXPECT_EQ(*std::max_element(gray.bytes.begin(), gray.bytes.end()), 255);
    color::write_png(dir / "g.png", gray);
    const auto bytes = io::read_bytes(dir / "g.png");
    ASSERT_GT(bytes.size(), 8u);
    EXPECT_EQ((std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 8)),
              (std::vector<std::uint8_t>{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'}));
    fs::remove_all(dir);
}
