#include "hsirecon/color.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "hsirecon/io.hpp"

namespace hsirecon::color {

namespace {

real lobe(real x, real mu, real s_lo, real s_hi)
{
    const real t = (x - mu) / (x < mu ? s_lo : s_hi);
    return std::exp(-0.5 * t * t);
}

real srgb_encode(real c)
{
    c = std::clamp(c, 0.0, 1.0);
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

std::uint8_t to_byte(real v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

/// Trapezoid-style weights for possibly uneven wavelength spacing.
std::vector<real> band_widths(const std::vector<real>& wl)
{
    const std::size_t n = wl.size();
    std::vector<real> d(n, 1.0);
    if (n < 2) return d;
    for (std::size_t i = 0; i < n; ++i) {
        const real lo = i == 0 ? wl[0] : 0.5 * (wl[i - 1] + wl[i]);
        const real hi = i + 1 == n ? wl[n - 1] : 0.5 * (wl[i] + wl[i + 1]);
        d[i] = hi - lo;
    }
    return d;
}

}  // namespace

std::array<real, 3> cie_xyz(real l)
{
    return {1.056 * lobe(l, 599.8, 37.9, 31.0) + 0.362 * lobe(l, 442.0, 16.0, 26.7) - 0.065 * lobe(l, 501.1, 20.4, 26.2),
            0.821 * lobe(l, 568.8, 46.9, 40.5) + 0.286 * lobe(l, 530.9, 16.3, 31.1),
            1.217 * lobe(l, 437.0, 11.8, 36.0) + 0.681 * lobe(l, 459.0, 26.0, 13.8)};
}

std::vector<real> default_wavelengths(int bands, real first, real last)
{
    if (bands < 1) throw std::invalid_argument("need at least one band");
    std::vector<real> wl(static_cast<std::size_t>(bands));
    for (int b = 0; b < bands; ++b) wl[b] = bands == 1 ? first : first + (last - first) * b / (bands - 1);
    return wl;
}

Image export_rgb(const cassi::HsiCube& cube, const std::vector<real>& wavelengths)
{
    const int bands = cube.bands();
    if (static_cast<int>(wavelengths.size()) != bands)
        throw ShapeError("export_rgb got " + std::to_string(wavelengths.size()) + " wavelengths for " +
                         std::to_string(bands) + " bands");
    const auto widths = band_widths(wavelengths);
    std::vector<std::array<real, 3>> cmf(static_cast<std::size_t>(bands));
    real y_norm = 0;
    for (int b = 0; b < bands; ++b) {
        cmf[b] = cie_xyz(wavelengths[b]);
        for (auto& v : cmf[b]) v *= widths[b];
        y_norm += cmf[b][1];
    }
    if (!(y_norm > 0)) throw std::invalid_argument("wavelengths give a zero luminance integral");

    Image img{cube.width(), cube.height(), 3, {}};
    img.bytes.reserve(static_cast<std::size_t>(img.width) * img.height * 3);
    for (int h = 0; h < cube.height(); ++h)
        for (int w = 0; w < cube.width(); ++w) {
            real X = 0, Y = 0, Z = 0;
            for (int b = 0; b < bands; ++b) {
                const real v = cube(h, w, b);
                X += v * cmf[b][0];
                Y += v * cmf[b][1];
                Z += v * cmf[b][2];
            }
            X /= y_norm;
            Y /= y_norm;
            Z /= y_norm;
            const real r = 3.2406 * X - 1.5372 * Y - 0.4986 * Z;
            const real g = -0.9689 * X + 1.8758 * Y + 0.0415 * Z;
            const real bl = 0.0557 * X - 0.2040 * Y + 1.0570 * Z;
            img.bytes.push_back(to_byte(srgb_encode(r)));
            img.bytes.push_back(to_byte(srgb_encode(g)));
            img.bytes.push_back(to_byte(srgb_encode(bl)));
        }
    return img;
}

Image grayscale(const Tensor& map, int channel)
{
    if (map.rank() != 3) throw ShapeError("grayscale expects an H x W x C map, got " + map.shape_str());
    if (channel < 0 || channel >= map.c()) throw std::out_of_range("grayscale channel out of range");
    real lo = map.at(0, 0, channel), hi = lo;
    for (int i = 0; i < map.h(); ++i)
        for (int j = 0; j < map.w(); ++j) {
            lo = std::min(lo, map.at(i, j, channel));
            hi = std::max(hi, map.at(i, j, channel));
        }
    const real span = hi > lo ? hi - lo : 1.0;
    Image img{map.w(), map.h(), 1, {}};
    for (int i = 0; i < map.h(); ++i)
        for (int j = 0; j < map.w(); ++j) img.bytes.push_back(to_byte((map.at(i, j, channel) - lo) / span));
    return img;
}

void write_png(const std::filesystem::path& path, const Image& img)
{
    if (img.channels != 1 && img.channels != 3) throw std::invalid_argument("PNG export supports 1 or 3 channels");
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) throw io::IoError("cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw io::IoError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw io::IoError("PNG encoding failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    for (int r = 0; r < img.height; ++r) png_write_row(png, img.bytes.data() + r * stride);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::uint64_t fingerprint(const Image& img)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint8_t b : img.bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace hsirecon::color
