#pragma once

// Spectral cube to 8-bit sRGB through the CIE 1931 2-degree observer, and a
// small PNG writer for the result and for grayscale diagnostic maps.

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "hsirecon/cassi.hpp"

namespace hsirecon::color {

/// Interleaved 8-bit image with 1 (gray) or 3 (RGB) channels.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> bytes;

    std::uint8_t at(int row, int col, int ch) const
    {
        return bytes[(static_cast<std::size_t>(row) * width + col) * channels + ch];
    }
};

/// Multi-lobe piecewise-Gaussian fit of the CIE 1931 colour matching
/// functions (Wyman, Sloan and Shirley, 2013), lambda in nm.
std::array<real, 3> cie_xyz(real lambda_nm);

/// B wavelengths evenly spaced over [450, 650] nm.
std::vector<real> default_wavelengths(int bands = 28, real first = 450.0, real last = 650.0);

/// XYZ -> linear sRGB (D65 white) -> sRGB transfer curve -> round to [0, 255].
/// The cube is read as radiance; XYZ is normalized so a flat spectrum of 1
/// has Y = 1.
Image export_rgb(const cassi::HsiCube& cube, const std::vector<real>& wavelengths);

/// Min-max stretched grayscale rendering of an H x W x C map's channel.
Image grayscale(const Tensor& map, int channel = 0);

void write_png(const std::filesystem::path& path, const Image& img);

/// 64-bit FNV-1a over the pixel bytes.
std::uint64_t fingerprint(const Image& img);

}  // namespace hsirecon::color
