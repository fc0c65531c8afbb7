#pragma once

// Portable artifacts: the HSC array container for cubes and measurements,
// and CSV writers for loss curves and metric rows.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsirecon/cassi.hpp"
#include "hsirecon/tensor.hpp"

namespace hsirecon::io {

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File exists but its contents violate the format.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Dtype : std::uint8_t { f32 = 1, f64 = 2 };

std::size_t dtype_size(Dtype d);

/// HSC layout, all integers little-endian:
///   "HSC1" | u8 rank | u8 dtype | u16 reserved (0) | rank x u32 dims | payload
/// Cubes are stored with dims (H, W, B), measurements with (H, Ws).
struct HscFile {
    std::vector<std::uint32_t> dims;
    Dtype dtype = Dtype::f64;
    std::vector<real> values;  // row-major, widened to double on load

    std::size_t element_count() const;
};

std::vector<std::uint8_t> encode_hsc(const HscFile& f);
HscFile decode_hsc(const std::vector<std::uint8_t>& bytes);

void save_hsc(const std::filesystem::path& path, const HscFile& f);
HscFile load_hsc(const std::filesystem::path& path);

HscFile to_hsc(const cassi::HsiCube& cube, Dtype dtype = Dtype::f64);
HscFile to_hsc(const cassi::Measurement& y, Dtype dtype = Dtype::f64);
/// Rank-2 files load as single-band cubes.
cassi::HsiCube cube_from_hsc(const HscFile& f);
cassi::Measurement measurement_from_hsc(const HscFile& f);

void save_cube(const std::filesystem::path& path, const cassi::HsiCube& cube, Dtype dtype = Dtype::f64);
cassi::HsiCube load_cube(const std::filesystem::path& path);
void save_measurement(const std::filesystem::path& path, const cassi::Measurement& y, Dtype dtype = Dtype::f64);
cassi::Measurement load_measurement(const std::filesystem::path& path);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

/// Shortest round-trip decimal form, locale independent.
std::string format_real(real v);

struct LossRow {
    long step;
    real rate;
    real loss;
};

struct MetricsRow {
    std::string scene;
    real psnr;
    real ssim;
    real time_s;
};

/// Header row, "." decimal point, LF line endings.
std::string loss_csv(const std::vector<LossRow>& rows);
std::string metrics_csv(const std::vector<MetricsRow>& rows);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace hsirecon::io
