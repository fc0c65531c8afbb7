#include "hsirecon/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>

namespace hsirecon::io {

namespace {

constexpr char kMagic[4] = {'H', 'S', 'C', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p)
{
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

template <class U>
void put_le(std::vector<std::uint8_t>& out, U bits)
{
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <class U>
U get_le(const std::uint8_t* p)
{
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
    return v;
}

Dtype checked_dtype(std::uint8_t tag)
{
    if (tag != static_cast<std::uint8_t>(Dtype::f32) && tag != static_cast<std::uint8_t>(Dtype::f64))
        throw FormatError("unknown HSC dtype tag " + std::to_string(tag));
    return static_cast<Dtype>(tag);
}

std::uint32_t checked_dim(int d) { return static_cast<std::uint32_t>(d); }

}  // namespace

std::size_t dtype_size(Dtype d) { return d == Dtype::f32 ? 4 : 8; }

std::size_t HscFile::element_count() const
{
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

std::vector<std::uint8_t> encode_hsc(const HscFile& f)
{
    if (f.dims.empty() || f.dims.size() > 255) throw FormatError("HSC rank must be 1..255");
    if (f.values.size() != f.element_count())
        throw ShapeError("HSC payload of " + std::to_string(f.values.size()) + " values does not match its dims");
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    out.push_back(static_cast<std::uint8_t>(f.dims.size()));
    out.push_back(static_cast<std::uint8_t>(f.dtype));
    out.push_back(0);
    out.push_back(0);
    for (auto d : f.dims) put_u32(out, d);
    out.reserve(out.size() + f.values.size() * dtype_size(f.dtype));
    for (real v : f.values) {
        if (f.dtype == Dtype::f32)
            put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        else
            put_le(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

HscFile decode_hsc(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not an HSC file (bad magic)");
    const std::size_t rank = bytes[4];
    if (rank == 0) throw FormatError("HSC rank is zero");
    HscFile f;
    f.dtype = checked_dtype(bytes[5]);
    const std::size_t header = 8 + 4 * rank;
    if (bytes.size() < header) throw FormatError("truncated HSC header");
    for (std::size_t i = 0; i < rank; ++i) f.dims.push_back(get_u32(bytes.data() + 8 + 4 * i));
    const std::size_t n = f.element_count();
    if (bytes.size() != header + n * dtype_size(f.dtype))
        throw FormatError("HSC payload is " + std::to_string(bytes.size() - header) + " bytes, dims require " +
                          std::to_string(n * dtype_size(f.dtype)));
    f.values.resize(n);
    const std::uint8_t* p = bytes.data() + header;
    for (std::size_t i = 0; i < n; ++i) {
        if (f.dtype == Dtype::f32)
            f.values[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + 4 * i));
        else
            f.values[i] = std::bit_cast<double>(get_le<std::uint64_t>(p + 8 * i));
    }
    return f;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

void save_hsc(const std::filesystem::path& path, const HscFile& f) { write_bytes(path, encode_hsc(f)); }

HscFile load_hsc(const std::filesystem::path& path) { return decode_hsc(read_bytes(path)); }

HscFile to_hsc(const cassi::HsiCube& cube, Dtype dtype)
{
    return {{checked_dim(cube.height()), checked_dim(cube.width()), checked_dim(cube.bands())}, dtype, cube.values().vec()};
}

HscFile to_hsc(const cassi::Measurement& y, Dtype dtype)
{
    return {{checked_dim(y.height()), checked_dim(y.width())}, dtype, y.values().vec()};
}

cassi::HsiCube cube_from_hsc(const HscFile& f)
{
    if (f.dims.size() != 2 && f.dims.size() != 3)
        throw ShapeError("expected an H x W x B cube, file has rank " + std::to_string(f.dims.size()));
    const int bands = f.dims.size() == 3 ? static_cast<int>(f.dims[2]) : 1;
    return cassi::HsiCube(Tensor({static_cast<int>(f.dims[0]), static_cast<int>(f.dims[1]), bands}, f.values));
}

cassi::Measurement measurement_from_hsc(const HscFile& f)
{
    if (f.dims.size() != 2) throw ShapeError("expected an H x Ws measurement, file has rank " + std::to_string(f.dims.size()));
    return cassi::Measurement(Tensor({static_cast<int>(f.dims[0]), static_cast<int>(f.dims[1]), 1}, f.values));
}

void save_cube(const std::filesystem::path& path, const cassi::HsiCube& cube, Dtype dtype)
{
    save_hsc(path, to_hsc(cube, dtype));
}

cassi::HsiCube load_cube(const std::filesystem::path& path) { return cube_from_hsc(load_hsc(path)); }

void save_measurement(const std::filesystem::path& path, const cassi::Measurement& y, Dtype dtype)
{
    save_hsc(path, to_hsc(y, dtype));
}

cassi::Measurement load_measurement(const std::filesystem::path& path) { return measurement_from_hsc(load_hsc(path)); }

std::string format_real(real v)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string loss_csv(const std::vector<LossRow>& rows)
{
    std::string out = "step,rate,loss\n";
    for (const auto& r : rows) out += std::to_string(r.step) + ',' + format_real(r.rate) + ',' + format_real(r.loss) + '\n';
    return out;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows)
{
    std::string out = "scene,psnr,ssim,time_s\n";
    for (const auto& r : rows)
        out += r.scene + ',' + format_real(r.psnr) + ',' + format_real(r.ssim) + ',' + format_real(r.time_s) + '\n';
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text(const std::filesystem::path& path)
{
    const auto bytes = read_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

}  // namespace hsirecon::io
