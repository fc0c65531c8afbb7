#include "hsirecon/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>

namespace hsirecon::io {

namespace {

constexpr char kMagic[4] = {'H', 'S', 'C', 'K'};

template <class U>
void put(std::vector<std::uint8_t>& out, U v)
{
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}

    template <class U>
    U take()
    {
        need(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
        pos_ += sizeof(U);
        return v;
    }

    std::string take_string(std::size_t n)
    {
        need(n);
        std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_), bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const
    {
        if (pos_ + n > bytes_.size()) throw FormatError("truncated checkpoint");
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

Checkpoint capture(const ad::ParamStore& store, std::string config, Dtype dtype)
{
    Checkpoint ck{dtype, std::move(config), {}};
    for (const auto& [name, var] : store.entries()) ck.params.emplace_back(name, var.value());
    return ck;
}

void restore(ad::ParamStore& store, const Checkpoint& ck)
{
    std::map<std::string, const Tensor*> saved;
    for (const auto& [name, t] : ck.params) saved[name] = &t;
    for (const auto& [name, var] : store.entries()) {
        const auto it = saved.find(name);
        if (it == saved.end()) throw FormatError("checkpoint lacks parameter " + name);
        Tensor& dst = ad::Var(var).mutable_value();
        require_same_shape(dst, *it->second, "checkpoint parameter " + name);
        dst = *it->second;
        saved.erase(it);
    }
    if (!saved.empty()) throw FormatError("checkpoint holds unknown parameter " + saved.begin()->first);
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck)
{
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    out.push_back(kCheckpointVersion);
    out.push_back(static_cast<std::uint8_t>(ck.dtype));
    put<std::uint16_t>(out, 0);
    put(out, static_cast<std::uint32_t>(ck.config.size()));
    out.insert(out.end(), ck.config.begin(), ck.config.end());
    put(out, static_cast<std::uint32_t>(ck.params.size()));
    for (const auto& [name, t] : ck.params) {
        if (name.size() > 0xffff) throw FormatError("parameter name too long: " + name.substr(0, 64));
        put(out, static_cast<std::uint16_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        out.push_back(static_cast<std::uint8_t>(t.rank()));
        for (int d : t.shape()) put(out, static_cast<std::uint32_t>(d));
        for (real v : t.vec()) {
            if (ck.dtype == Dtype::f32)
                put(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
            else
                put(out, std::bit_cast<std::uint64_t>(v));
        }
    }
    return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("not a checkpoint (bad magic)");
    Reader r(bytes);
    r.take_string(4);
    const auto version = r.take<std::uint8_t>();
    if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const auto tag = r.take<std::uint8_t>();
    if (tag != 1 && tag != 2) throw FormatError("unknown checkpoint dtype tag " + std::to_string(tag));
    r.take<std::uint16_t>();
    Checkpoint ck;
    ck.dtype = static_cast<Dtype>(tag);
    ck.config = r.take_string(r.take<std::uint32_t>());
    const auto count = r.take<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.take_string(r.take<std::uint16_t>());
        const int rank = r.take<std::uint8_t>();
        if (rank < 1 || rank > 4) throw FormatError("parameter " + name + " has rank " + std::to_string(rank));
        std::vector<int> shape;
        for (int k = 0; k < rank; ++k) {
            const auto d = r.take<std::uint32_t>();
            if (d == 0 || d > 0x7fffffff) throw FormatError("parameter " + name + " has a bad dimension");
            shape.push_back(static_cast<int>(d));
        }
        Tensor t(shape);
        for (real& v : t.vec()) {
            if (ck.dtype == Dtype::f32)
                v = std::bit_cast<float>(r.take<std::uint32_t>());
            else
                v = std::bit_cast<double>(r.take<std::uint64_t>());
        }
        ck.params.emplace_back(std::move(name), std::move(t));
    }
    if (!r.done()) throw FormatError("trailing bytes after checkpoint payload");
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) { write_bytes(path, encode_checkpoint(ck)); }

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_bytes(path)); }

}  // namespace hsirecon::io
