#include "hsirecon/nst.hpp"

#include <cmath>

#include "hsirecon/ops.hpp"

namespace hsirecon::nst {

namespace {

using Index = std::vector<std::size_t>;

std::size_t flat(int i, int j, int c, int w, int channels)
{
    return (static_cast<std::size_t>(i) * w + j) * channels + c;
}

std::shared_ptr<const Index> pad_index(int h, int w, int c, int ph, int pw)
{
    auto idx = std::make_shared<Index>();
    idx->reserve(static_cast<std::size_t>(ph) * pw * c);
    for (int i = 0; i < ph; ++i)
        for (int j = 0; j < pw; ++j)
            for (int k = 0; k < c; ++k) idx->push_back(flat(reflect_index(i, h), reflect_index(j, w), k, w, c));
    return idx;
}

std::shared_ptr<const Index> crop_index(int pw, int c, int h, int w)
{
    auto idx = std::make_shared<Index>();
    idx->reserve(static_cast<std::size_t>(h) * w * c);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int k = 0; k < c; ++k) idx->push_back(flat(i, j, k, pw, c));
    return idx;
}

std::shared_ptr<const Index> roll_index(int h, int w, int c, int dy, int dx)
{
    auto idx = std::make_shared<Index>();
    idx->reserve(static_cast<std::size_t>(h) * w * c);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const int si = ((i - dy) % h + h) % h, sj = ((j - dx) % w + w) % w;
            for (int k = 0; k < c; ++k) idx->push_back(flat(si, sj, k, w, c));
        }
    return idx;
}

int round_up(int n, int m) { return (n + m - 1) / m * m; }

real inverse_softplus(real y) { return std::log(std::expm1(y)); }

NstPair make_pair(ad::ParamStore& store, const std::string& name, BlockShape shape, nn::Rng& rng, bool zero)
{
    return {make_nst_block(store, name + ".a", shape, rng, zero), make_nst_block(store, name + ".b", shape, rng, zero)};
}

ad::Var run_pair(const ad::Var& x, const NstPair& p) { return nst_block(nst_block(x, p.plain, false), p.shifted, true); }

}  // namespace

int reflect_index(int i, int n)
{
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}

CubePartition partition_cubes(const Tensor& map, int cube)
{
    if (cube < 1) throw std::invalid_argument("cube size must be at least 1");
    if (map.rank() != 3) throw ShapeError("partition expects an H x W x C map, got " + map.shape_str());
    CubePartition p;
    p.cube = cube;
    p.height = map.h();
    p.width = map.w();
    p.channels = map.c();
    p.padded_height = round_up(map.h(), cube);
    p.padded_width = round_up(map.w(), cube);
    for (int cy = 0; cy < p.padded_height / cube; ++cy)
        for (int cx = 0; cx < p.padded_width / cube; ++cx) {
            Tensor t({cube, cube, map.c()});
            for (int i = 0; i < cube; ++i)
                for (int j = 0; j < cube; ++j)
                    for (int k = 0; k < map.c(); ++k)
                        t.at(i, j, k) = map.at(reflect_index(cy * cube + i, map.h()), reflect_index(cx * cube + j, map.w()), k);
            p.cubes.push_back(std::move(t));
        }
    return p;
}

Tensor merge_cubes(const CubePartition& p)
{
    const int gx = p.padded_width / p.cube;
    Tensor out({p.height, p.width, p.channels});
    for (int i = 0; i < p.height; ++i)
        for (int j = 0; j < p.width; ++j) {
            const Tensor& t = p.cubes.at(static_cast<std::size_t>(i / p.cube) * gx + j / p.cube);
            for (int k = 0; k < p.channels; ++k) out.at(i, j, k) = t.at(i % p.cube, j % p.cube, k);
        }
    return out;
}

ad::Var spatial_shift(const ad::Var& map, int dy, int dx)
{
    const Tensor& t = map.value();
    if (t.rank() != 3) throw ShapeError("spatial shift expects an H x W x C map, got " + t.shape_str());
    if (dy % t.h() == 0 && dx % t.w() == 0) return map;
    return ad::gather(map, t.shape(), roll_index(t.h(), t.w(), t.c(), dy, dx));
}

Tensor spatial_shift(const Tensor& map, int dy, int dx)
{
    ad::NoGradGuard guard;
    return spatial_shift(ad::Var::constant(map), dy, dx).value();
}

ad::Var reflect_pad(const ad::Var& map, int ph, int pw)
{
    const Tensor& t = map.value();
    if (ph == t.h() && pw == t.w()) return map;
    return ad::gather(map, {ph, pw, t.c()}, pad_index(t.h(), t.w(), t.c(), ph, pw));
}

ad::Var crop(const ad::Var& map, int h, int w)
{
    const Tensor& t = map.value();
    if (h == t.h() && w == t.w()) return map;
    if (h > t.h() || w > t.w()) throw ShapeError("crop target larger than map " + t.shape_str());
    return ad::gather(map, {h, w, t.c()}, crop_index(t.w(), t.c(), h, w));
}

ad::Var upsample_nearest(const ad::Var& map, int h, int w)
{
    const Tensor& t = map.value();
    if (h > 2 * t.h() || w > 2 * t.w()) throw ShapeError("upsample target exceeds twice the map " + t.shape_str());
    auto idx = std::make_shared<Index>();
    idx->reserve(static_cast<std::size_t>(h) * w * t.c());
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int k = 0; k < t.c(); ++k) idx->push_back(flat(i / 2, j / 2, k, t.w(), t.c()));
    return ad::gather(map, {h, w, t.c()}, idx);
}

NstBlockParams make_nst_block(ad::ParamStore& store, const std::string& name, BlockShape shape, nn::Rng& rng,
                              bool zero_residual)
{
    const int C = shape.channels;
    if (shape.heads < 1 || C % shape.heads)
        throw std::invalid_argument("channels " + std::to_string(C) + " not divisible by heads " + std::to_string(shape.heads));
    const auto residual_init = zero_residual ? nn::Init::zeros : nn::Init::uniform_fan_in;
    NstBlockParams p;
    p.heads = shape.heads;
    p.cube = shape.cube;
    p.ln1_gamma = store.add(name + ".ln1.g", Tensor({C}, 1.0));
    p.ln1_beta = store.add(name + ".ln1.b", Tensor({C}));
    p.query = nn::make_conv_no_bias(store, name + ".q", 1, C, C, rng);
    p.key = nn::make_conv_no_bias(store, name + ".k", 1, C, C, rng);
    p.value = nn::make_conv_no_bias(store, name + ".v", 1, C, C, rng, residual_init);
    p.beta_raw = store.add(name + ".beta", Tensor({shape.heads}, inverse_softplus(std::sqrt(static_cast<real>(C / shape.heads)))));
    p.proj = nn::make_conv(store, name + ".proj", 1, C, C, rng, residual_init);
    p.ln2_gamma = store.add(name + ".ln2.g", Tensor({C}, 1.0));
    p.ln2_beta = store.add(name + ".ln2.b", Tensor({C}));
    p.ffn_in = nn::make_conv(store, name + ".ffn1", 1, C, shape.ffn_expand * C, rng, residual_init);
    p.ffn_out = nn::make_conv(store, name + ".ffn2", 1, shape.ffn_expand * C, C, rng, residual_init);
    return p;
}

ad::Var nonlocal_spectral_attention(const ad::Var& map, const NstBlockParams& p)
{
    const int h = map.value().h(), w = map.value().w();
    ad::Var padded = reflect_pad(map, round_up(h, p.cube), round_up(w, p.cube));
    ad::Var q = nn::apply(p.query, padded);
    ad::Var k = nn::apply(p.key, padded);
    ad::Var v = nn::apply(p.value, padded);
    ad::Var att = ad::cube_attention(q, k, v, ad::softplus(p.beta_raw), {p.cube, p.heads});
    return crop(nn::apply(p.proj, att), h, w);
}

ad::Var feed_forward(const ad::Var& map, const NstBlockParams& p)
{
    return nn::apply(p.ffn_out, ad::gelu(nn::apply(p.ffn_in, map)));
}

ad::Var nst_block(const ad::Var& map, const NstBlockParams& p, bool shifted)
{
    const int s = shifted ? p.cube / 2 : 0;
    ad::Var x = spatial_shift(map, s, s);
    x = ad::add(x, nonlocal_spectral_attention(ad::layer_norm(x, p.ln1_gamma, p.ln1_beta), p));
    x = ad::add(x, feed_forward(ad::layer_norm(x, p.ln2_gamma, p.ln2_beta), p));
    return spatial_shift(x, -s, -s);
}

DenoiserParams make_denoiser(ad::ParamStore& store, const std::string& name, DenoiserShape shape, nn::Rng& rng,
                             nn::Init init)
{
    if (shape.levels < 1) throw std::invalid_argument("denoiser needs at least one level");
    if (shape.channels < 1 || shape.bands < 1 || shape.cube < 1 || shape.head_dim < 1)
        throw std::invalid_argument("denoiser dimensions must be positive");
    const bool zero = init == nn::Init::zeros;
    auto block_shape = [&](int channels) {
        return BlockShape{channels, std::max(1, channels / shape.head_dim), shape.cube, shape.ffn_expand};
    };

    DenoiserParams p;
    p.shape = shape;
    p.input = nn::make_conv(store, name + ".in", 3, shape.bands, shape.channels, rng, init);
    int c = shape.channels;
    for (int l = 0; l < shape.levels; ++l) {
        const std::string lv = name + ".enc" + std::to_string(l);
        if (shape.fusion) {
            nn::ConvParams f = nn::make_conv(store, lv + ".fuse", 3, 2 * c, c, rng, init);
            p.fusion.emplace_back(fourier::FusionParams{f.weight, f.bias});
        } else {
            p.fusion.emplace_back(std::nullopt);
        }
        p.encoder.push_back(make_pair(store, lv + ".nst", block_shape(c), rng, zero));
        p.down.push_back(nn::make_conv(store, lv + ".down", 3, c, 2 * c, rng, init, 2));
        c *= 2;
    }
    p.bottleneck = make_pair(store, name + ".mid.nst", block_shape(c), rng, zero);
    p.up.resize(shape.levels);
    p.merge.resize(shape.levels);
    p.decoder.resize(shape.levels);
    for (int l = shape.levels - 1; l >= 0; --l) {
        const std::string lv = name + ".dec" + std::to_string(l);
        c /= 2;
        p.up[l] = nn::make_conv(store, lv + ".up", 3, 2 * c, c, rng, init);
        p.merge[l] = nn::make_conv(store, lv + ".merge", 1, 2 * c, c, rng, init);
        p.decoder[l] = make_pair(store, lv + ".nst", block_shape(c), rng, zero);
    }
    p.output = nn::make_conv(store, name + ".out", 3, shape.channels, shape.bands, rng, init);
    return p;
}

DenoiserOutput run_denoiser(const ad::Var& x, const StageFeatures& prev, const DenoiserParams& params)
{
    const DenoiserShape& shape = params.shape;
    const Tensor& xin = x.value();
    if (xin.rank() != 3 || xin.c() != shape.bands)
        throw ShapeError("denoiser input " + xin.shape_str() + " does not have " + std::to_string(shape.bands) + " bands");
    const bool fuse = !prev.empty();
    if (fuse && (static_cast<int>(prev.enc.size()) != shape.levels || static_cast<int>(prev.dec.size()) != shape.levels))
        throw ShapeError("previous stage supplied " + std::to_string(prev.enc.size()) + " encoder / " +
                         std::to_string(prev.dec.size()) + " decoder levels, expected " + std::to_string(shape.levels));

    DenoiserOutput out;
    std::vector<ad::Var> skips;
    ad::Var f = nn::apply(params.input, x);
    for (int l = 0; l < shape.levels; ++l) {
        if (fuse) {
            const auto& fp = params.fusion[static_cast<std::size_t>(l)];
            if (!fp) throw std::logic_error("stage fusion requested but level " + std::to_string(l) + " has no fusion weights");
            const Tensor& pe = prev.enc[l].value();
            const Tensor& pd = prev.dec[l].value();
            if (!pe.same_shape(f.value()) || !pd.same_shape(f.value()))
                throw ShapeError("level " + std::to_string(l) + ": previous features " + pe.shape_str() + "/" + pd.shape_str() +
                                 " do not match current " + f.value().shape_str());
            f = fourier::fft_stage_fusion(prev.enc[l], prev.dec[l], f, *fp);
        }
        f = run_pair(f, params.encoder[l]);
        out.features.enc.push_back(f);
        skips.push_back(f);
        f = nn::apply(params.down[l], f);
    }
    f = run_pair(f, params.bottleneck);
    out.features.dec.resize(shape.levels);
    for (int l = shape.levels - 1; l >= 0; --l) {
        const Tensor& skip = skips[l].value();
        f = nn::apply(params.up[l], upsample_nearest(f, skip.h(), skip.w()));
        f = nn::apply(params.merge[l], ad::concat_channels(f, skips[l]));
        f = run_pair(f, params.decoder[l]);
        out.features.dec[l] = f;
    }
    out.z = ad::add(x, nn::apply(params.output, f));
    return out;
}

}  // namespace hsirecon::nst
