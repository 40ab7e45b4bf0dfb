#pragma once

// Test-only helpers: seeded generators and brute-force reference
// implementations. The oracles use explicit loops in long double and never
// call into the engine's numeric code.

#include "ntt/feature_swap.hpp"
#include "ntt/image.hpp"
#include "ntt/network.hpp"
#include "ntt/types.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace ntt::test {

using Real = long double;

template <typename Scalar>
FeatureMap<Scalar> random_map(std::mt19937_64& rng, Index c, Index h, Index w, double lo = 0.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> dist(lo, hi);
    FeatureMap<Scalar> fm(c, h, w, "rand", 1);
    for (Index i = 0; i < fm.data.size(); ++i)
        fm.data.data()[i] = static_cast<Scalar>(dist(rng));
    return fm;
}

template <typename Scalar>
Image<Scalar> random_image(std::mt19937_64& rng, Index h, Index w, Index c = 3)
{
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Image<Scalar> img(h, w, c);
    for (Index i = 0; i < img.data.size(); ++i)
        img.data.data()[i] = static_cast<Scalar>(dist(rng));
    return img;
}

/// Smooth structured test image: sums of oriented sinusoids, blobs and
/// edges with seed-dependent parameters.
inline ImageBuffer synthetic_image(std::uint64_t seed, Index h = 160, Index w = 160)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ImageBuffer img(h, w, 3);
    struct Wave { double fx, fy, phase, amp[3]; };
    std::vector<Wave> waves(5);
    for (auto& wv : waves) {
        const double freq = 0.04 + 0.25 * u(rng);
        const double ang = 2 * M_PI * u(rng);
        wv = {freq * std::cos(ang), freq * std::sin(ang), 2 * M_PI * u(rng), {u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5}};
    }
    struct Blob { double cy, cx, r, col[3]; };
    std::vector<Blob> blobs(6);
    for (auto& b : blobs)
        b = {u(rng) * h, u(rng) * w, 6 + 20 * u(rng), {u(rng), u(rng), u(rng)}};
    for (Index y = 0; y < h; ++y) {
        for (Index x = 0; x < w; ++x) {
            double px[3] = {0.5, 0.5, 0.5};
            for (const auto& wv : waves)
                for (int c = 0; c < 3; ++c)
                    px[c] += 0.3 * wv.amp[c] * std::sin(wv.fx * x + wv.fy * y + wv.phase);
            for (const auto& b : blobs)
                if ((y - b.cy) * (y - b.cy) + (x - b.cx) * (x - b.cx) < b.r * b.r)
                    for (int c = 0; c < 3; ++c)
                        px[c] = 0.5 * px[c] + 0.5 * b.col[c];
            for (int c = 0; c < 3; ++c)
                img(y, x, c) = static_cast<float>(std::clamp(px[c], 0.0, 1.0));
        }
    }
    return img;
}

/// Small VGG-shaped network for fast tests: taps relu1_1, relu2_1, relu3_1
/// (and relu4_1, relu5_1 when `deep`).
inline NetworkConfig tiny_network(Index c1 = 4, Index c2 = 6, Index c3 = 8, bool deep = false)
{
    using K = LayerSpec::Kind;
    NetworkConfig cfg;
    cfg.layers = {{K::Conv, "conv1_1", c1, {}}, {K::Rectify, "", 0, "relu1_1"}, {K::Conv, "conv1_2", c1, {}},
                  {K::Rectify, "", 0, "relu1_2"}, {K::MaxPool, "", 0, {}},         {K::Conv, "conv2_1", c2, {}},
                  {K::Rectify, "", 0, "relu2_1"}, {K::MaxPool, "", 0, {}},         {K::Conv, "conv3_1", c3, {}},
                  {K::Rectify, "", 0, "relu3_1"}};
    if (deep) {
        cfg.layers.push_back({K::MaxPool, "", 0, {}});
        cfg.layers.push_back({K::Conv, "conv4_1", c3, {}});
        cfg.layers.push_back({K::Rectify, "", 0, "relu4_1"});
        cfg.layers.push_back({K::MaxPool, "", 0, {}});
        cfg.layers.push_back({K::Conv, "conv5_1", c3, {}});
        cfg.layers.push_back({K::Rectify, "", 0, "relu5_1"});
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Oracles

/// Direct zero-padded "same" cross-correlation.
template <typename Scalar>
std::vector<Real> naive_conv(const FeatureMap<Scalar>& in, const std::vector<float>& kernel, const std::vector<float>& bias,
                             Index out_c, Index k)
{
    const Index pad = (k - 1) / 2;
    std::vector<Real> out(static_cast<std::size_t>(out_c * in.height * in.width));
    for (Index o = 0; o < out_c; ++o)
        for (Index y = 0; y < in.height; ++y)
            for (Index x = 0; x < in.width; ++x) {
                Real acc = bias[static_cast<std::size_t>(o)];
                for (Index c = 0; c < in.channels; ++c)
                    for (Index ky = 0; ky < k; ++ky)
                        for (Index kx = 0; kx < k; ++kx) {
                            const Index sy = y + ky - pad;
                            const Index sx = x + kx - pad;
                            if (sy < 0 || sx < 0 || sy >= in.height || sx >= in.width)
                                continue;
                            acc += static_cast<Real>(kernel[static_cast<std::size_t>(((o * in.channels + c) * k + ky) * k + kx)])
                                 * static_cast<Real>(in(c, sy, sx));
                        }
                out[static_cast<std::size_t>((o * in.height + y) * in.width + x)] = acc;
            }
    return out;
}

/// Straightforward forward pass over a NetworkConfig, independent of the
/// engine's im2col path. Returns each requested tap as flat C*H*W values.
inline std::vector<std::vector<Real>> naive_forward(const ImageBuffer& img, const WeightStore& w, const NetworkConfig& net,
                                                    const std::vector<std::string>& taps)
{
    Index c = img.channels, h = img.height, wd = img.width;
    std::vector<Real> x(static_cast<std::size_t>(c * h * wd));
    const auto& mean = w.at("preprocess.mean").values;
    for (Index ch = 0; ch < c; ++ch)
        for (Index y = 0; y < h; ++y)
            for (Index xx = 0; xx < wd; ++xx)
                x[static_cast<std::size_t>((ch * h + y) * wd + xx)] =
                    static_cast<Real>(img(y, xx, ch)) - static_cast<Real>(mean[static_cast<std::size_t>(ch)]);
    std::vector<std::vector<Real>> out(taps.size());
    for (const auto& layer : net.layers) {
        if (layer.kind == LayerSpec::Kind::Conv) {
            const auto& k = w.at(layer.name + ".kernel").values;
            const auto& b = w.at(layer.name + ".bias").values;
            const Index oc = layer.channels;
            std::vector<Real> y(static_cast<std::size_t>(oc * h * wd));
            for (Index o = 0; o < oc; ++o)
                for (Index yy = 0; yy < h; ++yy)
                    for (Index xx = 0; xx < wd; ++xx) {
                        Real acc = b[static_cast<std::size_t>(o)];
                        for (Index ci = 0; ci < c; ++ci)
                            for (Index ky = 0; ky < 3; ++ky)
                                for (Index kx = 0; kx < 3; ++kx) {
                                    const Index sy = yy + ky - 1, sx = xx + kx - 1;
                                    if (sy < 0 || sx < 0 || sy >= h || sx >= wd)
                                        continue;
                                    acc += static_cast<Real>(k[static_cast<std::size_t>(((o * c + ci) * 3 + ky) * 3 + kx)])
                                         * x[static_cast<std::size_t>((ci * h + sy) * wd + sx)];
                                }
                        y[static_cast<std::size_t>((o * h + yy) * wd + xx)] = acc;
                    }
            x = std::move(y);
            c = oc;
        } else if (layer.kind == LayerSpec::Kind::Rectify) {
            for (auto& v : x)
                v = v > 0 ? v : 0;
        } else {
            const Index nh = h / 2, nw = wd / 2;
            std::vector<Real> y(static_cast<std::size_t>(c * nh * nw));
            for (Index ch = 0; ch < c; ++ch)
                for (Index yy = 0; yy < nh; ++yy)
                    for (Index xx = 0; xx < nw; ++xx) {
                        Real m = x[static_cast<std::size_t>((ch * h + 2 * yy) * wd + 2 * xx)];
                        for (int d = 1; d < 4; ++d)
                            m = std::max(m, x[static_cast<std::size_t>((ch * h + 2 * yy + d / 2) * wd + 2 * xx + d % 2)]);
                        y[static_cast<std::size_t>((ch * nh + yy) * nw + xx)] = m;
                    }
            x = std::move(y);
            h = nh;
            wd = nw;
        }
        for (std::size_t t = 0; t < taps.size(); ++t)
            if (layer.tap == taps[t])
                out[t] = x;
    }
    return out;
}

struct OracleMatch {
    std::vector<Index> index;
    std::vector<Real> score;
};

/// Brute-force evaluation of s_ij = <P_i(lr), P_j(ref)/|P_j(ref)|> over
/// every LR patch i and every reference patch j given by top-left corners,
/// then argmax with the smallest index winning ties.
template <typename Scalar>
OracleMatch brute_force_match(const FeatureMap<Scalar>& lr, const std::vector<const FeatureMap<Scalar>*>& ref_maps,
                              const std::vector<PatchLocation>& ref_locs, Index size)
{
    OracleMatch m;
    for (Index ty = 0; ty + size <= lr.height; ++ty)
        for (Index tx = 0; tx + size <= lr.width; ++tx) {
            Index best = -1;
            Real best_score = -INFINITY;
            for (std::size_t j = 0; j < ref_locs.size(); ++j) {
                const auto& loc = ref_locs[j];
                const auto& ref = *ref_maps[static_cast<std::size_t>(loc.source)];
                Real dot = 0, nrm = 0;
                for (Index c = 0; c < lr.channels; ++c)
                    for (Index dy = 0; dy < size; ++dy)
                        for (Index dx = 0; dx < size; ++dx) {
                            const Real r = ref(c, loc.top + dy, loc.left + dx);
                            dot += static_cast<Real>(lr(c, ty + dy, tx + dx)) * r;
                            nrm += r * r;
                        }
                if (nrm == 0)
                    continue;
                const Real s = dot / std::sqrt(nrm);
                // Mathematically equal scores (e.g. 1x1 single-channel
                // patches) can differ in the last bits; keep the lower index.
                if (best < 0 || s > best_score + 1e-12L * std::max<Real>(1, std::fabs(best_score))) {
                    best_score = s;
                    best = static_cast<Index>(j);
                }
            }
            m.index.push_back(best);
            m.score.push_back(best_score);
        }
    return m;
}

/// Accumulate-then-divide swap assembly with explicit loops.
template <typename Scalar>
std::vector<Real> naive_assembly(const std::vector<PatchLocation>& lr_locs, const std::vector<Index>& choice,
                                 const FeatureMap<Scalar>& ref, const std::vector<PatchLocation>& ref_locs, Index size,
                                 Index c, Index h, Index w, std::vector<int>* coverage = nullptr)
{
    std::vector<Real> acc(static_cast<std::size_t>(c * h * w), 0);
    std::vector<int> cnt(static_cast<std::size_t>(h * w), 0);
    for (std::size_t i = 0; i < lr_locs.size(); ++i) {
        const auto& src = ref_locs[static_cast<std::size_t>(choice[i])];
        for (Index dy = 0; dy < size; ++dy)
            for (Index dx = 0; dx < size; ++dx) {
                const Index y = lr_locs[i].top + dy, x = lr_locs[i].left + dx;
                cnt[static_cast<std::size_t>(y * w + x)] += 1;
                for (Index ch = 0; ch < c; ++ch)
                    acc[static_cast<std::size_t>((ch * h + y) * w + x)] += ref(ch, src.top + dy, src.left + dx);
            }
    }
    for (Index ch = 0; ch < c; ++ch)
        for (Index p = 0; p < h * w; ++p)
            if (cnt[static_cast<std::size_t>(p)] > 0)
                acc[static_cast<std::size_t>(ch * h * w + p)] /= cnt[static_cast<std::size_t>(p)];
    if (coverage)
        *coverage = cnt;
    return acc;
}

template <typename Scalar>
std::vector<std::vector<Real>> naive_gram(const FeatureMap<Scalar>& fm)
{
    std::vector<std::vector<Real>> g(static_cast<std::size_t>(fm.channels), std::vector<Real>(static_cast<std::size_t>(fm.channels), 0));
    for (Index a = 0; a < fm.channels; ++a)
        for (Index b = 0; b < fm.channels; ++b)
            for (Index y = 0; y < fm.height; ++y)
                for (Index x = 0; x < fm.width; ++x)
                    g[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] +=
                        static_cast<Real>(fm(a, y, x)) * static_cast<Real>(fm(b, y, x));
    return g;
}

/// Weighted-Gram texture distance for one layer, straight from the formula.
template <typename Scalar>
Real naive_texture_term(const FeatureMap<Scalar>& f, const FeatureMap<Scalar>& m, const FeatureMap<Scalar>& s)
{
    const Index c = f.channels, h = f.height, w = f.width;
    Real frob = 0;
    for (Index a = 0; a < c; ++a)
        for (Index b = 0; b < c; ++b) {
            Real gf = 0, gm = 0;
            for (Index y = 0; y < h; ++y)
                for (Index x = 0; x < w; ++x) {
                    const Real wt = s(0, y, x);
                    gf += (f(a, y, x) * wt) * (f(b, y, x) * wt);
                    gm += (m(a, y, x) * wt) * (m(b, y, x) * wt);
                }
            frob += (gf - gm) * (gf - gm);
        }
    const Real lambda = 1.0L / (4.0L * c * c * static_cast<Real>(h * w) * static_cast<Real>(h * w));
    return lambda * std::sqrt(frob);
}

/// SSIM with a direct 2-D window loop over luma.
inline Real naive_ssim(const ImageBuffer& a, const ImageBuffer& b)
{
    const int k = 11;
    const Real sigma = 1.5;
    std::vector<Real> g(k * k);
    Real gs = 0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const Real d2 = (i - 5) * (i - 5) + (j - 5) * (j - 5);
            g[static_cast<std::size_t>(i * k + j)] = std::exp(-d2 / (2 * sigma * sigma));
            gs += g[static_cast<std::size_t>(i * k + j)];
        }
    for (auto& v : g)
        v /= gs;
    const auto luma = [](const ImageBuffer& im, Index y, Index x) -> Real {
        if (im.channels == 1)
            return im(y, x, 0);
        return 0.299L * im(y, x, 0) + 0.587L * im(y, x, 1) + 0.114L * im(y, x, 2);
    };
    const Real c1 = 0.0001L, c2 = 0.0009L;
    Real total = 0;
    Index n = 0;
    for (Index y = 0; y + k <= a.height; ++y)
        for (Index x = 0; x + k <= a.width; ++x) {
            Real mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    const Real wt = g[static_cast<std::size_t>(i * k + j)];
                    const Real va = luma(a, y + i, x + j), vb = luma(b, y + i, x + j);
                    mx += wt * va;
                    my += wt * vb;
                }
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    const Real wt = g[static_cast<std::size_t>(i * k + j)];
                    const Real va = luma(a, y + i, x + j) - mx, vb = luma(b, y + i, x + j) - my;
                    sxx += wt * va * va;
                    syy += wt * vb * vb;
                    sxy += wt * va * vb;
                }
            total += ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
            ++n;
        }
    return total / n;
}

inline std::filesystem::path temp_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("ntt_test_" + name);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace ntt::test
