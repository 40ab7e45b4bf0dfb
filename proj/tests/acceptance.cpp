// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "support.hpp"

#include "ntt/dataset.hpp"
#include "ntt/feature_swap.hpp"
#include "ntt/losses.hpp"
#include "ntt/transfer.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace ntt;
using ntt::test::Real;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail)
{
    std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::shared_ptr<const FeatureMap<double>> share(FeatureMap<double> fm)
{
    return std::make_shared<const FeatureMap<double>>(std::move(fm));
}

void matcher_oracle()
{
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<Index> dim(4, 16), chans(1, 6), psize(1, 3), npatch(1, 50);
    bool exact = true;
    double worst = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const Index c = chans(rng), size = psize(rng);
        const auto lr = ntt::test::random_map<double>(rng, c, dim(rng), dim(rng), -1, 1);
        const auto r0 = ntt::test::random_map<double>(rng, c, dim(rng), dim(rng), -1, 1);
        const auto r1 = ntt::test::random_map<double>(rng, c, dim(rng), dim(rng), -1, 1);
        PatchLayout layout{size, {}};
        const Index n = npatch(rng);
        for (Index j = 0; j < n; ++j) {
            const auto& r = j % 2 ? r1 : r0;
            layout.locations.push_back({j % 2, std::uniform_int_distribution<Index>(0, r.height - size)(rng),
                                        std::uniform_int_distribution<Index>(0, r.width - size)(rng)});
        }
        const PatchGrid<double> grid({share(r0), share(r1)}, layout);
        const auto oracle = ntt::test::brute_force_match<double>(lr, {&r0, &r1}, layout.locations, size);
        const auto dense = best_match(correlation_maps(lr, grid));
        const auto streamed = match_patches(lr, grid, 1, 7);
        for (std::size_t i = 0; i < oracle.index.size(); ++i) {
            exact = exact && dense.best_index[i] == oracle.index[i] && streamed.best_index[i] == oracle.index[i];
            worst = std::max(worst, std::fabs(dense.best_score(static_cast<Index>(i)) - static_cast<double>(oracle.score[i])));
            worst = std::max(worst, std::fabs(streamed.best_score(static_cast<Index>(i)) - static_cast<double>(oracle.score[i])));
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report("matcher-oracle", exact && worst <= 1e-5 && secs < 10.0,
           std::string("200 trials, indices ") + (exact ? "exact" : "DIFFER") + fmt(", max score err %.2e", worst)
               + fmt(", %.2f s", secs));
}

void ref_normalization_invariance()
{
    std::mt19937_64 rng(1002);
    double worst = 0;
    bool argmax_same = true;
    for (int trial = 0; trial < 50; ++trial) {
        const Index c = 1 + trial % 4, size = 1 + trial % 3;
        const auto lr = ntt::test::random_map<double>(rng, c, 10, 9, -1, 1);
        std::vector<FeatureMap<double>> patches;
        for (int j = 0; j < 12; ++j)
            patches.push_back(ntt::test::random_map<double>(rng, c, size, size, -1, 1));
        const auto grid_of = [&](const std::vector<FeatureMap<double>>& ps) {
            std::vector<std::shared_ptr<const FeatureMap<double>>> src;
            for (const auto& p : ps)
                src.push_back(share(p));
            return sample_patches(src, size, 1);
        };
        const auto base = correlation_maps(lr, grid_of(patches));
        const auto base_best = best_match(base).best_index;
        for (double lambda : {0.1, 1.0, 10.0}) {
            for (std::size_t j = 0; j < patches.size(); ++j) {
                auto scaled = patches;
                scaled[j].data *= lambda;
                const auto vol = correlation_maps(lr, grid_of(scaled));
                worst = std::max(worst, (vol.scores.row(static_cast<Index>(j)) - base.scores.row(static_cast<Index>(j)))
                                            .cwiseAbs()
                                            .maxCoeff());
                argmax_same = argmax_same && best_match(vol).best_index == base_best;
            }
        }
    }
    report("ref-normalization", worst <= 1e-5 && argmax_same,
           fmt("50 trials x lambda {0.1,1,10}, max map change %.2e", worst) + (argmax_same ? ", argmax unchanged" : ", argmax CHANGED"));
}

void assembly_oracle()
{
    std::mt19937_64 rng(1003);
    double worst = 0;
    bool coverage_ok = true;
    int full_overlap = 0, no_overlap = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index c = 1 + trial % 3, size = 1 + trial % 4;
        // Alternate stride 1, stride = size, then anything in between.
        const Index stride = trial % 3 == 0 ? 1 : trial % 3 == 1 ? size : 1 + trial % size;
        full_overlap += stride == 1;
        no_overlap += stride == size;
        const Index h = size + 4 + trial % 5, w = size + 3 + trial % 6;
        const auto ref = ntt::test::random_map<double>(rng, c, size + 5, size + 4, -1, 1);
        const auto grid = sample_patches(ref, size, 1);
        CorrespondenceMap<double> corr;
        corr.lr = PatchLayout::dense({h, w}, size, stride);
        corr.ref = grid.layout();
        std::uniform_int_distribution<Index> pick(0, grid.count() - 1);
        for (Index i = 0; i < corr.lr.count(); ++i)
            corr.best_index.push_back(pick(rng));
        corr.best_score = Vector<double>::Zero(corr.lr.count());
        const auto out = assemble_swap_map(corr, grid, {c, h, w});
        std::vector<int> cov;
        const auto oracle = ntt::test::naive_assembly(corr.lr.locations, corr.best_index, ref, grid.layout().locations, size, c, h, w, &cov);
        for (Index i = 0; i < out.map.data.size(); ++i) {
            const Index ch = i / (h * w), p = i % (h * w);
            worst = std::max(worst, std::fabs(out.map.data(ch, p) - static_cast<double>(oracle[static_cast<std::size_t>(i)])));
        }
        for (Index p = 0; p < h * w; ++p)
            coverage_ok = coverage_ok && out.coverage(p / w, p % w) == cov[static_cast<std::size_t>(p)];
    }
    report("assembly-averaging", worst <= 1e-6 && coverage_ok && full_overlap > 0 && no_overlap > 0,
           fmt("100 trials, max err %.2e", worst) + ", stride-1 " + std::to_string(full_overlap) + ", stride=size "
               + std::to_string(no_overlap) + (coverage_ok ? ", coverage exact" : ", coverage DIFFERS"));
}

void conv_and_subpixel()
{
    std::mt19937_64 rng(1004);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    double worst = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const auto in = ntt::test::random_map<float>(rng, 3, 6 + trial % 3, 5 + trial % 4, -1, 1);
        for (std::uint32_t k : {1u, 3u, 5u}) {
            std::vector<float> kv(4 * 3 * k * k), bv(4);
            for (auto& v : kv)
                v = u(rng);
            for (auto& v : bv)
                v = u(rng);
            const auto out = conv2d_forward(in, Tensor({4, 3, k, k}, kv), Tensor({4}, bv));
            const auto ref = ntt::test::naive_conv(in, kv, bv, 4, k);
            for (Index i = 0; i < out.data.size(); ++i)
                worst = std::max(worst, static_cast<double>(std::fabs(out.data.data()[i] - ref[static_cast<std::size_t>(i)])));
        }
    }

    bool bijection = true;
    for (int r : {2, 3}) {
        auto in = FeatureMap<double>(5 * r * r, 4, 6);
        for (Index i = 0; i < in.data.size(); ++i)
            in.data.data()[i] = static_cast<double>(i);
        const auto out = subpixel_upscale(in, r);
        std::vector<int> hits(static_cast<std::size_t>(in.data.size()), 0);
        for (Index i = 0; i < out.data.size(); ++i)
            hits[static_cast<std::size_t>(out.data.data()[i])] += 1;
        for (int h : hits)
            bijection = bijection && h == 1;
        for (Index c = 0; c < 5; ++c)
            for (Index y = 0; y < 4 * r; ++y)
                for (Index x = 0; x < 6 * r; ++x)
                    bijection = bijection && out(c, y, x) == in(c * r * r + (y % r) * r + x % r, y / r, x / r);
    }

    const auto net = NetworkConfig::vgg19("relu3_1");
    const auto maps = extract_pyramid(ntt::test::synthetic_image(4, 32, 32), init_network_weights(net, 4), net,
                                      {"relu1_1", "relu2_1", "relu3_1"});
    const bool chain = maps[0].stride == 1 && maps[1].stride == 2 && maps[2].stride == 4 && maps[0].extent() == Extent{32, 32}
                    && maps[1].extent() == Extent{16, 16} && maps[2].extent() == Extent{8, 8};
    report("conv-subpixel-pyramid", worst <= 1e-5 && bijection && chain,
           fmt("conv max err %.2e", worst) + (bijection ? ", subpixel bijective" : ", subpixel BROKEN")
               + (chain ? ", strides 1/2/4 on 32x32" : ", stride chain WRONG"));
}

void loss_suite()
{
    std::mt19937_64 rng(1005);
    const std::vector<std::string> layers = {"relu1_1", "relu2_1", "relu3_1"};
    std::vector<FeatureMap<double>> feats;
    SwappedPyramid<double> pyr;
    const Index shapes[3][3] = {{4, 12, 12}, {6, 6, 6}, {8, 3, 3}};
    for (std::size_t l = 0; l < 3; ++l) {
        feats.push_back(ntt::test::random_map<double>(rng, shapes[l][0], shapes[l][1], shapes[l][2]));
        SwapLevel<double> level;
        level.layer = layers[l];
        level.swapped = ntt::test::random_map<double>(rng, shapes[l][0], shapes[l][1], shapes[l][2]);
        level.weight = ntt::test::random_map<double>(rng, 1, shapes[l][1], shapes[l][2]);
        pyr.levels.push_back(level);
    }
    const TextureLossConfig cfg{layers};
    const double t = texture_loss(feats, pyr, cfg);

    std::vector<FeatureMap<double>> same;
    for (const auto& l : pyr.levels)
        same.push_back(l.swapped);
    auto zero_s = pyr;
    for (auto& l : zero_s.levels)
        l.weight.data.setZero();
    const bool zeros = texture_loss(same, pyr, cfg) == 0.0 && texture_loss(feats, zero_s, cfg) == 0.0;

    double alpha_err = 0;
    for (double alpha : {0.05, 0.3, 0.7, 2.0}) {
        auto scaled = pyr;
        for (auto& l : scaled.levels)
            l.weight.data *= alpha;
        alpha_err = std::max(alpha_err, std::fabs(texture_loss(feats, scaled, cfg) - alpha * alpha * t) / (alpha * alpha * t));
    }

    double min_eig = INFINITY;
    bool symmetric = true;
    for (int trial = 0; trial < 50; ++trial) {
        const auto fm = ntt::test::random_map<double>(rng, 2 + trial % 9, 1 + trial % 4, 1 + trial % 3, -1, 1);
        const auto g = gram_matrix(fm);
        symmetric = symmetric && g == g.transpose();
        min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Matrix<double>>(g).eigenvalues().minCoeff());
    }

    auto hr = ntt::test::random_image<double>(rng, 24, 24);
    hr.data *= 0.9;
    auto off = hr;
    off.data.array() += 1.0 / 255.0;
    const double p = psnr(off, hr);
    const auto img = ntt::test::synthetic_image(8, 48, 48);
    const double s = ssim(img, img);

    const bool ok = zeros && alpha_err <= 1e-6 && symmetric && min_eig >= -1e-8 && std::fabs(p - 48.131) <= 0.001 && s == 1.0;
    report("loss-suite", ok,
           std::string(zeros ? "zero cases exact" : "zero cases NONZERO") + fmt(", alpha^2 rel err %.2e", alpha_err)
               + fmt(", min gram eig %.2e", min_eig) + (symmetric ? "" : " (ASYMMETRIC)") + fmt(", psnr %.4f dB", p)
               + fmt(", ssim(x,x) %.17g", s));
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args)
{
    const std::string cmd = std::string(NTT_CLI_PATH) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void end_to_end()
{
    const auto dir = ntt::test::temp_dir("acceptance");
    const auto hr = ntt::test::synthetic_image(21, 160, 160);
    save_image(bicubic_resample(hr, 0.25), dir / "lr.png");
    save_image(gen_warped_ref(hr, 21), dir / "ref.png");
    const std::string w = (dir / "vgg.nttw").string();
    const std::string lr = " --lr " + (dir / "lr.png").string() + " --weights " + w + " --seed 9";
    const std::string refs = " --refs " + (dir / "ref.png").string();

    std::string detail;
    bool ok = run("init-weights --seed 3 --out " + w) == 0;
    ok = ok && run("sr" + lr + refs + " --out " + (dir / "a.png").string()) == 0;
    ok = ok && run("sr" + lr + refs + " --out " + (dir / "b.png").string()) == 0;
    bool shape = false, identical = false, sisr = false;
    if (ok) {
        const auto a = load_image(dir / "a.png");
        shape = a.height == 160 && a.width == 160;
        identical = slurp(dir / "a.png") == slurp(dir / "b.png");
        sisr = run("sr" + lr + " --out " + (dir / "s.png").string()) == 0 && load_image(dir / "s.png").height == 160;
    }
    detail = std::string(ok ? "" : "sr run FAILED, ") + (shape ? "160x160 png" : "wrong shape") +
             (identical ? ", byte-identical reruns" : ", reruns DIFFER") + (sisr ? ", SISR fallback ok" : ", SISR fallback FAILED");
    report("sr-end-to-end", ok && shape && identical && sisr, detail);
}

void adaptivity()
{
    const auto net = NetworkConfig::vgg19("relu3_1");
    const auto weights = init_network_weights(net, 5);
    SwapConfig cfg;
    int wins = 0;
    double warped_sum = 0, noise_sum = 0;
    for (std::uint64_t t = 0; t < 20; ++t) {
        const auto hr = ntt::test::synthetic_image(300 + t, 160, 160);
        const auto lr = bicubic_resample(hr, 0.25);
        std::mt19937_64 rng(700 + t);
        const auto noise = ntt::test::random_image<float>(rng, 160, 160);
        const auto mean_s = [&](const ImageBuffer& ref) {
            return static_cast<double>(swap_pipeline(lr, {ref}, weights, net, cfg).level("relu3_1").weight.data.mean());
        };
        const double warped = mean_s(gen_warped_ref(hr, 500 + t));
        const double noisy = mean_s(noise);
        wins += warped > noisy;
        warped_sum += warped;
        noise_sum += noisy;
    }
    report("adaptivity-direction", wins >= 18,
           std::to_string(wins) + "/20 warped-ref wins" + fmt(", mean S3 warped %.4g", warped_sum / 20)
               + fmt(" vs noise %.4g", noise_sum / 20));
}

} // namespace

int main()
{
    matcher_oracle();
    ref_normalization_invariance();
    assembly_oracle();
    conv_and_subpixel();
    loss_suite();
    end_to_end();
    adaptivity();
    std::printf("%s: %d failing\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
