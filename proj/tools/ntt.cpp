// ntt: reference-based super-resolution engine command line.
//
// Exit codes: 0 success, 1 usage, 2 I/O, 3 shape/config.

#include "ntt/config.hpp"
#include "ntt/dataset.hpp"
#include "ntt/feature_swap.hpp"
#include "ntt/image.hpp"
#include "ntt/losses.hpp"
#include "ntt/network.hpp"
#include "ntt/transfer.hpp"
#include "ntt/weights.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace ntt;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitShape = 3;

int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::Decode:
    case ErrorKind::UnsupportedFormat:
    case ErrorKind::BadMagic:
    case ErrorKind::VersionMismatch:
    case ErrorKind::Checksum:
    case ErrorKind::Truncated:
        return kExitIo;
    default:
        return kExitShape;
    }
}

void log(const std::string& msg) { std::cerr << "ntt: " << msg << '\n'; }

/// Flag values that override the config file when given.
struct Overrides {
    fs::path config;
    std::optional<fs::path> lr, hr, weights, gen_weights, pyramid, out;
    std::vector<fs::path> refs;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config, "Run configuration JSON");
    cmd->add_option("--weights", o.weights, "NTTW weight file (feature network)");
    cmd->add_option("--seed", o.seed, "Seed for random initialization");
    cmd->add_option("--threads", o.threads, "Worker thread cap (fallback: NTT_THREADS)");
}

RunConfig resolve(const Overrides& o)
{
    RunConfig cfg;
    if (!o.config.empty())
        cfg = load_run_config(o.config, cfg);
    if (o.lr) cfg.paths.lr = *o.lr;
    if (o.hr) cfg.paths.hr = *o.hr;
    if (o.weights) cfg.paths.weights = *o.weights;
    if (o.gen_weights) cfg.paths.gen_weights = *o.gen_weights;
    if (o.pyramid) cfg.paths.pyramid = *o.pyramid;
    if (o.out) cfg.paths.out = *o.out;
    if (!o.refs.empty()) cfg.paths.refs = o.refs;
    if (o.seed) cfg.seed = *o.seed;
    if (o.threads) {
        cfg.threads = *o.threads;
    } else if (cfg.threads == 0) {
        if (const char* env = std::getenv("NTT_THREADS"))
            cfg.threads = std::atoi(env);
    }
    set_threads(cfg.threads);
    return cfg;
}

void require_file(const fs::path& p, const std::string& what)
{
    require(!p.empty(), ErrorKind::Io, "no " + what + " path given");
    require(fs::is_regular_file(p), ErrorKind::Io, what + " not found: " + p.string());
}

void require_out(const fs::path& p)
{
    require(!p.empty(), ErrorKind::Io, "no output path given (--out)");
}

ImageBuffer load_rgb(const fs::path& p) { return to_rgb(load_image(p)); }

std::vector<ImageBuffer> load_refs(const RunConfig& cfg, const ImageBuffer& lr)
{
    if (cfg.paths.refs.empty()) {
        log("no references given; using the bicubic-upscaled LR image as its own reference");
        return self_reference(lr, cfg.swap.sr_factor);
    }
    std::vector<ImageBuffer> refs;
    for (const auto& p : cfg.paths.refs)
        refs.push_back(load_rgb(p));
    return refs;
}

void check_inputs(const RunConfig& cfg)
{
    require_file(cfg.paths.lr, "LR image");
    for (const auto& r : cfg.paths.refs)
        require_file(r, "reference image");
    require_file(cfg.paths.weights, "weight file");
}

SwappedPyramid<float> run_swap(const RunConfig& cfg, const ImageBuffer& lr, const WeightStore& weights)
{
    const auto refs = load_refs(cfg, lr);
    return swap_pipeline(lr, refs, weights, cfg.network, cfg.swap);
}

WeightStore generator_weights(const RunConfig& cfg, const WeightStore& weights)
{
    if (!cfg.paths.gen_weights.empty()) {
        require_file(cfg.paths.gen_weights, "generator weight file");
        return load_weights(cfg.paths.gen_weights);
    }
    if (weights.contains("gen.entry1.kernel"))
        return weights;
    log("no generator weights; using seeded random initialization (seed " + std::to_string(cfg.seed) + ")");
    std::vector<Index> texture_channels;
    for (const auto& level : cfg.transfer.levels)
        texture_channels.push_back(cfg.network.channels_of(level));
    return init_generator_weights(cfg.transfer, texture_channels, cfg.seed);
}

int cmd_swap(const RunConfig& cfg)
{
    check_inputs(cfg);
    require_out(cfg.paths.out);
    const auto lr = load_rgb(cfg.paths.lr);
    const auto weights = load_weights(cfg.paths.weights);
    const auto pyr = run_swap(cfg, lr, weights);
    store_weights(pyramid_to_store(pyr), cfg.paths.out);
    for (const auto& l : pyr.levels)
        log(l.layer + ": M " + std::to_string(l.swapped.channels) + "x" + std::to_string(l.swapped.height) + "x"
            + std::to_string(l.swapped.width) + ", mean S* " + std::to_string(l.weight.data.mean()));
    return 0;
}

int cmd_sr(const RunConfig& cfg)
{
    require_file(cfg.paths.lr, "LR image");
    require_out(cfg.paths.out);
    const auto lr = load_rgb(cfg.paths.lr);
    SwappedPyramid<float> pyr;
    WeightStore weights;
    if (!cfg.paths.pyramid.empty()) {
        require_file(cfg.paths.pyramid, "pyramid file");
        if (!cfg.paths.weights.empty()) {
            require_file(cfg.paths.weights, "weight file");
            weights = load_weights(cfg.paths.weights);
        }
        pyr = pyramid_from_store<float>(load_weights(cfg.paths.pyramid), cfg.network);
    } else {
        check_inputs(cfg);
        weights = load_weights(cfg.paths.weights);
        pyr = run_swap(cfg, lr, weights);
    }
    const auto gen = generator_weights(cfg, weights);
    const auto sr = transfer_forward(content_base(lr, gen), pyr, gen, cfg.transfer);
    save_image(sr, cfg.paths.out);
    log("wrote " + std::to_string(sr.width) + "x" + std::to_string(sr.height) + " image to " + cfg.paths.out.string());
    return 0;
}

nlohmann::json metric(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

int cmd_eval(const RunConfig& cfg, const fs::path& sr_path)
{
    require_file(sr_path, "SR image");
    require_file(cfg.paths.hr, "HR image");
    require_file(cfg.paths.weights, "weight file");
    const auto sr = load_rgb(sr_path);
    const auto hr = load_rgb(cfg.paths.hr);
    require(same_shape(sr, hr), ErrorKind::Shape,
            "SR is " + std::to_string(sr.width) + "x" + std::to_string(sr.height) + " but HR is " + std::to_string(hr.width)
                + "x" + std::to_string(hr.height));
    const auto weights = load_weights(cfg.paths.weights);

    LossParts parts;
    parts.rec = rec_loss(sr, hr);
    parts.per = perceptual_loss(sr, hr, weights, cfg.network);
    nlohmann::json out;
    out["psnr"] = metric(psnr(sr, hr));
    out["ssim"] = ssim(sr, hr);
    out["rec"] = parts.rec;
    out["per"] = parts.per;
    if (!cfg.paths.pyramid.empty()) {
        require_file(cfg.paths.pyramid, "pyramid file");
        const auto pyr = pyramid_from_store<float>(load_weights(cfg.paths.pyramid), cfg.network);
        parts.tex = texture_loss(extract_pyramid(sr, weights, cfg.network, cfg.texture.layers), pyr, cfg.texture);
        out["tex"] = parts.tex;
    }
    out["total"] = total_objective(parts, cfg.loss_weights);
    if (!cfg.paths.out.empty()) {
        std::ofstream f(cfg.paths.out);
        require(static_cast<bool>(f), ErrorKind::Io, "cannot write " + cfg.paths.out.string());
        f << out.dump(2) << '\n';
    }
    std::cout << out.dump() << '\n';
    return 0;
}

int cmd_pair(const RunConfig& cfg, const fs::path& dir, const std::string& levels, double tau)
{
    require_file(cfg.paths.weights, "weight file");
    require_out(cfg.paths.out);
    PairOptions opt;
    if (!levels.empty())
        opt.levels = parse_levels(levels);
    opt.match.tau = tau;
    opt.seed = cfg.seed;
    const auto weights = load_weights(cfg.paths.weights);
    const auto records = build_pairs(dir, weights, cfg.network, opt);
    std::ofstream out(cfg.paths.out);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + cfg.paths.out.string());
    for (const auto& r : records)
        out << to_json(r).dump() << '\n';
    log("wrote " + std::to_string(records.size()) + " pair records to " + cfg.paths.out.string());
    return 0;
}

int cmd_warp_ref(const RunConfig& cfg, bool zero_motion)
{
    require_file(cfg.paths.hr, "HR image");
    require_out(cfg.paths.out);
    const auto hr = load_image(cfg.paths.hr);
    const auto warped = zero_motion ? warp_image(hr, WarpParams{}) : gen_warped_ref(hr, cfg.seed);
    save_image(warped, cfg.paths.out);
    return 0;
}

int cmd_export_config(const RunConfig& cfg)
{
    const std::string text = to_json(cfg).dump(2);
    if (cfg.paths.out.empty()) {
        std::cout << text << '\n';
        return 0;
    }
    std::ofstream out(cfg.paths.out);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + cfg.paths.out.string());
    out << text << '\n';
    return 0;
}

int cmd_init_weights(const RunConfig& cfg, bool with_generator)
{
    require_out(cfg.paths.out);
    auto store = init_network_weights(cfg.network, cfg.seed);
    if (with_generator) {
        std::vector<Index> texture_channels;
        for (const auto& level : cfg.transfer.levels)
            texture_channels.push_back(cfg.network.channels_of(level));
        for (const auto& [name, t] : init_generator_weights(cfg.transfer, texture_channels, cfg.seed + 1).entries())
            store.insert(name, t);
    }
    store_weights(store, cfg.paths.out);
    log("wrote " + std::to_string(store.size()) + " tensors to " + cfg.paths.out.string());
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Reference-based super-resolution by neural texture transfer"};
    app.require_subcommand(1);

    Overrides o;
    fs::path sr_path, dir;
    std::string levels;
    double tau = 0.9;
    bool zero_motion = false;
    bool with_generator = false;

    auto* swap = app.add_subcommand("swap", "Match LR against references and write the swapped feature pyramid");
    add_common(swap, o);
    swap->add_option("--lr", o.lr, "Low-resolution input image");
    swap->add_option("--refs", o.refs, "Reference images");
    swap->add_option("--out", o.out, "Output NTTW pyramid file");

    auto* sr = app.add_subcommand("sr", "Run swap and texture transfer, writing the SR image");
    add_common(sr, o);
    sr->add_option("--lr", o.lr, "Low-resolution input image");
    sr->add_option("--refs", o.refs, "Reference images (default: bicubic-upscaled LR)");
    sr->add_option("--gen-weights", o.gen_weights, "Generator NTTW weights");
    sr->add_option("--pyramid", o.pyramid, "Precomputed pyramid from 'swap'");
    sr->add_option("--out", o.out, "Output PNG");

    auto* eval = app.add_subcommand("eval", "Compute PSNR/SSIM and losses as JSON");
    add_common(eval, o);
    eval->add_option("--sr", sr_path, "Super-resolved image")->required();
    eval->add_option("--hr", o.hr, "Ground-truth HR image");
    eval->add_option("--pyramid", o.pyramid, "Swapped pyramid for the texture loss");
    eval->add_option("--out", o.out, "Also write the JSON record here");

    auto* pair = app.add_subcommand("pair", "Score source/reference pairs and assign similarity levels");
    add_common(pair, o);
    pair->add_option("--dir", dir, "Image directory")->required();
    pair->add_option("--levels", levels, "Four descending cutoffs, e.g. 900,500,200,0");
    pair->add_option("--tau", tau, "Cosine threshold for a patch match");
    pair->add_option("--out", o.out, "Output pairs.jsonl");

    auto* warp = app.add_subcommand("warp-ref", "Generate a randomly warped reference from an HR image");
    add_common(warp, o);
    warp->add_option("--hr", o.hr, "HR image");
    warp->add_option("--out", o.out, "Output image");
    warp->add_flag("--zero-motion", zero_motion, "Identity warp (debug)");

    auto* exp = app.add_subcommand("export-config", "Print the effective run configuration");
    add_common(exp, o);
    exp->add_option("--out", o.out, "Write to file instead of stdout");

    auto* init = app.add_subcommand("init-weights", "Write seeded random weights in NTTW format");
    add_common(init, o);
    init->add_option("--out", o.out, "Output NTTW file");
    init->add_flag("--with-generator", with_generator, "Also include generator (gen.*) tensors");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        const RunConfig cfg = resolve(o);
        if (*swap) return cmd_swap(cfg);
        if (*sr) return cmd_sr(cfg);
        if (*eval) return cmd_eval(cfg, sr_path);
        if (*pair) return cmd_pair(cfg, dir, levels, tau);
        if (*warp) return cmd_warp_ref(cfg, zero_motion);
        if (*exp) return cmd_export_config(cfg);
        if (*init) return cmd_init_weights(cfg, with_generator);
    } catch (const Error& e) {
        log(std::string(to_string(e.kind())) + ": " + e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        log(e.what());
        return kExitIo;
    }
    return kExitUsage;
}
