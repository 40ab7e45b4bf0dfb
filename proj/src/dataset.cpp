#include "ntt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace ntt {

void SimilarityLevels::validate() const
{
    for (std::size_t i = 1; i < cutoffs.size(); ++i)
        require(cutoffs[i] < cutoffs[i - 1], ErrorKind::Config, "similarity cutoffs must be strictly decreasing");
    require(cutoffs.back() >= 0, ErrorKind::Config, "L4 cutoff must be non-negative");
}

int SimilarityLevels::level_of(Index count) const
{
    for (std::size_t i = 0; i < cutoffs.size(); ++i)
        if (count >= cutoffs[i])
            return static_cast<int>(i) + 1;
    return 4;
}

SimilarityLevels parse_levels(const std::string& csv)
{
    SimilarityLevels levels;
    std::stringstream ss(csv);
    std::string item;
    std::size_t i = 0;
    while (std::getline(ss, item, ',')) {
        require(i < 4, ErrorKind::Config, "expected four similarity cutoffs");
        try {
            levels.cutoffs[i++] = std::stoll(item);
        } catch (const std::exception&) {
            fail(ErrorKind::Config, "bad similarity cutoff '" + item + "'");
        }
    }
    require(i == 4, ErrorKind::Config, "expected four similarity cutoffs");
    levels.validate();
    return levels;
}

nlohmann::json to_json(const PairRecord& r)
{
    return {{"source", r.source},
            {"reference", r.reference},
            {"match_count", r.match_count},
            {"level", "L" + std::to_string(r.level)},
            {"crop", {{"top", r.crop.top}, {"left", r.crop.left}, {"size", r.crop.size}}}};
}

PairRecord pair_record_from_json(const nlohmann::json& j)
{
    PairRecord r;
    r.source = j.at("source").get<std::string>();
    r.reference = j.at("reference").get<std::string>();
    r.match_count = j.at("match_count").get<Index>();
    const auto level = j.at("level").get<std::string>();
    require(level.size() == 2 && level[0] == 'L' && level[1] >= '1' && level[1] <= '4', ErrorKind::Config,
            "bad level label '" + level + "'");
    r.level = level[1] - '0';
    const auto& crop = j.at("crop");
    r.crop = {crop.at("top").get<Index>(), crop.at("left").get<Index>(), crop.at("size").get<Index>()};
    return r;
}

Index directional_match_count(const FeatureMapf& a, const FeatureMapf& b, Index patch_size, double tau)
{
    const auto grid = sample_patches(b, patch_size, 1);
    CorrespondenceMap<float> corr;
    try {
        corr = match_patches(a, grid, 1);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Degenerate)
            return 0;
        throw;
    }
    const Matrix<float> cols = detail::unfold_patches(a, corr.lr);
    Index count = 0;
    for (Index i = 0; i < corr.count(); ++i) {
        const double norm = cols.col(i).template cast<double>().norm();
        if (norm > 0 && static_cast<double>(corr.best_score(i)) / norm > tau)
            ++count;
    }
    return count;
}

Index match_count(const ImageBuffer& a, const ImageBuffer& b, const WeightStore& weights, const NetworkConfig& net,
                  const MatchCountConfig& cfg)
{
    const auto fa = extract_pyramid(a, weights, net, {cfg.layer});
    const auto fb = extract_pyramid(b, weights, net, {cfg.layer});
    for (const auto* f : {&fa[0], &fb[0]})
        require(f->height >= cfg.patch_size && f->width >= cfg.patch_size, ErrorKind::InvalidArgument,
                "image too small for one patch at " + cfg.layer);
    return std::min(directional_match_count(fa[0], fb[0], cfg.patch_size, cfg.tau),
                    directional_match_count(fb[0], fa[0], cfg.patch_size, cfg.tau));
}

std::vector<PairRecord> assign_levels(std::vector<PairRecord> pool, const SimilarityLevels& levels)
{
    levels.validate();
    for (auto& r : pool)
        r.level = levels.level_of(r.match_count);
    return pool;
}

WarpParams draw_warp_params(Index height, Index width, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    WarpParams p;
    p.tx = uniform(static_cast<double>(width) / 4.0, static_cast<double>(width) / 2.0);
    p.ty = uniform(static_cast<double>(height) / 4.0, static_cast<double>(height) / 2.0);
    p.degrees = uniform(10.0, 30.0);
    p.scale = uniform(1.2, 2.0);
    return p;
}

ImageBuffer warp_image(const ImageBuffer& img, const WarpParams& p)
{
    require(p.scale > 0, ErrorKind::InvalidArgument, "warp scale must be positive");
    const double rad = p.degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(rad);
    const double sn = std::sin(rad);
    const double cy = 0.5 * static_cast<double>(img.height - 1);
    const double cx = 0.5 * static_cast<double>(img.width - 1);

    ImageBuffer out(img.height, img.width, img.channels);
    Index inside = 0;
    for (Index r = 0; r < img.height; ++r) {
        for (Index c = 0; c < img.width; ++c) {
            const double dx = static_cast<double>(c) - cx - p.tx;
            const double dy = static_cast<double>(r) - cy - p.ty;
            const double sx = cx + (cs * dx - sn * dy) / p.scale;
            const double sy = cy + (sn * dx + cs * dy) / p.scale;
            if (sx >= 0 && sy >= 0 && sx <= static_cast<double>(img.width - 1) && sy <= static_cast<double>(img.height - 1))
                ++inside;
            bilinear_sample(img, sy, sx, out.data.row(r * img.width + c));
        }
    }
    require(inside * 10 >= img.height * img.width, ErrorKind::Degenerate, "warp leaves too little valid interior");
    return out;
}

ImageBuffer gen_warped_ref(const ImageBuffer& hr, std::uint64_t seed)
{
    require(hr.height >= 160 && hr.width >= 160, ErrorKind::InvalidArgument, "warped reference needs at least 160x160 input");
    return warp_image(hr, draw_warp_params(hr.height, hr.width, seed));
}

namespace {

bool is_image_file(const std::filesystem::path& p)
{
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

struct Group {
    std::filesystem::path source;
    std::vector<std::filesystem::path> refs;
};

} // namespace

std::vector<PairRecord> build_pairs(const std::filesystem::path& dir, const WeightStore& weights, const NetworkConfig& net,
                                    const PairOptions& opt)
{
    opt.levels.validate();
    require(std::filesystem::is_directory(dir), ErrorKind::Io, "not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && is_image_file(entry.path()))
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::map<std::string, Group> groups;
    for (const auto& f : files) {
        const std::string stem = f.stem().string();
        const auto us = stem.rfind('_');
        if (us == std::string::npos)
            continue;
        auto& g = groups[stem.substr(0, us)];
        if (stem.substr(us + 1) == "0")
            g.source = f;
        else
            g.refs.push_back(f);
    }
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> pairs;
    for (const auto& [stem, g] : groups)
        if (!g.source.empty())
            for (const auto& r : g.refs)
                pairs.emplace_back(g.source, r);
    if (pairs.empty())
        for (const auto& a : files)
            for (const auto& b : files)
                if (a != b)
                    pairs.emplace_back(a, b);

    std::mt19937_64 rng(opt.seed);
    std::vector<PairRecord> records;
    for (const auto& [src_path, ref_path] : pairs) {
        const auto src = to_rgb(load_image(src_path));
        if (src.height < opt.crop_size || src.width < opt.crop_size)
            continue;
        const auto ref = to_rgb(load_image(ref_path));
        PairRecord rec;
        rec.source = src_path.string();
        rec.reference = ref_path.string();
        rec.crop.size = opt.crop_size;
        rec.crop.top = std::uniform_int_distribution<Index>(0, src.height - opt.crop_size)(rng);
        rec.crop.left = std::uniform_int_distribution<Index>(0, src.width - opt.crop_size)(rng);
        const auto patch = crop(src, rec.crop.top, rec.crop.left, opt.crop_size, opt.crop_size);
        rec.match_count = match_count(patch, ref, weights, net, opt.match);
        records.push_back(std::move(rec));
    }
    return assign_levels(std::move(records), opt.levels);
}

} // namespace ntt
