#pragma once

#include "ntt/error.hpp"
#include "ntt/image.hpp"
#include "ntt/network.hpp"
#include "ntt/types.hpp"
#include "ntt/weights.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace ntt {

// ---------------------------------------------------------------------------
// Patch geometry

/// Square patch footprint on one source map. `source` identifies the map
/// (reference variant) the patch was cut from.
struct PatchLocation {
    Index source = 0;
    Index top = 0;
    Index left = 0;

    friend bool operator==(const PatchLocation&, const PatchLocation&) = default;
};

/// Ordered patch footprints of one size. Patch index j is the position in
/// `locations`; centers are top-left + floor((size - 1) / 2), which keeps
/// centers and footprints consistent under integer scaling.
struct PatchLayout {
    Index size = 0;
    std::vector<PatchLocation> locations;

    Index count() const { return static_cast<Index>(locations.size()); }
    Index center_x(Index i) const { return locations[static_cast<std::size_t>(i)].left + (size - 1) / 2; }
    Index center_y(Index i) const { return locations[static_cast<std::size_t>(i)].top + (size - 1) / 2; }

    /// Footprints scaled by an integer factor (top-left and size).
    PatchLayout scaled(Index factor) const
    {
        PatchLayout out{size * factor, locations};
        for (auto& loc : out.locations) {
            loc.top *= factor;
            loc.left *= factor;
        }
        return out;
    }

    /// Row-major grid of fully interior patches.
    static PatchLayout dense(Extent extent, Index size, Index stride, Index source = 0)
    {
        require(size >= 1 && size <= extent.height && size <= extent.width, ErrorKind::InvalidArgument,
                "patch size " + std::to_string(size) + " does not fit a " + std::to_string(extent.height) + "x"
                    + std::to_string(extent.width) + " map");
        require(stride >= 1, ErrorKind::InvalidArgument, "patch stride must be at least 1");
        PatchLayout layout{size, {}};
        for (Index top = 0; top + size <= extent.height; top += stride)
            for (Index left = 0; left + size <= extent.width; left += stride)
                layout.locations.push_back({source, top, left});
        return layout;
    }

    friend bool operator==(const PatchLayout&, const PatchLayout&) = default;
};

/// Patches over one or more source feature maps. Kernels are verbatim crops
/// of the sources, flattened channel-major as (c, dy, dx), and are read on
/// demand so large grids do not have to be materialized.
template <typename Scalar>
class PatchGrid {
public:
    PatchGrid() = default;

    PatchGrid(std::vector<std::shared_ptr<const FeatureMap<Scalar>>> sources, PatchLayout layout, Index stride = 1)
        : sources_(std::move(sources)), layout_(std::move(layout)), stride_(stride)
    {
        require(!sources_.empty(), ErrorKind::InvalidArgument, "patch grid needs at least one source map");
        channels_ = sources_.front()->channels;
        for (const auto& s : sources_)
            require(s->channels == channels_, ErrorKind::Shape, "patch grid sources differ in channel count");
        for (const auto& loc : layout_.locations) {
            require(loc.source >= 0 && loc.source < static_cast<Index>(sources_.size()), ErrorKind::InvalidArgument,
                    "patch source out of range");
            const auto& src = *sources_[static_cast<std::size_t>(loc.source)];
            require(loc.top >= 0 && loc.left >= 0 && loc.top + layout_.size <= src.height
                        && loc.left + layout_.size <= src.width,
                    ErrorKind::Shape, "patch footprint outside its source map");
        }
    }

    Index count() const { return layout_.count(); }
    Index size() const { return layout_.size; }
    Index stride() const { return stride_; }
    Index channels() const { return channels_; }
    Index dimension() const { return channels_ * layout_.size * layout_.size; }
    const std::string& layer() const { return sources_.front()->layer; }
    const PatchLayout& layout() const { return layout_; }
    const std::vector<std::shared_ptr<const FeatureMap<Scalar>>>& sources() const { return sources_; }

    /// Writes patch j into `out` (length dimension()).
    template <typename Out>
    void copy_patch(Index j, Out&& out) const
    {
        const auto& loc = layout_.locations[static_cast<std::size_t>(j)];
        const auto& src = *sources_[static_cast<std::size_t>(loc.source)];
        const Index s = layout_.size;
        Index k = 0;
        for (Index c = 0; c < channels_; ++c)
            for (Index dy = 0; dy < s; ++dy)
                for (Index dx = 0; dx < s; ++dx)
                    out(k++) = src(c, loc.top + dy, loc.left + dx);
    }

    Vector<Scalar> patch(Index j) const
    {
        Vector<Scalar> v(dimension());
        copy_patch(j, v);
        return v;
    }

    /// Rows [first, first + n) of the N x D kernel matrix.
    Matrix<Scalar> kernels(Index first, Index n) const
    {
        Matrix<Scalar> k(n, dimension());
        for (Index i = 0; i < n; ++i)
            copy_patch(first + i, k.row(i).transpose());
        return k;
    }

    Matrix<Scalar> kernels() const { return kernels(0, count()); }

private:
    std::vector<std::shared_ptr<const FeatureMap<Scalar>>> sources_;
    PatchLayout layout_;
    Index stride_ = 1;
    Index channels_ = 0;
};

/// Dense row-major patches of one map.
template <typename Scalar>
PatchGrid<Scalar> sample_patches(const FeatureMap<Scalar>& fm, Index size, Index stride)
{
    auto layout = PatchLayout::dense(fm.extent(), size, stride);
    return PatchGrid<Scalar>({std::make_shared<const FeatureMap<Scalar>>(fm)}, std::move(layout), stride);
}

/// Dense patches of several maps, concatenated in source order.
template <typename Scalar>
PatchGrid<Scalar> sample_patches(std::vector<std::shared_ptr<const FeatureMap<Scalar>>> maps, Index size, Index stride)
{
    PatchLayout layout{size, {}};
    for (std::size_t s = 0; s < maps.size(); ++s) {
        const auto part = PatchLayout::dense(maps[s]->extent(), size, stride, static_cast<Index>(s));
        layout.locations.insert(layout.locations.end(), part.locations.begin(), part.locations.end());
    }
    return PatchGrid<Scalar>(std::move(maps), std::move(layout), stride);
}

// ---------------------------------------------------------------------------
// Matching

/// One similarity map S_j per reference patch, evaluated at every LR patch
/// position: scores(j, i) for LR patch i (row-major over the LR grid).
template <typename Scalar>
struct ScoreVolume {
    Index grid_rows = 0;
    Index grid_cols = 0;
    PatchLayout lr;
    PatchLayout ref;
    /// Stride of the feature level relative to the source image.
    int level_stride = 1;
    Matrix<Scalar> scores;
};

/// Per LR patch: best reference patch j* and its score.
template <typename Scalar>
struct CorrespondenceMap {
    Index grid_rows = 0;
    Index grid_cols = 0;
    PatchLayout lr;
    PatchLayout ref;
    int level_stride = 1;
    std::vector<Index> best_index;
    Vector<Scalar> best_score;

    Index count() const { return static_cast<Index>(best_index.size()); }
};

template <typename Scalar>
constexpr Scalar degenerate_score()
{
    return -std::numeric_limits<Scalar>::infinity();
}

namespace detail {

/// LR patch unfolding as a D x N matrix, one column per LR patch.
template <typename Scalar>
Matrix<Scalar> unfold_patches(const FeatureMap<Scalar>& fm, const PatchLayout& layout)
{
    const Index s = layout.size;
    Matrix<Scalar> cols(fm.channels * s * s, layout.count());
    for (Index i = 0; i < layout.count(); ++i) {
        const auto& loc = layout.locations[static_cast<std::size_t>(i)];
        Index k = 0;
        for (Index c = 0; c < fm.channels; ++c)
            for (Index dy = 0; dy < s; ++dy)
                for (Index dx = 0; dx < s; ++dx)
                    cols(k++, i) = fm(c, loc.top + dy, loc.left + dx);
    }
    return cols;
}

/// Unit-normalizes each row; zero-norm rows are flagged in `degenerate`.
template <typename Scalar>
void normalize_rows(Matrix<Scalar>& k, std::vector<char>& degenerate)
{
    degenerate.assign(static_cast<std::size_t>(k.rows()), 0);
    for (Index j = 0; j < k.rows(); ++j) {
        const Scalar norm = k.row(j).norm();
        if (norm > Scalar(0))
            k.row(j) /= norm;
        else
            degenerate[static_cast<std::size_t>(j)] = 1;
    }
}

template <typename Scalar>
void check_lr_grid(const FeatureMap<Scalar>& lr_fm, const PatchGrid<Scalar>& ref_patches)
{
    require(lr_fm.channels == ref_patches.channels(), ErrorKind::Shape,
            "LR map has " + std::to_string(lr_fm.channels) + " channels, reference patches have "
                + std::to_string(ref_patches.channels()));
    require(ref_patches.count() > 0, ErrorKind::InvalidArgument, "no reference patches");
}

inline Index grid_extent(Index size, Index patch, Index stride) { return (size - patch) / stride + 1; }

} // namespace detail

/// Dense normalized correlation: S_j(i) = <P_i(lr), P_j / |P_j|>. The LR side
/// is not normalized. Zero-norm reference patches score -inf everywhere.
template <typename Scalar>
ScoreVolume<Scalar> correlation_maps(const FeatureMap<Scalar>& lr_fm, const PatchGrid<Scalar>& ref_patches, Index lr_stride = 1)
{
    detail::check_lr_grid(lr_fm, ref_patches);
    ScoreVolume<Scalar> vol;
    vol.lr = PatchLayout::dense(lr_fm.extent(), ref_patches.size(), lr_stride);
    vol.ref = ref_patches.layout();
    vol.grid_rows = detail::grid_extent(lr_fm.height, ref_patches.size(), lr_stride);
    vol.grid_cols = detail::grid_extent(lr_fm.width, ref_patches.size(), lr_stride);
    vol.level_stride = lr_fm.stride;

    Matrix<Scalar> kernels = ref_patches.kernels();
    std::vector<char> degenerate;
    detail::normalize_rows(kernels, degenerate);
    vol.scores.noalias() = kernels * detail::unfold_patches(lr_fm, vol.lr);
    for (Index j = 0; j < kernels.rows(); ++j)
        if (degenerate[static_cast<std::size_t>(j)])
            vol.scores.row(j).setConstant(degenerate_score<Scalar>());
    return vol;
}

namespace detail {

/// s beats best only by more than accumulated rounding, so candidates that
/// are equal up to GEMM blocking keep the lower index.
template <typename Scalar>
bool beats(Scalar s, Scalar best)
{
    if (best == degenerate_score<Scalar>())
        return s > best;
    return s - best > Scalar(64) * std::numeric_limits<Scalar>::epsilon() * std::max(std::abs(s), std::abs(best));
}

} // namespace detail

/// Per-column argmax; ties go to the smallest reference index.
template <typename Scalar>
CorrespondenceMap<Scalar> best_match(const ScoreVolume<Scalar>& vol)
{
    CorrespondenceMap<Scalar> corr;
    corr.grid_rows = vol.grid_rows;
    corr.grid_cols = vol.grid_cols;
    corr.lr = vol.lr;
    corr.ref = vol.ref;
    corr.level_stride = vol.level_stride;
    const Index n = vol.scores.cols();
    corr.best_index.assign(static_cast<std::size_t>(n), 0);
    corr.best_score.resize(n);
    for (Index i = 0; i < n; ++i) {
        Index best = -1;
        Scalar best_score = degenerate_score<Scalar>();
        for (Index j = 0; j < vol.scores.rows(); ++j) {
            const Scalar s = vol.scores(j, i);
            if (detail::beats(s, best_score)) {
                best_score = s;
                best = j;
            }
        }
        require(best >= 0, ErrorKind::Degenerate, "every reference patch is degenerate at LR patch " + std::to_string(i));
        corr.best_index[static_cast<std::size_t>(i)] = best;
        corr.best_score(i) = best_score;
    }
    return corr;
}

/// Streaming equivalent of best_match(correlation_maps(...)): processes the
/// reference patches in blocks so the full score volume is never stored.
/// Blocks are visited in index order with the same comparison, so the
/// smallest-index tie rule is preserved.
template <typename Scalar>
CorrespondenceMap<Scalar> match_patches(const FeatureMap<Scalar>& lr_fm, const PatchGrid<Scalar>& ref_patches,
                                        Index lr_stride = 1, Index block = 2048)
{
    detail::check_lr_grid(lr_fm, ref_patches);
    CorrespondenceMap<Scalar> corr;
    corr.lr = PatchLayout::dense(lr_fm.extent(), ref_patches.size(), lr_stride);
    corr.ref = ref_patches.layout();
    corr.grid_rows = detail::grid_extent(lr_fm.height, ref_patches.size(), lr_stride);
    corr.grid_cols = detail::grid_extent(lr_fm.width, ref_patches.size(), lr_stride);
    corr.level_stride = lr_fm.stride;

    const Matrix<Scalar> lr_cols = detail::unfold_patches(lr_fm, corr.lr);
    const Index n = lr_cols.cols();
    corr.best_index.assign(static_cast<std::size_t>(n), -1);
    corr.best_score = Vector<Scalar>::Constant(n, degenerate_score<Scalar>());

    Matrix<Scalar> scores;
    std::vector<char> degenerate;
    for (Index first = 0; first < ref_patches.count(); first += block) {
        const Index rows = std::min(block, ref_patches.count() - first);
        Matrix<Scalar> kernels = ref_patches.kernels(first, rows);
        detail::normalize_rows(kernels, degenerate);
        scores.noalias() = kernels * lr_cols;
        for (Index j = 0; j < rows; ++j) {
            if (degenerate[static_cast<std::size_t>(j)])
                continue;
            for (Index i = 0; i < n; ++i) {
                if (detail::beats(scores(j, i), corr.best_score(i))) {
                    corr.best_score(i) = scores(j, i);
                    corr.best_index[static_cast<std::size_t>(i)] = first + j;
                }
            }
        }
    }
    for (Index i = 0; i < n; ++i)
        require(corr.best_index[static_cast<std::size_t>(i)] >= 0, ErrorKind::Degenerate,
                "every reference patch is degenerate at LR patch " + std::to_string(i));
    return corr;
}

/// Reuses a correspondence at a finer level: LR and reference footprints
/// are scaled by from_stride / to_stride, scores are carried unchanged.
template <typename Scalar>
CorrespondenceMap<Scalar> project_correspondence(const CorrespondenceMap<Scalar>& corr, int from_stride, int to_stride,
                                                 Index patch_size_at_target)
{
    require(from_stride > 0 && to_stride > 0 && from_stride % to_stride == 0, ErrorKind::InvalidArgument,
            "cannot project from stride " + std::to_string(from_stride) + " to stride " + std::to_string(to_stride));
    const Index factor = from_stride / to_stride;
    require(patch_size_at_target == corr.lr.size * factor, ErrorKind::InvalidArgument,
            "target patch size must be " + std::to_string(corr.lr.size * factor));
    CorrespondenceMap<Scalar> out = corr;
    out.lr = corr.lr.scaled(factor);
    out.ref = corr.ref.scaled(factor);
    out.level_stride = to_stride;
    return out;
}

/// Per-cell count of LR patches covering it.
using CoverageMap = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
struct SwapAssembly {
    FeatureMap<Scalar> map;
    CoverageMap coverage;
    Index uncovered = 0;
};

/// Target shape for assembly.
struct MapShape {
    Index channels = 0;
    Index height = 0;
    Index width = 0;
};

/// Places P_{j*} from the (undegraded) reference grid at each LR patch and
/// averages overlaps. Uncovered cells are zero and counted.
template <typename Scalar>
SwapAssembly<Scalar> assemble_swap_map(const CorrespondenceMap<Scalar>& corr, const PatchGrid<Scalar>& ref_hr_patches,
                                       const MapShape& target, const std::string& layer = {}, int stride = 1)
{
    require(ref_hr_patches.layout() == corr.ref, ErrorKind::Shape,
            "reference patch grid is not index-aligned with the correspondence");
    require(ref_hr_patches.channels() == target.channels, ErrorKind::Shape, "reference patch channels do not match target");
    const Index s = corr.lr.size;
    for (const auto& loc : corr.lr.locations)
        require(loc.top + s <= target.height && loc.left + s <= target.width, ErrorKind::Shape,
                "correspondence grid does not fit the target map");

    SwapAssembly<Scalar> out;
    out.map = FeatureMap<Scalar>(target.channels, target.height, target.width, layer, stride);
    out.coverage = CoverageMap::Zero(target.height, target.width);
    Vector<Scalar> patch(ref_hr_patches.dimension());
    for (Index i = 0; i < corr.count(); ++i) {
        const auto& loc = corr.lr.locations[static_cast<std::size_t>(i)];
        ref_hr_patches.copy_patch(corr.best_index[static_cast<std::size_t>(i)], patch);
        Index k = 0;
        for (Index c = 0; c < target.channels; ++c)
            for (Index dy = 0; dy < s; ++dy)
                for (Index dx = 0; dx < s; ++dx)
                    out.map(c, loc.top + dy, loc.left + dx) += patch(k++);
        out.coverage.block(loc.top, loc.left, s, s).array() += 1;
    }
    for (Index y = 0; y < target.height; ++y) {
        for (Index x = 0; x < target.width; ++x) {
            const Index n = out.coverage(y, x);
            if (n == 0)
                ++out.uncovered;
            else if (n > 1)
                out.map.data.col(y * target.width + x) /= static_cast<Scalar>(n);
        }
    }
    return out;
}

/// Best-score weight map at feature resolution: each cell takes the maximum
/// best score of the LR patches covering it, uncovered cells are zero.
template <typename Scalar>
FeatureMap<Scalar> rasterize_scores(const CorrespondenceMap<Scalar>& corr, Extent target, const std::string& layer = {},
                                    int stride = 1)
{
    FeatureMap<Scalar> s_map(1, target.height, target.width, layer, stride);
    s_map.data.setConstant(degenerate_score<Scalar>());
    const Index s = corr.lr.size;
    for (Index i = 0; i < corr.count(); ++i) {
        const auto& loc = corr.lr.locations[static_cast<std::size_t>(i)];
        require(loc.top + s <= target.height && loc.left + s <= target.width, ErrorKind::Shape,
                "correspondence grid does not fit the target map");
        for (Index dy = 0; dy < s; ++dy)
            for (Index dx = 0; dx < s; ++dx) {
                Scalar& cell = s_map(0, loc.top + dy, loc.left + dx);
                cell = std::max(cell, corr.best_score(i));
            }
    }
    s_map.data = s_map.data.unaryExpr([](Scalar v) { return v == degenerate_score<Scalar>() ? Scalar(0) : v; });
    return s_map;
}

// ---------------------------------------------------------------------------
// References

template <typename Scalar>
struct ReferenceVariant {
    Index ref = 0;
    double scale = 1.0;
    double degrees = 0.0;
    Image<Scalar> image;
};

/// Each reference followed by its (scale, rotation) variants; the identity
/// pair (1, 0) is the original and is not repeated.
template <typename Scalar>
std::vector<ReferenceVariant<Scalar>> augment_references(const std::vector<Image<Scalar>>& refs,
                                                         const std::vector<double>& scales,
                                                         const std::vector<double>& rotations)
{
    require(!refs.empty(), ErrorKind::InvalidArgument, "no reference images");
    for (double s : scales)
        require(s > 0, ErrorKind::InvalidArgument, "augmentation scales must be positive");
    const std::vector<double> sc = scales.empty() ? std::vector<double>{1.0} : scales;
    const std::vector<double> rot = rotations.empty() ? std::vector<double>{0.0} : rotations;

    std::vector<ReferenceVariant<Scalar>> out;
    for (std::size_t r = 0; r < refs.size(); ++r) {
        const auto id = static_cast<Index>(r);
        out.push_back({id, 1.0, 0.0, refs[r]});
        for (double s : sc) {
            const auto scaled = s == 1.0 ? refs[r] : bicubic_resample(refs[r], s);
            for (double deg : rot) {
                if (s == 1.0 && deg == 0.0)
                    continue;
                out.push_back({id, s, deg, deg == 0.0 ? scaled : rotate(scaled, deg)});
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline

struct SwapConfig {
    std::string match_layer = "relu3_1";
    /// Fine-to-coarse listing; the pyramid is stored coarse to fine.
    std::vector<std::string> target_layers = {"relu1_1", "relu2_1", "relu3_1"};
    Index patch_size = 3;
    Index stride = 1;
    int sr_factor = 4;
    std::vector<double> scales = {1.0};
    std::vector<double> rotations = {0.0};
};

nlohmann::json to_json(const SwapConfig& cfg);
SwapConfig swap_config_from_json(const nlohmann::json& j);

template <typename Scalar>
struct SwapLevel {
    std::string layer;
    int stride = 1;
    /// Swapped texture map M_l, shaped like phi_l(LR up).
    FeatureMap<Scalar> swapped;
    /// Best-score weight map S*_l, one channel at feature resolution.
    FeatureMap<Scalar> weight;
    Index uncovered = 0;
};

/// Levels ordered coarse to fine (largest stride first).
template <typename Scalar>
struct SwappedPyramid {
    std::vector<SwapLevel<Scalar>> levels;
    /// Correspondence at the matching layer (empty after deserialization).
    CorrespondenceMap<Scalar> match;

    const SwapLevel<Scalar>& level(const std::string& layer) const
    {
        for (const auto& l : levels)
            if (l.layer == layer)
                return l;
        fail(ErrorKind::MissingTensor, "swapped pyramid has no level '" + layer + "'");
    }
};

/// Tensors "M.<layer>" (C, H, W) and "S.<layer>" (1, H, W).
template <typename Scalar>
WeightStore pyramid_to_store(const SwappedPyramid<Scalar>& pyr)
{
    WeightStore store;
    for (const auto& l : pyr.levels) {
        store.insert("M." + l.layer, to_tensor(l.swapped));
        store.insert("S." + l.layer, to_tensor(l.weight));
    }
    return store;
}

/// Rebuilds levels from "M.*"/"S.*" tensors; strides come from the network.
template <typename Scalar>
SwappedPyramid<Scalar> pyramid_from_store(const WeightStore& store, const NetworkConfig& net)
{
    SwappedPyramid<Scalar> pyr;
    for (const auto& [name, tensor] : store.entries()) {
        if (name.rfind("M.", 0) != 0)
            continue;
        const std::string layer = name.substr(2);
        const int stride = net.stride_of(layer);
        SwapLevel<Scalar> level;
        level.layer = layer;
        level.stride = stride;
        level.swapped = to_feature_map<Scalar>(tensor, layer, stride);
        level.weight = to_feature_map<Scalar>(store.at("S." + layer), layer, stride);
        require(level.weight.channels == 1 && level.weight.extent() == level.swapped.extent(), ErrorKind::Shape,
                "S." + layer + " does not match M." + layer);
        pyr.levels.push_back(std::move(level));
    }
    require(!pyr.levels.empty(), ErrorKind::MissingTensor, "no swapped maps in pyramid file");
    std::stable_sort(pyr.levels.begin(), pyr.levels.end(), [](const auto& a, const auto& b) { return a.stride > b.stride; });
    return pyr;
}

/// Full feature-swapping stage: bicubic LR up-sampling, frequency-matched
/// references, matching at cfg.match_layer over all augmented references,
/// projection and assembly at every target layer.
template <typename Scalar>
SwappedPyramid<Scalar> swap_pipeline(const Image<Scalar>& lr, const std::vector<Image<Scalar>>& refs,
                                     const WeightStore& weights, const NetworkConfig& net, const SwapConfig& cfg)
{
    require(!refs.empty(), ErrorKind::InvalidArgument, "swap needs at least one reference image");
    require(cfg.sr_factor >= 2, ErrorKind::Config, "sr_factor must be at least 2");
    require(!cfg.target_layers.empty(), ErrorKind::Config, "no target layers");
    const int match_stride = net.stride_of(cfg.match_layer);
    for (const auto& l : cfg.target_layers) {
        const int s = net.stride_of(l);
        require(s <= match_stride && match_stride % s == 0, ErrorKind::Config,
                "target layer " + l + " is coarser than the matching layer");
    }

    std::vector<std::string> taps = cfg.target_layers;
    if (std::find(taps.begin(), taps.end(), cfg.match_layer) == taps.end())
        taps.push_back(cfg.match_layer);
    const auto tap_index = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(taps.begin(), taps.end(), name) - taps.begin());
    };

    const auto lr_up = bicubic_resample(lr, static_cast<double>(cfg.sr_factor));
    const auto lr_feats = extract_pyramid(lr_up, weights, net, taps);
    const auto& lr_match = lr_feats[tap_index(cfg.match_layer)];
    require(lr_match.height >= cfg.patch_size && lr_match.width >= cfg.patch_size, ErrorKind::InvalidArgument,
            "LR image too small for one patch at " + cfg.match_layer);

    // Reference variants that can hold at least one matching patch.
    const auto variants = augment_references(refs, cfg.scales, cfg.rotations);
    std::vector<std::shared_ptr<const FeatureMap<Scalar>>> match_maps;
    std::vector<std::vector<std::shared_ptr<const FeatureMap<Scalar>>>> hr_maps(taps.size());
    for (const auto& v : variants) {
        const Index min_side = cfg.patch_size * match_stride;
        const bool fits = v.image.height >= min_side && v.image.width >= min_side;
        if (!fits) {
            require(v.scale != 1.0 || v.degrees != 0.0, ErrorKind::InvalidArgument,
                    "reference " + std::to_string(v.ref) + " too small for one patch");
            continue;
        }
        const auto degraded = degrade_ref(v.image, cfg.sr_factor);
        auto m = extract_pyramid(degraded, weights, net, {cfg.match_layer});
        if (m[0].height < cfg.patch_size || m[0].width < cfg.patch_size) {
            require(v.scale != 1.0 || v.degrees != 0.0, ErrorKind::InvalidArgument,
                    "reference " + std::to_string(v.ref) + " too small for one patch");
            continue;
        }
        match_maps.push_back(std::make_shared<const FeatureMap<Scalar>>(std::move(m[0])));
        auto hr = extract_pyramid(v.image, weights, net, taps);
        for (std::size_t t = 0; t < taps.size(); ++t)
            hr_maps[t].push_back(std::make_shared<const FeatureMap<Scalar>>(std::move(hr[t])));
    }

    const auto match_grid = sample_patches(match_maps, cfg.patch_size, cfg.stride);
    SwappedPyramid<Scalar> pyr;
    pyr.match = match_patches(lr_match, match_grid, cfg.stride);

    for (const auto& layer : cfg.target_layers) {
        const std::size_t t = tap_index(layer);
        const int stride = net.stride_of(layer);
        const Index factor = match_stride / stride;
        const auto corr = project_correspondence(pyr.match, match_stride, stride, cfg.patch_size * factor);
        const PatchGrid<Scalar> ref_grid(hr_maps[t], corr.ref, cfg.stride * factor);
        const auto& target = lr_feats[t];
        auto assembly = assemble_swap_map(corr, ref_grid, {target.channels, target.height, target.width}, layer, stride);
        SwapLevel<Scalar> level;
        level.layer = layer;
        level.stride = stride;
        level.swapped = std::move(assembly.map);
        level.weight = rasterize_scores(corr, target.extent(), layer, stride);
        level.uncovered = assembly.uncovered;
        pyr.levels.push_back(std::move(level));
    }
    std::stable_sort(pyr.levels.begin(), pyr.levels.end(), [](const auto& a, const auto& b) { return a.stride > b.stride; });
    return pyr;
}

} // namespace ntt
