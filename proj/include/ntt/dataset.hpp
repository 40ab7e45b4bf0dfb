#pragma once

#include "ntt/error.hpp"
#include "ntt/feature_swap.hpp"
#include "ntt/image.hpp"
#include "ntt/network.hpp"
#include "ntt/weights.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ntt {

/// Descending match-count cutoffs for L1..L4.
struct SimilarityLevels {
    std::array<Index, 4> cutoffs = {900, 500, 200, 0};

    void validate() const;
    /// 1-based level: first cutoff the count meets (>=), else 4.
    int level_of(Index count) const;
};

SimilarityLevels parse_levels(const std::string& csv);

struct CropRect {
    Index top = 0;
    Index left = 0;
    Index size = 160;
};

struct PairRecord {
    std::string source;
    std::string reference;
    Index match_count = 0;
    int level = 4;
    CropRect crop;
};

nlohmann::json to_json(const PairRecord& r);
PairRecord pair_record_from_json(const nlohmann::json& j);

struct MatchCountConfig {
    std::string layer = "relu3_1";
    Index patch_size = 3;
    double tau = 0.9;
};

/// Directional count: patches of `a` whose best cosine similarity against
/// the patches of `b` exceeds tau. Zero-norm patches of `a` never match.
Index directional_match_count(const FeatureMapf& a, const FeatureMapf& b, Index patch_size, double tau);

/// Symmetric patch match count between two images: the smaller of the two
/// directional counts at cfg.layer.
Index match_count(const ImageBuffer& a, const ImageBuffer& b, const WeightStore& weights, const NetworkConfig& net,
                  const MatchCountConfig& cfg = {});

/// Labels every record by its count; returns the labelled copy.
std::vector<PairRecord> assign_levels(std::vector<PairRecord> pool, const SimilarityLevels& levels);

// ---------------------------------------------------------------------------
// Warped references

struct WarpParams {
    double tx = 0.0;
    double ty = 0.0;
    double degrees = 0.0;
    double scale = 1.0;
};

/// Seeded draw: translation in [W/4, W/2] x [H/4, H/2], rotation in
/// [10, 30] degrees, scale in [1.2, 2.0].
WarpParams draw_warp_params(Index height, Index width, std::uint64_t seed);

/// Output pixel p samples the source at c + R(-theta)(p - c - t) / s with
/// bilinear interpolation and border clamping. Output size equals input size.
/// Throws ErrorKind::Degenerate when under 10% of the output maps inside the
/// source.
ImageBuffer warp_image(const ImageBuffer& img, const WarpParams& p);

/// Randomly warped HR reference.
ImageBuffer gen_warped_ref(const ImageBuffer& hr, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Pair construction over a directory

struct PairOptions {
    SimilarityLevels levels;
    MatchCountConfig match;
    std::uint64_t seed = 0;
    Index crop_size = 160;
};

/// Groups "<stem>_<k>.<ext>" files by stem; "_0" is the source and the rest
/// are its references. Without such groups every ordered pair is scored.
/// Sources smaller than the crop are skipped.
std::vector<PairRecord> build_pairs(const std::filesystem::path& dir, const WeightStore& weights, const NetworkConfig& net,
                                    const PairOptions& opt);

} // namespace ntt
