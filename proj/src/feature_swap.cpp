#include "ntt/feature_swap.hpp"

namespace ntt {

nlohmann::json to_json(const SwapConfig& cfg)
{
    return {{"match_layer", cfg.match_layer},
            {"target_layers", cfg.target_layers},
            {"patch_size", cfg.patch_size},
            {"stride", cfg.stride},
            {"sr_factor", cfg.sr_factor},
            {"augment", {{"scales", cfg.scales}, {"rotations", cfg.rotations}}}};
}

SwapConfig swap_config_from_json(const nlohmann::json& j)
{
    SwapConfig cfg;
    try {
        cfg.match_layer = j.value("match_layer", cfg.match_layer);
        cfg.target_layers = j.value("target_layers", cfg.target_layers);
        cfg.patch_size = j.value("patch_size", cfg.patch_size);
        cfg.stride = j.value("stride", cfg.stride);
        cfg.sr_factor = j.value("sr_factor", cfg.sr_factor);
        if (j.contains("augment")) {
            const auto& aug = j.at("augment");
            cfg.scales = aug.value("scales", cfg.scales);
            cfg.rotations = aug.value("rotations", cfg.rotations);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("malformed swap config: ") + e.what());
    }
    require(cfg.patch_size >= 1, ErrorKind::Config, "patch_size must be positive");
    require(cfg.stride >= 1, ErrorKind::Config, "stride must be positive");
    require(cfg.sr_factor >= 2, ErrorKind::Config, "sr_factor must be at least 2");
    for (double s : cfg.scales)
        require(s > 0, ErrorKind::Config, "augment scales must be positive");
    return cfg;
}

} // namespace ntt
