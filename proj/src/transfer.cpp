#include "ntt/transfer.hpp"

#include <cmath>
#include <random>

namespace ntt {

void TransferConfig::validate() const
{
    require(!levels.empty(), ErrorKind::Config, "transfer config needs at least one level");
    require(blocks >= 0, ErrorKind::Config, "residual block count must be non-negative");
    require(channels > 0, ErrorKind::Config, "trunk channels must be positive");
    require((Index{1} << (level_count() - 1)) == sr_factor, ErrorKind::Config,
            std::to_string(level_count()) + " levels upscale by " + std::to_string(Index{1} << (level_count() - 1))
                + ", not the SR factor " + std::to_string(sr_factor));
}

nlohmann::json to_json(const TransferConfig& cfg)
{
    return {{"levels", cfg.levels}, {"blocks", cfg.blocks}, {"channels", cfg.channels}, {"sr_factor", cfg.sr_factor}};
}

TransferConfig transfer_config_from_json(const nlohmann::json& j)
{
    TransferConfig cfg;
    try {
        cfg.levels = j.value("levels", cfg.levels);
        cfg.blocks = j.value("blocks", cfg.blocks);
        cfg.channels = j.value("channels", cfg.channels);
        cfg.sr_factor = j.value("sr_factor", cfg.sr_factor);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("malformed transfer config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

namespace {

void add_conv(WeightStore& store, std::mt19937_64& rng, const std::string& name, Index out_c, Index in_c, double gain = 1.0)
{
    const double bound = gain * std::sqrt(6.0 / static_cast<double>(in_c * 9));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<float> kernel(static_cast<std::size_t>(out_c * in_c * 9));
    for (auto& v : kernel)
        v = static_cast<float>(dist(rng));
    store.insert(name + ".kernel",
                 Tensor({static_cast<std::uint32_t>(out_c), static_cast<std::uint32_t>(in_c), 3, 3}, std::move(kernel)));
    store.insert(name + ".bias", Tensor({static_cast<std::uint32_t>(out_c)}, std::vector<float>(static_cast<std::size_t>(out_c), 0.0f)));
}

} // namespace

WeightStore init_generator_weights(const TransferConfig& cfg, const std::vector<Index>& texture_channels, std::uint64_t seed)
{
    cfg.validate();
    require(static_cast<Index>(texture_channels.size()) == cfg.level_count(), ErrorKind::Config,
            "one texture channel count per level is required");
    std::mt19937_64 rng(seed);
    WeightStore store;
    const Index c = cfg.channels;
    add_conv(store, rng, "gen.entry1", c, 3);
    add_conv(store, rng, "gen.entry2", c, c);
    for (Index l = 0; l < cfg.level_count(); ++l) {
        const std::string prefix = level_prefix(l);
        add_conv(store, rng, prefix + ".head", c, c + texture_channels[static_cast<std::size_t>(l)]);
        for (Index b = 0; b < cfg.blocks; ++b) {
            const std::string block = prefix + ".block" + std::to_string(b);
            add_conv(store, rng, block + ".conv1", c, c);
            add_conv(store, rng, block + ".conv2", c, c, 0.1);
        }
        add_conv(store, rng, prefix + ".tail", c, c, 0.1);
        if (l + 1 < cfg.level_count())
            add_conv(store, rng, prefix + ".up", 4 * c, c);
    }
    add_conv(store, rng, "gen.out", 3, c);
    return store;
}

} // namespace ntt
