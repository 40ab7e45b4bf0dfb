#include "ntt/network.hpp"

#include <cmath>
#include <random>
#include <set>

namespace ntt {

NetworkConfig NetworkConfig::vgg19(const std::string& through)
{
    static constexpr int blocks[5][2] = {{2, 64}, {2, 128}, {4, 256}, {4, 512}, {4, 512}};
    NetworkConfig cfg;
    for (int b = 0; b < 5; ++b) {
        if (b > 0)
            cfg.layers.push_back({LayerSpec::Kind::MaxPool, "pool" + std::to_string(b), 0, {}});
        for (int i = 0; i < blocks[b][0]; ++i) {
            const std::string suffix = std::to_string(b + 1) + "_" + std::to_string(i + 1);
            cfg.layers.push_back({LayerSpec::Kind::Conv, "conv" + suffix, blocks[b][1], {}});
            cfg.layers.push_back({LayerSpec::Kind::Rectify, "relu" + suffix, 0, "relu" + suffix});
            if ("relu" + suffix == through)
                return cfg;
        }
    }
    fail(ErrorKind::Config, "VGG19 has no layer named '" + through + "'");
}

void NetworkConfig::validate() const
{
    require(input_channels > 0, ErrorKind::Config, "network input channels must be positive");
    std::set<std::string> taps;
    std::set<std::string> convs;
    for (const auto& layer : layers) {
        if (!layer.tap.empty())
            require(taps.insert(layer.tap).second, ErrorKind::Config, "duplicate tap '" + layer.tap + "'");
        if (layer.kind == LayerSpec::Kind::Conv) {
            require(!layer.name.empty(), ErrorKind::Config, "conv layer without a name");
            require(layer.channels > 0, ErrorKind::Config, layer.name + ": channel count must be positive");
            require(convs.insert(layer.name).second, ErrorKind::Config, "duplicate conv name '" + layer.name + "'");
        }
    }
}

bool NetworkConfig::has_tap(const std::string& tap) const
{
    return std::any_of(layers.begin(), layers.end(), [&](const LayerSpec& l) { return l.tap == tap; });
}

int NetworkConfig::stride_of(const std::string& tap) const
{
    int stride = 1;
    for (const auto& layer : layers) {
        if (layer.kind == LayerSpec::Kind::MaxPool)
            stride *= 2;
        if (layer.tap == tap)
            return stride;
    }
    fail(ErrorKind::Config, "tap '" + tap + "' is not reached by the network");
}

Index NetworkConfig::channels_of(const std::string& tap) const
{
    Index channels = input_channels;
    for (const auto& layer : layers) {
        if (layer.kind == LayerSpec::Kind::Conv)
            channels = layer.channels;
        if (layer.tap == tap)
            return channels;
    }
    fail(ErrorKind::Config, "tap '" + tap + "' is not reached by the network");
}

nlohmann::json to_json(const NetworkConfig& cfg)
{
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : cfg.layers) {
        nlohmann::json j;
        switch (l.kind) {
        case LayerSpec::Kind::Conv:
            j["type"] = "conv";
            j["name"] = l.name;
            j["channels"] = l.channels;
            break;
        case LayerSpec::Kind::Rectify: j["type"] = "relu"; break;
        case LayerSpec::Kind::MaxPool: j["type"] = "maxpool"; break;
        }
        if (!l.tap.empty())
            j["tap"] = l.tap;
        layers.push_back(std::move(j));
    }
    return {{"input_channels", cfg.input_channels}, {"layers", std::move(layers)}};
}

NetworkConfig network_config_from_json(const nlohmann::json& j)
{
    NetworkConfig cfg;
    try {
        cfg.input_channels = j.value("input_channels", Index{3});
        for (const auto& l : j.at("layers")) {
            LayerSpec spec;
            const auto type = l.at("type").get<std::string>();
            if (type == "conv") {
                spec.kind = LayerSpec::Kind::Conv;
                spec.name = l.at("name").get<std::string>();
                spec.channels = l.at("channels").get<Index>();
            } else if (type == "relu") {
                spec.kind = LayerSpec::Kind::Rectify;
            } else if (type == "maxpool") {
                spec.kind = LayerSpec::Kind::MaxPool;
            } else {
                fail(ErrorKind::Config, "unknown layer type '" + type + "'");
            }
            spec.tap = l.value("tap", std::string{});
            cfg.layers.push_back(std::move(spec));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("malformed network config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

WeightStore init_network_weights(const NetworkConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    std::mt19937_64 rng(seed);
    WeightStore store;
    Index in_c = cfg.input_channels;
    for (const auto& layer : cfg.layers) {
        if (layer.kind != LayerSpec::Kind::Conv)
            continue;
        const auto out_c = static_cast<std::uint32_t>(layer.channels);
        const auto fan_in = static_cast<double>(in_c * 9);
        const double bound = std::sqrt(6.0 / fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        std::vector<float> kernel(static_cast<std::size_t>(out_c) * static_cast<std::size_t>(in_c) * 9);
        for (auto& v : kernel)
            v = static_cast<float>(dist(rng));
        store.insert(layer.name + ".kernel", Tensor({out_c, static_cast<std::uint32_t>(in_c), 3, 3}, std::move(kernel)));
        store.insert(layer.name + ".bias", Tensor({out_c}, std::vector<float>(out_c, 0.0f)));
        in_c = layer.channels;
    }
    std::vector<float> mean(static_cast<std::size_t>(cfg.input_channels), 0.5f);
    if (cfg.input_channels == 3)
        mean.assign(std::begin(kVggMean), std::end(kVggMean));
    store.insert("preprocess.mean", Tensor({static_cast<std::uint32_t>(cfg.input_channels)}, std::move(mean)));
    return store;
}

} // namespace ntt
