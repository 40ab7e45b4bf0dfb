#pragma once

#include "ntt/feature_swap.hpp"
#include "ntt/losses.hpp"
#include "ntt/network.hpp"
#include "ntt/transfer.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ntt {

struct RunPaths {
    std::filesystem::path lr;
    std::vector<std::filesystem::path> refs;
    std::filesystem::path hr;
    std::filesystem::path weights;
    /// Optional generator weights; seeded random init when empty and the
    /// main weight file carries no "gen." tensors.
    std::filesystem::path gen_weights;
    std::filesystem::path pyramid;
    std::filesystem::path out;
};

/// Everything one CLI run needs. Built from defaults, then a config file,
/// then command-line flags.
struct RunConfig {
    RunPaths paths;
    NetworkConfig network = NetworkConfig::vgg19("relu5_1");
    SwapConfig swap;
    TransferConfig transfer;
    TextureLossConfig texture;
    LossWeights loss_weights;
    std::uint64_t seed = 0;
    int threads = 0;
};

nlohmann::json to_json(const RunConfig& cfg);

/// Overlays the keys present in `j` onto `base`.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Caps worker threads for internal parallelism; 0 leaves the default.
void set_threads(int n);
int thread_count();

} // namespace ntt
