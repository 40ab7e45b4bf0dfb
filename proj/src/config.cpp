#include "ntt/config.hpp"

#include <fstream>

namespace ntt {

namespace {

nlohmann::json path_list(const std::vector<std::filesystem::path>& paths)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : paths)
        out.push_back(p.string());
    return out;
}

} // namespace

nlohmann::json to_json(const RunConfig& cfg)
{
    return {{"paths",
             {{"lr", cfg.paths.lr.string()},
              {"refs", path_list(cfg.paths.refs)},
              {"hr", cfg.paths.hr.string()},
              {"weights", cfg.paths.weights.string()},
              {"gen_weights", cfg.paths.gen_weights.string()},
              {"pyramid", cfg.paths.pyramid.string()},
              {"out", cfg.paths.out.string()}}},
            {"network", to_json(cfg.network)},
            {"swap", to_json(cfg.swap)},
            {"transfer", to_json(cfg.transfer)},
            {"texture", to_json(cfg.texture)},
            {"loss_weights", to_json(cfg.loss_weights)},
            {"seed", cfg.seed},
            {"threads", cfg.threads}};
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig cfg)
{
    try {
        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            const auto str = [&](const char* key, std::filesystem::path& dst) {
                if (p.contains(key))
                    dst = p.at(key).get<std::string>();
            };
            str("lr", cfg.paths.lr);
            str("hr", cfg.paths.hr);
            str("weights", cfg.paths.weights);
            str("gen_weights", cfg.paths.gen_weights);
            str("pyramid", cfg.paths.pyramid);
            str("out", cfg.paths.out);
            if (p.contains("refs")) {
                cfg.paths.refs.clear();
                for (const auto& r : p.at("refs"))
                    cfg.paths.refs.emplace_back(r.get<std::string>());
            }
        }
        if (j.contains("network"))
            cfg.network = network_config_from_json(j.at("network"));
        if (j.contains("swap"))
            cfg.swap = swap_config_from_json(j.at("swap"));
        if (j.contains("transfer"))
            cfg.transfer = transfer_config_from_json(j.at("transfer"));
        if (j.contains("texture"))
            cfg.texture = texture_config_from_json(j.at("texture"));
        if (j.contains("loss_weights"))
            cfg.loss_weights = loss_weights_from_json(j.at("loss_weights"));
        cfg.seed = j.value("seed", cfg.seed);
        cfg.threads = j.value("threads", cfg.threads);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("malformed run config: ") + e.what());
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::Io, "cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, path.string() + ": " + e.what());
    }
    return run_config_from_json(j, std::move(base));
}

} // namespace ntt
