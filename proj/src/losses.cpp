#include "ntt/losses.hpp"

namespace ntt {

double total_objective(const LossParts& parts, const LossWeights& w)
{
    require(w.rec >= 0 && w.per >= 0 && w.adv >= 0 && w.tex >= 0, ErrorKind::InvalidArgument, "loss weights must be non-negative");
    return w.rec * parts.rec + w.per * parts.per + w.adv * parts.adv.value_or(0.0) + w.tex * parts.tex;
}

nlohmann::json to_json(const LossWeights& w)
{
    return {{"rec", w.rec}, {"per", w.per}, {"adv", w.adv}, {"tex", w.tex}};
}

LossWeights loss_weights_from_json(const nlohmann::json& j)
{
    LossWeights w;
    try {
        w.rec = j.value("rec", w.rec);
        w.per = j.value("per", w.per);
        w.adv = j.value("adv", w.adv);
        w.tex = j.value("tex", w.tex);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("malformed loss weights: ") + e.what());
    }
    require(w.rec >= 0 && w.per >= 0 && w.adv >= 0 && w.tex >= 0, ErrorKind::Config, "loss weights must be non-negative");
    return w;
}

nlohmann::json to_json(const TextureLossConfig& cfg) { return {{"layers", cfg.layers}}; }

TextureLossConfig texture_config_from_json(const nlohmann::json& j)
{
    TextureLossConfig cfg;
    try {
        cfg.layers = j.value("layers", cfg.layers);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("malformed texture config: ") + e.what());
    }
    require(!cfg.layers.empty(), ErrorKind::Config, "texture loss needs at least one layer");
    return cfg;
}

} // namespace ntt
