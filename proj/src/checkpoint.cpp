#include "avshield/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace avshield {

void save_checkpoint(const VictimModel& model, const std::string& path) {
    nlohmann::ordered_json j;
    j["format"] = "avshield-checkpoint";
    j["version"] = 1;
    const auto& c = model.config();
    j["config"] = {{"image_size", c.image_size},   {"width", c.width},
                   {"attn_dim", c.attn_dim},       {"token_dim", c.token_dim},
                   {"time_dim", c.time_dim},       {"audio_bands", c.audio_bands},
                   {"audio_context", c.audio_context}, {"schedule_T", c.schedule_T},
                   {"beta_start", c.beta_start},   {"beta_end", c.beta_end}};
    j["training_seed"] = model.training_seed();
    nlohmann::ordered_json params;
    for (const auto& name : model.param_names()) {
        const Tensor& t = model.param(name);
        params[name] = {{"shape", t.shape()},
                        {"data", std::vector<double>(t.data(), t.data() + t.size())}};
    }
    j["params"] = std::move(params);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out << j.dump(1) << "\n";
}

VictimModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint parse error: " + std::string(e.what()));
    }
    if (j.value("format", "") != "avshield-checkpoint")
        throw IoError("not an avshield checkpoint: " + path);
    VictimConfig c;
    const auto& jc = j.at("config");
    c.image_size = jc.at("image_size");
    c.width = jc.at("width");
    c.attn_dim = jc.at("attn_dim");
    c.token_dim = jc.at("token_dim");
    c.time_dim = jc.at("time_dim");
    c.audio_bands = jc.at("audio_bands");
    c.audio_context = jc.at("audio_context");
    c.schedule_T = jc.at("schedule_T");
    c.beta_start = jc.at("beta_start");
    c.beta_end = jc.at("beta_end");
    VictimModel model(c, j.at("training_seed").get<std::uint64_t>());
    for (const auto& [name, entry] : j.at("params").items()) {
        Tensor& dst = model.param(name);
        auto shape = entry.at("shape").get<std::vector<int>>();
        auto data = entry.at("data").get<std::vector<double>>();
        if (shape != dst.shape() || static_cast<std::int64_t>(data.size()) != dst.size())
            throw IoError("checkpoint parameter mismatch: " + name);
        std::copy(data.begin(), data.end(), dst.data());
    }
    return model;
}

} // namespace avshield
