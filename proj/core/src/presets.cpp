#include "zsclust/presets.hpp"

#include <cstdlib>

#include "zsclust/errors.hpp"
#include "zsclust/results.hpp"

#ifndef ZSCLUST_DEFAULT_PRESETS
#define ZSCLUST_DEFAULT_PRESETS "presets/encoders.json"
#endif

namespace zsclust {

const PipelineConfig& Preset::pipeline(const std::string& clusterer) const {
    for (const auto& [name, config] : pipelines) {
        if (name == clusterer) return config;
    }
    throw ConfigError("preset '" + name + "' has no pipeline for '" + clusterer + "'");
}

PresetLibrary PresetLibrary::from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object()) throw ConfigError("preset file must be a JSON object");
    PresetLibrary lib;
    for (const auto& [name, entries] : j.items()) {
        if (!entries.is_object()) throw ConfigError("preset '" + name + "' must be an object");
        Preset p{name, {}};
        for (const auto& [clusterer, config] : entries.items()) {
            try {
                p.pipelines.emplace_back(clusterer, pipeline_from_json(config));
            } catch (const ConfigError& e) {
                throw ConfigError("preset '" + name + "', " + clusterer + ": " + e.what());
            }
        }
        lib.presets_.push_back(std::move(p));
    }
    return lib;
}

PresetLibrary PresetLibrary::load(const std::filesystem::path& path) {
    try {
        return from_json(nlohmann::ordered_json::parse(read_text(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed preset file '" + path.string() + "': " + e.what());
    }
}

const Preset& PresetLibrary::get(const std::string& name) const {
    for (const auto& p : presets_) {
        if (p.name == name) return p;
    }
    std::string known;
    for (const auto& p : presets_) known += (known.empty() ? "" : ", ") + p.name;
    throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

std::filesystem::path default_preset_file() {
    if (const char* env = std::getenv("ZSCLUST_PRESETS"); env != nullptr && *env != '\0') return env;
    return ZSCLUST_DEFAULT_PRESETS;
}

}  // namespace zsclust
