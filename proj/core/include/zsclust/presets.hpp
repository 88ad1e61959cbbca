#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsclust/pipeline.hpp"

namespace zsclust {

/// The tuned pipelines of one encoder, keyed by clusterer name
/// ("kmeans", "spectral", "ac_with_c", "ac_without_c", "affinity_propagation",
/// "hdbscan").
struct Preset {
    std::string name;
    std::vector<std::pair<std::string, PipelineConfig>> pipelines;

    /// Throws ConfigError when the clusterer is absent.
    const PipelineConfig& pipeline(const std::string& clusterer) const;
};

class PresetLibrary {
public:
    /// File layout: {"<preset>": {"<clusterer>": <pipeline config>, ...}, ...}.
    static PresetLibrary from_json(const nlohmann::ordered_json& j);
    /// Throws IoError / ConfigError.
    static PresetLibrary load(const std::filesystem::path& path);

    /// Throws ConfigError naming the known presets when `name` is unknown.
    const Preset& get(const std::string& name) const;
    const std::vector<Preset>& presets() const noexcept { return presets_; }

private:
    std::vector<Preset> presets_;
};

/// $ZSCLUST_PRESETS if set, else the presets file shipped with the build.
std::filesystem::path default_preset_file();

}  // namespace zsclust
