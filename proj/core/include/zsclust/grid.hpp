#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsclust/pipeline.hpp"
#include "zsclust/presets.hpp"
#include "zsclust/results.hpp"

namespace zsclust {

struct GridCell {
    CellKey key;
    std::filesystem::path bundle;
    PipelineConfig config;
};

struct GridSpec {
    std::vector<GridCell> cells;
    std::uint64_t seed = 1;
};

struct GridOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> preset;
    std::optional<NoisePolicy> noise_policy;
};

/// Grid manifest:
///   {"seed": 1,
///    "datasets": [{"encoder": e, "dataset": d, "bundle": path, "preset": name?}],
///    "pipelines": {"<clusterer>": <pipeline config>, ...}}
/// A dataset runs its preset's pipelines (or overrides.preset) plus the
/// top-level "pipelines", which win on a name clash. Relative bundle paths
/// resolve against `base_dir`.
GridSpec grid_from_json(const nlohmann::ordered_json& j, const std::filesystem::path& base_dir,
                        const PresetLibrary* presets, const GridOverrides& overrides = {});

/// Per-cell seed derived from the global seed and the cell key only, so the
/// worker schedule never changes a result.
std::uint64_t cell_seed(std::uint64_t global_seed, const CellKey& key);

struct GridOptions {
    std::size_t workers = 1;
    RunOptions run;
};

/// Runs every cell; a cell that raises becomes a NaN row plus a failure entry.
/// Row order follows the grid's cell order.
ResultsTable evaluate_grid(const GridSpec& grid, const GridOptions& options = {});

}  // namespace zsclust
