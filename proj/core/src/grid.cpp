#include "zsclust/grid.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <thread>

#include "zsclust/errors.hpp"

namespace zsclust {
namespace {

using json = nlohmann::ordered_json;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string required_string(const json& o, const char* field) {
    if (!o.contains(field) || !o[field].is_string()) {
        throw ConfigError(std::string("grid dataset entry needs a string '") + field + "'");
    }
    return o[field].get<std::string>();
}

}  // namespace

std::uint64_t cell_seed(std::uint64_t global_seed, const CellKey& key) {
    std::uint64_t h = 14695981039346656037ULL;
    const auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0x1f;
        h *= 1099511628211ULL;
    };
    mix(key.encoder);
    mix(key.dataset);
    mix(key.clusterer);
    return splitmix64(global_seed ^ splitmix64(h));
}

GridSpec grid_from_json(const json& j, const std::filesystem::path& base_dir, const PresetLibrary* presets,
                        const GridOverrides& overrides) {
    if (!j.is_object()) throw ConfigError("grid manifest must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "seed" && key != "datasets" && key != "pipelines") {
            throw ConfigError("grid manifest: unknown field '" + key + "'");
        }
    }
    GridSpec grid;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("grid 'seed' must be a non-negative integer");
        grid.seed = j["seed"].get<std::uint64_t>();
    }
    if (overrides.seed) grid.seed = *overrides.seed;

    std::vector<std::pair<std::string, PipelineConfig>> shared;
    if (j.contains("pipelines")) {
        if (!j["pipelines"].is_object()) throw ConfigError("grid 'pipelines' must be an object");
        for (const auto& [name, config] : j["pipelines"].items()) shared.emplace_back(name, pipeline_from_json(config));
    }
    if (!j.contains("datasets") || !j["datasets"].is_array()) throw ConfigError("grid manifest needs a 'datasets' array");

    for (const auto& d : j["datasets"]) {
        if (!d.is_object()) throw ConfigError("grid dataset entries must be objects");
        const std::string encoder = required_string(d, "encoder");
        const std::string dataset = required_string(d, "dataset");
        std::filesystem::path bundle = required_string(d, "bundle");
        if (bundle.is_relative()) bundle = base_dir / bundle;

        std::vector<std::pair<std::string, PipelineConfig>> pipelines;
        std::optional<std::string> preset_name = overrides.preset;
        if (d.contains("preset")) {
            if (!d["preset"].is_string()) throw ConfigError("grid dataset 'preset' must be a string");
            preset_name = d["preset"].get<std::string>();
        }
        if (preset_name) {
            if (presets == nullptr) throw ConfigError("grid names a preset but no preset file was loaded");
            pipelines = presets->get(*preset_name).pipelines;
        }
        for (const auto& [name, config] : shared) {
            auto it = std::find_if(pipelines.begin(), pipelines.end(), [&](const auto& p) { return p.first == name; });
            if (it != pipelines.end()) {
                it->second = config;
            } else {
                pipelines.emplace_back(name, config);
            }
        }
        if (pipelines.empty()) {
            throw ConfigError("grid dataset (" + encoder + ", " + dataset + ") has no pipelines to run");
        }
        for (auto& [name, config] : pipelines) {
            GridCell cell{{encoder, dataset, name}, bundle, config};
            if (overrides.noise_policy) cell.config.noise_policy = *overrides.noise_policy;
            cell.config.seed = cell_seed(grid.seed, cell.key);
            grid.cells.push_back(std::move(cell));
        }
    }
    return grid;
}

ResultsTable evaluate_grid(const GridSpec& grid, const GridOptions& options) {
    struct Loaded {
        std::shared_ptr<const DatasetBundle> bundle;
        std::string error;
    };
    std::map<std::filesystem::path, Loaded> bundles;
    for (const auto& cell : grid.cells) {
        if (bundles.count(cell.bundle)) continue;
        Loaded l;
        try {
            l.bundle = std::make_shared<const DatasetBundle>(load_bundle(cell.bundle));
        } catch (const std::exception& e) {
            l.error = e.what();
        }
        bundles.emplace(cell.bundle, std::move(l));
    }

    const std::size_t n = grid.cells.size();
    std::vector<ResultRow> rows(n);
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            const GridCell& cell = grid.cells[i];
            const std::string hash = config_hash(cell.config);
            const Loaded& l = bundles.at(cell.bundle);
            try {
                if (!l.bundle) throw DataError(l.error);
                const PipelineRun run = run_pipeline(*l.bundle, cell.config, options.run);
                rows[i] = ResultRow::from_run(cell.key, run.result, cell.config.seed, hash);
            } catch (const std::exception& e) {
                rows[i] = ResultRow::failed(cell.key, cell.config.seed, hash);
                errors[i] = e.what();
                if (errors[i].empty()) errors[i] = "unknown error";
            }
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, n));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    ResultsTable table;
    for (std::size_t i = 0; i < n; ++i) {
        table.add(rows[i]);
        if (!errors[i].empty()) table.add_failure({rows[i].key, errors[i]});
    }
    return table;
}

}  // namespace zsclust
