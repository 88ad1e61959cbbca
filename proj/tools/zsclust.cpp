// Command-line front end: reduce, cluster, evaluate, search, report.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "zsclust/aggregate.hpp"
#include "zsclust/errors.hpp"
#include "zsclust/grid.hpp"
#include "zsclust/pipeline.hpp"
#include "zsclust/presets.hpp"
#include "zsclust/results.hpp"
#include "zsclust/search.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace zsclust;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4 };

// Inline JSON when the argument starts with '{', otherwise a file path.
json json_arg(const std::string& arg) {
    const std::string text = (!arg.empty() && arg.front() == '{') ? arg : read_text(arg);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in '" + arg + "': " + e.what());
    }
}

struct Common {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> preset;
    std::optional<std::string> noise_policy;
    std::optional<std::size_t> silhouette_subsample;
    std::string presets_file;
};

void add_common(CLI::App* cmd, Common& c, bool with_preset) {
    cmd->add_option("--seed", c.seed, "Override the seed");
    if (with_preset) {
        cmd->add_option("--preset", c.preset, "Preset name from the preset file");
        cmd->add_option("--presets-file", c.presets_file, "Preset file (defaults to the shipped one)");
    }
    cmd->add_option("--noise-policy", c.noise_policy, "noise_as_cluster or exclude_noise");
    cmd->add_option("--silhouette-subsample", c.silhouette_subsample,
                    "Score silhouettes on a seeded subsample of this size");
}

PresetLibrary load_presets(const Common& c) {
    return PresetLibrary::load(c.presets_file.empty() ? default_preset_file() : fs::path(c.presets_file));
}

RunOptions run_options(const Common& c) {
    RunOptions o;
    o.silhouette_subsample = c.silhouette_subsample;
    return o;
}

// --config wins; otherwise --preset plus --clusterer.
PipelineConfig resolve_config(const std::string& config_arg, const std::string& clusterer, const Common& c) {
    PipelineConfig config;
    if (!config_arg.empty()) {
        config = pipeline_from_json(json_arg(config_arg));
    } else if (c.preset && !clusterer.empty()) {
        config = load_presets(c).get(*c.preset).pipeline(clusterer);
    } else {
        throw ConfigError("give --config, or --preset together with --clusterer");
    }
    if (c.seed) config.seed = *c.seed;
    if (c.noise_policy) config.noise_policy = parse_noise_policy(*c.noise_policy);
    return config;
}

int run(int argc, char** argv) {
    CLI::App app{"Zero-shot embedding clustering benchmark toolkit"};
    app.require_subcommand(1);

    // reduce
    Common reduce_c;
    std::string reduce_bundle, reduce_config, reduce_clusterer, reduce_out, reduce_spec;
    auto* reduce = app.add_subcommand("reduce", "Apply a reduction to a bundle's embeddings");
    reduce->add_option("--bundle", reduce_bundle, "Bundle manifest")->required();
    reduce->add_option("--reduction", reduce_spec, "Reduction JSON (inline or file)");
    reduce->add_option("--config", reduce_config, "Pipeline config whose reduction to apply");
    reduce->add_option("--clusterer", reduce_clusterer, "Clusterer of the preset whose reduction to apply");
    reduce->add_option("--out", reduce_out, "Output .npy")->required();
    add_common(reduce, reduce_c, true);

    // cluster
    Common cluster_c;
    std::string cluster_bundle, cluster_config, cluster_clusterer, cluster_labels, cluster_result;
    auto* cluster = app.add_subcommand("cluster", "Run one pipeline on one bundle");
    cluster->add_option("--bundle", cluster_bundle, "Bundle manifest")->required();
    cluster->add_option("--config", cluster_config, "Pipeline config JSON (inline or file)");
    cluster->add_option("--clusterer", cluster_clusterer, "Clusterer name within --preset");
    cluster->add_option("--out-labels", cluster_labels, "Assignment .npy")->required();
    cluster->add_option("--out-result", cluster_result, "RunResult JSON (stdout when omitted)");
    add_common(cluster, cluster_c, true);

    // evaluate
    Common eval_c;
    std::string eval_grid, eval_out;
    std::size_t eval_workers = 1;
    auto* evaluate = app.add_subcommand("evaluate", "Run a grid of pipelines into a results table");
    evaluate->add_option("--grid", eval_grid, "Grid manifest JSON")->required();
    evaluate->add_option("--out", eval_out, "Output stem; writes <stem>.csv and <stem>.json")->required();
    evaluate->add_option("--workers", eval_workers, "Parallel cells")->check(CLI::PositiveNumber);
    add_common(evaluate, eval_c, true);

    // search
    Common search_c;
    std::string search_spec, search_out, search_report;
    auto* search = app.add_subcommand("search", "Staged parameter line search");
    search->add_option("--spec", search_spec, "Search spec JSON")->required();
    search->add_option("--out", search_out, "Chosen pipeline config JSON")->required();
    search->add_option("--report", search_report, "Per-stage scores JSON");
    add_common(search, search_c, false);

    // report
    std::string report_table, report_dir, report_baseline, report_groups, report_ms = "in9-mixed-same",
                                                                        report_mr = "in9-mixed-rand";
    std::vector<std::string> report_exclude;
    auto* report = app.add_subcommand("report", "Aggregate analyses of a results table");
    report->add_option("--table", report_table, "Results .csv or .json")->required();
    report->add_option("--out-dir", report_dir, "Directory for the aggregate CSVs")->required();
    report->add_option("--baseline", report_baseline, "Baseline encoder for deltas");
    report->add_option("--groups", report_groups, "Dataset groups JSON {group: [datasets]} for deltas");
    report->add_option("--exclude", report_exclude, "clusterer or clusterer@dataset left out of means");
    report->add_option("--ms", report_ms, "Mixed-same dataset name");
    report->add_option("--mr", report_mr, "Mixed-random dataset name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    if (reduce->parsed()) {
        const DatasetBundle bundle = load_bundle(reduce_bundle);
        ReductionSpec r;
        if (!reduce_spec.empty()) {
            r = reduction_from_json(json_arg(reduce_spec));
        } else {
            r = resolve_config(reduce_config, reduce_clusterer, reduce_c).reduction;
        }
        save_array(apply_reduction(bundle.embeddings, r, reduce_c.seed.value_or(1)), reduce_out);
        return kOk;
    }
    if (cluster->parsed()) {
        const DatasetBundle bundle = load_bundle(cluster_bundle);
        const PipelineConfig config = resolve_config(cluster_config, cluster_clusterer, cluster_c);
        const PipelineRun r = run_pipeline(bundle, config, run_options(cluster_c));
        save_array(r.assignment, cluster_labels);
        json out = to_json(r.result);
        out["config"] = to_json(config);
        out["config_hash"] = config_hash(config);
        if (cluster_result.empty()) {
            std::cout << out.dump(2) << "\n";
        } else {
            write_text(cluster_result, out.dump(2) + "\n");
        }
        return kOk;
    }
    if (evaluate->parsed()) {
        GridOverrides o;
        o.seed = eval_c.seed;
        o.preset = eval_c.preset;
        if (eval_c.noise_policy) o.noise_policy = parse_noise_policy(*eval_c.noise_policy);
        const json manifest = json_arg(eval_grid);
        std::optional<PresetLibrary> presets;
        bool wants_preset = o.preset.has_value();
        for (const auto& d : manifest.value("datasets", json::array())) wants_preset |= d.contains("preset");
        if (wants_preset) presets = load_presets(eval_c);
        const GridSpec grid =
            grid_from_json(manifest, fs::path(eval_grid).parent_path(), presets ? &*presets : nullptr, o);
        GridOptions go;
        go.workers = eval_workers;
        go.run = run_options(eval_c);
        const ResultsTable table = evaluate_grid(grid, go);
        write_results(table, eval_out);
        for (const auto& f : table.failures()) {
            std::cerr << "failed: " << f.key.encoder << " / " << f.key.dataset << " / " << f.key.clusterer << ": "
                      << f.message << "\n";
        }
        return kOk;
    }
    if (search->parsed()) {
        const SearchSpec spec = search_spec_from_json(json_arg(search_spec), fs::path(search_spec).parent_path());
        PipelineConfig initial = spec.initial;
        if (search_c.noise_policy) initial.noise_policy = parse_noise_policy(*search_c.noise_policy);
        RunOptions ro = run_options(search_c);
        const SearchResult r = staged_search(initial, spec.stages, search_c.seed.value_or(spec.seed),
                                             [ro](const DatasetBundle& b, const PipelineConfig& c) {
                                                 return run_pipeline(b, c, ro).result.ami;
                                             });
        write_text(search_out, to_json(r.config).dump(2) + "\n");
        if (!search_report.empty()) write_text(search_report, to_json(r).dump(2) + "\n");
        return kOk;
    }
    if (report->parsed()) {
        const ResultsTable table = read_results(report_table);
        const fs::path dir = report_dir;
        fs::create_directories(dir);
        std::vector<ClustererExclusion> exclusions;
        for (const auto& e : report_exclude) {
            const auto at = e.find('@');
            if (at == std::string::npos) {
                exclusions.push_back({e, std::nullopt});
            } else {
                exclusions.push_back({e.substr(0, at), e.substr(at + 1)});
            }
        }
        write_text(dir / "means.csv", means_csv(mean_over_clusterers(table, exclusions)));
        const RankReport ranks = rank_clusterers(table);
        for (const auto& w : ranks.warnings) std::cerr << "warning: " << w << "\n";
        write_text(dir / "ranks.csv", ranks_csv(ranks));
        write_text(dir / "correlations.csv",
                   correlations_csv(ami_silhouette_correlation(table, SilhouetteSpace::Original),
                                    ami_silhouette_correlation(table, SilhouetteSpace::Reduced)));
        write_text(dir / "gaps.csv", gaps_csv(in9_gap(table, report_ms, report_mr)));
        if (!report_baseline.empty()) {
            std::vector<DatasetGroup> groups;
            if (!report_groups.empty()) {
                for (const auto& [name, list] : json_arg(report_groups).items()) {
                    groups.push_back({name, list.get<std::vector<std::string>>()});
                }
            } else {
                DatasetGroup all{"all", {}};
                for (const auto& r : table.rows()) {
                    if (std::find(all.datasets.begin(), all.datasets.end(), r.key.dataset) == all.datasets.end()) {
                        all.datasets.push_back(r.key.dataset);
                    }
                }
                groups.push_back(std::move(all));
            }
            write_text(dir / "deltas.csv", deltas_csv(delta_vs_baseline(table, report_baseline, groups)));
        }
        return kOk;
    }
    return kOther;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kNumeric;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOther;
    }
}
