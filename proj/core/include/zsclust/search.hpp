#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsclust/pipeline.hpp"

namespace zsclust {

struct WeightedDataset {
    std::string name;
    std::shared_ptr<const DatasetBundle> bundle;
    double weight = 1.0;
};

/// One line search over a single config field.
struct SearchStage {
    /// JSON pointer into the pipeline config, e.g. "/clusterer/damping".
    std::string parameter;
    std::vector<nlohmann::ordered_json> candidates;
    std::vector<WeightedDataset> datasets;
    /// Rescale each dataset's AMI curve by its maximum before weighting.
    /// Unset enables it exactly for distance-threshold parameters.
    std::optional<bool> relative_to_max;
};

/// Scores one config on one dataset (higher is better); may throw.
using SearchEvaluator = std::function<double(const DatasetBundle&, const PipelineConfig&)>;

struct CandidateReport {
    nlohmann::ordered_json value;
    /// Raw per-dataset scores in stage dataset order.
    std::vector<double> per_dataset;
    double score = 0.0;
    std::string error;  ///< non-empty when the candidate failed
};

struct StageReport {
    std::string parameter;
    bool relative_to_max = false;
    std::vector<CandidateReport> candidates;
    std::size_t chosen = 0;
};

struct SearchResult {
    PipelineConfig config;
    std::vector<StageReport> stages;
    std::size_t evaluations = 0;
};

/// Sum of weight * value over sum of weights.
double weighted_score(std::span<const double> values, std::span<const double> weights);
/// Divides by the maximum; all zeros when the maximum is not positive.
std::vector<double> relative_to_max(std::span<const double> curve);

/// Copy of `config` with the JSON-pointer field replaced. Throws ConfigError
/// when the pointer is absent or the result is invalid.
PipelineConfig with_parameter(const PipelineConfig& config, const std::string& pointer,
                              const nlohmann::ordered_json& value);

/// Runs the stages in order, freezing each stage's best candidate (first
/// listed wins ties) before the next. A candidate that raises on any dataset
/// is out of the running. Throws SearchError when every candidate of a stage
/// fails. The default evaluator is the AMI of run_pipeline.
SearchResult staged_search(const PipelineConfig& initial, const std::vector<SearchStage>& stages, std::uint64_t seed,
                           const SearchEvaluator& evaluator = {});

/// Search spec file:
///   {"initial": <pipeline config>, "seed": 100,
///    "datasets": [{"name": n, "bundle": path, "weight": w}],
///    "stages": [{"parameter": p, "candidates": [...], "datasets": [names]?,
///                "relative_to_max": bool?}]}
struct SearchSpec {
    PipelineConfig initial;
    std::vector<SearchStage> stages;
    std::uint64_t seed = 100;
};

SearchSpec search_spec_from_json(const nlohmann::ordered_json& j, const std::filesystem::path& base_dir);

nlohmann::ordered_json to_json(const SearchResult& r);

}  // namespace zsclust
