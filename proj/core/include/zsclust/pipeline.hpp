#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "zsclust/cluster.hpp"
#include "zsclust/embedspace.hpp"
#include "zsclust/metrics.hpp"
#include "zsclust/reduce.hpp"

namespace zsclust {

struct NoReduction {};
struct ZScoreOnly {};
struct PcaReduction {
    PcaTarget target;
};
struct UmapReduction {
    std::size_t out_dims = 50;
    std::size_t n_neighbors = 30;
    double min_dist = 0.0;
};

using ReductionSpec = std::variant<NoReduction, ZScoreOnly, PcaReduction, UmapReduction>;

/// One (reduction, clusterer, seed, noise policy) cell.
struct PipelineConfig {
    ReductionSpec reduction = NoReduction{};
    ClustererSpec clusterer = KMeansSpec{};
    std::uint64_t seed = 1;
    NoisePolicy noise_policy = NoisePolicy::NoiseAsCluster;
};

/// {"kind": "none" | "zscore" | "pca" | "umap", ...}
nlohmann::ordered_json to_json(const ReductionSpec& r);
ReductionSpec reduction_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const PipelineConfig& c);
/// Missing fields take defaults. Throws ConfigError on unknown fields or
/// invalid values.
PipelineConfig pipeline_from_json(const nlohmann::ordered_json& j);

/// Throws ConfigError when a field violates its range.
void validate(const PipelineConfig& c);

/// FNV-1a 64 of the canonical JSON serialization, as 16 hex digits.
std::string config_hash(const PipelineConfig& c);

/// Applies the reduction fitted on `x` alone.
EmbeddingMatrix apply_reduction(const EmbeddingMatrix& x, const ReductionSpec& r, std::uint64_t seed);

struct StreamScores {
    std::string stream;
    double ami = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
};

struct RunResult {
    double ami = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    /// NaN when fewer than two clusters are formed.
    double silhouette_original = 0.0;
    double silhouette_reduced = 0.0;
    std::size_t n_clusters = 0;
    double clustered_fraction = 1.0;
    double wall_time = 0.0;
    /// AMI restricted to clustered samples (equals `ami` without noise).
    double ami_excluding_noise = 0.0;
    /// False when affinity propagation stopped at max_iter.
    bool converged = true;
    /// Scores under the configured noise policy against every label stream,
    /// the primary stream first.
    std::vector<StreamScores> streams;
};

nlohmann::ordered_json to_json(const RunResult& r);

struct RunOptions {
    /// Score silhouettes on a seeded subsample of this many samples.
    std::optional<std::size_t> silhouette_subsample;
};

struct PipelineRun {
    ClusterAssignment assignment;
    RunResult result;
};

/// Reduce, cluster and score one bundle. An "auto" cluster count becomes the
/// number of classes in the primary label stream. Distance-threshold
/// agglomerative runs see threshold-standardized inputs.
PipelineRun run_pipeline(const DatasetBundle& bundle, const PipelineConfig& config, const RunOptions& options = {});

/// Scores an existing assignment the way run_pipeline does; `reduced` is the
/// space the clusterer saw.
RunResult score_assignment(const DatasetBundle& bundle, const EmbeddingMatrix& reduced,
                           const ClusterAssignment& assignment, NoisePolicy policy, std::uint64_t seed,
                           const RunOptions& options = {});

}  // namespace zsclust
