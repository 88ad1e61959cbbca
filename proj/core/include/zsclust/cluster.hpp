#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "zsclust/distance.hpp"
#include "zsclust/embedspace.hpp"

namespace zsclust {

// ---------------------------------------------------------------------------
// Specs. An unset cluster count means "use the number of ground-truth
// classes"; the harness fills it in before calling a clusterer.

struct KMeansSpec {
    std::optional<std::size_t> k;
    std::size_t n_init = 1;
    double tol = 1e-4;
    std::size_t max_iter = 1000;
};

struct SpectralSpec {
    std::optional<std::size_t> k;
    std::size_t n_neighbors = 10;
};

enum class Linkage { Ward, Complete, Average, Single };
std::string_view to_string(Linkage l) noexcept;
Linkage parse_linkage(std::string_view name);

struct NClusters {
    std::optional<std::size_t> k;
};
struct DistanceThreshold {
    double t;
};

struct AgglomerativeSpec {
    Metric metric = Metric::L2;
    Linkage linkage = Linkage::Ward;
    std::variant<NClusters, DistanceThreshold> stop = NClusters{};
};

struct AffinityPropagationSpec {
    double damping = 0.9;
    std::size_t max_iter = 1000;
    std::size_t convergence_iter = 15;
    /// Unset selects the median off-diagonal similarity.
    std::optional<double> preference;
};

struct HdbscanSpec {
    std::size_t min_cluster_size = 5;
    /// Unset means min_cluster_size.
    std::optional<std::size_t> min_samples;
    double max_cluster_size_fraction = 0.20;
    Metric metric = Metric::L2;
};

using ClustererSpec =
    std::variant<KMeansSpec, SpectralSpec, AgglomerativeSpec, AffinityPropagationSpec, HdbscanSpec>;

/// "kmeans", "spectral", "agglomerative", "affinity_propagation", "hdbscan".
std::string_view clusterer_kind(const ClustererSpec& spec) noexcept;

/// Throws ConfigError when a field violates its range.
void validate(const ClustererSpec& spec);

/// True when `spec` still needs a cluster count from the labels.
bool needs_cluster_count(const ClustererSpec& spec) noexcept;
/// Copy of `spec` with every unset cluster count replaced by `k`.
ClustererSpec with_cluster_count(const ClustererSpec& spec, std::size_t k);

nlohmann::ordered_json to_json(const ClustererSpec& spec);
/// Missing fields take defaults; unknown fields and bad values throw ConfigError.
ClustererSpec clusterer_from_json(const nlohmann::ordered_json& j);

// ---------------------------------------------------------------------------
// K-Means

struct KMeansResult {
    ClusterAssignment assignment;
    Eigen::MatrixXd centroids;  ///< k x D
    double inertia = 0.0;
    /// Inertia after every assignment step of the returned run.
    std::vector<double> inertia_history;
    std::size_t iterations = 0;
};

/// Lloyd iterations from greedy k-means++ seeding.
KMeansResult kmeans(const EmbeddingMatrix& x, const KMeansSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Spectral

struct SpectralResult {
    ClusterAssignment assignment;
    Eigen::VectorXd laplacian_eigenvalues;  ///< k smallest, ascending
    int solver_iterations = 0;
};

/// Throws ConvergenceError when the eigensolver misses its residual target.
SpectralResult spectral(const EmbeddingMatrix& x, const SpectralSpec& spec, std::uint64_t seed);

/// Row-pivoted QR label assignment on an N x k embedding.
std::vector<std::int64_t> cluster_qr(const Eigen::MatrixXd& vectors);

// ---------------------------------------------------------------------------
// Agglomerative

/// Merge list in the usual linkage-matrix layout: row i joins clusters
/// `a` and `b` (ids >= N denote earlier merges N + row) at `height`.
struct Dendrogram {
    struct Merge {
        std::size_t a;
        std::size_t b;
        double height;
        std::size_t size;
    };
    std::size_t n_samples = 0;
    std::vector<Merge> merges;  ///< sorted by non-decreasing height
};

Dendrogram linkage_tree(const EmbeddingMatrix& x, Metric metric, Linkage linkage);
/// Partition after the first N - k merges.
ClusterAssignment cut_n_clusters(const Dendrogram& tree, std::size_t k);
/// Partition after every merge with height strictly below t.
ClusterAssignment cut_threshold(const Dendrogram& tree, double t);

struct AgglomerativeResult {
    ClusterAssignment assignment;
    Dendrogram dendrogram;
};

AgglomerativeResult agglomerative(const EmbeddingMatrix& x, const AgglomerativeSpec& spec);

// ---------------------------------------------------------------------------
// Affinity propagation

struct AffinityPropagationResult {
    ClusterAssignment assignment;
    std::vector<std::size_t> exemplars;
    bool converged = false;
    std::size_t iterations = 0;
};

AffinityPropagationResult affinity_propagation(const EmbeddingMatrix& x, const AffinityPropagationSpec& spec,
                                               std::uint64_t seed);

// ---------------------------------------------------------------------------
// HDBSCAN

struct CondensedTreeRow {
    std::size_t parent;
    std::size_t child;
    double lambda;
    std::size_t child_size;
};

struct HdbscanResult {
    ClusterAssignment assignment;
    std::vector<CondensedTreeRow> condensed_tree;
    /// Condensed-tree ids of the selected clusters, ascending.
    std::vector<std::size_t> selected;
};

HdbscanResult hdbscan(const EmbeddingMatrix& x, const HdbscanSpec& spec);

// ---------------------------------------------------------------------------

struct ClusterOutcome {
    ClusterAssignment assignment;
    /// False only for affinity propagation runs that hit max_iter.
    bool converged = true;
};

/// Dispatch on the spec. The cluster count must already be resolved.
ClusterOutcome run_clusterer(const EmbeddingMatrix& x, const ClustererSpec& spec, std::uint64_t seed);

}  // namespace zsclust
