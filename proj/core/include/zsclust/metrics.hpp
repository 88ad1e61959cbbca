#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "zsclust/distance.hpp"
#include "zsclust/embedspace.hpp"

namespace zsclust {

/// How the noise sentinel in a predicted partition enters label-based metrics.
enum class NoisePolicy {
    NoiseAsCluster,  ///< all noise samples form one extra predicted cluster
    ExcludeNoise,    ///< noise samples are dropped before counting
};

std::string_view to_string(NoisePolicy p) noexcept;
NoisePolicy parse_noise_policy(std::string_view name);

/// R x C co-occurrence counts of a ground-truth (rows) and predicted (columns) partition.
struct ContingencyTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::int64_t> counts;  // row-major R x C
    std::vector<std::int64_t> row_margins;
    std::vector<std::int64_t> col_margins;
    std::int64_t total = 0;

    std::int64_t operator()(std::size_t i, std::size_t j) const noexcept { return counts[i * cols + j]; }

    /// Builds a table directly from counts (margins derived).
    static ContingencyTable from_counts(std::size_t rows, std::size_t cols,
                                        std::vector<std::int64_t> counts);
};

/// `truth` must be noise-free. Throws ValidationError on length mismatch or
/// negative truth ids, DegenerateInputError when nothing is left to count.
ContingencyTable contingency(std::span<const std::int64_t> truth, std::span<const std::int64_t> pred,
                             NoisePolicy policy = NoisePolicy::NoiseAsCluster);

/// Shannon entropy in nats of the partition with the given cluster sizes.
double entropy(std::span<const std::int64_t> margins);
double mutual_information(const ContingencyTable& table);
/// Exact expected MI under the hypergeometric (fixed-margin permutation) model.
double expected_mutual_information(std::span<const std::int64_t> row_margins,
                                   std::span<const std::int64_t> col_margins, std::int64_t n);

double adjusted_mutual_info(const ContingencyTable& table);
double normalized_mutual_info(const ContingencyTable& table);
double adjusted_rand_index(const ContingencyTable& table);

// Label-sequence conveniences. Both arguments may be arbitrary non-negative ids;
// `pred` may additionally hold kNoise.
double ami(std::span<const std::int64_t> truth, std::span<const std::int64_t> pred,
           NoisePolicy policy = NoisePolicy::NoiseAsCluster);
double nmi(std::span<const std::int64_t> truth, std::span<const std::int64_t> pred,
           NoisePolicy policy = NoisePolicy::NoiseAsCluster);
double ari(std::span<const std::int64_t> truth, std::span<const std::int64_t> pred,
           NoisePolicy policy = NoisePolicy::NoiseAsCluster);

inline double ami(const LabelVector& u, const ClusterAssignment& v,
                  NoisePolicy policy = NoisePolicy::NoiseAsCluster) {
    return ami(u.labels, v.labels(), policy);
}
inline double nmi(const LabelVector& u, const ClusterAssignment& v,
                  NoisePolicy policy = NoisePolicy::NoiseAsCluster) {
    return nmi(u.labels, v.labels(), policy);
}
inline double ari(const LabelVector& u, const ClusterAssignment& v,
                  NoisePolicy policy = NoisePolicy::NoiseAsCluster) {
    return ari(u.labels, v.labels(), policy);
}

struct SilhouetteOptions {
    Metric metric = Metric::L2;
    /// When set and more non-noise samples exist, score a seeded uniform
    /// subsample of this size instead of all of them.
    std::optional<std::size_t> subsample;
    std::uint64_t seed = 0;
};

/// Mean silhouette over non-noise samples. Singleton members score 0.
/// Throws DegenerateInputError with fewer than two clusters.
double silhouette(const EmbeddingMatrix& x, const ClusterAssignment& v,
                  const SilhouetteOptions& options = {});

/// 1-based ranks; tied values share their mean rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Throws UndefinedCorrelationError when
/// either side has zero rank variance.
double spearman_rho(std::span<const double> x, std::span<const double> y);

struct KnnProbeOptions {
    std::size_t k = 20;
    double temperature = 0.07;
};

/// Cosine-similarity kNN vote with weights exp(sim / temperature); ties in the
/// vote go to the lowest class id. Returns the fraction of test samples predicted
/// correctly.
double weighted_knn_accuracy(const EmbeddingMatrix& train_x, const LabelVector& train_y,
                             const EmbeddingMatrix& test_x, const LabelVector& test_y,
                             const KnnProbeOptions& options = {});

}  // namespace zsclust
