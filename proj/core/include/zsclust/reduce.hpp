#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>

#include <Eigen/Dense>

#include "zsclust/distance.hpp"
#include "zsclust/embedspace.hpp"
#include "zsclust/sym_eigen.hpp"

namespace zsclust {

/// Per-column standardization with sample (n - 1) statistics. Zero-variance
/// columns become all-zero.
EmbeddingMatrix zscore(const EmbeddingMatrix& x);

struct PcaDims {
    std::size_t dims;
};
struct PcaVarianceFraction {
    double fraction;
};
using PcaTarget = std::variant<PcaDims, PcaVarianceFraction>;

/// PCA fitted on z-scored data, without whitening.
struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::VectorXd per_dim_std;  ///< zero-variance dims are stored as 1
    Eigen::MatrixXd components;   ///< K x D, orthonormal rows
    Eigen::VectorXd explained_variance;
    Eigen::VectorXd explained_variance_ratio;

    std::size_t n_components() const noexcept { return static_cast<std::size_t>(components.rows()); }
    std::size_t n_features() const noexcept { return static_cast<std::size_t>(components.cols()); }
};

/// Throws ConfigError when the requested dims fall outside [1, min(N-1, D)] or
/// the variance fraction is outside (0, 1].
PcaModel pca_fit(const EmbeddingMatrix& x, const PcaTarget& target);
/// Throws ConfigError on a dimension mismatch.
EmbeddingMatrix pca_transform(const PcaModel& model, const EmbeddingMatrix& x);

/// Centre, divide every dim by the one mean per-dim standard deviation, then
/// by D (L1) or sqrt(D) (L2) so distance thresholds are comparable across
/// dimensionalities. Throws DegenerateInputError when all dims are constant.
EmbeddingMatrix standardize_for_threshold(const EmbeddingMatrix& x, Metric metric);

// ---------------------------------------------------------------------------
// UMAP

struct UmapParams {
    std::size_t n_neighbors = 30;
    double min_dist = 0.0;
    std::size_t out_dims = 50;
    /// 0 selects 500 epochs for N <= 10000 and 200 otherwise.
    std::size_t n_epochs = 0;
    double spread = 1.0;
    double learning_rate = 1.0;
    std::size_t negative_sample_rate = 5;
    double repulsion_strength = 1.0;
    std::uint64_t seed = 0;
};

/// Parameters of the low-dimensional membership curve 1 / (1 + a d^(2b)).
struct UmapCurve {
    double a;
    double b;
};

/// Least-squares fit of the curve to the piecewise target defined by
/// min_dist and spread (300 samples on [0, 3 * spread]).
UmapCurve fit_umap_curve(double spread, double min_dist);

/// Fuzzy simplicial set of the exact Euclidean kNN graph, symmetrized by
/// fuzzy union. Self-loops are absent.
SparseMatrix umap_fuzzy_graph(const EmbeddingMatrix& x, std::size_t n_neighbors);

/// Deterministic for fixed input and seed. Throws ConfigError on invalid params.
EmbeddingMatrix umap_embed(const EmbeddingMatrix& x, const UmapParams& params);

}  // namespace zsclust
