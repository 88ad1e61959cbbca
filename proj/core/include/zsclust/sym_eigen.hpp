#pragma once

#include <cstdint>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace zsclust {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct EigenSolveOptions {
    /// Number of smallest eigenpairs wanted.
    Eigen::Index n_wanted = 1;
    /// Largest acceptable residual norm ||A v - lambda v|| for a unit v.
    double tolerance = 1e-8;
    int max_iterations = 2000;
    /// Chebyshev filter degree applied per outer iteration.
    int filter_degree = 16;
    /// Problems at or below this size are solved densely.
    Eigen::Index dense_threshold = 400;
    std::uint64_t seed = 0;
};

struct EigenSolveResult {
    Eigen::VectorXd values;   ///< ascending
    Eigen::MatrixXd vectors;  ///< n x n_wanted, orthonormal columns
    int iterations = 0;
    double max_residual = 0.0;
};

/// Smallest eigenpairs of a sparse symmetric matrix by Chebyshev-filtered
/// block subspace iteration with Rayleigh-Ritz extraction. Repeated
/// eigenvalues are resolved as long as their multiplicity fits in the block.
/// Throws ConvergenceError when the residual target is not met.
EigenSolveResult smallest_eigenpairs(const SparseMatrix& a, const EigenSolveOptions& options);

/// Symmetric normalized Laplacian I - D^-1/2 W D^-1/2 of a symmetric
/// non-negative affinity with zero diagonal. Isolated vertices get L_ii = 1.
/// `sqrt_degree` receives D^1/2.
SparseMatrix normalized_laplacian(const SparseMatrix& affinity, Eigen::VectorXd* sqrt_degree = nullptr);

}  // namespace zsclust
