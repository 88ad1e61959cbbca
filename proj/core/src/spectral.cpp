#include <cmath>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "zsclust/cluster.hpp"
#include "zsclust/errors.hpp"
#include "zsclust/sym_eigen.hpp"

namespace zsclust {

std::vector<std::int64_t> cluster_qr(const Eigen::MatrixXd& vectors) {
    const Eigen::Index n = vectors.rows();
    const Eigen::Index k = vectors.cols();
    std::vector<std::int64_t> labels(static_cast<std::size_t>(n), 0);
    if (k <= 1) return labels;

    // Pivoted columns of V^T name k well-separated representative rows.
    const Eigen::MatrixXd vt = vectors.transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(vt);
    const auto& perm = qr.colsPermutation().indices();
    Eigen::MatrixXd reps(k, k);
    for (Eigen::Index c = 0; c < k; ++c) reps.col(c) = vt.col(perm(c));

    // Orthogonal polar factor of the representative block rotates V onto the axes.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(reps, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::MatrixXd rotation = svd.matrixU() * svd.matrixV().transpose();
    const Eigen::MatrixXd projected = (vectors * rotation).cwiseAbs();
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index arg = 0;
        double best = projected(i, 0);
        for (Eigen::Index c = 1; c < k; ++c) {
            if (projected(i, c) > best) {
                best = projected(i, c);
                arg = c;
            }
        }
        labels[static_cast<std::size_t>(i)] = arg;
    }
    return labels;
}

SpectralResult spectral(const EmbeddingMatrix& x, const SpectralSpec& spec, std::uint64_t seed) {
    validate(ClustererSpec{spec});
    if (!spec.k) throw ConfigError("spectral cluster count is unresolved");
    const std::size_t n = x.rows();
    const std::size_t k = *spec.k;
    if (k > n) throw ConfigError("spectral: k=" + std::to_string(k) + " exceeds the " + std::to_string(n) + " samples");
    if (spec.n_neighbors >= n) throw ConfigError("spectral: n_neighbors must be below the number of samples");

    // Binary kNN connectivity (the point itself counts as one of the
    // neighbours), symmetrized as (A + A^T) / 2.
    const PointSet points(x, Metric::L2);
    const KnnGraph knn = exact_knn(points, spec.n_neighbors - 1);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(2 * n * knn.k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < knn.k; ++t) {
            const auto j = static_cast<int>(knn.indices[i * knn.k + t]);
            triplets.emplace_back(static_cast<int>(i), j, 0.5);
            triplets.emplace_back(j, static_cast<int>(i), 0.5);
        }
    }
    SparseMatrix affinity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    affinity.setFromTriplets(triplets.begin(), triplets.end());

    Eigen::VectorXd sqrt_degree;
    const SparseMatrix laplacian = normalized_laplacian(affinity, &sqrt_degree);
    EigenSolveOptions opt;
    opt.n_wanted = static_cast<Eigen::Index>(k);
    opt.seed = seed;
    const EigenSolveResult eig = smallest_eigenpairs(laplacian, opt);

    Eigen::MatrixXd maps = eig.vectors;
    for (Eigen::Index i = 0; i < maps.rows(); ++i) {
        if (sqrt_degree(i) > 0.0) maps.row(i) /= sqrt_degree(i);
        const double norm = maps.row(i).norm();
        if (norm > 0.0) maps.row(i) /= norm;
    }

    SpectralResult result;
    result.assignment = ClusterAssignment::from_labels(cluster_qr(maps));
    result.laplacian_eigenvalues = eig.values;
    result.solver_iterations = eig.iterations;
    return result;
}

}  // namespace zsclust
