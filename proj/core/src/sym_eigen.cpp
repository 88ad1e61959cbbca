#include "zsclust/sym_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "zsclust/errors.hpp"

namespace zsclust {
namespace {

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& y) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

// Rayleigh-Ritz on the column space of the orthonormal basis q.
void rayleigh_ritz(const SparseMatrix& a, Eigen::MatrixXd& q, Eigen::VectorXd& theta) {
    const Eigen::MatrixXd aq = a * q;
    Eigen::MatrixXd h = q.transpose() * aq;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    theta = es.eigenvalues();
    q = q * es.eigenvectors();
}

double gershgorin_upper(const SparseMatrix& a) {
    double upper = 0.0;
    for (Eigen::Index i = 0; i < a.outerSize(); ++i) {
        double diag = 0.0, off = 0.0;
        for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
            if (it.col() == i) {
                diag += it.value();
            } else {
                off += std::abs(it.value());
            }
        }
        upper = std::max(upper, diag + off);
    }
    return upper;
}

EigenSolveResult dense_solve(const SparseMatrix& a, Eigen::Index wanted) {
    Eigen::MatrixXd dense(a);
    dense = 0.5 * (dense + dense.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    if (es.info() != Eigen::Success) throw ConvergenceError("dense symmetric eigensolver failed", 0);
    EigenSolveResult r;
    r.values = es.eigenvalues().head(wanted);
    r.vectors = es.eigenvectors().leftCols(wanted);
    r.max_residual = (dense * r.vectors - r.vectors * r.values.asDiagonal()).colwise().norm().maxCoeff();
    return r;
}

}  // namespace

EigenSolveResult smallest_eigenpairs(const SparseMatrix& a, const EigenSolveOptions& options) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n) throw ConfigError("eigensolver needs a square matrix");
    const Eigen::Index wanted = options.n_wanted;
    if (wanted < 1 || wanted > n) throw ConfigError("eigensolver: requested eigenpair count out of range");
    if (n <= options.dense_threshold) return dense_solve(a, wanted);

    const Eigen::Index block = std::min(n, std::max(2 * wanted, wanted + 12));
    if (block * 3 > n) return dense_solve(a, wanted);

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd x(n, block);
    for (Eigen::Index j = 0; j < block; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) x(i, j) = normal(rng);
    }
    x = orthonormalize(x);
    Eigen::VectorXd theta;
    rayleigh_ritz(a, x, theta);

    const double upper = gershgorin_upper(a) * (1.0 + 1e-12) + 1e-12;
    EigenSolveResult result;
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        // Damp everything in [cut, upper]; the wanted end sits below cut.
        const double cut = theta(block - 1);
        const double centre = 0.5 * (upper + cut);
        const double half = 0.5 * (upper - cut);
        if (half > 0.0) {
            Eigen::MatrixXd prev = x;
            Eigen::MatrixXd cur = (a * x - centre * x) / half;
            for (int d = 2; d <= options.filter_degree; ++d) {
                Eigen::MatrixXd next = 2.0 * (a * cur - centre * cur) / half - prev;
                prev = std::move(cur);
                cur = std::move(next);
            }
            x = orthonormalize(cur);
        }
        rayleigh_ritz(a, x, theta);

        const Eigen::MatrixXd head = x.leftCols(wanted);
        const Eigen::MatrixXd resid = a * head - head * theta.head(wanted).asDiagonal();
        const double worst = resid.colwise().norm().maxCoeff();
        result.iterations = iter;
        result.max_residual = worst;
        if (worst <= options.tolerance) {
            result.values = theta.head(wanted);
            result.vectors = head;
            return result;
        }
    }
    throw ConvergenceError("subspace eigensolver did not reach residual " + std::to_string(options.tolerance) +
                               " (best " + std::to_string(result.max_residual) + ")",
                           result.iterations);
}

SparseMatrix normalized_laplacian(const SparseMatrix& w, Eigen::VectorXd* sqrt_degree) {
    const Eigen::Index n = w.rows();
    Eigen::VectorXd deg = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < w.outerSize(); ++i) {
        for (SparseMatrix::InnerIterator it(w, i); it; ++it) {
            if (it.col() != i) deg(i) += it.value();
        }
    }
    Eigen::VectorXd inv_sqrt(n);
    for (Eigen::Index i = 0; i < n; ++i) inv_sqrt(i) = deg(i) > 0.0 ? 1.0 / std::sqrt(deg(i)) : 0.0;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(w.nonZeros() + n));
    for (Eigen::Index i = 0; i < n; ++i) trip.emplace_back(i, i, 1.0);
    for (Eigen::Index i = 0; i < w.outerSize(); ++i) {
        for (SparseMatrix::InnerIterator it(w, i); it; ++it) {
            if (it.col() == i || it.value() == 0.0) continue;
            trip.emplace_back(i, it.col(), -it.value() * inv_sqrt(i) * inv_sqrt(it.col()));
        }
    }
    SparseMatrix l(n, n);
    l.setFromTriplets(trip.begin(), trip.end());
    if (sqrt_degree != nullptr) *sqrt_degree = deg.cwiseSqrt();
    return l;
}

}  // namespace zsclust
