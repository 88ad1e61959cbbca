#include "zsclust/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "zsclust/errors.hpp"

namespace zsclust {
namespace {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrixXd to_eigen(const EmbeddingMatrix& x) {
    RowMatrixXd m(static_cast<Eigen::Index>(x.rows()), static_cast<Eigen::Index>(x.cols()));
    const auto d = x.data();
    for (std::size_t i = 0; i < d.size(); ++i) m.data()[i] = static_cast<double>(d[i]);
    return m;
}

EmbeddingMatrix from_eigen(const RowMatrixXd& m) {
    std::vector<float> out(static_cast<std::size_t>(m.size()));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(m.data()[i]);
    return {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), std::move(out)};
}

struct ColumnStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;  // sample (n - 1); zero for a single row
};

ColumnStats column_stats(const RowMatrixXd& m) {
    ColumnStats s;
    s.mean = m.colwise().mean().transpose();
    const RowMatrixXd centred = m.rowwise() - s.mean.transpose();
    if (m.rows() < 2) {
        s.std = Eigen::VectorXd::Zero(m.cols());
    } else {
        s.std = (centred.array().square().colwise().sum() / static_cast<double>(m.rows() - 1)).sqrt().transpose();
    }
    return s;
}

}  // namespace

EmbeddingMatrix zscore(const EmbeddingMatrix& x) {
    RowMatrixXd m = to_eigen(x);
    const ColumnStats s = column_stats(m);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (s.std(j) > 0.0) {
            m.col(j) = (m.col(j).array() - s.mean(j)) / s.std(j);
        } else {
            m.col(j).setZero();
        }
    }
    return from_eigen(m);
}

PcaModel pca_fit(const EmbeddingMatrix& x, const PcaTarget& target) {
    const auto n = static_cast<Eigen::Index>(x.rows());
    const auto d = static_cast<Eigen::Index>(x.cols());
    if (const auto* dims = std::get_if<PcaDims>(&target)) {
        const auto limit = std::min<std::size_t>(x.rows() - 1, x.cols());
        if (dims->dims < 1 || dims->dims > limit) {
            throw ConfigError("PCA: requested " + std::to_string(dims->dims) +
                              " components, valid range is [1, " + std::to_string(limit) + "]");
        }
    } else {
        const double v = std::get<PcaVarianceFraction>(target).fraction;
        if (!(v > 0.0 && v <= 1.0)) throw ConfigError("PCA: variance fraction must be in (0, 1]");
    }
    if (n < 2) throw ConfigError("PCA needs at least two samples");

    RowMatrixXd m = to_eigen(x);
    PcaModel model;
    const ColumnStats s = column_stats(m);
    model.mean = s.mean;
    model.per_dim_std = s.std.unaryExpr([](double v) { return v > 0.0 ? v : 1.0; });
    for (Eigen::Index j = 0; j < d; ++j) m.col(j) = (m.col(j).array() - model.mean(j)) / model.per_dim_std(j);

    // Eigenpairs of the sample covariance, descending.
    Eigen::VectorXd eigvals;
    Eigen::MatrixXd eigvecs;  // D x r, columns are components
    if (d <= 4096 && d <= n) {
        const Eigen::MatrixXd cov = (m.transpose() * m) / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        eigvals = es.eigenvalues().reverse();
        eigvecs = es.eigenvectors().rowwise().reverse();
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(m), Eigen::ComputeThinV);
        eigvals = svd.singularValues().array().square() / static_cast<double>(n - 1);
        eigvecs = svd.matrixV();
    }
    eigvals = eigvals.cwiseMax(0.0);
    const double total = eigvals.sum();
    if (!(total > 0.0)) throw DegenerateInputError("PCA: data has zero total variance");
    const Eigen::VectorXd ratio = eigvals / total;

    Eigen::Index k = 0;
    if (const auto* dims = std::get_if<PcaDims>(&target)) {
        k = static_cast<Eigen::Index>(dims->dims);
    } else {
        const double v = std::get<PcaVarianceFraction>(target).fraction;
        double cum = 0.0;
        for (k = 0; k < ratio.size();) {
            cum += ratio(k++);
            if (cum >= v - 1e-12) break;
        }
    }
    k = std::min(k, eigvecs.cols());

    model.components = eigvecs.leftCols(k).transpose();
    // Deterministic signs: the largest-magnitude loading of each component is positive.
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::Index arg = 0;
        model.components.row(c).cwiseAbs().maxCoeff(&arg);
        if (model.components(c, arg) < 0.0) model.components.row(c) *= -1.0;
    }
    model.explained_variance = eigvals.head(k);
    model.explained_variance_ratio = ratio.head(k);
    return model;
}

EmbeddingMatrix pca_transform(const PcaModel& model, const EmbeddingMatrix& x) {
    if (x.cols() != model.n_features()) {
        throw ConfigError("PCA transform: input has " + std::to_string(x.cols()) + " dims, model expects " +
                          std::to_string(model.n_features()));
    }
    RowMatrixXd m = to_eigen(x);
    for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j) = (m.col(j).array() - model.mean(j)) / model.per_dim_std(j);
    const RowMatrixXd projected = m * model.components.transpose();
    return from_eigen(projected);
}

EmbeddingMatrix standardize_for_threshold(const EmbeddingMatrix& x, Metric metric) {
    RowMatrixXd m = to_eigen(x);
    const ColumnStats s = column_stats(m);
    const double avg_std = s.std.mean();
    if (!(avg_std > 0.0)) throw DegenerateInputError("threshold standardization: every dimension is constant");
    double scale = avg_std;
    const auto d = static_cast<double>(m.cols());
    if (metric == Metric::L1) {
        scale *= d;
    } else if (metric == Metric::L2) {
        scale *= std::sqrt(d);
    }
    m = (m.rowwise() - s.mean.transpose()) / scale;
    return from_eigen(m);
}

}  // namespace zsclust
