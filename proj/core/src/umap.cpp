#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "zsclust/errors.hpp"
#include "zsclust/reduce.hpp"

namespace zsclust {
namespace {

constexpr double kSmoothKTolerance = 1e-5;
constexpr double kMinKDistScale = 1e-3;
constexpr int kSmoothKIterations = 64;
constexpr double kGradClip = 4.0;

double clip(double v) { return std::clamp(v, -kGradClip, kGradClip); }

// Neighbour lists with the point itself in slot 0.
struct SelfKnn {
    std::size_t k;
    std::vector<std::size_t> indices;
    std::vector<double> distances;
};

SelfKnn knn_with_self(const EmbeddingMatrix& x, std::size_t n_neighbors) {
    const PointSet points(x, Metric::L2);
    const KnnGraph g = exact_knn(points, n_neighbors - 1);
    const std::size_t n = x.rows();
    SelfKnn out{n_neighbors, std::vector<std::size_t>(n * n_neighbors), std::vector<double>(n * n_neighbors)};
    for (std::size_t i = 0; i < n; ++i) {
        out.indices[i * n_neighbors] = i;
        out.distances[i * n_neighbors] = 0.0;
        for (std::size_t t = 0; t + 1 < n_neighbors; ++t) {
            out.indices[i * n_neighbors + t + 1] = g.indices[i * g.k + t];
            out.distances[i * n_neighbors + t + 1] = g.distances[i * g.k + t];
        }
    }
    return out;
}

// Per-point (sigma, rho) so that the membership strengths sum to log2(k).
void smooth_knn_dist(const SelfKnn& knn, std::size_t n, std::vector<double>& sigma, std::vector<double>& rho) {
    const std::size_t k = knn.k;
    const double target = std::log2(static_cast<double>(k));
    const double mean_all =
        std::accumulate(knn.distances.begin(), knn.distances.end(), 0.0) / static_cast<double>(knn.distances.size());
    sigma.assign(n, 0.0);
    rho.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* d = knn.distances.data() + i * k;
        double first_nonzero = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (d[j] > 0.0) {
                first_nonzero = d[j];
                break;
            }
        }
        rho[i] = first_nonzero;

        double lo = 0.0, hi = std::numeric_limits<double>::infinity(), mid = 1.0;
        for (int it = 0; it < kSmoothKIterations; ++it) {
            double psum = 0.0;
            for (std::size_t j = 1; j < k; ++j) {
                const double gap = d[j] - rho[i];
                psum += gap > 0.0 ? std::exp(-gap / mid) : 1.0;
            }
            if (std::abs(psum - target) < kSmoothKTolerance) break;
            if (psum > target) {
                hi = mid;
                mid = 0.5 * (lo + hi);
            } else {
                lo = mid;
                mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
            }
        }
        const double mean_i = std::accumulate(d, d + k, 0.0) / static_cast<double>(k);
        const double floor = kMinKDistScale * (rho[i] > 0.0 ? mean_i : mean_all);
        sigma[i] = std::max(mid, floor);
    }
}

// Chebyshev-solver based spectral layout; returns false when it cannot be
// computed so the caller can fall back to a random layout.
bool spectral_layout(const SparseMatrix& graph, std::size_t dims, std::uint64_t seed, Eigen::MatrixXd& out) {
    const auto n = graph.rows();
    if (static_cast<Eigen::Index>(dims) + 1 >= n) return false;
    const SparseMatrix lap = normalized_laplacian(graph);
    EigenSolveOptions opt;
    opt.n_wanted = static_cast<Eigen::Index>(dims) + 1;
    opt.tolerance = 1e-4;
    opt.seed = seed;
    try {
        const EigenSolveResult r = smallest_eigenpairs(lap, opt);
        out = r.vectors.rightCols(static_cast<Eigen::Index>(dims));
    } catch (const NumericError&) {
        return false;
    }
    return out.allFinite();
}

}  // namespace

UmapCurve fit_umap_curve(double spread, double min_dist) {
    if (!(spread > 0.0)) throw ConfigError("UMAP spread must be positive");
    if (min_dist < 0.0) throw ConfigError("UMAP min_dist must be non-negative");
    constexpr int kSamples = 300;
    std::vector<double> xs(kSamples), ys(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        xs[i] = 3.0 * spread * i / (kSamples - 1);
        ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
    }

    // Levenberg-Marquardt with the analytic Jacobian.
    Eigen::Vector2d p(1.0, 1.0);
    const auto evaluate = [&](const Eigen::Vector2d& q, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        r.resize(kSamples);
        if (jac) jac->resize(kSamples, 2);
        for (int i = 0; i < kSamples; ++i) {
            const double x = xs[i];
            const double xp = x > 0.0 ? std::pow(x, 2.0 * q(1)) : 0.0;
            const double denom = 1.0 + q(0) * xp;
            r(i) = 1.0 / denom - ys[i];
            if (jac) {
                (*jac)(i, 0) = -xp / (denom * denom);
                (*jac)(i, 1) = x > 0.0 ? -q(0) * xp * 2.0 * std::log(x) / (denom * denom) : 0.0;
            }
        }
    };
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    evaluate(p, r, &jac);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    for (int it = 0; it < 1000; ++it) {
        const Eigen::Matrix2d jtj = jac.transpose() * jac;
        const Eigen::Vector2d g = jac.transpose() * r;
        Eigen::Matrix2d damped = jtj;
        damped.diagonal() += lambda * jtj.diagonal();
        const Eigen::Vector2d step = damped.ldlt().solve(-g);
        const Eigen::Vector2d trial = p + step;
        Eigen::VectorXd r_trial;
        evaluate(trial, r_trial, nullptr);
        const double trial_cost = r_trial.squaredNorm();
        if (std::isfinite(trial_cost) && trial_cost < cost) {
            const double improvement = cost - trial_cost;
            p = trial;
            evaluate(p, r, &jac);
            cost = trial_cost;
            lambda = std::max(lambda * 0.1, 1e-12);
            if (improvement <= 1e-15 * std::max(cost, 1e-300) || step.norm() <= 1e-13 * (p.norm() + 1e-13)) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }
    return {p(0), p(1)};
}

SparseMatrix umap_fuzzy_graph(const EmbeddingMatrix& x, std::size_t n_neighbors) {
    const std::size_t n = x.rows();
    if (n_neighbors < 2) throw ConfigError("UMAP n_neighbors must be at least 2");
    if (n <= n_neighbors) throw ConfigError("UMAP needs more samples than n_neighbors");
    const SelfKnn knn = knn_with_self(x, n_neighbors);
    std::vector<double> sigma, rho;
    smooth_knn_dist(knn, n, sigma, rho);

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(n * n_neighbors);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < n_neighbors; ++t) {
            const std::size_t j = knn.indices[i * n_neighbors + t];
            if (j == i) continue;
            const double gap = knn.distances[i * n_neighbors + t] - rho[i];
            const double w = (gap <= 0.0 || sigma[i] == 0.0) ? 1.0 : std::exp(-gap / sigma[i]);
            triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), w);
        }
    }
    SparseMatrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    a.setFromTriplets(triplets.begin(), triplets.end());
    const SparseMatrix at = a.transpose();
    SparseMatrix prod = a.cwiseProduct(at);
    SparseMatrix result = a + at - prod;
    result.prune(0.0);
    return result;
}

EmbeddingMatrix umap_embed(const EmbeddingMatrix& x, const UmapParams& params) {
    const std::size_t n = x.rows();
    if (params.out_dims < 2) throw ConfigError("UMAP out_dims must be at least 2");
    if (params.out_dims >= x.cols()) throw ConfigError("UMAP out_dims must be below the input dimensionality");
    if (params.negative_sample_rate < 1) throw ConfigError("UMAP negative_sample_rate must be at least 1");
    if (!(params.learning_rate > 0.0)) throw ConfigError("UMAP learning_rate must be positive");

    SparseMatrix graph = umap_fuzzy_graph(x, params.n_neighbors);
    const std::size_t n_epochs = params.n_epochs > 0 ? params.n_epochs : (n <= 10000 ? 500 : 200);
    const double w_max = graph.coeffs().size() > 0 ? graph.coeffs().maxCoeff() : 0.0;
    const double cut = w_max / static_cast<double>(n_epochs);
    graph.prune([cut](Eigen::Index, Eigen::Index, double v) { return v >= cut; });

    std::mt19937_64 rng(params.seed);
    const std::size_t dim = params.out_dims;

    Eigen::MatrixXd init;
    if (spectral_layout(graph, dim, params.seed, init)) {
        const double expansion = 10.0 / init.cwiseAbs().maxCoeff();
        std::normal_distribution<double> noise(0.0, 1e-4);
        init *= expansion;
        for (Eigen::Index i = 0; i < init.size(); ++i) init.data()[i] += noise(rng);
    } else {
        std::uniform_real_distribution<double> uni(-10.0, 10.0);
        init.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
        for (Eigen::Index i = 0; i < init.size(); ++i) init.data()[i] = uni(rng);
    }
    // Rescale every coordinate to [0, 10].
    for (Eigen::Index c = 0; c < init.cols(); ++c) {
        const double lo = init.col(c).minCoeff();
        const double hi = init.col(c).maxCoeff();
        const double span = hi - lo;
        if (span > 0.0) {
            init.col(c) = 10.0 * (init.col(c).array() - lo) / span;
        } else {
            init.col(c).setZero();
        }
    }
    std::vector<double> emb(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < dim; ++c) {
            emb[i * dim + c] = init(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        }
    }

    // Directed edge list; each undirected edge appears once per direction.
    std::vector<std::size_t> head, tail;
    std::vector<double> epochs_per_sample;
    for (Eigen::Index i = 0; i < graph.outerSize(); ++i) {
        for (SparseMatrix::InnerIterator it(graph, i); it; ++it) {
            head.push_back(static_cast<std::size_t>(i));
            tail.push_back(static_cast<std::size_t>(it.col()));
            const double samples = static_cast<double>(n_epochs) * it.value() / w_max;
            epochs_per_sample.push_back(static_cast<double>(n_epochs) / samples);
        }
    }

    const UmapCurve curve = fit_umap_curve(params.spread, params.min_dist);
    const double a = curve.a, b = curve.b;
    const double gamma = params.repulsion_strength;
    const auto neg_rate = static_cast<double>(params.negative_sample_rate);
    const std::size_t n_edges = head.size();
    std::vector<double> epochs_per_negative(n_edges), next_negative(n_edges), next_sample(epochs_per_sample);
    for (std::size_t e = 0; e < n_edges; ++e) {
        epochs_per_negative[e] = epochs_per_sample[e] / neg_rate;
        next_negative[e] = epochs_per_negative[e];
    }
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    double alpha = params.learning_rate;
    for (std::size_t epoch = 0; epoch < n_epochs; ++epoch) {
        const auto now = static_cast<double>(epoch);
        for (std::size_t e = 0; e < n_edges; ++e) {
            if (next_sample[e] > now) continue;
            const std::size_t j = head[e];
            double* current = emb.data() + j * dim;
            double* other = emb.data() + tail[e] * dim;

            double d2 = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                const double diff = current[c] - other[c];
                d2 += diff * diff;
            }
            double coeff = 0.0;
            if (d2 > 0.0) {
                const double pb = std::pow(d2, b);
                coeff = -2.0 * a * b * (pb / d2) / (a * pb + 1.0);
            }
            for (std::size_t c = 0; c < dim; ++c) {
                const double grad = clip(coeff * (current[c] - other[c]));
                current[c] += grad * alpha;
                other[c] -= grad * alpha;
            }
            next_sample[e] += epochs_per_sample[e];

            const auto n_neg = static_cast<std::size_t>((now - next_negative[e]) / epochs_per_negative[e]);
            for (std::size_t p = 0; p < n_neg; ++p) {
                const std::size_t k = pick(rng);
                if (k == j) continue;
                const double* neg = emb.data() + k * dim;
                double nd2 = 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    const double diff = current[c] - neg[c];
                    nd2 += diff * diff;
                }
                if (!(nd2 > 0.0)) continue;
                const double rep = 2.0 * gamma * b / ((0.001 + nd2) * (a * std::pow(nd2, b) + 1.0));
                for (std::size_t c = 0; c < dim; ++c) current[c] += clip(rep * (current[c] - neg[c])) * alpha;
            }
            next_negative[e] += static_cast<double>(n_neg) * epochs_per_negative[e];
        }
        alpha = params.learning_rate * (1.0 - static_cast<double>(epoch + 1) / static_cast<double>(n_epochs));
    }

    std::vector<float> out(emb.size());
    for (std::size_t i = 0; i < emb.size(); ++i) out[i] = static_cast<float>(emb[i]);
    return {n, dim, std::move(out)};
}

}  // namespace zsclust
