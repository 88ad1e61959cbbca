#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "zsclust/cluster.hpp"
#include "zsclust/errors.hpp"

namespace zsclust {
namespace {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double sq_dist(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
        const double diff = a[c] - b[c];
        s += diff * diff;
    }
    return s;
}

// Greedy k-means++: each new centre is the best of 2 + ln(k) sampled candidates.
RowMatrixXd kmeans_plus_plus(const RowMatrixXd& x, std::size_t k, std::mt19937_64& rng) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());
    const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
    RowMatrixXd centres(static_cast<Eigen::Index>(k), x.cols());
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const auto first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    centres.row(0) = x.row(static_cast<Eigen::Index>(first));
    std::vector<double> closest(n);
    for (std::size_t i = 0; i < n; ++i) closest[i] = sq_dist(x.row(i).data(), centres.row(0).data(), d);
    double potential = std::accumulate(closest.begin(), closest.end(), 0.0);

    std::vector<double> cumulative(n), candidate_closest(n), best_closest(n);
    for (std::size_t c = 1; c < k; ++c) {
        std::partial_sum(closest.begin(), closest.end(), cumulative.begin());
        std::size_t best = 0;
        double best_potential = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < trials; ++t) {
            const double r = unit(rng) * potential;
            const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), r);
            const std::size_t cand = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), n - 1);
            double pot = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                candidate_closest[i] = std::min(closest[i], sq_dist(x.row(i).data(), x.row(cand).data(), d));
                pot += candidate_closest[i];
            }
            if (pot < best_potential) {
                best_potential = pot;
                best = cand;
                best_closest.swap(candidate_closest);
            }
        }
        centres.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(best));
        closest.swap(best_closest);
        best_closest.resize(n);
        potential = best_potential;
    }
    return centres;
}

// Nearest centre per row (lowest index on ties); returns the inertia.
double assign(const RowMatrixXd& x, const RowMatrixXd& centres, std::vector<std::int64_t>& labels,
              std::vector<double>& dist) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto d = static_cast<std::size_t>(x.cols());
    const auto k = static_cast<std::size_t>(centres.rows());
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::int64_t arg = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double v = sq_dist(x.row(i).data(), centres.row(c).data(), d);
            if (v < best) {
                best = v;
                arg = static_cast<std::int64_t>(c);
            }
        }
        labels[i] = arg;
        dist[i] = best;
        inertia += best;
    }
    return inertia;
}

struct Run {
    std::vector<std::int64_t> labels;
    RowMatrixXd centres;
    double inertia;
    std::vector<double> history;
    std::size_t iterations;
};

Run lloyd(const RowMatrixXd& x, RowMatrixXd centres, const KMeansSpec& spec, double tol) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto k = static_cast<std::size_t>(centres.rows());
    Run run{std::vector<std::int64_t>(n), centres, 0.0, {}, 0};
    std::vector<std::int64_t> previous(n, -1);
    std::vector<double> dist(n);
    std::vector<double> counts(k);

    for (std::size_t it = 0; it < spec.max_iter; ++it) {
        run.iterations = it + 1;
        run.inertia = assign(x, centres, run.labels, dist);
        run.history.push_back(run.inertia);
        if (run.labels == previous) break;
        previous = run.labels;

        RowMatrixXd updated = RowMatrixXd::Zero(centres.rows(), centres.cols());
        std::fill(counts.begin(), counts.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<Eigen::Index>(run.labels[i]);
            updated.row(c) += x.row(static_cast<Eigen::Index>(i));
            counts[static_cast<std::size_t>(c)] += 1.0;
        }
        // Empty clusters move to the points farthest from their own centres.
        std::vector<std::size_t> by_distance;
        std::size_t next_far = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0.0) {
                updated.row(static_cast<Eigen::Index>(c)) /= counts[c];
                continue;
            }
            if (by_distance.empty()) {
                by_distance.resize(n);
                std::iota(by_distance.begin(), by_distance.end(), std::size_t{0});
                std::stable_sort(by_distance.begin(), by_distance.end(),
                                 [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
            }
            updated.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(by_distance[next_far++ % n]));
        }
        const double shift = (updated - centres).squaredNorm();
        centres = std::move(updated);
        if (shift <= tol) {
            run.inertia = assign(x, centres, run.labels, dist);
            run.history.push_back(run.inertia);
            break;
        }
    }
    run.centres = std::move(centres);
    return run;
}

}  // namespace

KMeansResult kmeans(const EmbeddingMatrix& x, const KMeansSpec& spec, std::uint64_t seed) {
    validate(ClustererSpec{spec});
    if (!spec.k) throw ConfigError("kmeans cluster count is unresolved");
    const std::size_t k = *spec.k;
    const std::size_t n = x.rows();
    if (k > n) {
        throw ConfigError("kmeans: k=" + std::to_string(k) + " exceeds the " + std::to_string(n) + " samples");
    }
    RowMatrixXd data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(x.cols()));
    for (std::size_t i = 0; i < x.data().size(); ++i) data.data()[i] = x.data()[i];

    // Shift tolerance is relative to the mean per-feature variance.
    const Eigen::RowVectorXd mean = data.colwise().mean();
    const double mean_var = (data.rowwise() - mean).array().square().colwise().mean().mean();
    const double tol = spec.tol * mean_var;

    std::mt19937_64 rng(seed);
    Run best;
    bool have = false;
    for (std::size_t init = 0; init < spec.n_init; ++init) {
        Run run = lloyd(data, kmeans_plus_plus(data, k, rng), spec, tol);
        if (!have || run.inertia < best.inertia) {
            best = std::move(run);
            have = true;
        }
    }
    KMeansResult result;
    result.assignment = ClusterAssignment::from_labels(best.labels);
    // Rows follow the canonical label order; centres left without members are dropped.
    result.centroids.resize(static_cast<Eigen::Index>(result.assignment.n_clusters()), data.cols());
    for (std::size_t i = 0; i < n; ++i) {
        result.centroids.row(result.assignment.labels()[i]) = best.centres.row(best.labels[i]);
    }
    result.inertia = best.inertia;
    result.inertia_history = std::move(best.history);
    result.iterations = best.iterations;
    return result;
}

}  // namespace zsclust
