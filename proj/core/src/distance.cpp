#include "zsclust/distance.hpp"

#include <algorithm>
#include <numeric>

#include "zsclust/errors.hpp"

namespace zsclust {

std::string_view to_string(Metric m) noexcept {
    switch (m) {
        case Metric::L1: return "L1";
        case Metric::L2: return "L2";
        case Metric::LInf: return "Linf";
        case Metric::Cosine: return "cosine";
    }
    return "L2";
}

Metric parse_metric(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "l1" || s == "manhattan" || s == "cityblock") return Metric::L1;
    if (s == "l2" || s == "euclidean") return Metric::L2;
    if (s == "linf" || s == "l-inf" || s == "chebyshev" || s == "infinity") return Metric::LInf;
    if (s == "cosine") return Metric::Cosine;
    throw ConfigError("unknown distance metric '" + std::string(name) + "'");
}

PointSet::PointSet(const EmbeddingMatrix& x, Metric metric)
    : n_(x.rows()), d_(x.cols()), metric_(metric), values_(x.data().begin(), x.data().end()) {
    if (metric_ != Metric::Cosine) return;
    for (std::size_t i = 0; i < n_; ++i) {
        double* r = values_.data() + i * d_;
        double norm = 0.0;
        for (std::size_t j = 0; j < d_; ++j) norm += r[j] * r[j];
        if (norm == 0.0) {
            throw DegenerateInputError("row " + std::to_string(i) +
                                       " has zero norm; cosine distance is undefined");
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < d_; ++j) r[j] /= norm;
    }
}

double PointSet::distance(const double* a, const double* b) const noexcept {
    double acc = 0.0;
    switch (metric_) {
        case Metric::L1:
            for (std::size_t j = 0; j < d_; ++j) acc += std::abs(a[j] - b[j]);
            return acc;
        case Metric::L2:
            for (std::size_t j = 0; j < d_; ++j) {
                const double t = a[j] - b[j];
                acc += t * t;
            }
            return std::sqrt(acc);
        case Metric::LInf:
            for (std::size_t j = 0; j < d_; ++j) acc = std::max(acc, std::abs(a[j] - b[j]));
            return acc;
        case Metric::Cosine:
            for (std::size_t j = 0; j < d_; ++j) acc += a[j] * b[j];
            return std::max(0.0, 1.0 - acc);
    }
    return acc;
}

CondensedDistances::CondensedDistances(const PointSet& points) : n_(points.size()) {
    d_.resize(n_ > 1 ? n_ * (n_ - 1) / 2 : 0);
    std::size_t p = 0;
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i + 1; j < n_; ++j) d_[p++] = points.distance(i, j);
    }
}

KnnGraph exact_knn(const PointSet& points, std::size_t k) {
    const std::size_t n = points.size();
    if (k >= n) throw ConfigError("k-nearest-neighbour graph needs k < number of samples");
    KnnGraph g;
    g.k = k;
    g.indices.resize(n * k);
    g.distances.resize(n * k);
    std::vector<double> dist(n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) dist[j] = points.distance(i, j);
        std::iota(order.begin(), order.end(), std::size_t{0});
        // self goes first: distance 0 and ties broken towards it
        const auto less = [&](std::size_t a, std::size_t b) {
            if (a == i) return b != i;
            if (b == i) return false;
            return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
        };
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k + 1), order.end(), less);
        for (std::size_t t = 0; t < k; ++t) {
            g.indices[i * k + t] = order[t + 1];
            g.distances[i * k + t] = dist[order[t + 1]];
        }
    }
    return g;
}

}  // namespace zsclust
